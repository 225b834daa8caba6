#include "safefl/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "safefl/random.hpp"

namespace safefl {
namespace {

struct BenignStats {
    std::vector<double> mean;
    std::vector<double> std;  // population standard deviation
};

BenignStats benign_stats(const AttackContext& ctx) {
    const std::vector<ModelVector> benign = ctx.benign_updates();
    if (benign.empty()) throw std::invalid_argument("attack needs at least one benign update");
    const std::size_t d = common_dim(benign);
    const double n = static_cast<double>(benign.size());
    BenignStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const ModelVector& u : benign)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += u[j];
    for (double& v : s.mean) v /= n;
    for (const ModelVector& u : benign)
        for (std::size_t j = 0; j < d; ++j) s.std[j] += (u[j] - s.mean[j]) * (u[j] - s.mean[j]);
    for (double& v : s.std) v = std::sqrt(v / n);
    return s;
}

const ClientState& client_at(const AttackContext& ctx, std::size_t position) {
    const std::size_t id = ctx.client_ids.at(position);
    if (id >= ctx.clients.size()) throw std::out_of_range("attack context has no client " + std::to_string(id));
    return ctx.clients[id];
}

ModelVector amplify(const ModelVector& global, const ModelVector& trained, double lambda) {
    return global + lambda * (trained - global);
}

std::vector<ModelVector> train_poisoned(const AttackContext& ctx, const AttackSpec& spec,
                                        std::span<const std::size_t> targets, bool per_segment) {
    spec.trigger.validate(ctx.model.n_features, ctx.model.n_classes);
    const double lambda = amplification(ctx, spec);
    const std::vector<std::size_t> all = ctx.malicious_positions();
    std::vector<ModelVector> out;
    for (std::size_t pos : targets) {
        const ClientState& client = client_at(ctx, pos);
        std::optional<std::size_t> segment;
        if (per_segment) {
            const auto rank = static_cast<std::size_t>(std::find(all.begin(), all.end(), pos) - all.begin());
            segment = rank % spec.trigger.n_segments;
        }
        const Dataset poisoned = apply_trigger(client.dataset, spec.trigger, spec.poison_fraction, segment);
        const ModelVector trained = local_train(ctx.model, ctx.global, poisoned, ctx.train, client.rng_seed, ctx.round);
        out.push_back(amplify(ctx.global, trained, lambda));
    }
    return out;
}

std::vector<ModelVector> dispatch(AttackKind kind, const AttackContext& ctx, const AttackSpec& spec,
                                  std::span<const std::size_t> targets) {
    switch (kind) {
        case AttackKind::none:
            return {};
        case AttackKind::trim:
            return trim_attack(ctx, spec, targets);
        case AttackKind::scaling:
            return scaling_attack(ctx, spec, targets);
        case AttackKind::dba:
            return dba_attack(ctx, spec, targets);
        case AttackKind::label_flip:
            return label_flip_attack(ctx, spec, targets);
        case AttackKind::lie:
            return lie_attack(ctx, spec, targets);
        case AttackKind::adaptive:
            return adaptive_attack(ctx, spec, targets);
        case AttackKind::trim_dba:
        case AttackKind::scaling_dba:
            break;
    }
    throw std::invalid_argument("hybrid attacks cannot be nested");
}

}  // namespace

std::string to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::none:
            return "none";
        case AttackKind::trim:
            return "trim";
        case AttackKind::scaling:
            return "scaling";
        case AttackKind::dba:
            return "dba";
        case AttackKind::label_flip:
            return "label_flip";
        case AttackKind::lie:
            return "lie";
        case AttackKind::adaptive:
            return "adaptive";
        case AttackKind::trim_dba:
            return "trim_dba";
        case AttackKind::scaling_dba:
            return "scaling_dba";
    }
    return "unknown";
}

AttackKind parse_attack_kind(const std::string& name) {
    for (AttackKind k : {AttackKind::none, AttackKind::trim, AttackKind::scaling, AttackKind::dba,
                         AttackKind::label_flip, AttackKind::lie, AttackKind::adaptive, AttackKind::trim_dba,
                         AttackKind::scaling_dba}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown attack kind '" + name + "'");
}

bool uses_trigger(AttackKind kind) {
    return kind == AttackKind::scaling || kind == AttackKind::dba || kind == AttackKind::trim_dba ||
           kind == AttackKind::scaling_dba;
}

std::vector<std::size_t> AttackContext::malicious_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < malicious.size(); ++i)
        if (malicious[i]) out.push_back(i);
    return out;
}

std::vector<ModelVector> AttackContext::benign_updates() const {
    std::vector<ModelVector> out;
    for (std::size_t i = 0; i < updates.size(); ++i)
        if (!malicious.at(i)) out.push_back(updates[i]);
    return out;
}

double amplification(const AttackContext& ctx, const AttackSpec& spec) {
    if (spec.lambda) return *spec.lambda;
    const std::size_t m = ctx.malicious_positions().size();
    if (m == 0) return 1.0;
    return static_cast<double>(ctx.updates.size()) / static_cast<double>(m);
}

std::vector<ModelVector> trim_attack(const AttackContext& ctx, const AttackSpec& spec,
                                     std::span<const std::size_t> targets) {
    if (targets.empty()) return {};
    const BenignStats s = benign_stats(ctx);
    const std::size_t d = s.mean.size();
    std::vector<double> sign(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double delta = s.mean[j] - ctx.global[j];
        sign[j] = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
    }
    std::vector<ModelVector> out;
    for (std::size_t pos : targets) {
        Rng rng = make_rng(ctx.seed, {0x7219, ctx.round, ctx.client_ids.at(pos)});
        const double z = std::uniform_real_distribution<double>(spec.trim_z_min, spec.trim_z_max)(rng);
        std::vector<double> w(d);
        for (std::size_t j = 0; j < d; ++j) w[j] = s.mean[j] - z * s.std[j] * sign[j];
        out.emplace_back(std::move(w));
    }
    return out;
}

std::vector<ModelVector> scaling_attack(const AttackContext& ctx, const AttackSpec& spec,
                                        std::span<const std::size_t> targets) {
    return train_poisoned(ctx, spec, targets, false);
}

std::vector<ModelVector> dba_attack(const AttackContext& ctx, const AttackSpec& spec,
                                    std::span<const std::size_t> targets) {
    return train_poisoned(ctx, spec, targets, true);
}

std::vector<ModelVector> label_flip_attack(const AttackContext& ctx, const AttackSpec&,
                                           std::span<const std::size_t> targets) {
    std::vector<ModelVector> out;
    for (std::size_t pos : targets) {
        const ClientState& client = client_at(ctx, pos);
        const Dataset flipped = flip_labels(client.dataset, default_label_flip(client.dataset.n_classes()));
        out.push_back(local_train(ctx.model, ctx.global, flipped, ctx.train, client.rng_seed, ctx.round));
    }
    return out;
}

std::vector<ModelVector> lie_attack(const AttackContext& ctx, const AttackSpec& spec,
                                    std::span<const std::size_t> targets) {
    if (targets.empty()) return {};
    const BenignStats s = benign_stats(ctx);
    std::vector<double> w(s.mean.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = s.mean[j] + spec.lie_z * s.std[j];
    return std::vector<ModelVector>(targets.size(), ModelVector(std::move(w)));
}

std::vector<ModelVector> adaptive_attack(const AttackContext& ctx, const AttackSpec& spec,
                                         std::span<const std::size_t> targets) {
    if (targets.empty()) return {};
    const BenignStats s = benign_stats(ctx);
    const ModelVector mean(s.mean);
    double std_norm = 0.0;
    for (double v : s.std) std_norm += v * v;
    std_norm = std::sqrt(std_norm);
    if (std_norm == 0.0) return std::vector<ModelVector>(targets.size(), mean);

    std::vector<double> dir(s.std.size());
    for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = -s.std[j] / std_norm;
    const ModelVector direction(std::move(dir));

    double delta_norm = 0.0;
    const std::vector<ModelVector> benign = ctx.benign_updates();
    for (const ModelVector& u : benign) delta_norm += (u - ctx.global).norm();
    const double gamma_max = spec.adaptive_gamma_factor * delta_norm / static_cast<double>(benign.size());

    auto candidate = [&](double gamma) { return mean + gamma * direction; };
    auto survives = [&](double gamma) {
        if (!ctx.defender) return true;
        std::vector<ModelVector> submitted = ctx.updates;
        const ModelVector crafted = candidate(gamma);
        for (std::size_t pos : targets) submitted.at(pos) = crafted;
        const std::vector<bool> accepted = ctx.defender(submitted);
        return std::all_of(targets.begin(), targets.end(), [&](std::size_t pos) { return bool(accepted.at(pos)); });
    };

    double gamma = 0.0;
    if (!survives(0.0)) {
        gamma = 0.0;
    } else if (survives(gamma_max)) {
        gamma = gamma_max;
    } else {
        double lo = 0.0, hi = gamma_max;
        for (std::size_t it = 0; it < spec.adaptive_iterations; ++it) {
            const double mid = 0.5 * (lo + hi);
            (survives(mid) ? lo : hi) = mid;
        }
        gamma = lo;
    }
    return std::vector<ModelVector>(targets.size(), candidate(gamma));
}

std::vector<ModelVector> hybrid_attack(const AttackContext& ctx, const AttackSpec& spec, AttackKind first,
                                       AttackKind second) {
    const std::vector<std::size_t> positions = ctx.malicious_positions();
    if (first == second) return dispatch(first, ctx, spec, positions);
    const std::size_t half = (positions.size() + 1) / 2;
    const std::span<const std::size_t> all(positions);
    std::vector<ModelVector> out = dispatch(first, ctx, spec, all.first(half));
    std::vector<ModelVector> rest = dispatch(second, ctx, spec, all.subspan(half));
    out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
    return out;
}

std::vector<ModelVector> craft_malicious(const AttackContext& ctx, const AttackSpec& spec) {
    switch (spec.kind) {
        case AttackKind::trim_dba:
            return hybrid_attack(ctx, spec, AttackKind::trim, AttackKind::dba);
        case AttackKind::scaling_dba:
            return hybrid_attack(ctx, spec, AttackKind::scaling, AttackKind::dba);
        default:
            return dispatch(spec.kind, ctx, spec, ctx.malicious_positions());
    }
}

}  // namespace safefl
