#include "safefl/round.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "safefl/random.hpp"

namespace safefl {
namespace {

std::vector<bool> kept_mask(std::span<const Verdict> verdicts) {
    std::vector<bool> out(verdicts.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) out[i] = verdicts[i] == Verdict::benign;
    return out;
}

std::vector<Verdict> verdicts_from(const std::vector<bool>& kept) {
    std::vector<Verdict> out(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) out[i] = kept[i] ? Verdict::benign : Verdict::malicious;
    return out;
}

}  // namespace

std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::none:
            return "none";
        case DetectorKind::safefl_ml:
            return "safefl_ml";
        case DetectorKind::safefl_cl:
            return "safefl_cl";
    }
    return "unknown";
}

DetectorKind parse_detector_kind(const std::string& name) {
    if (name == "none") return DetectorKind::none;
    if (name == "safefl_ml" || name == "ml") return DetectorKind::safefl_ml;
    if (name == "safefl_cl" || name == "cl") return DetectorKind::safefl_cl;
    throw std::invalid_argument("unknown detector '" + name + "' (expected none, safefl_ml or safefl_cl)");
}

std::string to_string(RoundPhase phase) {
    switch (phase) {
        case RoundPhase::plain:
            return "plain";
        case RoundPhase::trajectory:
            return "trajectory";
        case RoundPhase::detection:
            return "detection";
    }
    return "unknown";
}

FederatedRun::FederatedRun(FederatedConfig config, std::vector<ClientState> clients)
    : config_(std::move(config)),
      clients_(std::move(clients)),
      global_(init_global_model(config_.model, derive_seed(config_.seed, {0x91}))),
      trajectory_(config_.epsilon) {
    config_.model.validate();
    if (clients_.empty()) throw std::invalid_argument("a federated run needs at least one client");
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        if (clients_[i].id != i) throw std::invalid_argument("client ids must equal their position");
    }
    if (!(config_.selection_rate > 0.0 && config_.selection_rate <= 1.0)) {
        throw std::invalid_argument("selection rate must lie in (0, 1]");
    }
    if (config_.detector != DetectorKind::none) {
        config_.syngen.validate(config_.epsilon);
        trajectory_.append(global_);
    }
}

RoundPhase FederatedRun::phase_of(std::size_t t) const {
    if (config_.detector == DetectorKind::none) return RoundPhase::plain;
    return t < config_.epsilon ? RoundPhase::trajectory : RoundPhase::detection;
}

std::vector<bool> FederatedRun::select_participants() const {
    const std::size_t n = clients_.size();
    std::vector<bool> selected(n, true);
    if (config_.selection_rate >= 1.0) return selected;
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(config_.selection_rate * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng = make_rng(config_.seed, {0x5e1, t_});
    std::shuffle(ids.begin(), ids.end(), rng);
    std::fill(selected.begin(), selected.end(), false);
    for (std::size_t i = 0; i < count; ++i) selected[ids[i]] = true;
    return selected;
}

std::vector<bool> FederatedRun::defender_accepts(RoundPhase phase, std::span<const ModelVector> updates) const {
    switch (phase) {
        case RoundPhase::plain:
            return std::vector<bool>(updates.size(), true);
        case RoundPhase::trajectory:
            return kmeans_filter(config_.trajectory_k, derive_seed(config_.seed, {0xc1, t_}))(updates);
        case RoundPhase::detection:
            break;
    }
    if (!synthetic_) throw std::logic_error("detection requested before the synthetic set exists");
    const std::vector<double> losses = eval_losses(config_.model, updates, synthetic_->data);
    if (config_.detector == DetectorKind::safefl_ml) {
        return kept_mask(safefl_ml(updates, losses, config_.weight_mode).verdicts);
    }
    return largest_loss_cluster(losses, config_.loss_cluster);
}

RoundState FederatedRun::run_round() {
    const std::size_t n = clients_.size();
    RoundState state;
    state.t = t_;
    state.phase = phase_of(t_);
    state.broadcast = global_;
    state.selected = select_participants();
    state.updates.assign(n, global_);
    state.verdicts.assign(n, Verdict::not_evaluated);
    state.losses.assign(n, std::nullopt);

    if (state.phase == RoundPhase::detection && !synthetic_) {
        if (t_ != config_.epsilon) throw std::logic_error("synthetic set missing after the trajectory phase");
        synthetic_ = syngen(config_.model, trajectory_.models(), config_.syngen);
        state.syngen_ran = true;
    }

    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < n; ++i)
        if (state.selected[i]) ids.push_back(i);

    AttackContext ctx;
    ctx.round = t_;
    ctx.global = global_;
    ctx.clients = clients_;
    ctx.model = config_.model;
    ctx.train = config_.train;
    ctx.seed = derive_seed(config_.seed, {0xa77});
    for (std::size_t id : ids) {
        ModelVector trained = local_train(config_.model, global_, clients_[id], config_.train, t_);
        if (config_.dp_noise > 0.0) {
            trained = add_dp_noise(trained, config_.dp_noise, derive_seed(config_.seed, {0xd9, t_, id}));
        }
        ctx.updates.push_back(std::move(trained));
        ctx.client_ids.push_back(id);
        ctx.malicious.push_back(clients_[id].is_malicious);
    }

    std::vector<ModelVector> submitted = ctx.updates;
    const std::vector<std::size_t> attackers = ctx.malicious_positions();
    if (config_.attack.kind != AttackKind::none && !attackers.empty() && attackers.size() < ids.size()) {
        const RoundPhase phase = state.phase;
        ctx.defender = [this, phase](std::span<const ModelVector> u) { return defender_accepts(phase, u); };
        std::vector<ModelVector> crafted = craft_malicious(ctx, config_.attack);
        if (crafted.size() != attackers.size()) throw std::logic_error("attack returned the wrong number of updates");
        for (std::size_t k = 0; k < attackers.size(); ++k) submitted[attackers[k]] = std::move(crafted[k]);
    }
    for (std::size_t p = 0; p < ids.size(); ++p) state.updates[ids[p]] = submitted[p];

    std::vector<Verdict> participant_verdicts;
    switch (state.phase) {
        case RoundPhase::plain:
            participant_verdicts.assign(ids.size(), Verdict::not_evaluated);
            global_ = config_.aggregator(submitted);
            break;
        case RoundPhase::trajectory: {
            const TrajectoryRound r = collect_trajectory_round(
                submitted, kmeans_filter(config_.trajectory_k, derive_seed(config_.seed, {0xc1, t_})),
                config_.aggregator, trajectory_);
            participant_verdicts = verdicts_from(r.kept);
            global_ = r.global;
            break;
        }
        case RoundPhase::detection: {
            const std::vector<double> losses = eval_losses(config_.model, submitted, synthetic_->data);
            for (std::size_t p = 0; p < ids.size(); ++p) state.losses[ids[p]] = losses[p];
            if (config_.detector == DetectorKind::safefl_ml) {
                MedianLossResult r = safefl_ml(submitted, losses, config_.weight_mode);
                participant_verdicts = std::move(r.verdicts);
                state.weights.assign(n, 0.0);
                for (std::size_t p = 0; p < ids.size(); ++p) state.weights[ids[p]] = r.weights[p];
                global_ = std::move(r.aggregate);
            } else {
                const std::vector<bool> kept = largest_loss_cluster(losses, config_.loss_cluster);
                participant_verdicts = verdicts_from(kept);
                if (std::find(kept.begin(), kept.end(), true) != kept.end()) {
                    global_ = safefl_cl(submitted, losses, config_.aggregator, config_.loss_cluster).aggregate;
                }
            }
            break;
        }
    }
    for (std::size_t p = 0; p < ids.size(); ++p) state.verdicts[ids[p]] = participant_verdicts[p];
    state.global = global_;
    ++t_;
    return state;
}

}  // namespace safefl
