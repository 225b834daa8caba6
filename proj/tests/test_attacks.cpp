#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "safefl/attacks.hpp"
#include "safefl/detection.hpp"
#include "safefl/metrics.hpp"
#include "safefl/round.hpp"

using namespace safefl;

namespace {

const ModelSpec kSpec{ModelFamily::softmax_regression, 6, 3, 0};
const TriggerSpec kTrigger{{2, 3, 4, 5}, 3.0, 0, 4};

std::vector<ClientState> make_clients(std::size_t n, const std::vector<bool>& malicious, std::uint64_t seed) {
    const Dataset data = gen_blobs(40, kSpec.n_classes, kSpec.n_features, 4.0, seed);
    PartitionSpec part;
    part.q = 0.5;
    part.n_clients = n;
    part.seed = seed;
    std::vector<Dataset> shards = partition(data, part);
    std::vector<ClientState> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({i, std::move(shards[i]), malicious[i], 1000 + i});
    return out;
}

// Context over all clients (participant position == client id).
struct Fixture {
    std::vector<ClientState> clients;
    AttackContext ctx;

    Fixture(std::vector<bool> malicious, std::uint64_t seed = 3) : clients(make_clients(malicious.size(), malicious, seed)) {
        ctx.round = 2;
        ctx.global = init_global_model(kSpec, seed);
        ctx.model = kSpec;
        ctx.train = {0.5, 1, 0};
        ctx.seed = seed;
        ctx.clients = clients;
        ctx.malicious = malicious;
        for (const ClientState& c : clients) {
            ctx.client_ids.push_back(c.id);
            ctx.updates.push_back(local_train(kSpec, ctx.global, c, ctx.train, ctx.round));
        }
    }
};

AttackSpec spec_of(AttackKind kind) {
    AttackSpec s;
    s.kind = kind;
    s.trigger = kTrigger;
    return s;
}

AttackContext scalar_context(std::vector<double> values, std::vector<bool> malicious, double global) {
    AttackContext ctx;
    ctx.global = ModelVector({global});
    for (std::size_t i = 0; i < values.size(); ++i) {
        ctx.updates.emplace_back(std::vector<double>{values[i]});
        ctx.client_ids.push_back(i);
    }
    ctx.malicious = std::move(malicious);
    return ctx;
}

double cosine(const ModelVector& a, const ModelVector& b) {
    double dot = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) dot += a[j] * b[j];
    return dot / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("attack kinds round-trip through their names") {
    for (AttackKind k : {AttackKind::none, AttackKind::trim, AttackKind::scaling, AttackKind::dba, AttackKind::label_flip,
                         AttackKind::lie, AttackKind::adaptive, AttackKind::trim_dba, AttackKind::scaling_dba}) {
        CHECK(parse_attack_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_attack_kind("neurotoxin"), std::invalid_argument);
    CHECK(uses_trigger(AttackKind::scaling_dba));
    CHECK_FALSE(uses_trigger(AttackKind::lie));
}

TEST_CASE("trim on a one-dimensional hand case") {
    const AttackContext ctx = scalar_context({1, 2, 3, 0}, {false, false, false, true}, 0.0);
    const std::vector<std::size_t> targets{3};
    const double sigma = std::sqrt(2.0 / 3.0);
    const auto out = trim_attack(ctx, spec_of(AttackKind::trim), targets);
    REQUIRE(out.size() == 1);
    CHECK(out[0][0] >= 2.0 - 4.0 * sigma);
    CHECK(out[0][0] <= 2.0 - 3.0 * sigma);

    const AttackContext above = scalar_context({1, 2, 3, 0}, {false, false, false, true}, 5.0);
    const auto flipped = trim_attack(above, spec_of(AttackKind::trim), targets);
    CHECK(flipped[0][0] >= 2.0 + 3.0 * sigma);
    CHECK(flipped[0][0] <= 2.0 + 4.0 * sigma);
}

TEST_CASE("trim degenerates to the benign mean when benign updates agree") {
    const AttackContext ctx = scalar_context({4, 4, 4, 9, 9}, {false, false, false, true, true}, 0.0);
    const std::vector<std::size_t> targets{3, 4};
    for (const ModelVector& u : trim_attack(ctx, spec_of(AttackKind::trim), targets)) CHECK(u == ModelVector({4.0}));
}

TEST_CASE("trim pulls a trimmed mean further from the benign aggregate than honest clients") {
    Fixture f({true, false, false, true, false, false, false, true, false, false});
    const auto positions = f.ctx.malicious_positions();
    std::vector<ModelVector> benign = f.ctx.benign_updates();
    const ModelVector reference = trimmed_mean(benign, 0);

    std::vector<ModelVector> attacked = f.ctx.updates;
    const auto crafted = trim_attack(f.ctx, spec_of(AttackKind::trim), positions);
    for (std::size_t k = 0; k < positions.size(); ++k) attacked[positions[k]] = crafted[k];

    const double honest = squared_distance(trimmed_mean(f.ctx.updates, 3), reference);
    const double poisoned = squared_distance(trimmed_mean(attacked, 3), reference);
    CHECK(poisoned > honest);
}

TEST_CASE("scaling is linear in lambda") {
    Fixture f({false, true, false, false, true, false});
    const auto positions = f.ctx.malicious_positions();
    AttackSpec one = spec_of(AttackKind::scaling);
    one.lambda = 1.0;
    AttackSpec ten = one;
    ten.lambda = 10.0;
    const auto a = scaling_attack(f.ctx, one, positions);
    const auto b = scaling_attack(f.ctx, ten, positions);
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const ClientState& c = f.clients[positions[k]];
        const ModelVector trained =
            local_train(kSpec, f.ctx.global, apply_trigger(c.dataset, kTrigger, 1.0), f.ctx.train, c.rng_seed, 2);
        CHECK(a[k] == trained);
        const ModelVector delta_a = a[k] - f.ctx.global, delta_b = b[k] - f.ctx.global;
        for (std::size_t j = 0; j < delta_a.dim(); ++j) CHECK(delta_b[j] == doctest::Approx(10.0 * delta_a[j]).epsilon(1e-12));
        CHECK(delta_b.norm() == doctest::Approx(10.0 * delta_a.norm()).epsilon(1e-12));
    }
}

TEST_CASE("default amplification is n over m") {
    Fixture f({true, false, false, true, false, false, false, false});
    CHECK(amplification(f.ctx, spec_of(AttackKind::scaling)) == 4.0);
    AttackSpec s = spec_of(AttackKind::scaling);
    s.lambda = 2.5;
    CHECK(amplification(f.ctx, s) == 2.5);
}

TEST_CASE("dba gives each of four attackers a distinct segment") {
    Fixture f({false, true, true, false, true, false, true, false});
    const auto positions = f.ctx.malicious_positions();
    AttackSpec s = spec_of(AttackKind::dba);
    s.lambda = 3.0;
    const auto out = dba_attack(f.ctx, s, positions);
    REQUIRE(out.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        const ClientState& c = f.clients[positions[k]];
        for (std::size_t seg = 0; seg < 4; ++seg) {
            const ModelVector trained = local_train(kSpec, f.ctx.global, apply_trigger(c.dataset, kTrigger, 1.0, seg),
                                                    f.ctx.train, c.rng_seed, 2);
            const ModelVector expected = f.ctx.global + 3.0 * (trained - f.ctx.global);
            CHECK((squared_distance(out[k], expected) < 1e-20) == (seg == k));
        }
    }
}

TEST_CASE("dba backdoor fires on the full trigger more than on any single segment") {
    FederatedConfig cfg;
    cfg.model = kSpec;
    cfg.train = {0.5, 1, 0};
    cfg.detector = DetectorKind::none;
    cfg.attack = spec_of(AttackKind::dba);
    cfg.seed = 5;
    std::vector<bool> malicious(12, false);
    for (std::size_t i : {1, 4, 7, 10}) malicious[i] = true;
    FederatedRun run(cfg, make_clients(12, malicious, 21));
    for (int t = 0; t < 30; ++t) run.run_round();
    const Dataset test = gen_blobs(60, kSpec.n_classes, kSpec.n_features, 4.0, 99);
    const double full = *attack_success_rate(kSpec, run.global(), test, kTrigger);
    for (const auto& seg : kTrigger.segments()) {
        const TriggerSpec part{seg, kTrigger.trigger_value, kTrigger.target_label, 1};
        CHECK(full > *attack_success_rate(kSpec, run.global(), test, part));
    }
}

TEST_CASE("label flip with two classes opposes the clean update") {
    const ModelSpec two{ModelFamily::softmax_regression, 4, 2, 0};
    const Dataset data = gen_blobs(30, 2, 4, 3.0, 8);
    std::vector<ClientState> clients{{0, data, true, 1}, {1, data, false, 2}};
    AttackContext ctx;
    ctx.round = 1;
    ctx.global = init_global_model(two, 4);
    ctx.model = two;
    ctx.train = {0.5, 1, 0};
    ctx.clients = clients;
    ctx.client_ids = {0, 1};
    ctx.malicious = {true, false};
    for (const ClientState& c : clients) ctx.updates.push_back(local_train(two, ctx.global, c, ctx.train, 1));
    const std::vector<std::size_t> targets{0};
    const ModelVector flipped = label_flip_attack(ctx, spec_of(AttackKind::label_flip), targets)[0];
    CHECK(cosine(flipped - ctx.global, ctx.updates[1] - ctx.global) < 0.0);
}

TEST_CASE("lie stays within one standard deviation") {
    const AttackContext ctx = scalar_context({1, 2, 3, 6, 0}, {false, false, false, false, true}, 0.0);
    const std::vector<std::size_t> targets{4};
    AttackSpec s = spec_of(AttackKind::lie);
    s.lie_z = 0.0;
    CHECK(lie_attack(ctx, s, targets)[0] == ModelVector({3.0}));
    const double sigma = std::sqrt(3.5);
    for (double z : {0.25, 0.74, 1.0}) {
        s.lie_z = z;
        const double v = lie_attack(ctx, s, targets)[0][0];
        CHECK(v == doctest::Approx(3.0 + z * sigma));
        CHECK(v <= 3.0 + sigma + 1e-12);
    }
}

TEST_CASE("hybrid splits attackers in order") {
    Fixture f({true, false, true, true, false, true, true, false, true, false});
    const auto positions = f.ctx.malicious_positions();
    REQUIRE(positions.size() == 6);
    const AttackSpec s = spec_of(AttackKind::trim_dba);
    const auto out = craft_malicious(f.ctx, s);
    const std::span<const std::size_t> all(positions);
    const auto trim = trim_attack(f.ctx, s, all.first(3));
    const auto dba = dba_attack(f.ctx, s, all.subspan(3));
    REQUIRE(out.size() == 6);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(out[k] == trim[k]);
        CHECK(out[3 + k] == dba[k]);
    }
    CHECK(hybrid_attack(f.ctx, s, AttackKind::lie, AttackKind::lie) == lie_attack(f.ctx, s, positions));
    CHECK(hybrid_attack(f.ctx, s, AttackKind::scaling, AttackKind::scaling) == scaling_attack(f.ctx, s, positions));

    Fixture odd({true, true, true, false, false});
    const auto mixed = hybrid_attack(odd.ctx, s, AttackKind::lie, AttackKind::trim);
    CHECK(mixed.size() == 3);
    CHECK(mixed[0] == mixed[1]);
    CHECK_FALSE(mixed[1] == mixed[2]);
}

TEST_CASE("adaptive attack against trivial defenders") {
    Fixture f({false, true, false, false, true, false, false, false});
    const auto positions = f.ctx.malicious_positions();
    const AttackSpec s = spec_of(AttackKind::adaptive);
    const ModelVector mean = fedavg(f.ctx.benign_updates());
    double delta = 0.0;
    for (const ModelVector& u : f.ctx.benign_updates()) delta += (u - f.ctx.global).norm() / 6.0;

    const auto free = adaptive_attack(f.ctx, s, positions);
    CHECK((free[0] - mean).norm() == doctest::Approx(100.0 * delta));
    CHECK(free[0] == free[1]);

    AttackContext accept = f.ctx;
    accept.defender = [](std::span<const ModelVector> u) { return std::vector<bool>(u.size(), true); };
    CHECK(adaptive_attack(accept, s, positions) == free);

    AttackContext reject = f.ctx;
    reject.defender = [](std::span<const ModelVector> u) { return std::vector<bool>(u.size(), false); };
    for (const ModelVector& u : adaptive_attack(reject, s, positions)) {
        for (std::size_t j = 0; j < u.dim(); ++j) CHECK(u[j] == doctest::Approx(mean[j]).epsilon(1e-12));
    }
}

TEST_CASE("adaptive attack survives the loss-cluster replica it optimised against") {
    Fixture f({false, true, false, false, true, false, false, true, false, false});
    const auto positions = f.ctx.malicious_positions();
    const SyntheticDataset syn = initial_synthetic(kSpec, 12, 4);
    const LossClusterConfig cl;
    f.ctx.defender = [&](std::span<const ModelVector> u) { return largest_loss_cluster(eval_losses(kSpec, u, syn), cl); };
    const auto crafted = adaptive_attack(f.ctx, spec_of(AttackKind::adaptive), positions);
    std::vector<ModelVector> submitted = f.ctx.updates;
    for (std::size_t k = 0; k < positions.size(); ++k) submitted[positions[k]] = crafted[k];
    const std::vector<bool> accepted = f.ctx.defender(submitted);
    for (std::size_t pos : positions) CHECK(accepted[pos]);
    CHECK(squared_distance(crafted[0], fedavg(f.ctx.benign_updates())) > 0.0);
}

TEST_CASE("attacks are deterministic and leave benign updates alone") {
    for (AttackKind kind : {AttackKind::trim, AttackKind::scaling, AttackKind::dba, AttackKind::label_flip, AttackKind::lie,
                            AttackKind::adaptive, AttackKind::trim_dba, AttackKind::scaling_dba}) {
        CAPTURE(to_string(kind));
        FederatedConfig cfg;
        cfg.model = kSpec;
        cfg.train = {0.5, 1, 0};
        cfg.epsilon = 3;
        cfg.syngen.iterations = 5;
        cfg.syngen.inner_steps = 1;
        cfg.syngen.size = 6;
        cfg.attack = spec_of(kind);
        cfg.seed = 2;
        const std::vector<bool> malicious{false, true, false, true, false, false, true, false};
        FederatedRun a(cfg, make_clients(8, malicious, 6));
        FederatedRun b(cfg, make_clients(8, malicious, 6));
        for (int t = 0; t < 4; ++t) {
            const ModelVector broadcast = a.global();
            const RoundState x = a.run_round(), y = b.run_round();
            CHECK(x.updates == y.updates);
            for (std::size_t i = 0; i < 8; ++i) {
                if (malicious[i]) continue;
                CHECK(x.updates[i] == local_train(kSpec, broadcast, a.clients()[i], cfg.train, x.t));
            }
        }
    }
}
