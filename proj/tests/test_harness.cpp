#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "safefl/config.hpp"
#include "safefl/experiment.hpp"
#include "safefl/io.hpp"
#include "safefl/metrics.hpp"

using namespace safefl;

namespace {

std::vector<Verdict> parse_verdicts(const std::string& codes) {
    std::vector<Verdict> out;
    for (char c : codes) out.push_back(c == 'M' ? Verdict::malicious : c == 'B' ? Verdict::benign : Verdict::not_evaluated);
    return out;
}

std::vector<bool> truth_of(const std::string& bits) {
    std::vector<bool> out;
    for (char c : bits) out.push_back(c == '1');
    return out;
}

ExperimentConfig tiny_config() {
    std::istringstream in(R"(
seed = 4
rounds = 12
clients.n = 8
clients.malicious_fraction = 0.25
data.classes = 3
data.features = 6
data.train_per_class = 40
data.test_per_class = 30
trajectory.epsilon = 4
syngen.inner_steps = 2
syngen.iterations = 30
syngen.size = 6
attack.kind = lie
)");
    return parse_config(in);
}

std::string rounds_csv(const ExperimentResult& r) {
    std::ostringstream out;
    write_rounds_csv(out, r);
    return out.str();
}

std::vector<std::string> problems_of(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_config(in);
    } catch (const ConfigError& e) {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& prefix) {
    for (const std::string& p : problems)
        if (p.rfind(prefix, 0) == 0) return true;
    return false;
}

}  // namespace

TEST_CASE("detection metrics when every verdict is right") {
    const DetectionMetrics m = detection_metrics(parse_verdicts("BBBBBBBMMM"), truth_of("0000000111"));
    CHECK(*m.dacc == 1.0);
    CHECK(*m.fpr == 0.0);
    CHECK(*m.fnr == 0.0);
    CHECK(*m.f1 == 1.0);
    CHECK(*m.precision == 1.0);
}

TEST_CASE("detection metrics without malicious clients") {
    const DetectionMetrics m = detection_metrics(parse_verdicts("MBBBBBBBBB"), truth_of("0000000000"));
    CHECK(*m.dacc == doctest::Approx(0.9));
    CHECK(*m.fpr == doctest::Approx(0.1));
    CHECK_FALSE(m.fnr.has_value());
    CHECK_FALSE(m.recall.has_value());
    CHECK(*m.precision == 0.0);
    CHECK(*m.f1 == 0.0);

    const DetectionMetrics quiet = detection_metrics(parse_verdicts("BBB"), truth_of("000"));
    CHECK_FALSE(quiet.precision.has_value());
    CHECK_FALSE(quiet.f1.has_value());

    const DetectionMetrics skipped = detection_metrics(parse_verdicts("--M"), truth_of("101"));
    CHECK(skipped.tp == 1);
    CHECK(skipped.fn + skipped.fp + skipped.tn == 0);
    const DetectionMetrics empty = detection_metrics(parse_verdicts("---"), truth_of("101"));
    CHECK_FALSE(empty.dacc.has_value());
    CHECK_THROWS_AS(detection_metrics(parse_verdicts("BB"), truth_of("0")), std::invalid_argument);
}

TEST_CASE("detection metrics match an independent tally") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<Verdict> v;
        std::vector<int> flagged;
        std::vector<bool> truth;
        for (std::size_t i = 0; i < n; ++i) {
            const int f = static_cast<int>(rng() % 3) - 1;
            flagged.push_back(f);
            v.push_back(f == 1 ? Verdict::malicious : f == 0 ? Verdict::benign : Verdict::not_evaluated);
            truth.push_back(rng() % 3 == 0);
        }
        const oracle::Confusion c = oracle::tally(flagged, truth);
        const DetectionMetrics m = detection_metrics(v, truth);
        CHECK(m.tp == c.tp);
        CHECK(m.fp == c.fp);
        CHECK(m.tn == c.tn);
        CHECK(m.fn == c.fn);
        const std::size_t total = c.tp + c.fp + c.tn + c.fn;
        CHECK(m.dacc.has_value() == (total > 0));
        CHECK(m.fpr.has_value() == (c.fp + c.tn > 0));
        CHECK(m.fnr.has_value() == (c.fn + c.tp > 0));
        CHECK(m.precision.has_value() == (c.tp + c.fp > 0));
        CHECK(m.recall.has_value() == (c.tp + c.fn > 0));
        CHECK(m.f1.has_value() == (2 * c.tp + c.fp + c.fn > 0));
        if (m.fpr) CHECK(*m.fpr == static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn));
        if (m.fnr) CHECK(*m.fnr == static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp));
        if (m.f1) CHECK(*m.f1 == static_cast<double>(2 * c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn));
        if (m.dacc) {
            CHECK(*m.dacc == static_cast<double>(c.tp + c.tn) / static_cast<double>(total));
            CHECK(*m.dacc == doctest::Approx(1.0 - static_cast<double>(c.fp + c.fn) / static_cast<double>(total)));
        }
    }
}

TEST_CASE("accuracy and attack success examples") {
    const ModelSpec spec{ModelFamily::softmax_regression, 4, 4, 0};
    const Dataset test = gen_blobs(25, 4, 4, 3.0, 1);
    std::vector<double> w(spec.parameter_count(), 0.0);
    w[16] = 10.0;  // bias of class 0
    const ModelVector always_zero(w);
    CHECK(test_accuracy(spec, always_zero, test) == 0.25);
    const TriggerSpec trig{{3}, 2.0, 0, 1};
    CHECK(*attack_success_rate(spec, always_zero, test, trig) == 1.0);
    const TriggerSpec other{{3}, 2.0, 2, 1};
    CHECK(*attack_success_rate(spec, always_zero, test, other) == 0.0);

    const Dataset zeros(Tensor::matrix({{1, 2, 3, 4}}), {0}, 4);
    CHECK_FALSE(attack_success_rate(spec, always_zero, zeros, trig).has_value());
}

TEST_CASE("a trained model generalises on well-separated blobs") {
    const ModelSpec spec{ModelFamily::softmax_regression, 8, 3, 0};
    const Dataset train = gen_blobs(100, 3, 8, 6.0, 2), test = gen_blobs(100, 3, 8, 6.0, 3);
    const ModelVector w = local_train(spec, ModelVector::zeros(spec.parameter_count()), train, {0.5, 200, 0}, 1, 1);
    CHECK(test_accuracy(spec, w, test) >= 0.9);
}

TEST_CASE("config parsing") {
    std::istringstream in("seed = 9  # comment\n\nattack.kind = \"scaling\"\nattack.trigger.features = 1, 2,3\nattack.trigger.segments = 3\n"
                          "detector.kind = ml\naggregation.rule = krum\n");
    const ExperimentConfig c = parse_config(in);
    CHECK(c.seed == 9);
    CHECK(c.attack.kind == AttackKind::scaling);
    CHECK(c.trigger_features == std::vector<std::size_t>{1, 2, 3});
    CHECK(c.detector == DetectorKind::safefl_ml);
    CHECK(c.rule == AggregationRule::krum);
    CHECK(c.federated().aggregator.k == c.n_malicious());
    CHECK(c.n_malicious() == 6);
    CHECK(c.federated().syngen.inner_lr == c.train.lr);

    const ExperimentConfig d = load_config(SAFEFL_SOURCE_DIR "/configs/desk.conf");
    CHECK(d.epsilon == 12);
    CHECK(d.attack.lambda == 10.0);
    CHECK(d.trigger().feature_indices == std::vector<std::size_t>{12, 13, 14, 15});
}

TEST_CASE("config errors carry their key paths") {
    const auto p = problems_of("clients.n = lots\nbogus.key = 1\nno equals sign\nattack.kind = neurotoxin\n");
    CHECK(p.size() == 4);
    CHECK(mentions(p, "clients.n: "));
    CHECK(mentions(p, "bogus.key: unknown key"));
    CHECK(mentions(p, "line 3: "));
    CHECK(mentions(p, "attack.kind: "));

    const auto v = problems_of("clients.malicious_fraction = 0.5\nrounds = 10\ntrajectory.epsilon = 10\n"
                               "syngen.inner_steps = 10\ndata.q = 0.1\nattack.trigger.features = 99\n");
    CHECK(mentions(v, "clients.malicious_fraction: "));
    CHECK(mentions(v, "trajectory.epsilon: "));
    CHECK(mentions(v, "syngen.inner_steps: "));
    CHECK(mentions(v, "data.q: "));
    CHECK(mentions(v, "attack.trigger: "));

    CHECK(problems_of("detector.kind = none\nrounds = 5\n").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/x.conf"), ConfigError);
}

TEST_CASE("written configuration parses back to itself") {
    const ExperimentConfig c = tiny_config();
    std::ostringstream first;
    write_config(first, c);
    std::istringstream in(first.str());
    std::ostringstream second;
    write_config(second, parse_config(in));
    CHECK(first.str() == second.str());
}

TEST_CASE("undefended clean run learns") {
    ExperimentConfig c = tiny_config();
    c.detector = DetectorKind::none;
    c.attack.kind = AttackKind::none;
    c.rounds = 30;
    c.train.lr = 0.02;
    c.data.separation = 2.0;
    const ExperimentResult r = run_experiment(c);
    REQUIRE(r.rounds.size() == 30);
    CHECK(r.rounds.back().tacc > r.rounds.front().tacc);
    CHECK(r.rounds.back().tacc >= 0.6);
    CHECK(r.summary.detection_rounds == 0);
    CHECK_FALSE(r.summary.dacc.has_value());
    CHECK(r.summary.defense == "fedavg");
}

TEST_CASE("seeded repeats are identical and the summary averages the detection window") {
    const ExperimentConfig c = tiny_config();
    const ExperimentResult a = run_experiment(c), b = run_experiment(c);
    CHECK(rounds_csv(a) == rounds_csv(b));
    CHECK(a.summary.dacc == b.summary.dacc);
    CHECK(std::count(a.malicious.begin(), a.malicious.end(), true) == 2);

    double sum = 0.0;
    std::size_t count = 0;
    for (const RoundReport& r : a.rounds) {
        CHECK((r.phase == RoundPhase::detection) == (r.t >= c.epsilon));
        CHECK(r.syngen_ran == (r.t == c.epsilon));
        if (r.phase == RoundPhase::detection && r.metrics.dacc) {
            sum += *r.metrics.dacc;
            ++count;
        }
    }
    CHECK(a.summary.detection_rounds == c.rounds - c.epsilon + 1);
    CHECK(*a.summary.dacc == sum / static_cast<double>(count));
    CHECK(a.trajectory.size() == c.epsilon);

    ExperimentConfig other = c;
    other.seed = 5;
    CHECK(rounds_csv(run_experiment(other)) != rounds_csv(a));
}

TEST_CASE("csv outputs carry the expected columns") {
    const ExperimentResult r = run_experiment(tiny_config());
    std::ostringstream summary;
    write_summary_csv(summary, r);
    std::string header;
    std::istringstream(summary.str()) >> header;
    CHECK(header ==
          "attack,defense,aggregation,rounds,epsilon,detection_rounds,dacc,fpr,fnr,precision,recall,f1,final_tacc,final_asr");
    CHECK(summary.str().find("\nlie,safefl_cl,fedavg,12,4,9,") != std::string::npos);

    const std::string rounds = rounds_csv(r);
    CHECK(rounds.rfind("t,phase,syngen,flagged,tp,fp,tn,fn,dacc,fpr,fnr,precision,recall,f1,tacc,asr,verdicts,losses\n", 0) ==
          0);
    CHECK(std::count(rounds.begin(), rounds.end(), '\n') == 13);
    CHECK(rounds.find("\n1,trajectory,0,") != std::string::npos);
    CHECK(rounds.find("\n4,detection,1,") != std::string::npos);

    std::ostringstream log;
    write_syngen_log_csv(log, r);
    const std::string text = log.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 31);
}

TEST_CASE("write_outputs produces every artefact") {
    const auto dir = std::filesystem::temp_directory_path() / "safefl_harness_test";
    std::filesystem::remove_all(dir);
    const ExperimentResult r = run_experiment(tiny_config());
    write_outputs(dir, r);
    for (const char* f : {"rounds.csv", "summary.csv", "syngen_log.csv", "trajectory.bin", "dsyn.bin"})
        CHECK(std::filesystem::exists(dir / f));
    CHECK(trajectory_from(load_container((dir / "trajectory.bin").string())) == r.trajectory);
    const SyntheticDataset syn = synthetic_from(load_container((dir / "dsyn.bin").string()));
    CHECK(syn.features == r.synthetic->data.features);
    CHECK(syn.label_logits == r.synthetic->data.label_logits);

    ExperimentConfig plain = tiny_config();
    plain.detector = DetectorKind::none;
    const auto dir2 = dir / "plain";
    write_outputs(dir2, run_experiment(plain));
    CHECK(std::filesystem::exists(dir2 / "rounds.csv"));
    CHECK_FALSE(std::filesystem::exists(dir2 / "trajectory.bin"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("container round trip and corruption") {
    const std::vector<ModelVector> models{ModelVector({1.0, -2.5, 3.0}), ModelVector({0.0, 1e-300, -7.0})};
    const Container c = trajectory_container(models, 42, 12);
    std::stringstream ss;
    write_container(ss, c);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 8) == std::string("SAFEFLC\0", 8));

    std::istringstream in(bytes);
    const Container back = read_container(in);
    CHECK(back.kind == ContainerKind::trajectory);
    CHECK(back.seed == 42);
    CHECK(back.epsilon == 12);
    CHECK(trajectory_from(back) == models);

    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream bad_in(bad);
    CHECK_THROWS_AS(read_container(bad_in), std::runtime_error);

    std::string future = bytes;
    future[8] = 9;
    std::istringstream future_in(future);
    CHECK_THROWS_AS(read_container(future_in), std::runtime_error);

    std::istringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_container(cut), std::runtime_error);

    CHECK_THROWS(synthetic_from(back));
}
