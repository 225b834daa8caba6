#include "safefl/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>

#include "safefl/io.hpp"
#include "safefl/random.hpp"

namespace safefl {
namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string("NA"); }

std::optional<double> average(const std::vector<RoundReport>& rounds,
                              std::optional<double> DetectionMetrics::*field) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const RoundReport& r : rounds) {
        if (r.phase != RoundPhase::detection) continue;
        if (const auto& v = r.metrics.*field) {
            sum += *v;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::ofstream open(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

ExperimentSetup build_setup(const ExperimentConfig& config) {
    if (auto problems = config.validate(); !problems.empty()) throw ConfigError(std::move(problems));
    const DataConfig& d = config.data;
    const Dataset train =
        gen_blobs(d.train_per_class, d.n_classes, d.n_features, d.separation, derive_seed(config.seed, {0xda7a, 0}));
    Dataset test =
        gen_blobs(d.test_per_class, d.n_classes, d.n_features, d.separation, derive_seed(config.seed, {0xda7a, 1}));

    PartitionSpec part;
    part.scheme = d.scheme;
    part.q = d.q;
    part.classes_per_client = d.classes_per_client;
    part.n_clients = config.n_clients;
    part.seed = derive_seed(config.seed, {0x9a27});
    std::vector<Dataset> shards = partition(train, part);

    std::vector<std::size_t> order(config.n_clients);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(config.seed, {0xbad});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> malicious(config.n_clients, false);
    for (std::size_t i = 0; i < config.n_malicious(); ++i) malicious[order[i]] = true;

    std::vector<ClientState> clients;
    for (std::size_t i = 0; i < config.n_clients; ++i) {
        clients.push_back(ClientState{i, std::move(shards[i]), malicious[i], derive_seed(config.seed, {0xc11e, i})});
    }
    return ExperimentSetup{std::move(clients), std::move(test), std::move(malicious)};
}

ExperimentSummary summarize(const ExperimentConfig& config, const std::vector<RoundReport>& rounds) {
    ExperimentSummary s;
    s.attack = to_string(config.attack.kind);
    s.defense = config.detector == DetectorKind::none ? to_string(config.rule) : to_string(config.detector);
    s.detection_rounds = static_cast<std::size_t>(std::count_if(
        rounds.begin(), rounds.end(), [](const RoundReport& r) { return r.phase == RoundPhase::detection; }));
    s.dacc = average(rounds, &DetectionMetrics::dacc);
    s.fpr = average(rounds, &DetectionMetrics::fpr);
    s.fnr = average(rounds, &DetectionMetrics::fnr);
    s.precision = average(rounds, &DetectionMetrics::precision);
    s.recall = average(rounds, &DetectionMetrics::recall);
    s.f1 = average(rounds, &DetectionMetrics::f1);
    if (!rounds.empty()) {
        s.final_tacc = rounds.back().tacc;
        s.final_asr = rounds.back().asr;
    }
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentSetup setup = build_setup(config);
    const FederatedConfig fed = config.federated();
    const ModelSpec spec = fed.model;
    const TriggerSpec trigger = fed.attack.trigger;

    ExperimentResult result;
    result.config = config;
    result.malicious = setup.malicious;

    FederatedRun run(fed, std::move(setup.clients));
    for (std::size_t t = 1; t <= config.rounds; ++t) {
        RoundState state = run.run_round();
        RoundReport report;
        report.t = state.t;
        report.phase = state.phase;
        report.syngen_ran = state.syngen_ran;
        report.metrics = detection_metrics(state.verdicts, setup.malicious);
        report.flagged = static_cast<std::size_t>(
            std::count(state.verdicts.begin(), state.verdicts.end(), Verdict::malicious));
        report.verdicts = std::move(state.verdicts);
        report.tacc = test_accuracy(spec, state.global, setup.test);
        report.asr = attack_success_rate(spec, state.global, setup.test, trigger);
        report.losses = std::move(state.losses);
        result.rounds.push_back(std::move(report));
    }
    result.summary = summarize(config, result.rounds);
    result.trajectory = run.trajectory().models();
    result.synthetic = run.synthetic();
    return result;
}

void write_rounds_csv(std::ostream& out, const ExperimentResult& result) {
    out << "t,phase,syngen,flagged,tp,fp,tn,fn,dacc,fpr,fnr,precision,recall,f1,tacc,asr,verdicts,losses\n";
    for (const RoundReport& r : result.rounds) {
        std::string verdicts;
        for (Verdict v : r.verdicts) verdicts += verdict_code(v);
        std::string losses;
        for (std::size_t i = 0; i < r.losses.size(); ++i) {
            if (i) losses += ';';
            losses += r.losses[i] ? fmt::format("{:.9g}", *r.losses[i]) : std::string("NA");
        }
        const DetectionMetrics& m = r.metrics;
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6f},{},{},{}\n", r.t, to_string(r.phase),
                           r.syngen_ran ? 1 : 0, r.flagged, m.tp, m.fp, m.tn, m.fn, cell(m.dacc), cell(m.fpr),
                           cell(m.fnr), cell(m.precision), cell(m.recall), cell(m.f1), r.tacc, cell(r.asr), verdicts,
                           losses);
    }
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
    const ExperimentSummary& s = result.summary;
    out << "attack,defense,aggregation,rounds,epsilon,detection_rounds,dacc,fpr,fnr,precision,recall,f1,final_tacc,"
           "final_asr\n";
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{:.6f},{}\n", s.attack, s.defense,
                       to_string(result.config.rule), result.config.rounds, result.config.epsilon, s.detection_rounds,
                       cell(s.dacc), cell(s.fpr), cell(s.fnr), cell(s.precision), cell(s.recall), cell(s.f1),
                       s.final_tacc, cell(s.final_asr));
}

void write_syngen_log_csv(std::ostream& out, const ExperimentResult& result) {
    out << "iter,objective\n";
    if (!result.synthetic) return;
    const std::vector<double>& log = result.synthetic->objective_log;
    for (std::size_t i = 0; i < log.size(); ++i) out << fmt::format("{},{:.12g}\n", i + 1, log[i]);
}

void write_outputs(const std::filesystem::path& dir, const ExperimentResult& result) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out = open(dir / "rounds.csv");
        write_rounds_csv(out, result);
    }
    {
        std::ofstream out = open(dir / "summary.csv");
        write_summary_csv(out, result);
    }
    if (result.config.detector == DetectorKind::none) return;
    {
        std::ofstream out = open(dir / "syngen_log.csv");
        write_syngen_log_csv(out, result);
    }
    save_container((dir / "trajectory.bin").string(),
                   trajectory_container(result.trajectory, result.config.seed, result.config.epsilon));
    if (result.synthetic) {
        save_container((dir / "dsyn.bin").string(),
                       synthetic_container(result.synthetic->data, result.config.seed, result.config.epsilon));
    }
}

}  // namespace safefl
