#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "safefl/client.hpp"
#include "safefl/config.hpp"
#include "safefl/dataset.hpp"
#include "safefl/metrics.hpp"
#include "safefl/round.hpp"
#include "safefl/syngen.hpp"

namespace safefl {

/// Clients, held-out test set and the ground-truth malicious mask.
struct ExperimentSetup {
    std::vector<ClientState> clients;
    Dataset test;
    std::vector<bool> malicious;
};

ExperimentSetup build_setup(const ExperimentConfig& config);

struct RoundReport {
    std::size_t t = 0;
    RoundPhase phase = RoundPhase::plain;
    bool syngen_ran = false;
    std::vector<Verdict> verdicts;
    DetectionMetrics metrics;
    std::size_t flagged = 0;
    double tacc = 0.0;
    std::optional<double> asr;
    std::vector<std::optional<double>> losses;
};

/// Detection metrics averaged over detection-phase rounds (each over the
/// rounds where it is defined), plus final-round accuracy figures.
struct ExperimentSummary {
    std::string attack;
    std::string defense;
    std::size_t detection_rounds = 0;
    std::optional<double> dacc, fpr, fnr, precision, recall, f1;
    double final_tacc = 0.0;
    std::optional<double> final_asr;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<bool> malicious;
    std::vector<RoundReport> rounds;
    ExperimentSummary summary;
    std::vector<ModelVector> trajectory;
    std::optional<SynGenResult> synthetic;
};

ExperimentSummary summarize(const ExperimentConfig& config, const std::vector<RoundReport>& rounds);

ExperimentResult run_experiment(const ExperimentConfig& config);

void write_rounds_csv(std::ostream& out, const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
void write_syngen_log_csv(std::ostream& out, const ExperimentResult& result);

/// rounds.csv, summary.csv, syngen_log.csv, trajectory.bin and dsyn.bin (the
/// last three only when a detector ran).
void write_outputs(const std::filesystem::path& dir, const ExperimentResult& result);

}  // namespace safefl
