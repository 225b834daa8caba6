#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safefl/aggregation.hpp"
#include "safefl/attacks.hpp"
#include "safefl/client.hpp"
#include "safefl/detection.hpp"
#include "safefl/model.hpp"
#include "safefl/model_vector.hpp"
#include "safefl/syngen.hpp"
#include "safefl/trajectory.hpp"

namespace safefl {

enum class DetectorKind { none, safefl_ml, safefl_cl };

std::string to_string(DetectorKind kind);
DetectorKind parse_detector_kind(const std::string& name);

enum class RoundPhase { plain, trajectory, detection };

std::string to_string(RoundPhase phase);

struct FederatedConfig {
    ModelSpec model;
    LocalTrainConfig train;
    std::size_t epsilon = 25;
    SynGenConfig syngen;
    DetectorKind detector = DetectorKind::safefl_cl;
    WeightMode weight_mode = WeightMode::renormalized;
    LossClusterConfig loss_cluster;
    std::size_t trajectory_k = 2;
    Aggregator aggregator;
    AttackSpec attack;
    double selection_rate = 1.0;
    double dp_noise = 0.0;
    std::uint64_t seed = 0;
};

/// Outcome of one round. Per-client vectors have one entry per client; clients
/// not selected this round keep the broadcast model and are not evaluated.
struct RoundState {
    std::size_t t = 0;
    RoundPhase phase = RoundPhase::plain;
    ModelVector broadcast;
    ModelVector global;
    std::vector<bool> selected;
    std::vector<ModelVector> updates;
    std::vector<Verdict> verdicts;
    std::vector<std::optional<double>> losses;  // detection phase only
    std::vector<double> weights;                // median-loss detector only
    bool syngen_ran = false;
};

/// Server plus clients for one experiment. Rounds are numbered from 1; round
/// t broadcasts w^t and produces w^{t+1}.
///
/// With a detector configured, rounds t < epsilon filter updates by K-means
/// and record w^{t+1} in the trajectory (which starts with w^1), round epsilon
/// generates the synthetic set once, and rounds t >= epsilon run loss-based
/// detection. Without a detector every round aggregates all participants.
class FederatedRun {
public:
    FederatedRun(FederatedConfig config, std::vector<ClientState> clients);

    RoundState run_round();

    std::size_t next_round() const { return t_; }
    const ModelVector& global() const { return global_; }
    const Trajectory& trajectory() const { return trajectory_; }
    const std::optional<SynGenResult>& synthetic() const { return synthetic_; }
    const std::vector<ClientState>& clients() const { return clients_; }
    const FederatedConfig& config() const { return config_; }

private:
    std::vector<bool> select_participants() const;
    std::vector<bool> defender_accepts(RoundPhase phase, std::span<const ModelVector> updates) const;
    RoundPhase phase_of(std::size_t t) const;

    FederatedConfig config_;
    std::vector<ClientState> clients_;
    ModelVector global_;
    Trajectory trajectory_;
    std::optional<SynGenResult> synthetic_;
    std::size_t t_ = 1;
};

}  // namespace safefl
