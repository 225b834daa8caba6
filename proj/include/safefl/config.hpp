#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "safefl/aggregation.hpp"
#include "safefl/attacks.hpp"
#include "safefl/client.hpp"
#include "safefl/dataset.hpp"
#include "safefl/detection.hpp"
#include "safefl/model.hpp"
#include "safefl/round.hpp"
#include "safefl/syngen.hpp"

namespace safefl {

struct DataConfig {
    std::size_t n_classes = 4;
    std::size_t n_features = 16;
    std::size_t train_per_class = 200;
    std::size_t test_per_class = 100;
    double separation = 4.0;
    PartitionScheme scheme = PartitionScheme::probabilistic_q;
    double q = 0.5;
    std::size_t classes_per_client = 3;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t n_clients = 20;
    double malicious_fraction = 0.3;
    std::size_t rounds = 60;
    DataConfig data;
    ModelFamily family = ModelFamily::softmax_regression;
    std::size_t hidden = 16;
    LocalTrainConfig train;
    std::size_t epsilon = 25;
    std::size_t trajectory_k = 2;
    SynGenConfig syngen;
    std::optional<double> syngen_inner_lr;  // defaults to train.lr
    DetectorKind detector = DetectorKind::safefl_cl;
    WeightMode weight_mode = WeightMode::renormalized;
    LossClusterConfig loss_cluster;
    AggregationRule rule = AggregationRule::fedavg;
    std::optional<std::size_t> aggregation_k;  // defaults to the malicious count
    AttackSpec attack;  // trigger is filled from the fields below
    std::vector<std::size_t> trigger_features;
    double trigger_value = 3.0;
    std::size_t trigger_target = 0;
    std::size_t trigger_segments = 4;
    double selection_rate = 1.0;
    double dp_noise = 0.0;

    std::size_t n_malicious() const;
    ModelSpec model_spec() const;
    /// Trigger indices if configured, else the last four feature indices.
    TriggerSpec trigger() const;
    FederatedConfig federated() const;
    /// Every violated constraint as "key: message".
    std::vector<std::string> validate() const;
};

/// Collected configuration problems, each prefixed by its key path.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Parses `key = value` lines ('#' starts a comment) over the defaults and
/// validates the result. Throws ConfigError listing every problem found.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// The effective configuration in the same key = value format.
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace safefl
