#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "safefl/aggregation.hpp"
#include "safefl/model.hpp"
#include "safefl/model_vector.hpp"
#include "safefl/syngen.hpp"

namespace safefl {

enum class Verdict { benign, malicious, not_evaluated };

char verdict_code(Verdict v);  // 'B', 'M', '-'

/// Mean soft-label cross-entropy of every model on the synthetic set.
std::vector<double> eval_losses(const ModelSpec& spec, std::span<const ModelVector> models,
                                const SyntheticDataset& synthetic);

/// How median-loss weights are normalised.
///   renormalized: 1/l_i over the accepted clients, scaled to sum to one.
///   literal:      1/l_i divided by the sum of 1/l_j over *all* clients, so the
///                 accepted weights sum to less than one.
enum class WeightMode { renormalized, literal };

std::string to_string(WeightMode mode);
WeightMode parse_weight_mode(const std::string& name);

struct MedianLossResult {
    std::vector<Verdict> verdicts;
    std::vector<double> weights;
    double median_loss = 0.0;
    ModelVector aggregate;
};

/// Accepts clients whose loss is at most the median loss (midpoint rule for
/// even counts) and averages them with inverse-loss weights. Losses are
/// floored at 1e-12 before inversion.
MedianLossResult safefl_ml(std::span<const ModelVector> updates, std::span<const double> losses, WeightMode mode);

enum class LossClusterer { meanshift, dbscan };

std::string to_string(LossClusterer c);
LossClusterer parse_loss_clusterer(const std::string& name);

struct LossClusterConfig {
    LossClusterer method = LossClusterer::meanshift;
    double bandwidth = 0.0;  // meanshift; <= 0 selects the pairwise-median heuristic
    double eps = 0.0;        // dbscan; <= 0 selects the same heuristic
    double heuristic_scale = 2.0;  // multiplier on the heuristic value
    std::size_t min_pts = 2;
};

/// Membership of the largest loss cluster. DBSCAN noise is never accepted.
std::vector<bool> largest_loss_cluster(std::span<const double> losses, const LossClusterConfig& config);

struct ClusterLossResult {
    std::vector<Verdict> verdicts;
    ModelVector aggregate;
};

/// Clients in the largest loss cluster are benign; the aggregate applies
/// `rule` to exactly those updates.
ClusterLossResult safefl_cl(std::span<const ModelVector> updates, std::span<const double> losses,
                            const Aggregator& rule, const LossClusterConfig& config = {});

}  // namespace safefl
