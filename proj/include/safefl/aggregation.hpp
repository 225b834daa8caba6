#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "safefl/model_vector.hpp"

namespace safefl {

/// Median with midpoint interpolation for even counts. Throws on empty input.
double median_value(std::vector<double> values);

ModelVector fedavg(std::span<const ModelVector> updates);
ModelVector coordinate_median(std::span<const ModelVector> updates);
/// Drops the k largest and k smallest values per coordinate; needs n > 2k.
ModelVector trimmed_mean(std::span<const ModelVector> updates, std::size_t k);

/// Index of the update with the smallest sum of squared distances to its
/// n - k - 2 nearest other updates (ties go to the lowest index). Needs n >= k + 3.
std::size_t krum_index(std::span<const ModelVector> updates, std::size_t k);
ModelVector krum(std::span<const ModelVector> updates, std::size_t k);

/// sum_i weights[i] * updates[i]; weights must be non-negative.
ModelVector weighted_average(std::span<const ModelVector> updates, std::span<const double> weights);

enum class AggregationRule { fedavg, median, trimmed_mean, krum };

std::string to_string(AggregationRule rule);
AggregationRule parse_aggregation_rule(const std::string& name);

/// Server-side aggregation rule with its trimming parameter.
///
/// Unlike the raw functions, the call operator shrinks k to the largest value
/// the update count supports, because the rule is also applied to the
/// accepted subset after detection, whose size varies per round.
struct Aggregator {
    AggregationRule rule = AggregationRule::fedavg;
    std::size_t k = 0;

    ModelVector operator()(std::span<const ModelVector> updates) const;
};

}  // namespace safefl
