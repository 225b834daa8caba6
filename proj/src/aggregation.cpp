#include "safefl/aggregation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace safefl {
namespace {

std::vector<double> column(std::span<const ModelVector> updates, std::size_t j) {
    std::vector<double> out(updates.size());
    for (std::size_t i = 0; i < updates.size(); ++i) out[i] = updates[i][j];
    return out;
}

}  // namespace

double median_value(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty list");
    const std::size_t n = values.size(), mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lower + upper) / 2.0;
}

ModelVector fedavg(std::span<const ModelVector> updates) {
    const std::size_t d = common_dim(updates);
    std::vector<double> out(d, 0.0);
    for (const ModelVector& u : updates)
        for (std::size_t j = 0; j < d; ++j) out[j] += u[j];
    const double n = static_cast<double>(updates.size());
    for (double& v : out) v /= n;
    return ModelVector(std::move(out));
}

ModelVector coordinate_median(std::span<const ModelVector> updates) {
    const std::size_t d = common_dim(updates);
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) out[j] = median_value(column(updates, j));
    return ModelVector(std::move(out));
}

ModelVector trimmed_mean(std::span<const ModelVector> updates, std::size_t k) {
    const std::size_t d = common_dim(updates);
    const std::size_t n = updates.size();
    if (n <= 2 * k) {
        throw std::invalid_argument("trimmed_mean needs n > 2k (n=" + std::to_string(n) + ", k=" + std::to_string(k) +
                                    ")");
    }
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col = column(updates, j);
        std::sort(col.begin(), col.end());
        double s = 0.0;
        for (std::size_t i = k; i < n - k; ++i) s += col[i];
        out[j] = s / static_cast<double>(n - 2 * k);
    }
    return ModelVector(std::move(out));
}

std::size_t krum_index(std::span<const ModelVector> updates, std::size_t k) {
    common_dim(updates);
    const std::size_t n = updates.size();
    if (n < k + 3) {
        throw std::invalid_argument("krum needs n >= k + 3 (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
    const std::size_t neighbours = n - k - 2;
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = squared_distance(updates[i], updates[j]);

    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> others;
        others.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(dist[i][j]);
        std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(neighbours), others.end());
        double score = 0.0;
        for (std::size_t q = 0; q < neighbours; ++q) score += others[q];
        if (score < best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

ModelVector krum(std::span<const ModelVector> updates, std::size_t k) { return updates[krum_index(updates, k)]; }

ModelVector weighted_average(std::span<const ModelVector> updates, std::span<const double> weights) {
    const std::size_t d = common_dim(updates);
    if (weights.size() != updates.size()) throw std::invalid_argument("one weight per update required");
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw std::invalid_argument("aggregation weights must be non-negative");
        if (weights[i] == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) out[j] += weights[i] * updates[i][j];
    }
    return ModelVector(std::move(out));
}

std::string to_string(AggregationRule rule) {
    switch (rule) {
        case AggregationRule::fedavg:
            return "fedavg";
        case AggregationRule::median:
            return "median";
        case AggregationRule::trimmed_mean:
            return "trimmed_mean";
        case AggregationRule::krum:
            return "krum";
    }
    return "unknown";
}

AggregationRule parse_aggregation_rule(const std::string& name) {
    if (name == "fedavg") return AggregationRule::fedavg;
    if (name == "median") return AggregationRule::median;
    if (name == "trimmed_mean" || name == "trmean") return AggregationRule::trimmed_mean;
    if (name == "krum") return AggregationRule::krum;
    throw std::invalid_argument("unknown aggregation rule '" + name + "'");
}

ModelVector Aggregator::operator()(std::span<const ModelVector> updates) const {
    const std::size_t n = updates.size();
    switch (rule) {
        case AggregationRule::fedavg:
            return fedavg(updates);
        case AggregationRule::median:
            return coordinate_median(updates);
        case AggregationRule::trimmed_mean:
            return trimmed_mean(updates, n == 0 ? 0 : std::min(k, (n - 1) / 2));
        case AggregationRule::krum:
            if (n < 3) return fedavg(updates);
            return krum(updates, std::min(k, n - 3));
    }
    throw std::invalid_argument("unsupported aggregation rule");
}

}  // namespace safefl
