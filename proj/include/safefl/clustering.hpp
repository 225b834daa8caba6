#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safefl/model_vector.hpp"

namespace safefl {

struct KMeansResult {
    std::vector<std::size_t> assignment;  // cluster per point
    std::vector<std::size_t> sizes;       // per cluster
    std::size_t largest = 0;
    std::size_t iterations = 0;

    std::vector<bool> in_largest() const;
};

/// K-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing (at most `max_iterations`). The largest cluster wins; equal sizes
/// go to the cluster whose members have the smaller mean distance to the
/// coordinate-wise median of all points.
KMeansResult kmeans(std::span<const ModelVector> points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

/// Labels for 1-D clusterings; -1 marks noise (DBSCAN only).
struct ScalarClusters {
    std::vector<int> labels;
    std::size_t n_clusters = 0;
    std::optional<std::size_t> largest;  // empty when every point is noise

    std::vector<bool> in_largest() const;
};

/// Median of |x_i - x_j| over all pairs, floored at 1e-9.
double pairwise_median_bandwidth(std::span<const double> values);

/// Flat-kernel mean-shift on scalars: every point climbs to the fixed point
/// of "mean of values within `bandwidth`", and modes closer than bandwidth/2
/// (chained) are merged. Cluster ids follow increasing mode. Equal-size
/// largest clusters resolve to the one with the lower mean value.
ScalarClusters meanshift(std::span<const double> values, double bandwidth);

/// DBSCAN on scalars with inclusive `eps` neighbourhoods that count the point
/// itself. Largest cluster ties resolve to the lower mean value.
ScalarClusters dbscan(std::span<const double> values, double eps, std::size_t min_pts);

}  // namespace safefl
