#include "safefl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "safefl/aggregation.hpp"
#include "safefl/random.hpp"

namespace safefl {
namespace {

std::size_t nearest_center(const ModelVector& p, const std::vector<ModelVector>& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = squared_distance(p, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<bool> membership(const std::vector<int>& labels, std::optional<std::size_t> cluster) {
    std::vector<bool> out(labels.size(), false);
    if (!cluster) return out;
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == static_cast<int>(*cluster);
    return out;
}

// Largest labelled cluster; ties go to the lower mean value.
std::optional<std::size_t> largest_scalar_cluster(std::span<const double> values, const std::vector<int>& labels,
                                                  std::size_t n_clusters) {
    if (n_clusters == 0) return std::nullopt;
    std::vector<std::size_t> count(n_clusters, 0);
    std::vector<double> sum(n_clusters, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) continue;
        ++count[static_cast<std::size_t>(labels[i])];
        sum[static_cast<std::size_t>(labels[i])] += values[i];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < n_clusters; ++c) {
        if (count[c] > count[best]) {
            best = c;
        } else if (count[c] == count[best] &&
                   sum[c] / static_cast<double>(count[c]) < sum[best] / static_cast<double>(count[best])) {
            best = c;
        }
    }
    return best;
}

}  // namespace

std::vector<bool> KMeansResult::in_largest() const {
    std::vector<bool> out(assignment.size());
    for (std::size_t i = 0; i < assignment.size(); ++i) out[i] = assignment[i] == largest;
    return out;
}

KMeansResult kmeans(std::span<const ModelVector> points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
    if (k == 0) throw std::invalid_argument("kmeans needs K >= 1");
    common_dim(points);
    const std::size_t n = points.size();
    if (n < k) throw std::invalid_argument("kmeans needs at least K points");

    Rng rng = make_rng(seed, {0x6b6d});
    std::vector<ModelVector> centers;
    centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = squared_distance(points[i], centers[nearest_center(points[i], centers)]);
            total += d2[i];
        }
        if (total <= 0.0) {
            centers.push_back(points[0]);
            continue;
        }
        double pick = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (pick < d2[i]) {
                chosen = i;
                break;
            }
            pick -= d2[i];
        }
        centers.push_back(points[chosen]);
    }

    KMeansResult result;
    result.assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) result.assignment[i] = nearest_center(points[i], centers);
    for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
        result.iterations = iter;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<ModelVector> members;
            for (std::size_t i = 0; i < n; ++i)
                if (result.assignment[i] == c) members.push_back(points[i]);
            if (!members.empty()) centers[c] = fedavg(members);
        }
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_center(points[i], centers);
            if (c != result.assignment[i]) {
                result.assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
    }

    result.sizes.assign(k, 0);
    for (std::size_t c : result.assignment) ++result.sizes[c];

    const ModelVector center = coordinate_median(points);
    std::vector<double> mean_dist(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        mean_dist[result.assignment[i]] += std::sqrt(squared_distance(points[i], center));
    }
    for (std::size_t c = 0; c < k; ++c)
        if (result.sizes[c]) mean_dist[c] /= static_cast<double>(result.sizes[c]);

    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
        if (result.sizes[c] > result.sizes[best] ||
            (result.sizes[c] == result.sizes[best] && mean_dist[c] < mean_dist[best])) {
            best = c;
        }
    }
    result.largest = best;
    return result;
}

std::vector<bool> ScalarClusters::in_largest() const { return membership(labels, largest); }

double pairwise_median_bandwidth(std::span<const double> values) {
    std::vector<double> diffs;
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j) diffs.push_back(std::abs(values[i] - values[j]));
    if (diffs.empty()) return 1e-9;
    return std::max(median_value(std::move(diffs)), 1e-9);
}

ScalarClusters meanshift(std::span<const double> values, double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("meanshift bandwidth must be positive");
    const std::size_t n = values.size();
    ScalarClusters out;
    out.labels.assign(n, -1);
    if (n == 0) return out;

    std::vector<double> modes(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = values[i];
        for (int iter = 0; iter < 1000; ++iter) {
            double sum = 0.0;
            std::size_t count = 0;
            for (double v : values) {
                if (std::abs(v - x) <= bandwidth) {
                    sum += v;
                    ++count;
                }
            }
            if (count == 0) break;
            const double next = sum / static_cast<double>(count);
            if (next == x) break;
            x = next;
        }
        modes[i] = x;
    }

    // Chain-merge sorted modes whose gaps are at most bandwidth / 2.
    std::vector<double> sorted = modes;
    std::sort(sorted.begin(), sorted.end());
    std::map<double, int> group_of;
    int group = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i] - sorted[i - 1] > bandwidth / 2.0) ++group;
        group_of[sorted[i]] = group;
    }
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = group_of.at(modes[i]);
    out.n_clusters = static_cast<std::size_t>(group) + 1;
    out.largest = largest_scalar_cluster(values, out.labels, out.n_clusters);
    return out;
}

ScalarClusters dbscan(std::span<const double> values, double eps, std::size_t min_pts) {
    if (!(eps >= 0.0)) throw std::invalid_argument("dbscan eps must be non-negative");
    if (min_pts == 0) throw std::invalid_argument("dbscan min_pts must be positive");
    const std::size_t n = values.size();
    auto neighbours = [&](std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(values[i] - values[j]) <= eps) out.push_back(j);
        return out;
    };

    ScalarClusters out;
    out.labels.assign(n, -1);
    std::vector<bool> visited(n, false);
    int cluster = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = true;
        std::vector<std::size_t> seeds = neighbours(i);
        if (seeds.size() < min_pts) continue;
        ++cluster;
        out.labels[i] = cluster;
        for (std::size_t q = 0; q < seeds.size(); ++q) {
            const std::size_t j = seeds[q];
            if (out.labels[j] < 0) out.labels[j] = cluster;
            if (visited[j]) continue;
            visited[j] = true;
            std::vector<std::size_t> more = neighbours(j);
            if (more.size() >= min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
        }
    }
    out.n_clusters = static_cast<std::size_t>(cluster + 1);
    out.largest = largest_scalar_cluster(values, out.labels, out.n_clusters);
    return out;
}

}  // namespace safefl
