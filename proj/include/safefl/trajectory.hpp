#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "safefl/aggregation.hpp"
#include "safefl/model_vector.hpp"

namespace safefl {

/// The first `capacity` global models, in round order.
class Trajectory {
public:
    explicit Trajectory(std::size_t capacity) : capacity_(capacity) {}

    void append(ModelVector model);

    const std::vector<ModelVector>& models() const { return models_; }
    std::size_t size() const { return models_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return models_.size() >= capacity_; }

private:
    std::size_t capacity_;
    std::vector<ModelVector> models_;
};

/// Marks the members of the cluster the server keeps.
using ClusterFilter = std::function<std::vector<bool>(std::span<const ModelVector>)>;

/// Largest K-means cluster of the raw model vectors.
ClusterFilter kmeans_filter(std::size_t k, std::uint64_t seed);

struct TrajectoryRound {
    ModelVector global;      // aggregate of the kept updates
    std::vector<bool> kept;  // membership of the kept cluster
};

/// Clusters the updates, aggregates the kept cluster with `rule`, and appends
/// the result to the trajectory. Throws std::logic_error if the trajectory is
/// already full.
TrajectoryRound collect_trajectory_round(std::span<const ModelVector> updates, const ClusterFilter& filter,
                                         const Aggregator& rule, Trajectory& trajectory);

}  // namespace safefl
