#include "safefl/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

#include "safefl/clustering.hpp"

namespace safefl {

void Trajectory::append(ModelVector model) {
    if (full()) throw std::logic_error("trajectory already holds its " + std::to_string(capacity_) + " models");
    if (!models_.empty() && model.dim() != models_.front().dim()) {
        throw std::invalid_argument("trajectory models must share one dimension");
    }
    models_.push_back(std::move(model));
}

ClusterFilter kmeans_filter(std::size_t k, std::uint64_t seed) {
    return [k, seed](std::span<const ModelVector> updates) {
        return kmeans(updates, std::min(k, updates.size()), seed).in_largest();
    };
}

TrajectoryRound collect_trajectory_round(std::span<const ModelVector> updates, const ClusterFilter& filter,
                                         const Aggregator& rule, Trajectory& trajectory) {
    if (trajectory.full()) throw std::logic_error("trajectory collection called after the trajectory is complete");
    common_dim(updates);
    TrajectoryRound out;
    out.kept = filter(updates);
    if (out.kept.size() != updates.size()) throw std::logic_error("cluster filter returned a mask of the wrong size");
    std::vector<ModelVector> members;
    for (std::size_t i = 0; i < updates.size(); ++i)
        if (out.kept[i]) members.push_back(updates[i]);
    if (members.empty()) throw std::logic_error("cluster filter kept no update");
    out.global = rule(members);
    trajectory.append(out.global);
    return out;
}

}  // namespace safefl
