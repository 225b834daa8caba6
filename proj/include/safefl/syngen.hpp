#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "safefl/model.hpp"
#include "safefl/model_vector.hpp"
#include "safefl/tensor.hpp"

namespace safefl {

/// Learnable synthetic set: S x F features and S x M label logits. The soft
/// labels are the row-softmax of the logits.
struct SyntheticDataset {
    Tensor features;
    Tensor label_logits;

    std::size_t size() const { return features.rows(); }
    Tensor soft_labels() const;
};

struct SynGenConfig {
    std::size_t iterations = 500;  // outer gradient steps
    double lr = 0.1;               // outer learning rate on X and Y
    std::size_t inner_steps = 15;  // unrolled SGD steps between trajectory models
    double inner_lr = 0.1;
    std::size_t size = 20;  // synthetic rows
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument unless 1 <= inner_steps < trajectory_length.
    void validate(std::size_t trajectory_length) const;
};

/// Features ~ N(0, 1); label logits one-hot over classes cycled through the
/// rows plus N(0, 0.01) jitter.
SyntheticDataset initial_synthetic(const ModelSpec& spec, std::size_t size, std::uint64_t seed);

struct MatchingGradient {
    double objective = 0.0;  // ||w_hat - target||^2
    Tensor features;         // d objective / d X
    Tensor label_logits;     // d objective / d Y
};

/// One hypergradient evaluation: unrolls `steps` SGD steps from `start` on
/// the synthetic set and differentiates the squared distance to `target`.
MatchingGradient trajectory_matching_gradient(const ModelSpec& spec, const SyntheticDataset& data,
                                              const ModelVector& start, const ModelVector& target, std::size_t steps,
                                              double inner_lr);

struct SynGenResult {
    SyntheticDataset data;
    std::vector<double> objective_log;  // one entry per outer iteration
};

/// Trajectory matching: each iteration draws a start index uniformly from the
/// first (length - inner_steps) models, matches the model inner_steps
/// further along, and takes a gradient step on features and label logits.
SynGenResult syngen(const ModelSpec& spec, std::span<const ModelVector> trajectory, const SynGenConfig& config);

}  // namespace safefl
