#include "safefl/syngen.hpp"

#include <stdexcept>
#include <string>

#include "safefl/random.hpp"

namespace safefl {

Tensor SyntheticDataset::soft_labels() const { return softmax_rows(label_logits); }

void SynGenConfig::validate(std::size_t trajectory_length) const {
    if (inner_steps < 1) throw std::invalid_argument("syngen needs at least one inner step");
    if (trajectory_length <= inner_steps) {
        throw std::invalid_argument("trajectory length " + std::to_string(trajectory_length) +
                                    " must exceed inner steps " + std::to_string(inner_steps));
    }
    if (size == 0) throw std::invalid_argument("synthetic set needs at least one row");
    if (!(lr > 0.0) || !(inner_lr > 0.0)) throw std::invalid_argument("syngen learning rates must be positive");
}

SyntheticDataset initial_synthetic(const ModelSpec& spec, std::size_t size, std::uint64_t seed) {
    spec.validate();
    if (size == 0) throw std::invalid_argument("synthetic set needs at least one row");
    Rng rng = make_rng(seed, {0x5e9});
    std::normal_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 0.01);
    const std::size_t f = spec.n_features, m = spec.n_classes;
    std::vector<double> x(size * f);
    for (double& v : x) v = unit(rng);
    std::vector<double> y(size * m);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < m; ++j) y[i * m + j] = (j == i % m ? 1.0 : 0.0) + jitter(rng);
    return {Tensor::matrix(size, f, std::move(x)), Tensor::matrix(size, m, std::move(y))};
}

MatchingGradient trajectory_matching_gradient(const ModelSpec& spec, const SyntheticDataset& data,
                                              const ModelVector& start, const ModelVector& target, std::size_t steps,
                                              double inner_lr) {
    if (start.dim() != spec.parameter_count() || target.dim() != spec.parameter_count()) {
        throw std::invalid_argument("trajectory models do not match the model parameter count");
    }
    Graph g;
    const NodeId x = g.leaf(data.features);
    const NodeId y = g.leaf(data.label_logits);
    const NodeId w0 = g.constant(Tensor::vector(start.values()));
    const NodeId goal = g.constant(Tensor::vector(target.values()));
    const NodeId w_hat = unroll_inner_sgd(g, spec, w0, x, y, steps, inner_lr);
    const NodeId objective = g.squared_l2_norm(g.subtract(w_hat, goal));
    const Gradients grads = g.backward(objective);
    return {g.value(objective).item(), grads[x], grads[y]};
}

SynGenResult syngen(const ModelSpec& spec, std::span<const ModelVector> trajectory, const SynGenConfig& config) {
    config.validate(trajectory.size());
    SynGenResult result{initial_synthetic(spec, config.size, config.seed), {}};
    result.objective_log.reserve(config.iterations);

    Rng rng = make_rng(config.seed, {0xa1fa});
    // 0-based start index in [0, length - inner_steps - 1]
    std::uniform_int_distribution<std::size_t> pick_start(0, trajectory.size() - config.inner_steps - 1);

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        const std::size_t alpha = pick_start(rng);
        const MatchingGradient mg = trajectory_matching_gradient(
            spec, result.data, trajectory[alpha], trajectory[alpha + config.inner_steps], config.inner_steps,
            config.inner_lr);
        result.objective_log.push_back(mg.objective);

        auto step = [&](const Tensor& value, const Tensor& grad) {
            std::vector<double> next = value.values();
            for (std::size_t i = 0; i < next.size(); ++i) next[i] -= config.lr * grad[i];
            return Tensor(value.shape(), std::move(next));
        };
        result.data.features = step(result.data.features, mg.features);
        result.data.label_logits = step(result.data.label_logits, mg.label_logits);
    }
    return result;
}

}  // namespace safefl
