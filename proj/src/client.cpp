#include "safefl/client.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "safefl/random.hpp"

namespace safefl {

ModelVector local_train(const ModelSpec& spec, const ModelVector& global, const Dataset& data,
                        const LocalTrainConfig& config, std::uint64_t seed, std::size_t round) {
    if (data.size() == 0) throw std::invalid_argument("local_train needs a non-empty dataset");
    if (global.dim() != spec.parameter_count()) throw std::invalid_argument("global model has the wrong dimension");
    if (config.local_steps == 0) return global;

    const bool full_batch = config.batch_size == 0 || config.batch_size >= data.size();
    const Tensor full_targets = one_hot(data.labels(), data.n_classes());
    Rng rng = make_rng(seed, {0x10ca1, round});
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> w = global.values();
    for (std::size_t step = 0; step < config.local_steps; ++step) {
        std::vector<double> grad;
        if (full_batch) {
            grad = model_loss_gradient(spec, w, data.features(), full_targets);
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            const std::span<const std::size_t> picked(order.data(), config.batch_size);
            const Dataset batch = data.subset(picked);
            grad = model_loss_gradient(spec, w, batch.features(), one_hot(batch.labels(), batch.n_classes()));
        }
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= config.lr * grad[j];
    }
    return ModelVector(std::move(w));
}

ModelVector add_dp_noise(const ModelVector& update, double noise_std, std::uint64_t seed) {
    if (!(noise_std >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
    if (noise_std == 0.0) return update;
    Rng rng = make_rng(seed, {0xd9});
    std::normal_distribution<double> noise(0.0, noise_std);
    std::vector<double> out = update.values();
    for (double& v : out) v += noise(rng);
    return ModelVector(std::move(out));
}

ModelVector init_global_model(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x1417});
    std::normal_distribution<double> init(0.0, 0.1);
    std::vector<double> w(spec.parameter_count());
    for (double& v : w) v = init(rng);
    return ModelVector(std::move(w));
}

}  // namespace safefl
