#pragma once

#include <cstddef>
#include <cstdint>

#include "safefl/dataset.hpp"
#include "safefl/model.hpp"
#include "safefl/model_vector.hpp"

namespace safefl {

struct ClientState {
    std::size_t id = 0;
    Dataset dataset;
    bool is_malicious = false;  // ground truth; never shown to the server
    std::uint64_t rng_seed = 0;
};

struct LocalTrainConfig {
    double lr = 0.5;
    std::size_t local_steps = 1;
    std::size_t batch_size = 0;  // 0 or >= |D| means full batch
};

/// Mini-batch SGD from the broadcast model on hard-label cross-entropy.
/// Batches are drawn without replacement from a stream keyed by (seed, round).
ModelVector local_train(const ModelSpec& spec, const ModelVector& global, const Dataset& data,
                        const LocalTrainConfig& config, std::uint64_t seed, std::size_t round);

inline ModelVector local_train(const ModelSpec& spec, const ModelVector& global, const ClientState& client,
                               const LocalTrainConfig& config, std::size_t round) {
    return local_train(spec, global, client.dataset, config, client.rng_seed, round);
}

/// Adds i.i.d. N(0, noise_std^2) to every coordinate.
ModelVector add_dp_noise(const ModelVector& update, double noise_std, std::uint64_t seed);

/// Initial global model, entries i.i.d. normal with variance 0.01.
ModelVector init_global_model(const ModelSpec& spec, std::uint64_t seed);

}  // namespace safefl
