#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "safefl/model_vector.hpp"
#include "safefl/syngen.hpp"
#include "safefl/tensor.hpp"

namespace safefl {

/// Binary snapshot container, little-endian:
///   magic "SAFEFLC\0", u32 version, u32 kind, u64 seed, u64 epsilon,
///   u32 tensor count, then per tensor: u32 rank, u64 dims[rank], f64 data.
enum class ContainerKind : std::uint32_t { trajectory = 1, synthetic = 2 };

inline constexpr std::uint32_t container_version = 1;

struct Container {
    ContainerKind kind = ContainerKind::trajectory;
    std::uint64_t seed = 0;
    std::uint64_t epsilon = 0;
    std::vector<Tensor> tensors;
};

void write_container(std::ostream& out, const Container& c);
/// Throws std::runtime_error on a bad magic, version, or truncated stream.
Container read_container(std::istream& in);

/// Trajectory as one count x d tensor.
Container trajectory_container(std::span<const ModelVector> models, std::uint64_t seed, std::uint64_t epsilon);
std::vector<ModelVector> trajectory_from(const Container& c);

/// Synthetic set as two tensors: features, then label logits.
Container synthetic_container(const SyntheticDataset& data, std::uint64_t seed, std::uint64_t epsilon);
SyntheticDataset synthetic_from(const Container& c);

void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

}  // namespace safefl
