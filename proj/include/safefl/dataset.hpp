#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "safefl/tensor.hpp"

namespace safefl {

/// Labeled feature matrix: N x F features, N labels in [0, n_classes).
class Dataset {
public:
    Dataset(Tensor features, std::vector<std::size_t> labels, std::size_t n_classes);

    const Tensor& features() const { return features_; }
    const std::vector<std::size_t>& labels() const { return labels_; }
    std::size_t n_classes() const { return n_classes_; }
    std::size_t size() const { return labels_.size(); }
    std::size_t n_features() const { return features_.cols(); }
    std::span<const double> row(std::size_t i) const;

    Dataset subset(std::span<const std::size_t> indices) const;

private:
    Tensor features_;
    std::vector<std::size_t> labels_;
    std::size_t n_classes_;
};

Dataset concat(const Dataset& a, const Dataset& b);

/// Gaussian blobs: class c has mean (separation / sqrt 2) * e_c and unit
/// isotropic noise, so every pair of class means is exactly `separation`
/// apart. Samples are interleaved by class. Needs n_classes >= 2 and
/// n_features >= n_classes.
Dataset gen_blobs(std::size_t n_per_class, std::size_t n_classes, std::size_t n_features, double separation,
                  std::uint64_t seed);

enum class PartitionScheme { probabilistic_q, label_restricted };

struct PartitionSpec {
    PartitionScheme scheme = PartitionScheme::probabilistic_q;
    double q = 0.5;
    std::size_t classes_per_client = 3;
    std::size_t n_clients = 1;
    std::uint64_t seed = 0;

    void validate(std::size_t n_classes) const;
};

/// Group index per sample for the probabilistic scheme: a sample with label g
/// lands in group g with probability q and in each other group with
/// probability (1 - q) / (M - 1).
std::vector<std::size_t> sample_groups(std::span<const std::size_t> labels, std::size_t n_classes, double q,
                                       std::uint64_t seed);

/// Client ids belonging to group g when n_clients are split into M
/// contiguous, near-equal blocks.
std::vector<std::size_t> group_clients(std::size_t group, std::size_t n_groups, std::size_t n_clients);

/// Classes held by a client under the label-restricted scheme:
/// {c*i, c*i + 1, ..., c*i + c - 1} mod M.
std::vector<std::size_t> restricted_classes(std::size_t client, std::size_t classes_per_client,
                                            std::size_t n_classes);

/// Disjoint client datasets whose union is `data`. Throws std::runtime_error
/// if some client would receive no samples.
std::vector<Dataset> partition(const Dataset& data, const PartitionSpec& spec);

struct TriggerSpec {
    std::vector<std::size_t> feature_indices;
    double trigger_value = 1.0;
    std::size_t target_label = 0;
    std::size_t n_segments = 4;

    void validate(std::size_t n_features, std::size_t n_classes) const;
    /// Disjoint contiguous chunks of feature_indices, sizes differing by at most one.
    std::vector<std::vector<std::size_t>> segments() const;
};

/// Appends poisoned copies of the first ceil(fraction * N) rows: trigger
/// features (all segments, or just `segment`) overwritten with the trigger
/// value and label set to the target.
Dataset apply_trigger(const Dataset& data, const TriggerSpec& trigger, double fraction,
                      std::optional<std::size_t> segment = std::nullopt);

/// Overwrites trigger features on every row, labels untouched. Used to build
/// backdoor evaluation sets.
Dataset stamp_trigger(const Dataset& data, const TriggerSpec& trigger, std::optional<std::size_t> segment = std::nullopt);

/// l -> M - 1 - l
std::vector<std::size_t> default_label_flip(std::size_t n_classes);
Dataset flip_labels(const Dataset& data, std::span<const std::size_t> permutation);

/// Columnar CSV with header f0,...,f{F-1},label.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, std::size_t n_classes);

}  // namespace safefl
