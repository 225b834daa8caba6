#include "safefl/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "safefl/random.hpp"

namespace safefl {

Dataset::Dataset(Tensor features, std::vector<std::size_t> labels, std::size_t n_classes)
    : features_(std::move(features)), labels_(std::move(labels)), n_classes_(n_classes) {
    if (features_.rank() != 2) throw std::invalid_argument("dataset features must be a matrix");
    if (features_.rows() != labels_.size()) {
        throw std::invalid_argument("dataset has " + std::to_string(features_.rows()) + " rows but " +
                                    std::to_string(labels_.size()) + " labels");
    }
    if (labels_.empty()) throw std::invalid_argument("dataset must contain at least one sample");
    for (std::size_t l : labels_) {
        if (l >= n_classes_) {
            throw std::invalid_argument("label " + std::to_string(l) + " outside [0, " + std::to_string(n_classes_) +
                                        ")");
        }
    }
}

std::span<const double> Dataset::row(std::size_t i) const {
    return features_.data().subspan(i * n_features(), n_features());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    const std::size_t f = n_features();
    std::vector<double> feats;
    feats.reserve(indices.size() * f);
    std::vector<std::size_t> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= size()) throw std::out_of_range("subset index out of range");
        auto r = row(i);
        feats.insert(feats.end(), r.begin(), r.end());
        labels.push_back(labels_[i]);
    }
    return Dataset(Tensor::matrix(indices.size(), f, std::move(feats)), std::move(labels), n_classes_);
}

Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.n_features() != b.n_features() || a.n_classes() != b.n_classes()) {
        throw std::invalid_argument("cannot concatenate datasets of different layout");
    }
    std::vector<double> feats = a.features().values();
    feats.insert(feats.end(), b.features().data().begin(), b.features().data().end());
    std::vector<std::size_t> labels = a.labels();
    labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    const std::size_t n = labels.size();
    return Dataset(Tensor::matrix(n, a.n_features(), std::move(feats)), std::move(labels), a.n_classes());
}

Dataset gen_blobs(std::size_t n_per_class, std::size_t n_classes, std::size_t n_features, double separation,
                  std::uint64_t seed) {
    if (n_classes < 2) throw std::invalid_argument("gen_blobs needs at least 2 classes");
    if (n_features < n_classes) throw std::invalid_argument("gen_blobs needs n_features >= n_classes");
    if (n_per_class == 0) throw std::invalid_argument("gen_blobs needs n_per_class >= 1");
    if (!(separation >= 0.0)) throw std::invalid_argument("separation must be non-negative");

    Rng rng = make_rng(seed, {0xb10b5});
    std::normal_distribution<double> noise(0.0, 1.0);
    const double offset = separation / std::sqrt(2.0);
    const std::size_t n = n_per_class * n_classes;
    std::vector<double> feats(n * n_features);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % n_classes;
        labels[i] = c;
        for (std::size_t j = 0; j < n_features; ++j) {
            feats[i * n_features + j] = noise(rng) + (j == c ? offset : 0.0);
        }
    }
    return Dataset(Tensor::matrix(n, n_features, std::move(feats)), std::move(labels), n_classes);
}

void PartitionSpec::validate(std::size_t n_classes) const {
    if (n_clients == 0) throw std::invalid_argument("partition needs at least one client");
    if (scheme == PartitionScheme::probabilistic_q) {
        const double lo = 1.0 / static_cast<double>(n_classes);
        if (!(q >= lo - 1e-12 && q <= 1.0)) {
            throw std::invalid_argument("q must lie in [1/M, 1], got " + std::to_string(q));
        }
        if (n_clients < n_classes) throw std::invalid_argument("probabilistic partition needs n_clients >= M");
    } else {
        if (classes_per_client == 0 || classes_per_client > n_classes) {
            throw std::invalid_argument("classes_per_client must lie in [1, M]");
        }
    }
}

std::vector<std::size_t> sample_groups(std::span<const std::size_t> labels, std::size_t n_classes, double q,
                                       std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x9e0});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> other(0, n_classes - 2);
    std::vector<std::size_t> groups(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t g = labels[i];
        if (unit(rng) < q) {
            groups[i] = g;
        } else {
            const std::size_t k = other(rng);
            groups[i] = k < g ? k : k + 1;
        }
    }
    return groups;
}

std::vector<std::size_t> group_clients(std::size_t group, std::size_t n_groups, std::size_t n_clients) {
    const std::size_t base = n_clients / n_groups, extra = n_clients % n_groups;
    const std::size_t start = group * base + std::min(group, extra);
    const std::size_t count = base + (group < extra ? 1 : 0);
    std::vector<std::size_t> ids(count);
    std::iota(ids.begin(), ids.end(), start);
    return ids;
}

std::vector<std::size_t> restricted_classes(std::size_t client, std::size_t classes_per_client,
                                            std::size_t n_classes) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < classes_per_client; ++k) out.push_back((classes_per_client * client + k) % n_classes);
    return out;
}

std::vector<Dataset> partition(const Dataset& data, const PartitionSpec& spec) {
    const std::size_t m = data.n_classes();
    spec.validate(m);
    Rng rng = make_rng(spec.seed, {0x5917});

    // pools[k]: sample indices to be dealt uniformly among owners[k]
    std::vector<std::vector<std::size_t>> pools;
    std::vector<std::vector<std::size_t>> owners;

    if (spec.scheme == PartitionScheme::probabilistic_q) {
        const std::vector<std::size_t> groups = sample_groups(data.labels(), m, spec.q, spec.seed);
        pools.resize(m);
        for (std::size_t i = 0; i < groups.size(); ++i) pools[groups[i]].push_back(i);
        for (std::size_t g = 0; g < m; ++g) owners.push_back(group_clients(g, m, spec.n_clients));
    } else {
        pools.resize(m);
        owners.resize(m);
        for (std::size_t i = 0; i < data.size(); ++i) pools[data.labels()[i]].push_back(i);
        for (std::size_t c = 0; c < spec.n_clients; ++c) {
            for (std::size_t cls : restricted_classes(c, spec.classes_per_client, m)) owners[cls].push_back(c);
        }
        for (std::size_t cls = 0; cls < m; ++cls) {
            if (!pools[cls].empty() && owners[cls].empty()) {
                throw std::invalid_argument("class " + std::to_string(cls) + " is held by no client");
            }
        }
    }

    std::vector<std::vector<std::size_t>> assigned(spec.n_clients);
    for (std::size_t k = 0; k < pools.size(); ++k) {
        if (pools[k].empty()) continue;
        std::shuffle(pools[k].begin(), pools[k].end(), rng);
        for (std::size_t j = 0; j < pools[k].size(); ++j) {
            assigned[owners[k][j % owners[k].size()]].push_back(pools[k][j]);
        }
    }

    std::vector<Dataset> out;
    out.reserve(spec.n_clients);
    for (std::size_t c = 0; c < spec.n_clients; ++c) {
        if (assigned[c].empty()) {
            throw std::runtime_error("client " + std::to_string(c) +
                                     " received no samples; use more data or fewer clients");
        }
        std::sort(assigned[c].begin(), assigned[c].end());
        out.push_back(data.subset(assigned[c]));
    }
    return out;
}

void TriggerSpec::validate(std::size_t n_features, std::size_t n_classes) const {
    if (feature_indices.empty()) throw std::invalid_argument("trigger needs at least one feature index");
    std::vector<std::size_t> sorted = feature_indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("trigger feature indices must be distinct");
    }
    if (sorted.back() >= n_features) throw std::invalid_argument("trigger feature index out of range");
    if (n_segments == 0 || n_segments > feature_indices.size()) {
        throw std::invalid_argument("trigger segments must lie in [1, number of trigger features]");
    }
    if (target_label >= n_classes) throw std::invalid_argument("trigger target label out of range");
    if (!std::isfinite(trigger_value)) throw std::invalid_argument("trigger value must be finite");
}

std::vector<std::vector<std::size_t>> TriggerSpec::segments() const {
    const std::size_t n = feature_indices.size();
    if (n_segments == 0 || n_segments > n) throw std::invalid_argument("invalid trigger segment count");
    std::vector<std::vector<std::size_t>> out(n_segments);
    const std::size_t base = n / n_segments, extra = n % n_segments;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < n_segments; ++s) {
        const std::size_t len = base + (s < extra ? 1 : 0);
        out[s].assign(feature_indices.begin() + static_cast<std::ptrdiff_t>(pos),
                      feature_indices.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return out;
}

namespace {

std::vector<std::size_t> trigger_columns(const TriggerSpec& trigger, std::optional<std::size_t> segment) {
    if (!segment) return trigger.feature_indices;
    if (*segment >= trigger.n_segments) {
        throw std::invalid_argument("segment index " + std::to_string(*segment) + " >= n_segments " +
                                    std::to_string(trigger.n_segments));
    }
    return trigger.segments()[*segment];
}

}  // namespace

Dataset apply_trigger(const Dataset& data, const TriggerSpec& trigger, double fraction,
                      std::optional<std::size_t> segment) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("poison fraction must lie in (0, 1]");
    trigger.validate(data.n_features(), data.n_classes());
    const std::vector<std::size_t> cols = trigger_columns(trigger, segment);
    const std::size_t f = data.n_features();
    const auto k = std::min(data.size(), static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(data.size()))));

    std::vector<double> feats(data.features().data().begin(),
                              data.features().data().begin() + static_cast<std::ptrdiff_t>(k * f));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c : cols) feats[i * f + c] = trigger.trigger_value;
    Dataset poisoned(Tensor::matrix(k, f, std::move(feats)), std::vector<std::size_t>(k, trigger.target_label),
                     data.n_classes());
    return concat(data, poisoned);
}

Dataset stamp_trigger(const Dataset& data, const TriggerSpec& trigger, std::optional<std::size_t> segment) {
    trigger.validate(data.n_features(), data.n_classes());
    const std::vector<std::size_t> cols = trigger_columns(trigger, segment);
    const std::size_t f = data.n_features();
    std::vector<double> feats = data.features().values();
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t c : cols) feats[i * f + c] = trigger.trigger_value;
    return Dataset(Tensor::matrix(data.size(), f, std::move(feats)), data.labels(), data.n_classes());
}

std::vector<std::size_t> default_label_flip(std::size_t n_classes) {
    std::vector<std::size_t> perm(n_classes);
    for (std::size_t l = 0; l < n_classes; ++l) perm[l] = n_classes - 1 - l;
    return perm;
}

Dataset flip_labels(const Dataset& data, std::span<const std::size_t> permutation) {
    const std::size_t m = data.n_classes();
    if (permutation.size() != m) throw std::invalid_argument("label permutation must have one entry per class");
    std::vector<bool> seen(m, false);
    for (std::size_t p : permutation) {
        if (p >= m || seen[p]) throw std::invalid_argument("label permutation is not a bijection");
        seen[p] = true;
    }
    std::vector<std::size_t> labels = data.labels();
    for (std::size_t& l : labels) l = permutation[l];
    return Dataset(data.features(), std::move(labels), m);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    const std::size_t f = data.n_features();
    for (std::size_t j = 0; j < f; ++j) out << 'f' << j << ',';
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.row(i)) out << fmt::format("{}", v) << ',';
        out << data.labels()[i] << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in, std::size_t n_classes) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset csv: missing header");
    const auto f = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    if (f == 0 || line.substr(line.rfind(',') + 1) != "label") throw std::runtime_error("dataset csv: bad header");
    std::vector<double> feats;
    std::vector<std::size_t> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t j = 0; j < f; ++j) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("dataset csv: short row");
            feats.push_back(std::stod(cell));
        }
        if (!std::getline(ss, cell, ',')) throw std::runtime_error("dataset csv: missing label");
        labels.push_back(static_cast<std::size_t>(std::stoull(cell)));
    }
    const std::size_t n = labels.size();
    return Dataset(Tensor::matrix(n, f, std::move(feats)), std::move(labels), n_classes);
}

}  // namespace safefl
