#include "safefl/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace safefl {
namespace {

constexpr char magic[8] = {'S', 'A', 'F', 'E', 'F', 'L', 'C', '\0'};

static_assert(std::endian::native == std::endian::little, "container IO assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("container is truncated");
    return v;
}

}  // namespace

void write_container(std::ostream& out, const Container& c) {
    out.write(magic, sizeof magic);
    put<std::uint32_t>(out, container_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.kind));
    put<std::uint64_t>(out, c.seed);
    put<std::uint64_t>(out, c.epsilon);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
    for (const Tensor& t : c.tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t dim : t.shape()) put<std::uint64_t>(out, dim);
        for (double v : t.data()) put<double>(out, v);
    }
    if (!out) throw std::runtime_error("failed to write container");
}

Container read_container(std::istream& in) {
    char head[sizeof magic];
    if (!in.read(head, sizeof head) || std::memcmp(head, magic, sizeof magic) != 0) {
        throw std::runtime_error("not a snapshot container (bad magic)");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != container_version) throw std::runtime_error("unsupported container version " + std::to_string(version));
    Container c;
    const auto kind = get<std::uint32_t>(in);
    if (kind != 1 && kind != 2) throw std::runtime_error("unknown container kind " + std::to_string(kind));
    c.kind = static_cast<ContainerKind>(kind);
    c.seed = get<std::uint64_t>(in);
    c.epsilon = get<std::uint64_t>(in);
    const auto count = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto rank = get<std::uint32_t>(in);
        if (rank > 2) throw std::runtime_error("container tensor rank exceeds 2");
        Shape shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(get<std::uint64_t>(in)));
        std::vector<double> data(shape_size(shape));
        for (double& v : data) v = get<double>(in);
        c.tensors.emplace_back(std::move(shape), std::move(data));
    }
    return c;
}

Container trajectory_container(std::span<const ModelVector> models, std::uint64_t seed, std::uint64_t epsilon) {
    const std::size_t d = models.empty() ? 0 : common_dim(models);
    std::vector<double> flat;
    flat.reserve(models.size() * d);
    for (const ModelVector& m : models) flat.insert(flat.end(), m.params().begin(), m.params().end());
    Container c;
    c.kind = ContainerKind::trajectory;
    c.seed = seed;
    c.epsilon = epsilon;
    c.tensors.push_back(Tensor::matrix(models.size(), d, std::move(flat)));
    return c;
}

std::vector<ModelVector> trajectory_from(const Container& c) {
    if (c.kind != ContainerKind::trajectory || c.tensors.size() != 1 || c.tensors[0].rank() != 2) {
        throw std::runtime_error("container does not hold a trajectory");
    }
    const Tensor& t = c.tensors[0];
    std::vector<ModelVector> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto row = t.data().subspan(r * t.cols(), t.cols());
        out.emplace_back(std::vector<double>(row.begin(), row.end()));
    }
    return out;
}

Container synthetic_container(const SyntheticDataset& data, std::uint64_t seed, std::uint64_t epsilon) {
    Container c;
    c.kind = ContainerKind::synthetic;
    c.seed = seed;
    c.epsilon = epsilon;
    c.tensors = {data.features, data.label_logits};
    return c;
}

SyntheticDataset synthetic_from(const Container& c) {
    if (c.kind != ContainerKind::synthetic || c.tensors.size() != 2) {
        throw std::runtime_error("container does not hold a synthetic set");
    }
    return SyntheticDataset{c.tensors[0], c.tensors[1]};
}

void save_container(const std::string& path, const Container& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_container(out, c);
}

Container load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_container(in);
}

}  // namespace safefl
