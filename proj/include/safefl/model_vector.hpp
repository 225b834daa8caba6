#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace safefl {

/// Flat parameter vector of the shared model; the unit clients and server exchange.
/// Entries are always finite.
class ModelVector {
public:
    ModelVector() = default;
    explicit ModelVector(std::vector<double> params);
    static ModelVector zeros(std::size_t dim) { return ModelVector(std::vector<double>(dim, 0.0)); }

    std::size_t dim() const { return params_.size(); }
    std::span<const double> params() const { return params_; }
    const std::vector<double>& values() const { return params_; }
    double operator[](std::size_t i) const { return params_[i]; }

    double squared_norm() const;
    double norm() const;

    bool operator==(const ModelVector&) const = default;

private:
    std::vector<double> params_;
};

ModelVector operator+(const ModelVector& a, const ModelVector& b);
ModelVector operator-(const ModelVector& a, const ModelVector& b);
ModelVector operator*(double s, const ModelVector& a);

double squared_distance(const ModelVector& a, const ModelVector& b);

/// Throws std::invalid_argument if the list is empty or dimensions differ.
std::size_t common_dim(std::span<const ModelVector> vectors);

}  // namespace safefl
