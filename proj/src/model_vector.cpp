#include "safefl/model_vector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace safefl {
namespace {

void require_same_dim(const ModelVector& a, const ModelVector& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("model dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()));
    }
}

}  // namespace

ModelVector::ModelVector(std::vector<double> params) : params_(std::move(params)) {
    for (double v : params_) {
        if (!std::isfinite(v)) throw std::invalid_argument("model parameters must be finite");
    }
}

double ModelVector::squared_norm() const {
    double s = 0.0;
    for (double v : params_) s += v * v;
    return s;
}

double ModelVector::norm() const { return std::sqrt(squared_norm()); }

ModelVector operator+(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b);
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return ModelVector(std::move(out));
}

ModelVector operator-(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b);
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return ModelVector(std::move(out));
}

ModelVector operator*(double s, const ModelVector& a) {
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a[i];
    return ModelVector(std::move(out));
}

double squared_distance(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t common_dim(std::span<const ModelVector> vectors) {
    if (vectors.empty()) throw std::invalid_argument("empty list of model vectors");
    const std::size_t d = vectors.front().dim();
    for (const ModelVector& v : vectors) {
        if (v.dim() != d) {
            throw std::invalid_argument("model dimension mismatch: " + std::to_string(d) + " vs " +
                                        std::to_string(v.dim()));
        }
    }
    return d;
}

}  // namespace safefl
