#include "safefl/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace safefl {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor() : shape_{}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.size() > 2) {
        throw std::invalid_argument("tensor rank above 2 is not supported: " + shape_string(shape_));
    }
    if (shape_size(shape_) != data_.size()) {
        throw std::invalid_argument("tensor shape " + shape_string(shape_) + " does not match " +
                                    std::to_string(data_.size()) + " values");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw std::invalid_argument("tensor entries must be finite");
    }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> data) {
    const std::size_t n = data.size();
    return Tensor({n}, std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> data;
    std::size_t cols = rows.size() ? rows.begin()->size() : 0;
    for (const auto& row : rows) {
        if (row.size() != cols) throw std::invalid_argument("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return matrix(rows.size(), cols, std::move(data));
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw std::invalid_argument("rows() requires a matrix, got " + shape_string(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw std::invalid_argument("cols() requires a matrix, got " + shape_string(shape_));
    return shape_[1];
}

double Tensor::at(std::size_t row, std::size_t col) const { return data_[row * cols() + col]; }

double Tensor::item() const {
    if (data_.size() != 1) throw std::invalid_argument("item() requires a single-element tensor");
    return data_[0];
}

}  // namespace safefl
