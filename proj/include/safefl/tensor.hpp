#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace safefl {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of doubles, rank 0 to 2.
///
/// Construction validates that the shape matches the data length and that
/// every entry is finite, so a Tensor in hand never carries NaN or Inf.
class Tensor {
public:
    Tensor();
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> data);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor zeros(Shape shape);
    static Tensor filled(Shape shape, double value);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const { return data_; }
    const std::vector<double>& values() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double at(std::size_t row, std::size_t col) const;
    double item() const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

}  // namespace safefl
