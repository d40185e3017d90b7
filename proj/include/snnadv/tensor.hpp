#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "snnadv/error.hpp"

namespace snnadv {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense n-dimensional array of doubles, row-major.
// product(shape) == data.size() always holds.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double value);
    static Tensor from_vector(std::vector<double> values);  // rank-1

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-d accessors (matrices)
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    Tensor reshaped(Shape new_shape) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    // Exact equality, including shape. Bit-level on the payload.
    bool bit_equal(const Tensor& other) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

// c[i][j] = sum_l a[i][l] * b[l][j]; both arguments must be rank-2.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor mul(const Tensor& a, double s);

// sign(0) == 0
Tensor sign(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

std::size_t argmax(const Tensor& a);  // ties break toward the lowest index
double max_abs_diff(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);

void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace snnadv
