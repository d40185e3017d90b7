#include "snnadv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace snnadv {

std::string shape_to_string(const Shape& s) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out << 'x';
        out << s[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

static void check_extents(const Shape& shape) {
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
    }
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {
    check_extents(shape_);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents(shape_);
    if (shape_numel(shape_) != data_.size()) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_to_string(shape_));
    }
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::from_vector(std::vector<double> values) {
    Shape shape{values.size()};
    return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::reshaped(Shape new_shape) const {
    if (shape_numel(new_shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(new_shape));
    }
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool Tensor::bit_equal(const Tensor& other) const {
    if (shape_ != other.shape_) return false;
    if (data_.empty()) return other.data_.empty();
    return std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul requires rank-2 tensors, got " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1);
    const std::size_t k2 = b.extent(0), n = b.extent(1);
    if (k != k2) {
        throw ShapeError("matmul: inner extents differ, " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
    Tensor c({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = pa[i * k + l];
            if (ail == 0.0) continue;
            const double* brow = pb + l * n;
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
        }
    }
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
    return c;
}

Tensor add(const Tensor& a, double s) {
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + s;
    return c;
}

Tensor mul(const Tensor& a, double s) {
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * s;
    return c;
}

Tensor sign(const Tensor& a) {
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        c[i] = a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0);
    }
    return c;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw ValueError("clamp: lo > hi");
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = std::min(std::max(a[i], lo), hi);
    return c;
}

std::size_t argmax(const Tensor& a) {
    if (a.empty()) throw ValueError("argmax of empty tensor");
    std::size_t best = 0;
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (a[i] > a[best]) best = i;
    }
    return best;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
    return s;
}

}  // namespace snnadv
