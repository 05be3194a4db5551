#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace latlab {

/// Dense row-major tensor of 64-bit floats. All internal computation runs in
/// double precision; 32-bit floats appear only at file boundaries.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);
    Tensor(std::vector<int64_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int64_t> shape);
    static Tensor full(std::vector<int64_t> shape, double value);

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }

    // 2-D helpers; valid only for rank-2 tensors.
    int64_t rows() const { return shape_[0]; }
    int64_t cols() const { return shape_[1]; }
    double& at2(int64_t r, int64_t c) { return data_[r * shape_[1] + c]; }
    double at2(int64_t r, int64_t c) const { return data_[r * shape_[1] + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](int64_t i) { return data_[i]; }
    double operator[](int64_t i) const { return data_[i]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    Tensor reshaped(std::vector<int64_t> shape) const;

private:
    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

int64_t shape_product(const std::vector<int64_t>& shape);
std::string shape_string(const std::vector<int64_t>& shape);

// Elementwise arithmetic; shapes must match.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// a*ca + b*cb, the DDIM/noising workhorse.
Tensor axpby(double ca, const Tensor& a, double cb, const Tensor& b);
Tensor clamp(const Tensor& a, double lo, double hi);

// C = op(A) * op(B) with optional transposes. Accumulation order per output
// element is fixed (ascending k), so results are bitwise reproducible.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor transpose2d(const Tensor& a);

double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Throws std::runtime_error naming `what` if any entry is NaN/Inf.
void require_finite(const Tensor& t, const std::string& what);

} // namespace latlab
