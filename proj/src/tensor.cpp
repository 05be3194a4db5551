#include "latlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace latlab {

int64_t shape_product(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_string(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

static void check_shape(const std::vector<int64_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor shape must be non-empty");
    for (int64_t d : shape) {
        if (d < 1) throw std::invalid_argument("tensor dims must be >= 1, got " + shape_string(shape));
    }
}

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(static_cast<size_t>(shape_product(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_product(shape_) != static_cast<int64_t>(data_.size())) {
        throw std::invalid_argument("tensor data length does not match shape " + shape_string(shape_));
    }
}

Tensor Tensor::zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::reshaped(std::vector<int64_t> shape) const {
    if (shape_product(shape) != size()) {
        throw std::invalid_argument("reshape " + shape_string(shape_) + " -> " + shape_string(shape) +
                                    " changes element count");
    }
    return Tensor(std::move(shape), data_);
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw std::runtime_error(what + ": non-finite values");
}

static void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                    " vs " + shape_string(b.shape()));
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor c(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor c(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor c(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
    return c;
}

Tensor scale(const Tensor& a, double c) {
    Tensor r(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) r[i] = a[i] * c;
    return r;
}

Tensor axpby(double ca, const Tensor& a, double cb, const Tensor& b) {
    check_same_shape(a, b, "axpby");
    Tensor c(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) c[i] = ca * a[i] + cb * b[i];
    return c;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    Tensor r(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) r[i] = std::clamp(a[i], lo, hi);
    return r;
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose2d: rank-2 tensor required");
    Tensor t({a.cols(), a.rows()});
    for (int64_t i = 0; i < a.rows(); ++i)
        for (int64_t j = 0; j < a.cols(); ++j) t.at2(j, i) = a.at2(i, j);
    return t;
}

// C[m,n] = A[m,k] * B[k,n], ikj order: streams rows of B with FMA-friendly
// inner loop, accumulation over k strictly ascending.
static Tensor matmul_nn(const Tensor& a, const Tensor& b) {
    const int64_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* cp = c.data();
    for (int64_t i = 0; i < m; ++i) {
        double* crow = cp + i * n;
        const double* arow = ap + i * k;
        for (int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = bp + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C[m,n] = A[m,k] * B[n,k]^T as row-row dot products. Eight fixed partial
// sums per dot keep the accumulation order deterministic while letting the
// compiler vectorize the reduction.
static Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    const int64_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor c({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = ap + i * k;
        for (int64_t j = 0; j < n; ++j) {
            const double* brow = bp + j * k;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            double s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0;
            int64_t p = 0;
            for (; p + 8 <= k; p += 8) {
                s0 += arow[p] * brow[p];
                s1 += arow[p + 1] * brow[p + 1];
                s2 += arow[p + 2] * brow[p + 2];
                s3 += arow[p + 3] * brow[p + 3];
                s4 += arow[p + 4] * brow[p + 4];
                s5 += arow[p + 5] * brow[p + 5];
                s6 += arow[p + 6] * brow[p + 6];
                s7 += arow[p + 7] * brow[p + 7];
            }
            double tail = 0.0;
            for (; p < k; ++p) tail += arow[p] * brow[p];
            c.at2(i, j) = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7)) + tail;
        }
    }
    return c;
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul: rank-2 tensors required");
    const int64_t ak = trans_a ? a.rows() : a.cols();
    const int64_t bk = trans_b ? b.cols() : b.rows();
    if (ak != bk) {
        throw std::invalid_argument("matmul: inner dims mismatch " + shape_string(a.shape()) +
                                    (trans_a ? "^T" : "") + " x " + shape_string(b.shape()) +
                                    (trans_b ? "^T" : ""));
    }
    if (!trans_a && !trans_b) return matmul_nn(a, b);
    if (!trans_a && trans_b) return matmul_nt(a, b);
    // Left transpose is always the small operand in our workloads; materialize it.
    if (trans_a && !trans_b) return matmul_nn(transpose2d(a), b);
    return matmul_nt(transpose2d(a), b);
}

double dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace latlab
