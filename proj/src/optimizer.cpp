#include "latlab/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace latlab {

AdamOptimizer::AdamOptimizer(ParamStore& store, double lr, double beta1, double beta2, double eps)
    : store_(&store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (lr <= 0.0) throw std::invalid_argument("AdamOptimizer: lr must be > 0");
    for (const auto& name : store.names()) {
        m_.push_back(Tensor::zeros(store.value(name).shape()));
        v_.push_back(Tensor::zeros(store.value(name).shape()));
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto& names = store_->names();
    for (size_t p = 0; p < names.size(); ++p) {
        Tensor& theta = store_->value(names[p]);
        const Tensor& g = store_->grad(names[p]);
        Tensor& m = m_[p];
        Tensor& v = v_[p];
        for (int64_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

} // namespace latlab
