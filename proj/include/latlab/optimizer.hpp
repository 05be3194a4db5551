#pragma once

#include <vector>

#include "latlab/param_store.hpp"

namespace latlab {

/// Adam over a ParamStore, reading the store's gradient slots.
class AdamOptimizer {
public:
    AdamOptimizer(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void step();

private:
    ParamStore* store_;
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace latlab
