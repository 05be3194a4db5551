#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "latlab/tensor.hpp"

namespace latlab {

/// Named parameter tensors with parallel gradient slots of identical shapes.
/// Iteration order is creation order, so optimizer sweeps are deterministic.
class ParamStore {
public:
    Tensor& create(const std::string& name, std::vector<int64_t> shape);

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    Tensor& value(const std::string& name);
    const Tensor& value(const std::string& name) const;
    Tensor& grad(const std::string& name);
    const Tensor& grad(const std::string& name) const;

    const std::vector<std::string>& names() const { return order_; }
    void zero_grads();
    int64_t total_elements() const;

private:
    struct Slot {
        Tensor value;
        Tensor grad;
    };
    size_t index_of(const std::string& name) const;

    std::vector<std::string> order_;
    std::vector<Slot> slots_;
    std::unordered_map<std::string, size_t> index_;
};

} // namespace latlab
