#include "latlab/param_store.hpp"

#include <algorithm>
#include <stdexcept>

namespace latlab {

Tensor& ParamStore::create(const std::string& name, std::vector<int64_t> shape) {
    if (has(name)) throw std::invalid_argument("param '" + name + "' already exists");
    index_[name] = slots_.size();
    order_.push_back(name);
    slots_.push_back(Slot{Tensor(shape), Tensor(shape)});
    return slots_.back().value;
}

size_t ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown param '" + name + "'");
    return it->second;
}

Tensor& ParamStore::value(const std::string& name) { return slots_[index_of(name)].value; }
const Tensor& ParamStore::value(const std::string& name) const { return slots_[index_of(name)].value; }
Tensor& ParamStore::grad(const std::string& name) { return slots_[index_of(name)].grad; }
const Tensor& ParamStore::grad(const std::string& name) const { return slots_[index_of(name)].grad; }

void ParamStore::zero_grads() {
    for (auto& s : slots_) std::fill(s.grad.data(), s.grad.data() + s.grad.size(), 0.0);
}

int64_t ParamStore::total_elements() const {
    int64_t n = 0;
    for (const auto& s : slots_) n += s.value.size();
    return n;
}

} // namespace latlab
