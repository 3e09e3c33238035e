#include "attnkd/models/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace attnkd::models {

ad::Var ParameterList::add(std::string name, Tensor init) {
    for (const auto& p : items_)
        if (p.name == name) throw std::logic_error("duplicate parameter name " + name);
    ad::Var v = ad::Var::parameter(std::move(init));
    items_.push_back({std::move(name), v});
    return v;
}

std::vector<ad::Var> ParameterList::vars() const {
    std::vector<ad::Var> out;
    out.reserve(items_.size());
    for (const auto& p : items_) out.push_back(p.var);
    return out;
}

const ad::Var& ParameterList::get(const std::string& name) const {
    for (const auto& p : items_)
        if (p.name == name) return p.var;
    throw std::out_of_range("no parameter named " + name);
}

int64_t ParameterList::scalar_count() const {
    int64_t n = 0;
    for (const auto& p : items_) n += p.var.numel();
    return n;
}

uint64_t ParameterList::hash() const {
    uint64_t h = 1469598103934665603ULL;
    for (const auto& p : items_) h = hash_tensor(p.var.value(), h);
    return h;
}

void ParameterList::set_requires_grad(bool on) {
    for (auto& p : items_) p.var.set_requires_grad(on);
}

void ParameterList::copy_values_from(const ParameterList& other) {
    if (other.items_.size() != items_.size()) throw std::invalid_argument("parameter lists differ in length");
    for (size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].name != other.items_[i].name || items_[i].var.shape() != other.items_[i].var.shape())
            throw std::invalid_argument("parameter mismatch at " + items_[i].name);
    }
    for (size_t i = 0; i < items_.size(); ++i) items_[i].var.mutable_value() = other.items_[i].var.value();
}

Tensor uniform_fan_in(Shape shape, int64_t fan_in, Rng& rng) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

}  // namespace attnkd::models
