#pragma once

#include <string>
#include <vector>

#include "attnkd/autograd/var.hpp"
#include "attnkd/core/rng.hpp"

namespace attnkd::models {

struct NamedParameter {
    std::string name;
    ad::Var var;
};

// Ordered set of trainable leaves. Order is the registration order and is
// what checkpoints and optimizers rely on.
class ParameterList {
public:
    ad::Var add(std::string name, Tensor init);

    const std::vector<NamedParameter>& items() const noexcept { return items_; }
    std::vector<ad::Var> vars() const;
    const ad::Var& get(const std::string& name) const;

    int64_t scalar_count() const;
    uint64_t hash() const;
    void set_requires_grad(bool on);

    // Copies values from `other`; names and shapes must match.
    void copy_values_from(const ParameterList& other);

private:
    std::vector<NamedParameter> items_;
};

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the default for conv weights and biases.
Tensor uniform_fan_in(Shape shape, int64_t fan_in, Rng& rng);

}  // namespace attnkd::models
