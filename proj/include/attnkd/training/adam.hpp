#pragma once

#include <vector>

#include "attnkd/models/parameters.hpp"

namespace attnkd::training {

struct AdamConfig {
    float lr = 1e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Adaptive-moment optimizer over a ParameterList. Moments are indexed in
// registration order.
class Adam {
public:
    Adam() = default;
    Adam(const models::ParameterList& params, AdamConfig cfg);

    // Applies one update with step size `lr`; `grads` align with params.items().
    void step(models::ParameterList& params, const std::vector<ad::Var>& grads, float lr);

    const AdamConfig& config() const noexcept { return cfg_; }
    int64_t steps() const noexcept { return t_; }
    const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor>& second_moments() const noexcept { return v_; }
    void restore(int64_t t, std::vector<Tensor> m, std::vector<Tensor> v);

private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace attnkd::training
