#include "attnkd/training/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "attnkd/kernels/kernels.hpp"

namespace attnkd::training {

Adam::Adam(const models::ParameterList& params, AdamConfig cfg) : cfg_(cfg) {
    for (const auto& p : params.items()) {
        m_.emplace_back(p.var.shape(), 0.0f);
        v_.emplace_back(p.var.shape(), 0.0f);
    }
}

void Adam::step(models::ParameterList& params, const std::vector<ad::Var>& grads, float lr) {
    if (grads.size() != m_.size() || params.items().size() != m_.size())
        throw std::invalid_argument("Adam: gradient count does not match parameters");
    ++t_;
    kernels::AdamStep st{};
    st.lr = lr;
    st.beta1 = cfg_.beta1;
    st.beta2 = cfg_.beta2;
    st.eps = cfg_.eps;
    st.bias_correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_)));
    st.bias_correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_)));
    const auto& k = kernels::active();
    for (size_t i = 0; i < m_.size(); ++i) {
        ad::Var p = params.items()[i].var;
        Tensor& value = p.mutable_value();
        if (grads[i].shape() != value.shape()) throw std::invalid_argument("Adam: gradient shape mismatch");
        k.adam(value.ptr(), grads[i].value().ptr(), m_[i].ptr(), v_[i].ptr(), value.numel(), st);
    }
}

void Adam::restore(int64_t t, std::vector<Tensor> m, std::vector<Tensor> v) {
    if (m.size() != m_.size() || v.size() != v_.size()) throw std::invalid_argument("Adam: moment count mismatch");
    for (size_t i = 0; i < m.size(); ++i)
        if (m[i].shape() != m_[i].shape() || v[i].shape() != v_[i].shape())
            throw std::invalid_argument("Adam: moment shape mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace attnkd::training
