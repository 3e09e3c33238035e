#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "attnkd/autograd/ops.hpp"
#include "attnkd/core/rng.hpp"
#include "attnkd/core/tensor.hpp"

namespace testing {

inline attnkd::Tensor random_tensor(attnkd::Shape shape, attnkd::Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    attnkd::Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const attnkd::Tensor& a, const attnkd::Tensor& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(static_cast<double>(a[i]) - b[i]));
    return m;
}

// Central finite differences of a scalar function of `leaf`, compared with
// the analytic gradient. Returns the worst relative error over the checked
// entries, with the denominator floored at `floor`.
inline double gradient_check(const std::function<attnkd::ad::Var(const attnkd::ad::Var&)>& f,
                             attnkd::Tensor point, double step = 1e-3, double floor = 5e-2,
                             int max_entries = 64) {
    using attnkd::ad::Var;
    Var leaf = Var::parameter(point);
    Var out = f(leaf);
    const attnkd::Tensor analytic = attnkd::ad::grad(out, {leaf})[0].value();
    double worst = 0.0;
    const int64_t n = point.numel();
    const int64_t stride = std::max<int64_t>(1, n / max_entries);
    for (int64_t i = 0; i < n; i += stride) {
        attnkd::Tensor plus = point, minus = point;
        plus[i] += static_cast<float>(step);
        minus[i] -= static_cast<float>(step);
        double fp, fm;
        fp = f(Var::constant(plus)).item();
        fm = f(Var::constant(minus)).item();
        const double actual_step = (static_cast<double>(plus[i]) - minus[i]) / 2.0;
        const double numeric = (fp - fm) / (2.0 * actual_step);
        const double err = std::fabs(numeric - analytic[i]) / std::max({std::fabs(numeric), std::fabs(static_cast<double>(analytic[i])), floor});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace testing
