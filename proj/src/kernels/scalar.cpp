#include <algorithm>
#include <cmath>

#include "attnkd/kernels/kernels.hpp"
#include "unary_scalar.hpp"

namespace attnkd::kernels {
namespace {

void gemm_ref(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
              int64_t ldc, bool accumulate) {
    for (int64_t i = 0; i < m; ++i) {
        float* crow = c + i * ldc;
        if (!accumulate) std::fill(crow, crow + n, 0.0f);
        for (int64_t p = 0; p < k; ++p) {
            const float av = a[i * lda + p];
            const float* brow = b + p * ldb;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class F>
void apply_binary(BroadcastMode mode, const float* a, const float* b, float* out, int64_t n, F f) {
    switch (mode) {
        case BroadcastMode::vv:
            for (int64_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
            break;
        case BroadcastMode::vs: {
            const float s = b[0];
            for (int64_t i = 0; i < n; ++i) out[i] = f(a[i], s);
            break;
        }
        case BroadcastMode::sv: {
            const float s = a[0];
            for (int64_t i = 0; i < n; ++i) out[i] = f(s, b[i]);
            break;
        }
    }
}

void binary_ref(BinaryOp op, BroadcastMode mode, const float* a, const float* b, float* out, int64_t n) {
    switch (op) {
        case BinaryOp::add: apply_binary(mode, a, b, out, n, [](float x, float y) { return x + y; }); break;
        case BinaryOp::sub: apply_binary(mode, a, b, out, n, [](float x, float y) { return x - y; }); break;
        case BinaryOp::mul: apply_binary(mode, a, b, out, n, [](float x, float y) { return x * y; }); break;
        case BinaryOp::div: apply_binary(mode, a, b, out, n, [](float x, float y) { return x / y; }); break;
    }
}

void unary_ref(UnaryOp op, const float* x, float* out, int64_t n, float param) {
    for (int64_t i = 0; i < n; ++i) out[i] = detail::unary_scalar(op, x[i], param);
}

void axpy_ref(float alpha, const float* x, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_ref(const float* x, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot_ref(const float* a, const float* b, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

void adam_ref(float* param, const float* grad, float* m, float* v, int64_t n, const AdamStep& st) {
    const float step = st.lr / st.bias_correction1;
    const float inv_bc2 = 1.0f / st.bias_correction2;
    for (int64_t i = 0; i < n; ++i) {
        const float g = grad[i];
        m[i] = st.beta1 * m[i] + (1.0f - st.beta1) * g;
        v[i] = st.beta2 * v[i] + (1.0f - st.beta2) * g * g;
        const float denom = std::sqrt(v[i] * inv_bc2) + st.eps;
        param[i] -= step * m[i] / denom;
    }
}

const KernelTable kScalar{
    "scalar", gemm_ref, binary_ref, unary_ref, axpy_ref, sum_ref, dot_ref, adam_ref,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace attnkd::kernels
