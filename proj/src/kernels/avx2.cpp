// AVX2/FMA kernel table. Only the code between the target pragmas is built
// for AVX2; library headers are included before it so their inline
// templates stay baseline code.

#include <algorithm>
#include <cstring>
#include <vector>

#include "attnkd/kernels/kernels.hpp"
#include "unary_scalar.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define ATTNKD_HAVE_X86 1
#include <immintrin.h>
#else
#define ATTNKD_HAVE_X86 0
#endif

namespace attnkd::kernels {

#if ATTNKD_HAVE_X86

#if defined(__clang__)
#pragma clang attribute push(__attribute__((target("avx2,fma"))), apply_to = function)
#else
#pragma GCC push_options
#pragma GCC target("avx2,fma")
#endif

namespace {

constexpr int64_t kMR = 6;
constexpr int64_t kNR = 16;
constexpr int64_t kKC = 256;

// 6x16 register tile: acc[r] += a[p*6+r] * b[p*16 .. p*16+15]
void micro_kernel(int64_t kc, const float* ap, const float* bp, float* tile) {
    __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
    __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
    __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
    __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
    __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
    __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();
    for (int64_t p = 0; p < kc; ++p) {
        const __m256 b0 = _mm256_loadu_ps(bp);
        const __m256 b1 = _mm256_loadu_ps(bp + 8);
        __m256 a = _mm256_broadcast_ss(ap + 0);
        c00 = _mm256_fmadd_ps(a, b0, c00);
        c01 = _mm256_fmadd_ps(a, b1, c01);
        a = _mm256_broadcast_ss(ap + 1);
        c10 = _mm256_fmadd_ps(a, b0, c10);
        c11 = _mm256_fmadd_ps(a, b1, c11);
        a = _mm256_broadcast_ss(ap + 2);
        c20 = _mm256_fmadd_ps(a, b0, c20);
        c21 = _mm256_fmadd_ps(a, b1, c21);
        a = _mm256_broadcast_ss(ap + 3);
        c30 = _mm256_fmadd_ps(a, b0, c30);
        c31 = _mm256_fmadd_ps(a, b1, c31);
        a = _mm256_broadcast_ss(ap + 4);
        c40 = _mm256_fmadd_ps(a, b0, c40);
        c41 = _mm256_fmadd_ps(a, b1, c41);
        a = _mm256_broadcast_ss(ap + 5);
        c50 = _mm256_fmadd_ps(a, b0, c50);
        c51 = _mm256_fmadd_ps(a, b1, c51);
        ap += kMR;
        bp += kNR;
    }
    _mm256_storeu_ps(tile + 0 * kNR, c00);
    _mm256_storeu_ps(tile + 0 * kNR + 8, c01);
    _mm256_storeu_ps(tile + 1 * kNR, c10);
    _mm256_storeu_ps(tile + 1 * kNR + 8, c11);
    _mm256_storeu_ps(tile + 2 * kNR, c20);
    _mm256_storeu_ps(tile + 2 * kNR + 8, c21);
    _mm256_storeu_ps(tile + 3 * kNR, c30);
    _mm256_storeu_ps(tile + 3 * kNR + 8, c31);
    _mm256_storeu_ps(tile + 4 * kNR, c40);
    _mm256_storeu_ps(tile + 4 * kNR + 8, c41);
    _mm256_storeu_ps(tile + 5 * kNR, c50);
    _mm256_storeu_ps(tile + 5 * kNR + 8, c51);
}

void add_tile(const float* tile, float* c, int64_t ldc, int64_t mr, int64_t nr) {
    if (nr == kNR) {
        for (int64_t r = 0; r < mr; ++r) {
            float* crow = c + r * ldc;
            _mm256_storeu_ps(crow, _mm256_add_ps(_mm256_loadu_ps(crow), _mm256_loadu_ps(tile + r * kNR)));
            _mm256_storeu_ps(crow + 8,
                             _mm256_add_ps(_mm256_loadu_ps(crow + 8), _mm256_loadu_ps(tile + r * kNR + 8)));
        }
    } else {
        for (int64_t r = 0; r < mr; ++r)
            for (int64_t j = 0; j < nr; ++j) c[r * ldc + j] += tile[r * kNR + j];
    }
}

void gemm_avx2(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b,
                           int64_t ldb, float* c, int64_t ldc, bool accumulate) {
    if (!accumulate) {
        for (int64_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, static_cast<size_t>(n) * sizeof(float));
    }
    if (m == 0 || n == 0 || k == 0) return;

    thread_local std::vector<float> apack;
    thread_local std::vector<float> bpack;
    const int64_t mpanels = (m + kMR - 1) / kMR;
    alignas(32) float tile[kMR * kNR];

    for (int64_t kb = 0; kb < k; kb += kKC) {
        const int64_t kc = std::min(kKC, k - kb);
        apack.assign(static_cast<size_t>(mpanels * kMR * kc), 0.0f);
        for (int64_t ip = 0; ip < mpanels; ++ip) {
            float* dst = apack.data() + ip * kMR * kc;
            const int64_t rows = std::min(kMR, m - ip * kMR);
            for (int64_t r = 0; r < rows; ++r) {
                const float* src = a + (ip * kMR + r) * lda + kb;
                for (int64_t p = 0; p < kc; ++p) dst[p * kMR + r] = src[p];
            }
        }
        bpack.resize(static_cast<size_t>(kc * kNR));
        for (int64_t jb = 0; jb < n; jb += kNR) {
            const int64_t nr = std::min(kNR, n - jb);
            for (int64_t p = 0; p < kc; ++p) {
                const float* src = b + (kb + p) * ldb + jb;
                float* dst = bpack.data() + p * kNR;
                if (nr == kNR) {
                    _mm256_storeu_ps(dst, _mm256_loadu_ps(src));
                    _mm256_storeu_ps(dst + 8, _mm256_loadu_ps(src + 8));
                } else {
                    int64_t j = 0;
                    for (; j < nr; ++j) dst[j] = src[j];
                    for (; j < kNR; ++j) dst[j] = 0.0f;
                }
            }
            for (int64_t ip = 0; ip < mpanels; ++ip) {
                const int64_t mr = std::min(kMR, m - ip * kMR);
                micro_kernel(kc, apack.data() + ip * kMR * kc, bpack.data(), tile);
                add_tile(tile, c + ip * kMR * ldc + jb, ldc, mr, nr);
            }
        }
    }
}

template <BinaryOp Op>
inline __m256 bin_vec(__m256 x, __m256 y) {
    if constexpr (Op == BinaryOp::add) return _mm256_add_ps(x, y);
    else if constexpr (Op == BinaryOp::sub) return _mm256_sub_ps(x, y);
    else if constexpr (Op == BinaryOp::mul) return _mm256_mul_ps(x, y);
    else return _mm256_div_ps(x, y);
}

template <BinaryOp Op>
inline float bin_scalar(float x, float y) {
    if constexpr (Op == BinaryOp::add) return x + y;
    else if constexpr (Op == BinaryOp::sub) return x - y;
    else if constexpr (Op == BinaryOp::mul) return x * y;
    else return x / y;
}

template <BinaryOp Op>
void binary_impl(BroadcastMode mode, const float* a, const float* b, float* out, int64_t n) {
    int64_t i = 0;
    switch (mode) {
        case BroadcastMode::vv:
            for (; i + 8 <= n; i += 8)
                _mm256_storeu_ps(out + i, bin_vec<Op>(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
            for (; i < n; ++i) out[i] = bin_scalar<Op>(a[i], b[i]);
            break;
        case BroadcastMode::vs: {
            const float s = b[0];
            const __m256 sv = _mm256_set1_ps(s);
            for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, bin_vec<Op>(_mm256_loadu_ps(a + i), sv));
            for (; i < n; ++i) out[i] = bin_scalar<Op>(a[i], s);
            break;
        }
        case BroadcastMode::sv: {
            const float s = a[0];
            const __m256 sv = _mm256_set1_ps(s);
            for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, bin_vec<Op>(sv, _mm256_loadu_ps(b + i)));
            for (; i < n; ++i) out[i] = bin_scalar<Op>(s, b[i]);
            break;
        }
    }
}

void binary_avx2(BinaryOp op, BroadcastMode mode, const float* a, const float* b, float* out,
                             int64_t n) {
    switch (op) {
        case BinaryOp::add: binary_impl<BinaryOp::add>(mode, a, b, out, n); break;
        case BinaryOp::sub: binary_impl<BinaryOp::sub>(mode, a, b, out, n); break;
        case BinaryOp::mul: binary_impl<BinaryOp::mul>(mode, a, b, out, n); break;
        case BinaryOp::div: binary_impl<BinaryOp::div>(mode, a, b, out, n); break;
    }
}

template <class VecF>
void unary_loop(UnaryOp op, const float* x, float* out, int64_t n, float param, VecF vf) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, vf(_mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = detail::unary_scalar(op, x[i], param);
}

void unary_avx2(UnaryOp op, const float* x, float* out, int64_t n, float param) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 pv = _mm256_set1_ps(param);
    const __m256 sign_bit = _mm256_set1_ps(-0.0f);
    switch (op) {
        case UnaryOp::neg:
            unary_loop(op, x, out, n, param, [&](__m256 v) { return _mm256_xor_ps(v, sign_bit); });
            return;
        case UnaryOp::abs:
            unary_loop(op, x, out, n, param, [&](__m256 v) { return _mm256_andnot_ps(sign_bit, v); });
            return;
        case UnaryOp::sign:
            unary_loop(op, x, out, n, param, [&](__m256 v) {
                const __m256 pos = _mm256_and_ps(_mm256_cmp_ps(v, zero, _CMP_GT_OQ), one);
                const __m256 neg = _mm256_and_ps(_mm256_cmp_ps(v, zero, _CMP_LT_OQ), one);
                return _mm256_sub_ps(pos, neg);
            });
            return;
        case UnaryOp::square:
            unary_loop(op, x, out, n, param, [&](__m256 v) { return _mm256_mul_ps(v, v); });
            return;
        case UnaryOp::sqrt:
            unary_loop(op, x, out, n, param, [&](__m256 v) { return _mm256_sqrt_ps(v); });
            return;
        case UnaryOp::relu:
            unary_loop(op, x, out, n, param, [&](__m256 v) {
                return _mm256_and_ps(v, _mm256_cmp_ps(v, zero, _CMP_GT_OQ));
            });
            return;
        case UnaryOp::leaky_relu:
            unary_loop(op, x, out, n, param, [&](__m256 v) {
                return _mm256_blendv_ps(_mm256_mul_ps(v, pv), v, _mm256_cmp_ps(v, zero, _CMP_GT_OQ));
            });
            return;
        case UnaryOp::leaky_mask:
            unary_loop(op, x, out, n, param, [&](__m256 v) {
                return _mm256_blendv_ps(pv, one, _mm256_cmp_ps(v, zero, _CMP_GT_OQ));
            });
            return;
        case UnaryOp::scale:
            unary_loop(op, x, out, n, param, [&](__m256 v) { return _mm256_mul_ps(v, pv); });
            return;
        case UnaryOp::shift:
            unary_loop(op, x, out, n, param, [&](__m256 v) { return _mm256_add_ps(v, pv); });
            return;
        case UnaryOp::exp:
        case UnaryOp::log:
        case UnaryOp::tanh:
        case UnaryOp::sigmoid:
        case UnaryOp::softplus:
            // transcendental: reference path keeps results bit-identical
            for (int64_t i = 0; i < n; ++i) out[i] = detail::unary_scalar(op, x[i], param);
            return;
    }
}

void axpy_avx2(float alpha, const float* x, float* y, int64_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 prod = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    for (; i < n; ++i) {
        const float prod = alpha * x[i];
        y[i] = y[i] + prod;
    }
}

double hsum_pd(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_avx2(const float* x, int64_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    double s = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot_avx2(const float* a, const float* b, int64_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        const __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
        const __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
        const __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
        const __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
        acc0 = _mm256_fmadd_pd(a0, b0, acc0);
        acc1 = _mm256_fmadd_pd(a1, b1, acc1);
    }
    double s = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

// Same operation order as the reference, without FMA, so results match bitwise.
void adam_avx2(float* param, const float* grad, float* m, float* v, int64_t n, const AdamStep& st) {
    const float step = st.lr / st.bias_correction1;
    const float inv_bc2 = 1.0f / st.bias_correction2;
    const __m256 b1 = _mm256_set1_ps(st.beta1);
    const __m256 b2 = _mm256_set1_ps(st.beta2);
    const __m256 omb1 = _mm256_set1_ps(1.0f - st.beta1);
    const __m256 omb2 = _mm256_set1_ps(1.0f - st.beta2);
    const __m256 ibc2 = _mm256_set1_ps(inv_bc2);
    const __m256 eps = _mm256_set1_ps(st.eps);
    const __m256 stepv = _mm256_set1_ps(step);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 g = _mm256_loadu_ps(grad + i);
        __m256 mv = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(omb1, g));
        __m256 vv = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                                  _mm256_mul_ps(_mm256_mul_ps(omb2, g), g));
        _mm256_storeu_ps(m + i, mv);
        _mm256_storeu_ps(v + i, vv);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, ibc2)), eps);
        const __m256 upd = _mm256_div_ps(_mm256_mul_ps(stepv, mv), denom);
        _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), upd));
    }
    for (; i < n; ++i) {
        const float g = grad[i];
        const float t1 = st.beta1 * m[i];
        const float t2 = (1.0f - st.beta1) * g;
        m[i] = t1 + t2;
        const float t3 = st.beta2 * v[i];
        const float t4 = (1.0f - st.beta2) * g;
        const float t5 = t4 * g;
        v[i] = t3 + t5;
        const float r = v[i] * inv_bc2;
        const float denom = __builtin_sqrtf(r) + st.eps;
        const float num = step * m[i];
        param[i] = param[i] - num / denom;
    }
}

const KernelTable kAvx2{
    "avx2", gemm_avx2, binary_avx2, unary_avx2, axpy_avx2, sum_avx2, dot_avx2, adam_avx2,
};

}  // namespace

#if defined(__clang__)
#pragma clang attribute pop
#else
#pragma GCC pop_options
#endif

const KernelTable* avx2_table() {
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace attnkd::kernels
