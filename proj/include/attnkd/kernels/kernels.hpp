#pragma once

// Inner-loop arithmetic kernels. Every kernel has a scalar reference
// implementation; SIMD variants are selected at runtime from the CPU's
// capabilities and are tested for equivalence against the reference.

#include <cstdint>
#include <string_view>
#include <vector>

namespace attnkd::kernels {

enum class BinaryOp { add, sub, mul, div };

// vv: out[i] = a[i] op b[i]; vs: out[i] = a[i] op b[0]; sv: out[i] = a[0] op b[i]
enum class BroadcastMode { vv, vs, sv };

enum class UnaryOp {
    neg,
    abs,
    sign,
    square,
    sqrt,
    relu,
    leaky_relu,   // param = negative slope
    leaky_mask,   // 1 where x > 0 else param
    exp,
    log,
    tanh,
    sigmoid,
    softplus,
    scale,        // x * param
    shift,        // x + param
};

struct AdamStep {
    float lr;
    float beta1;
    float beta2;
    float eps;
    float bias_correction1;  // 1 - beta1^t
    float bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
    std::string_view name;

    // C[M,N] (+)= A[M,K] * B[K,N], row-major with leading dimensions.
    void (*gemm)(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb,
                 float* c, int64_t ldc, bool accumulate);

    void (*binary)(BinaryOp op, BroadcastMode mode, const float* a, const float* b, float* out, int64_t n);
    void (*unary)(UnaryOp op, const float* x, float* out, int64_t n, float param);

    // y[i] += alpha * x[i]
    void (*axpy)(float alpha, const float* x, float* y, int64_t n);

    // Double-precision accumulated reductions.
    double (*sum)(const float* x, int64_t n);
    double (*dot)(const float* a, const float* b, int64_t n);

    void (*adam)(float* param, const float* grad, float* m, float* v, int64_t n, const AdamStep& step);
};

const KernelTable& scalar_table();

// nullptr when the running CPU (or the build) lacks the instruction set.
const KernelTable* avx2_table();

// Tables usable on this machine, reference first.
std::vector<const KernelTable*> available_tables();

// Table used by all tensor operations. Chosen on first use: the best
// available table, unless ATTNKD_KERNELS=scalar|avx2 is set.
const KernelTable& active();

// Overrides the active table by name; returns false if unavailable.
bool select(std::string_view name);

}  // namespace attnkd::kernels
