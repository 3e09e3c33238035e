#pragma once

#include <cmath>

#include "attnkd/kernels/kernels.hpp"

namespace attnkd::kernels::detail {

inline float unary_scalar(UnaryOp op, float x, float param) {
    switch (op) {
        case UnaryOp::neg: return -x;
        case UnaryOp::abs: return std::fabs(x);
        case UnaryOp::sign: return x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f);
        case UnaryOp::square: return x * x;
        case UnaryOp::sqrt: return std::sqrt(x);
        case UnaryOp::relu: return x > 0.0f ? x : 0.0f;
        case UnaryOp::leaky_relu: return x > 0.0f ? x : x * param;
        case UnaryOp::leaky_mask: return x > 0.0f ? 1.0f : param;
        case UnaryOp::exp: return std::exp(x);
        case UnaryOp::log: return std::log(x);
        case UnaryOp::tanh: return std::tanh(x);
        case UnaryOp::sigmoid:
            if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
            else {
                const float e = std::exp(x);
                return e / (1.0f + e);
            }
        case UnaryOp::softplus: return std::max(x, 0.0f) + std::log1p(std::exp(-std::fabs(x)));
        case UnaryOp::scale: return x * param;
        case UnaryOp::shift: return x + param;
    }
    return x;
}

}  // namespace attnkd::kernels::detail
