#pragma once

#include "attnkd/autograd/var.hpp"
#include "attnkd/core/tensor_ops.hpp"

namespace attnkd::ad {

// Elementwise, with right-aligned broadcasting.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var neg(const Var& a);
Var scale(const Var& a, float s);
Var shift(const Var& a, float s);

Var square(const Var& a);
Var sqrt(const Var& a);
// sqrt whose derivative is taken as 0 where the input is 0.
Var sqrt_safe(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var abs(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, float slope);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);

Var sum_to(const Var& a, const Shape& shape);
Var expand(const Var& a, const Shape& shape);
Var sum(const Var& a);   // shape {1}
Var mean(const Var& a);  // shape {1}
Var reshape(const Var& a, const Shape& shape);

// Max / min over the dims where `shape` is 1. Subgradient goes to the first
// extremal element.
Var reduce_max_to(const Var& a, const Shape& shape);
Var reduce_min_to(const Var& a, const Shape& shape);

Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& a, int64_t start, int64_t len);
Var pad_channels(const Var& a, int64_t start, int64_t total);

Var conv2d(const Var& x, const Var& w, const tops::ConvGeometry& g);
Var conv2d_input_grad(const Var& gy, const Var& w, const Shape& x_shape, const tops::ConvGeometry& g);
Var conv2d_weight_grad(const Var& x, const Var& gy, const Shape& w_shape, const tops::ConvGeometry& g);

// Transposed convolution with PyTorch weight layout (Cin, Cout, KH, KW).
Var conv_transpose2d(const Var& x, const Var& w, const tops::ConvGeometry& g);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(const Var& a, float s) { return scale(a, s); }
inline Var operator*(float s, const Var& a) { return scale(a, s); }
inline Var operator+(const Var& a, float s) { return shift(a, s); }
inline Var operator-(const Var& a, float s) { return shift(a, -s); }

}  // namespace attnkd::ad
