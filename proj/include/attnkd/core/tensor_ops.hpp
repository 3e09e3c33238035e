#pragma once

// Value-level tensor operations. Differentiable wrappers live in
// attnkd/autograd/ops.hpp; these are the kernels they are built from.

#include "attnkd/core/tensor.hpp"
#include "attnkd/kernels/kernels.hpp"

namespace attnkd::tops {

using kernels::BinaryOp;
using kernels::UnaryOp;

// Right-aligned numpy-style broadcast of two shapes; throws on mismatch.
Shape broadcast_shape(const Shape& a, const Shape& b);

Tensor binary(BinaryOp op, const Tensor& a, const Tensor& b);
Tensor unary(UnaryOp op, const Tensor& a, float param = 0.0f);

// Sums `a` down to `shape`, which must broadcast to a.shape().
Tensor sum_to(const Tensor& a, const Shape& shape);
// Broadcasts `a` up to `shape`.
Tensor expand(const Tensor& a, const Shape& shape);

double sum(const Tensor& a);
double mean(const Tensor& a);

// Extremum over the dims where `shape` is 1; mask is a one-hot tensor of
// a.shape() marking the first extremal element of every reduced group.
struct Extremum {
    Tensor value;
    Tensor mask;
};
Extremum reduce_extremum(const Tensor& a, const Shape& shape, bool take_max);

Tensor transpose2d(const Tensor& a);

// Channel-axis (dim 1) manipulation for NCHW tensors.
Tensor concat_channels(const std::vector<const Tensor*>& parts);
Tensor slice_channels(const Tensor& a, int64_t start, int64_t len);
Tensor pad_channels(const Tensor& a, int64_t start, int64_t total);

struct ConvGeometry {
    int64_t stride = 1;
    int64_t pad = 0;
};

int64_t conv_out_size(int64_t in, int64_t kernel, const ConvGeometry& g);

// y[n,o] = sum_c x[n,c] (*) w[o,c]; w has shape (O, C, KH, KW).
Tensor conv2d(const Tensor& x, const Tensor& w, const ConvGeometry& g);
// Adjoint of conv2d in x: maps gy (N,O,OH,OW) to x-space of shape x_shape.
// Doubles as transposed convolution.
Tensor conv2d_input_grad(const Tensor& gy, const Tensor& w, const Shape& x_shape, const ConvGeometry& g);
// Adjoint of conv2d in w.
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gy, const Shape& w_shape, const ConvGeometry& g);

// Bilinear resampling of an NCHW tensor (align_corners = false).
Tensor resize_bilinear(const Tensor& x, int64_t out_h, int64_t out_w);

}  // namespace attnkd::tops
