#pragma once

#include <string>

#include "attnkd/autograd/ops.hpp"
#include "attnkd/models/parameters.hpp"

namespace attnkd::models {

struct Conv2d {
    ad::Var weight;  // (out, in, k, k)
    ad::Var bias;    // (1, out, 1, 1) or undefined
    tops::ConvGeometry geometry;

    ad::Var operator()(const ad::Var& x) const;
};

struct ConvTranspose2d {
    ad::Var weight;  // (in, out, k, k)
    tops::ConvGeometry geometry;

    ad::Var operator()(const ad::Var& x) const;
};

struct InstanceNorm2d {
    ad::Var gamma;  // (1, C, 1, 1)
    ad::Var beta;
    float eps = 1e-5f;

    ad::Var operator()(const ad::Var& x) const;
};

Conv2d make_conv(ParameterList& params, const std::string& name, int64_t in, int64_t out, int64_t kernel,
                 int64_t stride, int64_t pad, bool with_bias, Rng& rng);
ConvTranspose2d make_conv_transpose(ParameterList& params, const std::string& name, int64_t in, int64_t out,
                                    int64_t kernel, int64_t stride, int64_t pad, Rng& rng);
InstanceNorm2d make_instance_norm(ParameterList& params, const std::string& name, int64_t channels);

// Per-sample, per-channel normalization over the spatial dims, with affine
// parameters broadcast over (1, C, 1, 1).
ad::Var instance_norm(const ad::Var& x, const ad::Var& gamma, const ad::Var& beta, float eps);

// Spatially tiles (B, K) labels to (B, K, H, W).
ad::Var tile_labels(const ad::Var& labels, int64_t h, int64_t w);

}  // namespace attnkd::models
