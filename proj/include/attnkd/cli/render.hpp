#pragma once

// Rendering of attention overlays and comparison grids.
//
// Colormap: t in [0,1] maps linearly from blue (0,0,255) to red (255,0,0).
// Overlays blend the colormapped heat 50/50 with the input pixels and round
// to nearest, so renders are byte-stable for equal inputs.

#include <cstdint>
#include <vector>

#include "attnkd/core/tensor.hpp"
#include "attnkd/data/png_io.hpp"

namespace attnkd::cli {

inline constexpr float kOverlayAlpha = 0.5f;

struct Rgb8 {
    uint8_t r, g, b;
};
Rgb8 colormap(float t);

// Minmax-normalizes a non-negative (h,w) map to [0,1]; an all-zero map stays zero.
Tensor unit_range(const Tensor& map);

// Bilinear (align-corners off) resize of a (h,w) map to (H,W).
Tensor resize_bilinear(const Tensor& map, int64_t out_h, int64_t out_w);

// `map` in [0,1] is resized to the centered square crop of `image` that the
// loader used; pixels outside the crop keep their original values.
data::Image8 overlay(const data::Image8& image, const Tensor& map);

// (h,w) map in [0,1] to 16-bit gray levels.
std::vector<uint16_t> to_gray16(const Tensor& map);

// Tiles (3,S,S) images in [-1,1] into rows x cols cells.
data::Image8 compose_grid(const std::vector<std::vector<Tensor>>& cells);

}  // namespace attnkd::cli
