#include "attnkd/cli/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "attnkd/data/dataset.hpp"

namespace attnkd::cli {

namespace {

uint8_t to_byte(float v) { return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f))); }

}  // namespace

Rgb8 colormap(float t) {
    t = std::clamp(t, 0.0f, 1.0f);
    return {to_byte(255.0f * t), 0, to_byte(255.0f * (1.0f - t))};
}

Tensor unit_range(const Tensor& map) {
    float lo = map[0], hi = map[0];
    for (float v : map.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Tensor out(map.shape(), 0.0f);
    if (hi > lo)
        for (int64_t i = 0; i < map.numel(); ++i) out[i] = (map[i] - lo) / (hi - lo);
    return out;
}

Tensor resize_bilinear(const Tensor& map, int64_t out_h, int64_t out_w) {
    if (map.rank() != 2) throw std::invalid_argument("resize_bilinear expects (h,w)");
    const int64_t h = map.dim(0), w = map.dim(1);
    Tensor out({out_h, out_w});
    for (int64_t y = 0; y < out_h; ++y) {
        const double sy = std::clamp((y + 0.5) * h / out_h - 0.5, 0.0, static_cast<double>(h - 1));
        const int64_t y0 = static_cast<int64_t>(sy), y1 = std::min(h - 1, y0 + 1);
        const double fy = sy - y0;
        for (int64_t x = 0; x < out_w; ++x) {
            const double sx = std::clamp((x + 0.5) * w / out_w - 0.5, 0.0, static_cast<double>(w - 1));
            const int64_t x0 = static_cast<int64_t>(sx), x1 = std::min(w - 1, x0 + 1);
            const double fx = sx - x0;
            const double top = map[y0 * w + x0] * (1 - fx) + map[y0 * w + x1] * fx;
            const double bot = map[y1 * w + x0] * (1 - fx) + map[y1 * w + x1] * fx;
            out[y * out_w + x] = static_cast<float>(top * (1 - fy) + bot * fy);
        }
    }
    return out;
}

data::Image8 overlay(const data::Image8& image, const Tensor& map) {
    if (image.channels != 3) throw std::invalid_argument("overlay expects an RGB image");
    const int side = std::min(image.width, image.height);
    const int x0 = (image.width - side) / 2, y0 = (image.height - side) / 2;
    const Tensor heat = resize_bilinear(map, side, side);
    data::Image8 out = image;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const Rgb8 c = colormap(heat[static_cast<int64_t>(y) * side + x]);
            uint8_t* px = &out.pixels[(static_cast<size_t>(y + y0) * image.width + static_cast<size_t>(x + x0)) * 3];
            px[0] = to_byte((1.0f - kOverlayAlpha) * px[0] + kOverlayAlpha * c.r);
            px[1] = to_byte((1.0f - kOverlayAlpha) * px[1] + kOverlayAlpha * c.g);
            px[2] = to_byte((1.0f - kOverlayAlpha) * px[2] + kOverlayAlpha * c.b);
        }
    return out;
}

std::vector<uint16_t> to_gray16(const Tensor& map) {
    std::vector<uint16_t> out(static_cast<size_t>(map.numel()));
    for (int64_t i = 0; i < map.numel(); ++i)
        out[static_cast<size_t>(i)] = static_cast<uint16_t>(std::lround(std::clamp(map[i], 0.0f, 1.0f) * 65535.0f));
    return out;
}

data::Image8 compose_grid(const std::vector<std::vector<Tensor>>& cells) {
    if (cells.empty() || cells.front().empty()) throw std::invalid_argument("grid needs at least one cell");
    const int64_t s = cells.front().front().dim(1);
    const size_t cols = cells.front().size();
    data::Image8 out;
    out.width = static_cast<int>(s * static_cast<int64_t>(cols));
    out.height = static_cast<int>(s * static_cast<int64_t>(cells.size()));
    out.channels = 3;
    out.pixels.assign(static_cast<size_t>(out.width) * out.height * 3, 0);
    for (size_t r = 0; r < cells.size(); ++r) {
        if (cells[r].size() != cols) throw std::invalid_argument("grid rows differ in length");
        for (size_t c = 0; c < cols; ++c) {
            const Tensor& t = cells[r][c];
            if (t.rank() != 3 || t.dim(0) != 3 || t.dim(1) != s || t.dim(2) != s)
                throw std::invalid_argument("grid cells must be (3,S,S) with equal S");
            const std::vector<uint8_t> rgb = data::tensor_to_rgb8(t);
            for (int64_t y = 0; y < s; ++y)
                std::copy(rgb.begin() + y * s * 3, rgb.begin() + (y + 1) * s * 3,
                          out.pixels.begin() + ((static_cast<int64_t>(r) * s + y) * out.width + static_cast<int64_t>(c) * s) * 3);
        }
    }
    return out;
}

}  // namespace attnkd::cli
