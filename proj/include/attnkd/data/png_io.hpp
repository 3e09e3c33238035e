#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace attnkd::data {

// Interleaved 8-bit pixels, row-major.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 (gray) or 3 (RGB)
    std::vector<uint8_t> pixels;
};

// Any PNG is converted to the requested channel count (1 or 3).
Image8 read_png(const std::filesystem::path& path, int channels = 3);

// 8-bit gray or RGB.
void write_png(const std::filesystem::path& path, const Image8& image);
// 1-bit gray; nonzero entries become white.
void write_png_mask(const std::filesystem::path& path, int width, int height, const std::vector<uint8_t>& mask);
// 16-bit gray, values stored as given.
void write_png_gray16(const std::filesystem::path& path, int width, int height, const std::vector<uint16_t>& values);
// Reads a 16-bit gray PNG written by write_png_gray16 without conversion.
std::vector<uint16_t> read_png_gray16(const std::filesystem::path& path, int& width, int& height);

}  // namespace attnkd::data
