#include "attnkd/data/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace attnkd::data {

namespace {

struct File {
    std::FILE* f = nullptr;
    File(const std::filesystem::path& p, const char* mode) : f(std::fopen(p.c_str(), mode)) {}
    ~File() {
        if (f) std::fclose(f);
    }
};

// Writes rows with the low-level API. Only trivially destructible locals live
// in this frame, so longjmp out of libpng is safe.
bool write_rows(std::FILE* f, int width, int height, int bit_depth, int color_type, png_bytepp rows, bool swap16) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth < 8) png_set_packing(png);
    if (swap16) png_set_swap(png);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

void write_generic(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
                   uint8_t* data, size_t row_bytes, bool swap16) {
    File file(path, "wb");
    if (!file.f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (int y = 0; y < height; ++y) rows[static_cast<size_t>(y)] = data + static_cast<size_t>(y) * row_bytes;
    if (!write_rows(file.f, width, height, bit_depth, color_type, rows.data(), swap16))
        throw std::runtime_error("libpng failed writing " + path.string());
}

bool little_endian() {
    const uint16_t probe = 1;
    return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

}  // namespace

Image8 read_png(const std::filesystem::path& path, int channels) {
    if (channels != 1 && channels != 3) throw std::invalid_argument("read_png supports 1 or 3 channels");
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("cannot read PNG " + path.string() + ": " + image.message);
    image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Image8 out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.channels = channels;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw std::runtime_error("cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
    if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("write_png supports 1 or 3 channels");
    if (image.pixels.size() != static_cast<size_t>(image.width) * image.height * image.channels)
        throw std::invalid_argument("write_png: pixel buffer size mismatch");
    std::vector<uint8_t> copy = image.pixels;
    write_generic(path, image.width, image.height, 8, image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                  copy.data(), static_cast<size_t>(image.width) * image.channels, false);
}

void write_png_mask(const std::filesystem::path& path, int width, int height, const std::vector<uint8_t>& mask) {
    if (mask.size() != static_cast<size_t>(width) * height) throw std::invalid_argument("write_png_mask: size mismatch");
    // one byte per pixel holding 0 or 1; png_set_packing packs to 1 bit
    std::vector<uint8_t> bits(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) bits[i] = mask[i] ? 1 : 0;
    write_generic(path, width, height, 1, PNG_COLOR_TYPE_GRAY, bits.data(), static_cast<size_t>(width), false);
}

void write_png_gray16(const std::filesystem::path& path, int width, int height, const std::vector<uint16_t>& values) {
    if (values.size() != static_cast<size_t>(width) * height)
        throw std::invalid_argument("write_png_gray16: size mismatch");
    std::vector<uint16_t> copy = values;
    write_generic(path, width, height, 16, PNG_COLOR_TYPE_GRAY, reinterpret_cast<uint8_t*>(copy.data()),
                  static_cast<size_t>(width) * 2, little_endian());
}

std::vector<uint16_t> read_png_gray16(const std::filesystem::path& path, int& width, int& height) {
    File file(path, "rb");
    if (!file.f) throw std::runtime_error("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<uint16_t> values;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("cannot decode 16-bit PNG " + path.string());
    }
    png_init_io(png, file.f);
    png_read_info(png, info);
    if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path.string() + " is not a 16-bit gray PNG");
    }
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    if (little_endian()) png_set_swap(png);
    values.resize(static_cast<size_t>(width) * height);
    rows.resize(static_cast<size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<size_t>(y)] = reinterpret_cast<png_bytep>(values.data() + static_cast<size_t>(y) * width);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return values;
}

}  // namespace attnkd::data
