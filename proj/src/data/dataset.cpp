#include "attnkd/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "attnkd/core/tensor_ops.hpp"
#include "attnkd/data/png_io.hpp"

namespace attnkd::data {

namespace fs = std::filesystem;

int Dataset::attribute_index(const std::string& name) const {
    const auto it = std::find(attributes.begin(), attributes.end(), name);
    if (it == attributes.end()) throw std::out_of_range("dataset has no attribute '" + name + "'");
    return static_cast<int>(it - attributes.begin());
}

std::pair<Dataset, Dataset> Dataset::split(size_t n_first) const {
    if (n_first > samples.size()) throw std::invalid_argument("split point beyond dataset size");
    Dataset a{attributes, {}, image_size}, b{attributes, {}, image_size};
    a.samples.assign(samples.begin(), samples.begin() + static_cast<long>(n_first));
    b.samples.assign(samples.begin() + static_cast<long>(n_first), samples.end());
    return {std::move(a), std::move(b)};
}

Tensor image_to_tensor(const std::vector<uint8_t>& rgb, int width, int height, int image_size) {
    const int side = std::min(width, height);
    const int x0 = (width - side) / 2, y0 = (height - side) / 2;
    Tensor crop({1, 3, side, side});
    const int64_t hw = static_cast<int64_t>(side) * side;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            for (int c = 0; c < 3; ++c)
                crop[c * hw + static_cast<int64_t>(y) * side + x] =
                    rgb[(static_cast<size_t>(y0 + y) * width + (x0 + x)) * 3 + c] / 127.5f - 1.0f;
    Tensor out = side == image_size ? crop : tops::resize_bilinear(crop, image_size, image_size);
    for (auto& v : out.storage()) v = std::clamp(v, -1.0f, 1.0f);
    return out.reshaped({3, image_size, image_size});
}

std::vector<uint8_t> tensor_to_rgb8(const Tensor& image) {
    const int64_t H = image.dim(1), W = image.dim(2), hw = H * W;
    std::vector<uint8_t> out(static_cast<size_t>(hw * 3));
    for (int64_t p = 0; p < hw; ++p)
        for (int c = 0; c < 3; ++c) {
            const float v = std::clamp((image[c * hw + p] + 1.0f) * 127.5f, 0.0f, 255.0f);
            out[static_cast<size_t>(p * 3 + c)] = static_cast<uint8_t>(std::lround(v));
        }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

Dataset load_folder(const fs::path& root, const fs::path& labels_csv, int image_size) {
    if (image_size < 1) throw std::invalid_argument("image_size must be positive");
    std::ifstream in(labels_csv);
    if (!in) throw std::runtime_error("cannot open " + labels_csv.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(labels_csv.string() + " is empty");
    const auto header = split_csv(line);
    if (header.size() < 2) throw std::runtime_error(labels_csv.string() + ": header must name at least one attribute");

    Dataset d;
    d.image_size = image_size;
    d.attributes.assign(header.begin() + 1, header.end());
    const size_t K = d.attributes.size();
    const fs::path image_dir = fs::exists(root / "images") ? root / "images" : root;
    const fs::path mask_dir = root / "masks";

    size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const std::string where = labels_csv.string() + " row " + std::to_string(row);
        const auto cells = split_csv(line);
        if (cells.size() != K + 1)
            throw std::runtime_error(where + ": expected " + std::to_string(K + 1) + " columns, got " +
                                     std::to_string(cells.size()));
        Sample s;
        s.filename = cells[0];
        s.labels = Tensor({static_cast<int64_t>(K)}, 0.0f);
        for (size_t k = 0; k < K; ++k) {
            const std::string& v = cells[k + 1];
            if (v == "1") s.labels[static_cast<int64_t>(k)] = 1.0f;
            else if (v != "0" && v != "-1")
                throw std::runtime_error(where + ": label '" + v + "' for " + d.attributes[k] + " is not -1, 0 or 1");
        }
        const fs::path path = image_dir / s.filename;
        if (!fs::exists(path)) throw std::runtime_error(where + ": missing image " + path.string());
        Image8 img;
        try {
            img = read_png(path, 3);
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        s.image = image_to_tensor(img.pixels, img.width, img.height, image_size);

        const std::string stem = fs::path(s.filename).stem().string();
        std::vector<fs::path> mask_paths;
        for (const auto& a : d.attributes) mask_paths.push_back(mask_dir / (stem + "." + a + ".mask.png"));
        const bool all_masks = std::all_of(mask_paths.begin(), mask_paths.end(), [](const fs::path& p) { return fs::exists(p); });
        if (all_masks) {
            s.masks = Tensor({static_cast<int64_t>(K), image_size, image_size}, 0.0f);
            const int64_t hw = static_cast<int64_t>(image_size) * image_size;
            for (size_t k = 0; k < K; ++k) {
                const Image8 m = read_png(mask_paths[k], 1);
                if (m.width != img.width || m.height != img.height)
                    throw std::runtime_error(where + ": mask " + mask_paths[k].string() + " size differs from image");
                // nearest sampling of the same center crop keeps masks binary
                const int side = std::min(m.width, m.height);
                const int x0 = (m.width - side) / 2, y0 = (m.height - side) / 2;
                for (int y = 0; y < image_size; ++y)
                    for (int x = 0; x < image_size; ++x) {
                        const int sy = y0 + std::min(side - 1, static_cast<int>((y + 0.5) * side / image_size));
                        const int sx = x0 + std::min(side - 1, static_cast<int>((x + 0.5) * side / image_size));
                        s.masks[static_cast<int64_t>(k) * hw + static_cast<int64_t>(y) * image_size + x] =
                            m.pixels[static_cast<size_t>(sy) * m.width + sx] > 127 ? 1.0f : 0.0f;
                    }
            }
        }
        d.samples.push_back(std::move(s));
    }
    return d;
}

}  // namespace attnkd::data
