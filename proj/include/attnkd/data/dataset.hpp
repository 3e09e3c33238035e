#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "attnkd/core/tensor.hpp"

namespace attnkd::data {

struct Sample {
    std::string filename;
    Tensor image;   // (3, H, W) in [-1, 1]
    Tensor labels;  // (K) entries 0 or 1
    Tensor masks;   // (K, H, W) entries 0 or 1; empty when no masks exist
};

struct Dataset {
    std::vector<std::string> attributes;
    std::vector<Sample> samples;
    int image_size = 0;

    size_t size() const { return samples.size(); }
    int n_domains() const { return static_cast<int>(attributes.size()); }
    bool has_masks() const { return !samples.empty() && samples.front().masks.numel() > 0; }
    int attribute_index(const std::string& name) const;

    // Deterministic split: the first `n_first` samples and the rest.
    std::pair<Dataset, Dataset> split(size_t n_first) const;
};

// Reads `labels_csv` (filename,attr1,...,attrK; entries in {-1,1} or {0,1})
// and the referenced images under `root`. Images are center-cropped to a
// square, bilinearly resized to image_size and rescaled to [-1, 1]. Masks
// named <stem>.<attr>.mask.png under root/masks are loaded when present for
// every attribute.
Dataset load_folder(const std::filesystem::path& root, const std::filesystem::path& labels_csv, int image_size);

// Center crop + bilinear resize + rescale of one 8-bit RGB image.
Tensor image_to_tensor(const std::vector<uint8_t>& rgb, int width, int height, int image_size);
// (3, H, W) in [-1, 1] to interleaved 8-bit RGB.
std::vector<uint8_t> tensor_to_rgb8(const Tensor& image);

}  // namespace attnkd::data
