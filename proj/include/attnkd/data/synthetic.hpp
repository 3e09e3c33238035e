#pragma once

// Procedural cartoon faces with exact attribute regions.
//
// Known attributes and the region each one paints:
//   black_hair   hair cap            hat          crown above the head
//   eyeglasses   eye band            eye_mask     eye band
//   rosy_cheeks  cheek discs         freckles     cheek discs
//   pale_skin    face skin           tanned_skin  face skin
// The right-hand column shares regions with the left and serves as a
// pseudo-domain set.

#include <filesystem>
#include <string>
#include <vector>

#include "attnkd/data/dataset.hpp"

namespace attnkd::data {

struct AttributeSpec {
    std::string name;
    double probability = 0.5;
};

struct SyntheticSpec {
    int n_images = 0;
    int image_size = 32;
    std::vector<AttributeSpec> attributes;
    uint64_t seed = 0;
    float noise = 0.02f;  // std of additive pixel noise, in [0,1] units

    void validate() const;
    static std::vector<AttributeSpec> teacher_set();
    static std::vector<AttributeSpec> pseudo_set();
};

const std::vector<std::string>& known_attributes();

Dataset make_synthetic(const SyntheticSpec& spec);

// Writes images/<stem>.png, labels.csv, masks/<stem>.<attr>.mask.png and
// spec.json under `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
void generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir);

// Re-derives an attribute from rendered pixels with the region color test
// for that attribute; used to check label/image consistency.
bool detect_attribute(const Sample& sample, const std::vector<std::string>& attributes, int attribute);

}  // namespace attnkd::data
