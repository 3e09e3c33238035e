#pragma once

// Parameter checkpoints: a directory with manifest.json and params.bin.
//
// params.bin is the concatenation of every tensor in registration order as
// little-endian IEEE float32, row-major. The manifest records for each tensor
// its name, byte offset into the blob and shape, plus the model kind, its
// spec, the seed and the training step.

#include <filesystem>
#include <string>

#include "attnkd/models/discriminator.hpp"
#include "attnkd/models/generator.hpp"

namespace attnkd::models {

struct CheckpointInfo {
    std::string kind;  // "generator", "discriminator", "classifier"
    nlohmann::json spec;
    uint64_t seed = 0;
    int64_t step = 0;
};

void save_parameters(const std::filesystem::path& dir, const CheckpointInfo& info, const ParameterList& params);

// Validates every name, shape and the blob size before touching `params`.
CheckpointInfo load_parameters(const std::filesystem::path& dir, ParameterList& params);
CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);

void save_generator(const std::filesystem::path& dir, const Generator& g, int64_t step = 0);
void save_discriminator(const std::filesystem::path& dir, const Discriminator& d, int64_t step = 0);
Generator load_generator(const std::filesystem::path& dir);
Discriminator load_discriminator(const std::filesystem::path& dir);

}  // namespace attnkd::models
