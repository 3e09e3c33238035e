#pragma once

// Run configuration for the command-line tool. Sections:
//   data     dataset directory, labels file, image size, held-out test count
//   model    preset (teacher|student|s_lite) plus width/depth overrides
//   train    TrainConfig fields that are not covered by the other sections
//   distill  mode, layer, norm_kind, normalize, alpha_detached, mapping
//   eval     classifier checkpoint and whether to measure localization
//   output   run directory
// Unknown keys anywhere are rejected with their path.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "attnkd/training/config.hpp"
#include "json.hpp"

namespace attnkd::cli {

struct DataSection {
    std::filesystem::path dir;
    std::string labels = "labels.csv";  // relative to dir
    int image_size = 32;
    int test_images = 0;  // trailing images held out from training
};

struct ModelSection {
    std::string preset = "teacher";
    int base_channels = 16;
    std::optional<int> n_resblocks;
    int disc_base_channels = 16;
    std::optional<int> disc_layers;  // default: down to a 1x1 class map, at most 6
};

struct DistillSection {
    training::DistillMode mode = training::DistillMode::none;
    std::string layer = models::kLastResblockConv;
    losses::DistillConfig attention;
    // student attribute -> teacher attribute, by name or index
    std::vector<std::pair<std::string, std::string>> mapping;
};

struct EvalSection {
    std::filesystem::path classifier;
    bool localization = false;
};

struct RunConfig {
    DataSection data;
    ModelSection model;
    training::TrainConfig train;  // generator, discriminator and distillation fields are derived
    DistillSection distill;
    EvalSection eval;
    std::filesystem::path output;
};

// Field path of a rejected config, e.g. "train.n_critic".
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_json(const RunConfig& c);

// Defaults with a comment field per section, written by `attnkd config-reference`.
nlohmann::json reference_config();

models::GeneratorSpec generator_for(const ModelSection& m, int n_domains, int image_size);
models::DiscriminatorSpec discriminator_for(const ModelSection& m, int n_domains, int image_size);

// Resolves name/index pairs to a total index mapping over the student set.
std::vector<int> resolve_mapping(const std::vector<std::pair<std::string, std::string>>& pairs,
                                 const std::vector<std::string>& student, const std::vector<std::string>& teacher);
std::vector<std::pair<std::string, std::string>> parse_mapping_json(const nlohmann::json& j, const std::string& where);

}  // namespace attnkd::cli
