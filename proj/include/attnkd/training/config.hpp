#pragma once

#include <string>
#include <string_view>

#include "attnkd/losses/losses.hpp"
#include "attnkd/models/discriminator.hpp"
#include "attnkd/models/generator.hpp"
#include "attnkd/training/adam.hpp"
#include "json.hpp"

namespace attnkd::training {

enum class DistillMode { none, attention, pseudo };
DistillMode parse_distill_mode(std::string_view s);
std::string_view to_string(DistillMode m);

struct TrainConfig {
    uint64_t seed = 0;
    int image_size = 32;
    int batch_size = 16;
    int64_t total_steps = 3000;  // critic updates; the generator updates every n_critic-th step
    AdamConfig g_optimizer;
    AdamConfig d_optimizer;
    bool lr_decay = true;        // linear decay to 0 over the second half
    int n_critic = 5;
    losses::LossWeights weights;
    losses::ClassificationKind cls_kind = losses::ClassificationKind::multi_label;
    DistillMode distillation = DistillMode::none;
    std::string layer_name = models::kLastResblockConv;
    losses::DistillConfig distill;
    std::vector<int> domain_mapping;  // pseudo mode: student domain -> teacher domain
    int64_t checkpoint_every = 0;     // 0 disables periodic checkpoints
    bool flip = false;
    models::GeneratorSpec generator = models::GeneratorSpec::teacher(4, 32, 16);
    models::DiscriminatorSpec discriminator{16, 5, 4, 32};

    void validate() const;
    float lr_at(float base, int64_t step) const;  // step is 0-based
};

// Strict: unknown keys are rejected with their path.
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
// As from_json, reporting key paths under `root`.
void read_train_config(const nlohmann::json& j, TrainConfig& c, const std::string& root);
TrainConfig config_from_json(const nlohmann::json& j);

}  // namespace attnkd::training
