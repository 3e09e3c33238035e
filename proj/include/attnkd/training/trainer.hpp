#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "attnkd/data/batcher.hpp"
#include "attnkd/losses/report.hpp"
#include "attnkd/training/config.hpp"

namespace attnkd::training {

struct TrainState {
    int64_t step = 0;  // completed steps
    models::Generator generator;
    models::Discriminator discriminator;
    Adam g_optimizer;
    Adam d_optimizer;
    Rng rng;
    std::string batcher_state;
    std::vector<losses::LossReport> history;

    TrainState(const TrainConfig& cfg);
};

// Teacher used to score distillation maps; the trainer freezes it.
struct Teacher {
    models::Generator* generator = nullptr;
    models::Discriminator* discriminator = nullptr;
};

class NonFiniteLoss : public std::runtime_error {
public:
    NonFiniteLoss(int64_t step, const std::string& what)
        : std::runtime_error("non-finite loss at step " + std::to_string(step) + ": " + what), step_(step) {}
    int64_t step() const noexcept { return step_; }

private:
    int64_t step_;
};

// Hooks for instrumentation. on_attention fires once per map computed for
// the distillation term.
struct TrainHooks {
    std::function<void(const AttentionMap&)> on_attention;
    std::function<void(const losses::LossReport&)> on_step;
};

class Trainer {
public:
    // `teacher` is required for attention and pseudo modes and must be null
    // otherwise. The dataset must outlive the trainer.
    Trainer(TrainConfig cfg, const data::Dataset& data, Teacher teacher = {}, TrainHooks hooks = {});

    // Continues from a saved state instead of initializing from the seed.
    Trainer(TrainConfig cfg, const data::Dataset& data, TrainState state, Teacher teacher = {}, TrainHooks hooks = {});

    const losses::LossReport& step();
    // Runs until `total_steps` (or `max_steps` more steps); writes a
    // checkpoint to `checkpoint_dir` on cadence and at the end when given.
    void run(std::optional<int64_t> max_steps = std::nullopt,
             const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt);

    const TrainConfig& config() const noexcept { return cfg_; }
    TrainState& state() noexcept { return *state_; }
    const TrainState& state() const noexcept { return *state_; }
    bool done() const { return state_->step >= cfg_.total_steps; }

private:
    void check_compatibility();
    std::vector<int> sample_domains(const Tensor& labels, Tensor& target);

    TrainConfig cfg_;
    const data::Dataset* data_;
    Teacher teacher_;
    TrainHooks hooks_;
    losses::DomainMapping mapping_;
    std::unique_ptr<TrainState> state_;
    data::Batcher batcher_;
    losses::LossReport last_g_;
};

// Directory layout: generator/, discriminator/ (model checkpoints),
// optimizer/ (moments as a parameter blob), state.json, losses.csv.
void save_state(const std::filesystem::path& dir, const TrainState& state, const TrainConfig& cfg);
// Validates every file against `cfg` before returning; nothing is partially applied.
TrainState load_state(const std::filesystem::path& dir, const TrainConfig& cfg);
TrainConfig read_state_config(const std::filesystem::path& dir);

// Writes run.json: config echo, code version, seeds.
void write_run_manifest(const std::filesystem::path& dir, const TrainConfig& cfg, const nlohmann::json& extra = {});

std::string code_version();

}  // namespace attnkd::training
