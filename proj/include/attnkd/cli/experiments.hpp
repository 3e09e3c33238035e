#pragma once

// Desk-scale reproduction runs: a teacher on the synthetic attribute set,
// identically seeded students with and without distillation, the pseudo
// variant with a teacher trained on a second attribute set, and teacher
// attention localization against the ground-truth masks.
//
// Every stage caches its artifacts under `work_dir`, keyed by the JSON of the
// settings that produced it, so reruns with the same settings only evaluate.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "attnkd/eval/report.hpp"
#include "attnkd/training/config.hpp"

namespace attnkd::cli {

struct ReproConfig {
    std::filesystem::path work_dir;
    int image_size = 32;
    int n_train = 2000;
    int n_test = 400;
    int n_classifier = 2000;
    int classifier_steps = 600;
    int base_channels = 16;
    int batch_size = 16;
    int64_t teacher_steps = 3000;
    int64_t student_steps = 3000;
    float lambda_att = 10.0f;
    uint64_t teacher_seed = 0;
    std::vector<uint64_t> seeds{1, 2, 3};
    std::function<void(const std::string&)> log;
};

void to_json(nlohmann::json& j, const ReproConfig& c);

struct SeedComparison {
    uint64_t seed = 0;
    eval::EvalReport baseline;   // student without distillation
    eval::EvalReport distilled;  // attention or pseudo
    bool improved() const { return distilled.mean_accuracy > baseline.mean_accuracy; }
};

struct DistillationResult {
    eval::EvalReport teacher;
    std::vector<SeedComparison> seeds;
    int wins() const;
};

// Student and teacher share the attribute set.
DistillationResult run_attention_distillation(const ReproConfig& cfg);
// Teacher on the pseudo attribute set; student domain k maps to teacher domain k.
DistillationResult run_pseudo_distillation(const ReproConfig& cfg);
// Teacher from the attention run, evaluated with localization on the test split.
eval::EvalReport run_teacher_localization(const ReproConfig& cfg);

}  // namespace attnkd::cli
