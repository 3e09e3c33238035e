#pragma once

#include <optional>
#include <string>
#include <vector>

#include "attnkd/eval/metrics.hpp"
#include "attnkd/models/generator.hpp"
#include "json.hpp"

namespace attnkd::eval {

struct EvalReport {
    std::string model;
    std::string embedder;
    std::vector<std::string> attributes;
    std::vector<double> accuracy;
    double mean_accuracy = 0.0;
    double frechet = 0.0;
    std::vector<double> mass_fraction;  // empty unless localization was measured
    std::vector<double> area_fraction;
};

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

// One row per attribute, then Mean and FID; accuracies in percent.
std::string format_table(const EvalReport& r);

struct EvalOptions {
    std::string model_name = "model";
    // When set, attention localization is measured at this layer with `critic`.
    const models::DomainCritic* critic = nullptr;
    std::string layer = models::kLastResblockConv;
};

// Translation accuracy on every attribute and Fréchet distance between the
// classifier embeddings of the real images and of all translations.
EvalReport evaluate(const models::ConditionalGenerator& g, const DomainClassifier& c, const data::Dataset& data,
                    const EvalOptions& opt = {});

}  // namespace attnkd::eval
