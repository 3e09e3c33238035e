#pragma once

// Small multi-label attribute classifier used as the evaluation oracle and,
// through its pooled features, as the default Fréchet embedder.

#include <filesystem>
#include <string>
#include <vector>

#include "attnkd/data/dataset.hpp"
#include "attnkd/models/parameters.hpp"
#include "json.hpp"

namespace attnkd::eval {

struct ClassifierSpec {
    int image_size = 32;
    int n_domains = 4;
    int base_channels = 16;
    int n_layers = 3;  // stride-2 convs; channels double per layer

    void validate() const;
    int feature_dim() const { return base_channels << (n_layers - 1); }
};

void to_json(nlohmann::json& j, const ClassifierSpec& s);
void from_json(const nlohmann::json& j, ClassifierSpec& s);

struct ClassifierTrainConfig {
    int steps = 1500;
    int batch_size = 32;
    float lr = 1e-3f;
    uint64_t seed = 0;
    double holdout_fraction = 0.2;
};

class DomainClassifier {
public:
    DomainClassifier(ClassifierSpec spec, RandomSeed seed, std::vector<std::string> attributes);

    // (B, feature_dim) pooled features and (B, K) logits.
    ad::Var features(const ad::Var& x) const;
    ad::Var logits(const ad::Var& x) const;

    // Inference in chunks without building a graph.
    Tensor predict_logits(const Tensor& images) const;
    Tensor embed(const Tensor& images) const;

    const ClassifierSpec& spec() const noexcept { return spec_; }
    uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::string>& attributes() const noexcept { return attributes_; }
    // Attributes left out of training because their labels were constant.
    std::vector<int> excluded;

    models::ParameterList& parameters() noexcept { return params_; }
    const models::ParameterList& parameters() const noexcept { return params_; }

private:
    struct Layer {
        ad::Var weight, bias;
    };
    ClassifierSpec spec_;
    uint64_t seed_;
    std::vector<std::string> attributes_;
    models::ParameterList params_;
    std::vector<Layer> trunk_;
    Layer head_;
};

struct ClassifierReport {
    std::vector<std::string> attributes;
    std::vector<double> heldout_accuracy;  // NaN for excluded attributes
    std::vector<std::string> warnings;
    size_t n_train = 0, n_heldout = 0;
};

struct TrainedClassifier {
    DomainClassifier model;
    ClassifierReport report;
};

// Trains on the leading (1 - holdout_fraction) share of `data` and reports
// accuracy on the rest. Attributes with a single label value in the training
// share are excluded with a warning; if every attribute is degenerate the
// call throws.
TrainedClassifier train_domain_classifier(const data::Dataset& data, const ClassifierTrainConfig& cfg,
                                          const ClassifierSpec& spec);

// Per-attribute accuracy of thresholded predictions (logit >= 0) against labels.
std::vector<double> classifier_accuracy(const DomainClassifier& c, const data::Dataset& data);

void save_classifier(const std::filesystem::path& dir, const DomainClassifier& c);
DomainClassifier load_classifier(const std::filesystem::path& dir);

}  // namespace attnkd::eval
