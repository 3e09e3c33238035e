#pragma once

#include <memory>
#include <string>
#include <vector>

#include "attnkd/data/dataset.hpp"
#include "attnkd/eval/classifier.hpp"
#include "attnkd/models/interfaces.hpp"

namespace attnkd::eval {

// Frozen map from images (B,3,H,W) to features (B,d).
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Tensor embed(const Tensor& images) const = 0;
    virtual std::string id() const = 0;
};

// Pooled penultimate features of a domain classifier.
class ClassifierEmbedder final : public Embedder {
public:
    explicit ClassifierEmbedder(const DomainClassifier& c) : c_(&c) {}
    Tensor embed(const Tensor& images) const override { return c_->embed(images); }
    std::string id() const override { return "classifier-gap-" + std::to_string(c_->spec().feature_dim()); }

private:
    const DomainClassifier* c_;
};

// Squared Fréchet distance between Gaussian fits of two (N,d) feature sets.
// Covariances use 1/(N-1); clamped at 0.
double frechet_distance(const Tensor& a, const Tensor& b);

struct TranslationAccuracy {
    std::vector<std::string> attributes;
    std::vector<double> per_attribute;
    double mean = 0.0;
};

// For every image and every attribute in `targets` (all when empty), sets
// that attribute to 1 in the image's labels, translates, and counts how often
// the classifier asserts it. Also returns the translated images when
// `translated` is non-null, in (image, target) order.
TranslationAccuracy translation_accuracy(const models::ConditionalGenerator& g, const DomainClassifier& c,
                                         const data::Dataset& data, const std::vector<int>& targets = {},
                                         Tensor* translated = nullptr);

// Share of attention inside a binary mask: sum(map * mask) / (sum(map) + eps).
// `map` is (h,w) and non-negative; `mask` is (H,W) and resampled to (h,w) by
// nearest neighbour.
double attention_mass_fraction(const Tensor& map, const Tensor& mask);
// Nearest-neighbour resampling of a (H,W) mask to (h,w).
Tensor resample_mask(const Tensor& mask, int64_t h, int64_t w);

struct LocalizationResult {
    std::vector<std::string> attributes;
    std::vector<double> mass_fraction;  // mean over images
    std::vector<double> area_fraction;  // mean mask area at map resolution
};

// Grad-CAM of `g` scored by `critic` at `layer`, one attribute at a time,
// against the dataset masks.
LocalizationResult attention_localization(const models::ConditionalGenerator& g, const models::DomainCritic& critic,
                                          const data::Dataset& data, const std::string& layer);

}  // namespace attnkd::eval
