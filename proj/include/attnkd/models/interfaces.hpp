#pragma once

#include <map>
#include <string>
#include <vector>

#include "attnkd/core/types.hpp"

namespace attnkd::models {

struct GeneratorOutput {
    ad::Var image;                                // (B, 3, H, W)
    std::map<std::string, FeatureMaps> features;  // keyed by requested layer name
};

// Anything that translates (x, labels) and can expose named activations.
// Attention extraction and training are written against this so tests can
// substitute hand-built networks.
class ConditionalGenerator {
public:
    virtual ~ConditionalGenerator() = default;
    virtual GeneratorOutput forward(const ad::Var& x, const ad::Var& labels,
                                    const std::vector<std::string>& capture) const = 0;
    virtual std::vector<std::string> layer_names() const = 0;
    virtual int n_domains() const = 0;
};

struct CriticOutput {
    ad::Var adv;  // (B, 1, s, s) patch scores
    ClassScore cls;
};

class DomainCritic {
public:
    virtual ~DomainCritic() = default;
    virtual CriticOutput forward(const ad::Var& x) const = 0;
    virtual int n_domains() const = 0;
};

}  // namespace attnkd::models
