#pragma once

#include <vector>

#include "attnkd/models/interfaces.hpp"
#include "attnkd/models/layers.hpp"
#include "json.hpp"

namespace attnkd::models {

struct DiscriminatorSpec {
    int base_channels = 64;
    int n_layers = 6;
    int n_domains = 7;
    int image_size = 128;

    void validate() const;
    int output_size() const { return image_size >> n_layers; }
};

void to_json(nlohmann::json& j, const DiscriminatorSpec& s);
void from_json(const nlohmann::json& j, DiscriminatorSpec& s);

class Discriminator final : public DomainCritic {
public:
    Discriminator(const DiscriminatorSpec& spec, RandomSeed seed);
    Discriminator(const Discriminator&) = delete;
    Discriminator& operator=(const Discriminator&) = delete;
    Discriminator(Discriminator&&) = default;
    Discriminator& operator=(Discriminator&&) = default;

    Discriminator clone() const;

    CriticOutput forward(const ad::Var& x) const override;
    CriticOutput forward(const ImageBatch& x) const;
    int n_domains() const override { return spec_.n_domains; }

    const DiscriminatorSpec& spec() const noexcept { return spec_; }
    RandomSeed seed() const noexcept { return seed_; }
    ParameterList& parameters() noexcept { return params_; }
    const ParameterList& parameters() const noexcept { return params_; }

private:
    DiscriminatorSpec spec_;
    RandomSeed seed_;
    ParameterList params_;
    std::vector<Conv2d> trunk_;
    Conv2d adv_head_;
    Conv2d cls_head_;
};

Discriminator build_discriminator(const DiscriminatorSpec& spec, RandomSeed seed);

}  // namespace attnkd::models
