#include "attnkd/models/discriminator.hpp"

#include <stdexcept>

namespace attnkd::models {

namespace {
constexpr float kLeakySlope = 0.01f;
}

void DiscriminatorSpec::validate() const {
    if (base_channels < 1) throw std::invalid_argument("discriminator base_channels must be >= 1");
    if (n_layers < 1 || n_layers > 20) throw std::invalid_argument("discriminator n_layers must be in [1,20]");
    if (n_domains < 2) throw std::invalid_argument("n_domains must be >= 2");
    if (image_size < 1 || image_size % (1 << n_layers) != 0)
        throw std::invalid_argument("image_size " + std::to_string(image_size) + " is not divisible by 2^" +
                                    std::to_string(n_layers));
}

void to_json(nlohmann::json& j, const DiscriminatorSpec& s) {
    j = {{"base_channels", s.base_channels}, {"n_layers", s.n_layers}, {"n_domains", s.n_domains},
         {"image_size", s.image_size}};
}

void from_json(const nlohmann::json& j, DiscriminatorSpec& s) {
    j.at("base_channels").get_to(s.base_channels);
    j.at("n_layers").get_to(s.n_layers);
    j.at("n_domains").get_to(s.n_domains);
    j.at("image_size").get_to(s.image_size);
}

Discriminator::Discriminator(const DiscriminatorSpec& spec, RandomSeed seed) : spec_(spec), seed_(seed) {
    spec_.validate();
    Rng rng(derive_seed(seed.value, "discriminator"));
    int64_t in = 3;
    int64_t out = spec_.base_channels;
    for (int i = 1; i <= spec_.n_layers; ++i) {
        trunk_.push_back(make_conv(params_, "conv" + std::to_string(i), in, out, 4, 2, 1, true, rng));
        in = out;
        out *= 2;
    }
    adv_head_ = make_conv(params_, "adv", in, 1, 3, 1, 1, false, rng);
    cls_head_ = make_conv(params_, "cls", in, spec_.n_domains, spec_.output_size(), 1, 0, false, rng);
}

Discriminator Discriminator::clone() const {
    Discriminator d(spec_, seed_);
    d.params_.copy_values_from(params_);
    d.params_.set_requires_grad(params_.items().front().var.requires_grad());
    return d;
}

CriticOutput Discriminator::forward(const ad::Var& x) const {
    if (x.value().rank() != 4 || x.dim(1) != 3 || x.dim(2) != spec_.image_size || x.dim(3) != spec_.image_size)
        throw std::invalid_argument("discriminator expects (B,3," + std::to_string(spec_.image_size) + "," +
                                    std::to_string(spec_.image_size) + "), got " + shape_str(x.shape()));
    ad::Var h = x;
    for (const auto& conv : trunk_) h = ad::leaky_relu(conv(h), kLeakySlope);
    CriticOutput out;
    out.adv = adv_head_(h);
    out.cls.scores = ad::reshape(cls_head_(h), {x.dim(0), spec_.n_domains});
    return out;
}

CriticOutput Discriminator::forward(const ImageBatch& x) const { return forward(ad::Var::constant(x.tensor())); }

Discriminator build_discriminator(const DiscriminatorSpec& spec, RandomSeed seed) { return Discriminator(spec, seed); }

}  // namespace attnkd::models
