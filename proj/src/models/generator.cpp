#include "attnkd/models/generator.hpp"

#include <algorithm>
#include <stdexcept>

namespace attnkd::models {

int GeneratorSpec::width() const {
    if (scale_num <= 0 || scale_den <= 0) throw std::invalid_argument("generator scale must be positive");
    if ((static_cast<int64_t>(base_channels) * scale_num) % scale_den != 0)
        throw std::invalid_argument("base_channels " + std::to_string(base_channels) + " x " +
                                    std::to_string(scale_num) + "/" + std::to_string(scale_den) +
                                    " is not an integral channel count");
    const int w = static_cast<int>(static_cast<int64_t>(base_channels) * scale_num / scale_den);
    if (w < 4) throw std::invalid_argument("scaled generator width must be >= 4, got " + std::to_string(w));
    return w;
}

void GeneratorSpec::validate() const {
    width();
    if (n_resblocks < 1) throw std::invalid_argument("n_resblocks must be >= 1");
    if (n_domains < 2) throw std::invalid_argument("n_domains must be >= 2");
    if (image_size < 4 || image_size % 4 != 0) throw std::invalid_argument("image_size must be divisible by 4");
}

GeneratorSpec GeneratorSpec::teacher(int n_domains, int image_size, int base_channels) {
    return {base_channels, 6, n_domains, image_size, 1, 1};
}

GeneratorSpec GeneratorSpec::student(int n_domains, int image_size, int base_channels) {
    return {base_channels, 3, n_domains, image_size, 1, 2};
}

GeneratorSpec GeneratorSpec::s_lite(int n_domains, int image_size, int base_channels) {
    return {base_channels, 1, n_domains, image_size, 1, 4};
}

void to_json(nlohmann::json& j, const GeneratorSpec& s) {
    j = {{"base_channels", s.base_channels}, {"n_resblocks", s.n_resblocks}, {"n_domains", s.n_domains},
         {"image_size", s.image_size}, {"scale", {s.scale_num, s.scale_den}}};
}

void from_json(const nlohmann::json& j, GeneratorSpec& s) {
    j.at("base_channels").get_to(s.base_channels);
    j.at("n_resblocks").get_to(s.n_resblocks);
    j.at("n_domains").get_to(s.n_domains);
    j.at("image_size").get_to(s.image_size);
    const auto& sc = j.at("scale");
    s.scale_num = sc.at(0).get<int>();
    s.scale_den = sc.at(1).get<int>();
}

Generator::Generator(const GeneratorSpec& spec, RandomSeed seed) : spec_(spec), seed_(seed) {
    spec_.validate();
    Rng rng(derive_seed(seed.value, "generator"));
    const int64_t w = spec_.width();
    conv1_ = make_conv(params_, "conv1", 3 + spec_.n_domains, w, 7, 1, 3, false, rng);
    norm1_ = make_instance_norm(params_, "conv1.norm", w);
    down1_ = make_conv(params_, "down1", w, 2 * w, 4, 2, 1, false, rng);
    down1_norm_ = make_instance_norm(params_, "down1.norm", 2 * w);
    down2_ = make_conv(params_, "down2", 2 * w, 4 * w, 4, 2, 1, false, rng);
    down2_norm_ = make_instance_norm(params_, "down2.norm", 4 * w);
    for (int i = 1; i <= spec_.n_resblocks; ++i) {
        const std::string p = "res" + std::to_string(i);
        ResBlock b;
        b.conv1 = make_conv(params_, p + ".conv1", 4 * w, 4 * w, 3, 1, 1, false, rng);
        b.norm1 = make_instance_norm(params_, p + ".norm1", 4 * w);
        b.conv2 = make_conv(params_, p + ".conv2", 4 * w, 4 * w, 3, 1, 1, false, rng);
        b.norm2 = make_instance_norm(params_, p + ".norm2", 4 * w);
        blocks_.push_back(b);
    }
    up1_ = make_conv_transpose(params_, "up1", 4 * w, 2 * w, 4, 2, 1, rng);
    up1_norm_ = make_instance_norm(params_, "up1.norm", 2 * w);
    up2_ = make_conv_transpose(params_, "up2", 2 * w, w, 4, 2, 1, rng);
    up2_norm_ = make_instance_norm(params_, "up2.norm", w);
    out_ = make_conv(params_, "out", w, 3, 7, 1, 3, false, rng);
}

Generator Generator::clone() const {
    Generator g(spec_, seed_);
    g.params_.copy_values_from(params_);
    g.params_.set_requires_grad(params_.items().front().var.requires_grad());
    return g;
}

std::vector<std::string> Generator::layer_names() const {
    std::vector<std::string> names{"conv1", "down1", "down2"};
    for (int i = 1; i <= spec_.n_resblocks; ++i) {
        const std::string p = "res" + std::to_string(i);
        names.push_back(p + ".conv1");
        names.push_back(p + ".conv2");
        names.push_back(p);
    }
    names.insert(names.end(), {"up1", "up2", "out"});
    return names;
}

std::string Generator::resolve(const std::string& name) const {
    if (name == kLastResblockConv) return "res" + std::to_string(spec_.n_resblocks) + ".conv2";
    const auto names = layer_names();
    if (std::find(names.begin(), names.end(), name) != names.end()) return name;
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown generator layer '" + name + "'; registry: " + list + ", " +
                                kLastResblockConv);
}

GeneratorOutput Generator::forward(const ad::Var& x, const ad::Var& labels,
                                   const std::vector<std::string>& capture) const {
    if (x.value().rank() != 4 || x.dim(1) != 3) throw std::invalid_argument("generator input must be (B,3,H,W)");
    if (labels.value().rank() != 2 || labels.dim(0) != x.dim(0) || labels.dim(1) != spec_.n_domains)
        throw std::invalid_argument("label vector shape " + shape_str(labels.shape()) + " does not match (" +
                                    std::to_string(x.dim(0)) + ", " + std::to_string(spec_.n_domains) + ")");
    if (x.dim(2) % 4 != 0 || x.dim(3) % 4 != 0)
        throw std::invalid_argument("generator input size must be divisible by 4");

    std::vector<std::pair<std::string, std::string>> wanted;  // requested -> canonical
    for (const auto& name : capture) wanted.emplace_back(name, resolve(name));

    GeneratorOutput out;
    // Records the activation under every name that maps to `canonical`. A
    // frozen model produces constants, so the tap becomes a fresh leaf to keep
    // gradients with respect to it available.
    auto tap = [&](const std::string& canonical, ad::Var v) {
        bool hit = false;
        for (const auto& [req, can] : wanted) hit = hit || can == canonical;
        if (!hit) return v;
        if (ad::grad_enabled() && !v.requires_grad()) v = ad::Var::parameter(v.value());
        for (const auto& [req, can] : wanted)
            if (can == canonical) out.features[req] = FeatureMaps{v, req};
        return v;
    };

    ad::Var h = ad::concat_channels({x, tile_labels(labels, x.dim(2), x.dim(3))});
    h = tap("conv1", ad::relu(norm1_(conv1_(h))));
    h = tap("down1", ad::relu(down1_norm_(down1_(h))));
    h = tap("down2", ad::relu(down2_norm_(down2_(h))));
    for (size_t i = 0; i < blocks_.size(); ++i) {
        const std::string p = "res" + std::to_string(i + 1);
        const ResBlock& b = blocks_[i];
        // Conv taps sit after the norm like the other blocks. The raw conv2
        // output only feeds an instance norm, which is shift invariant per
        // channel, so its spatially averaged gradient is identically zero.
        ad::Var r = tap(p + ".conv1", ad::relu(b.norm1(b.conv1(h))));
        r = tap(p + ".conv2", b.norm2(b.conv2(r)));
        h = tap(p, ad::add(h, r));
    }
    h = tap("up1", ad::relu(up1_norm_(up1_(h))));
    h = tap("up2", ad::relu(up2_norm_(up2_(h))));
    h = tap("out", out_(h));
    out.image = ad::tanh(h);
    return out;
}

GeneratorOutput Generator::forward(const ImageBatch& x, const DomainVector& c,
                                   const std::vector<std::string>& capture) const {
    return forward(ad::Var::constant(x.tensor()), ad::Var::constant(c.tensor()), capture);
}

Generator build_generator(const GeneratorSpec& spec, RandomSeed seed) { return Generator(spec, seed); }

}  // namespace attnkd::models
