#pragma once

#include <string>
#include <vector>

#include "attnkd/models/interfaces.hpp"
#include "attnkd/models/layers.hpp"
#include "json.hpp"

namespace attnkd::models {

inline constexpr const char* kLastResblockConv = "last_resblock_conv";

struct GeneratorSpec {
    int base_channels = 64;
    int n_resblocks = 6;
    int n_domains = 7;
    int image_size = 128;
    int scale_num = 1;  // channel multiplier scale_num / scale_den
    int scale_den = 1;

    // Scaled first-layer width; throws if not integral or below 4.
    int width() const;
    void validate() const;

    static GeneratorSpec teacher(int n_domains, int image_size, int base_channels = 64);
    static GeneratorSpec student(int n_domains, int image_size, int base_channels = 64);
    static GeneratorSpec s_lite(int n_domains, int image_size, int base_channels = 64);
};

void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);

class Generator final : public ConditionalGenerator {
public:
    Generator(const GeneratorSpec& spec, RandomSeed seed);
    Generator(const Generator&) = delete;
    Generator& operator=(const Generator&) = delete;
    Generator(Generator&&) = default;
    Generator& operator=(Generator&&) = default;

    // Independent copy with the same parameter values.
    Generator clone() const;

    GeneratorOutput forward(const ad::Var& x, const ad::Var& labels,
                            const std::vector<std::string>& capture = {}) const override;
    GeneratorOutput forward(const ImageBatch& x, const DomainVector& c,
                            const std::vector<std::string>& capture = {}) const;

    // Registry in forward order. The "last_resblock_conv" alias is accepted by
    // forward() but not listed.
    std::vector<std::string> layer_names() const override;
    int n_domains() const override { return spec_.n_domains; }

    const GeneratorSpec& spec() const noexcept { return spec_; }
    RandomSeed seed() const noexcept { return seed_; }
    ParameterList& parameters() noexcept { return params_; }
    const ParameterList& parameters() const noexcept { return params_; }

private:
    struct ResBlock {
        Conv2d conv1;
        InstanceNorm2d norm1;
        Conv2d conv2;
        InstanceNorm2d norm2;
    };

    std::string resolve(const std::string& name) const;

    GeneratorSpec spec_;
    RandomSeed seed_;
    ParameterList params_;
    Conv2d conv1_;
    InstanceNorm2d norm1_;
    Conv2d down1_, down2_;
    InstanceNorm2d down1_norm_, down2_norm_;
    std::vector<ResBlock> blocks_;
    ConvTranspose2d up1_, up2_;
    InstanceNorm2d up1_norm_, up2_norm_;
    Conv2d out_;
};

Generator build_generator(const GeneratorSpec& spec, RandomSeed seed);

}  // namespace attnkd::models
