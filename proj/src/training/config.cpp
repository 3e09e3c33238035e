#include "attnkd/training/config.hpp"

#include <charconv>
#include <cstdlib>
#include <set>
#include <stdexcept>

namespace attnkd::training {

DistillMode parse_distill_mode(std::string_view s) {
    if (s == "none") return DistillMode::none;
    if (s == "attention") return DistillMode::attention;
    if (s == "pseudo") return DistillMode::pseudo;
    throw std::invalid_argument("unknown distillation mode '" + std::string(s) + "' (expected none, attention or pseudo)");
}

std::string_view to_string(DistillMode m) {
    switch (m) {
        case DistillMode::none: return "none";
        case DistillMode::attention: return "attention";
        case DistillMode::pseudo: return "pseudo";
    }
    return "none";
}

void TrainConfig::validate() const {
    if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
    if (n_critic < 1) throw std::invalid_argument("n_critic must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
    for (const AdamConfig* a : {&g_optimizer, &d_optimizer})
        if (!(a->lr > 0) || !(a->beta1 >= 0 && a->beta1 < 1) || !(a->beta2 >= 0 && a->beta2 < 1) || !(a->eps > 0))
            throw std::invalid_argument("invalid optimizer settings");
    weights.validate();
    generator.validate();
    discriminator.validate();
    if (generator.image_size != image_size || discriminator.image_size != image_size)
        throw std::invalid_argument("generator and discriminator image_size must equal image_size");
    if (generator.n_domains != discriminator.n_domains)
        throw std::invalid_argument("generator and discriminator disagree on n_domains");
    if (distillation == DistillMode::pseudo && domain_mapping.empty())
        throw std::invalid_argument("pseudo distillation needs a domain_mapping");
    if (distillation != DistillMode::pseudo && !domain_mapping.empty())
        throw std::invalid_argument("domain_mapping is only meaningful in pseudo mode");
}

float TrainConfig::lr_at(float base, int64_t step) const {
    if (!lr_decay) return base;
    const int64_t half = total_steps / 2;
    if (step < half) return base;
    return base * static_cast<float>(total_steps - step) / static_cast<float>(total_steps - half);
}

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) throw std::invalid_argument("unknown config key '" + where + "." + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config key '" + where + "." + key + "' has the wrong type: " + e.what());
    }
}

// Shortest decimal form of a float, so 1e-4f echoes as 0.0001.
double decimal(float v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::strtod(std::string(buf, r.ptr).c_str(), nullptr);
}

json adam_json(const AdamConfig& a) {
    return {{"lr", decimal(a.lr)}, {"beta1", decimal(a.beta1)}, {"beta2", decimal(a.beta2)}, {"eps", decimal(a.eps)}};
}

AdamConfig adam_from(const json& j, const std::string& where) {
    check_keys(j, where, {"lr", "beta1", "beta2", "eps"});
    AdamConfig a;
    read(j, "lr", a.lr, where);
    read(j, "beta1", a.beta1, where);
    read(j, "beta2", a.beta2, where);
    read(j, "eps", a.eps, where);
    return a;
}

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = json{{"seed", c.seed},
             {"image_size", c.image_size},
             {"batch_size", c.batch_size},
             {"total_steps", c.total_steps},
             {"g_optimizer", adam_json(c.g_optimizer)},
             {"d_optimizer", adam_json(c.d_optimizer)},
             {"lr_decay", c.lr_decay},
             {"n_critic", c.n_critic},
             {"weights",
              {{"lambda_cls", decimal(c.weights.lambda_cls)},
               {"lambda_rec", decimal(c.weights.lambda_rec)},
               {"lambda_att", decimal(c.weights.lambda_att)},
               {"lambda_gp", decimal(c.weights.lambda_gp)}}},
             {"classification", losses::to_string(c.cls_kind)},
             {"distillation", to_string(c.distillation)},
             {"layer_name", c.layer_name},
             {"attention",
              {{"norm", losses::to_string(c.distill.norm)},
               {"normalize", attnkd::to_string(c.distill.mode)},
               {"alpha_detached", c.distill.alpha_detached}}},
             {"domain_mapping", c.domain_mapping},
             {"checkpoint_every", c.checkpoint_every},
             {"flip", c.flip},
             {"generator", c.generator},
             {"discriminator", c.discriminator}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) { read_train_config(j, c, "config"); }

void read_train_config(const nlohmann::json& j, TrainConfig& c, const std::string& top) {
    check_keys(j, top,
               {"seed", "image_size", "batch_size", "total_steps", "g_optimizer", "d_optimizer", "lr_decay",
                "n_critic", "weights", "classification", "distillation", "layer_name", "attention", "domain_mapping",
                "checkpoint_every", "flip", "generator", "discriminator"});
    read(j, "seed", c.seed, top);
    read(j, "image_size", c.image_size, top);
    read(j, "batch_size", c.batch_size, top);
    read(j, "total_steps", c.total_steps, top);
    if (j.contains("g_optimizer")) c.g_optimizer = adam_from(j.at("g_optimizer"), top + ".g_optimizer");
    if (j.contains("d_optimizer")) c.d_optimizer = adam_from(j.at("d_optimizer"), top + ".d_optimizer");
    read(j, "lr_decay", c.lr_decay, top);
    read(j, "n_critic", c.n_critic, top);
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        check_keys(w, top + ".weights", {"lambda_cls", "lambda_rec", "lambda_att", "lambda_gp"});
        read(w, "lambda_cls", c.weights.lambda_cls, top + ".weights");
        read(w, "lambda_rec", c.weights.lambda_rec, top + ".weights");
        read(w, "lambda_att", c.weights.lambda_att, top + ".weights");
        read(w, "lambda_gp", c.weights.lambda_gp, top + ".weights");
    }
    std::string s;
    if (j.contains("classification")) {
        read(j, "classification", s, top);
        c.cls_kind = losses::parse_classification_kind(s);
    }
    if (j.contains("distillation")) {
        read(j, "distillation", s, top);
        c.distillation = parse_distill_mode(s);
    }
    read(j, "layer_name", c.layer_name, top);
    if (j.contains("attention")) {
        const auto& a = j.at("attention");
        const std::string where = top + ".attention";
        check_keys(a, where, {"norm", "normalize", "alpha_detached"});
        if (a.contains("norm")) {
            read(a, "norm", s, where);
            c.distill.norm = losses::parse_norm_kind(s);
        }
        if (a.contains("normalize")) {
            read(a, "normalize", s, where);
            c.distill.mode = parse_normalize_mode(s);
        }
        read(a, "alpha_detached", c.distill.alpha_detached, where);
    }
    read(j, "domain_mapping", c.domain_mapping, top);
    read(j, "checkpoint_every", c.checkpoint_every, top);
    read(j, "flip", c.flip, top);
    if (j.contains("generator")) {
        check_keys(j.at("generator"), top + ".generator",
                   {"base_channels", "n_resblocks", "n_domains", "image_size", "scale"});
        try {
            c.generator = j.at("generator").get<models::GeneratorSpec>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(top + ".generator: " + e.what());
        }
    }
    if (j.contains("discriminator")) {
        check_keys(j.at("discriminator"), top + ".discriminator", {"base_channels", "n_layers", "n_domains", "image_size"});
        try {
            c.discriminator = j.at("discriminator").get<models::DiscriminatorSpec>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(top + ".discriminator: " + e.what());
        }
    }
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c = j.get<TrainConfig>();
    c.validate();
    return c;
}

}  // namespace attnkd::training
