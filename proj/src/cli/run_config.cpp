#include "attnkd/cli/run_config.hpp"

#include <fstream>
#include <set>

namespace attnkd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + where + "." + key + "' has the wrong type: " + e.what());
    }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v, where);
    out = v;
}

const std::set<std::string> kTrainKeys{"seed",      "batch_size", "total_steps", "g_optimizer",    "d_optimizer", "lr_decay",
                                       "n_critic", "weights",    "classification", "checkpoint_every", "flip"};

template <class F>
auto rethrow_as_config(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_mapping_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object of student -> teacher attribute pairs");
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : j.items()) {
        if (v.is_string())
            out.emplace_back(k, v.get<std::string>());
        else if (v.is_number_integer())
            out.emplace_back(k, std::to_string(v.get<int>()));
        else
            throw ConfigError("config key '" + where + "." + k + "' must be an attribute name or index");
    }
    return out;
}

RunConfig parse_run_config(const json& j) {
    check_keys(j, "config", {"data", "model", "train", "distill", "eval", "output"});
    RunConfig c;
    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, "data", {"dir", "labels", "image_size", "test_images"});
        std::string dir;
        read(d, "dir", dir, "data");
        c.data.dir = dir;
        read(d, "labels", c.data.labels, "data");
        read(d, "image_size", c.data.image_size, "data");
        read(d, "test_images", c.data.test_images, "data");
    }
    if (c.data.dir.empty()) throw ConfigError("config key 'data.dir' is required");
    if (c.data.image_size < 32 || (c.data.image_size & (c.data.image_size - 1)) != 0)
        throw ConfigError("data.image_size must be a power of two >= 32");
    if (c.data.test_images < 0) throw ConfigError("data.test_images must be >= 0");

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model", {"preset", "base_channels", "n_resblocks", "discriminator"});
        read(m, "preset", c.model.preset, "model");
        read(m, "base_channels", c.model.base_channels, "model");
        read_optional(m, "n_resblocks", c.model.n_resblocks, "model");
        if (m.contains("discriminator")) {
            const json& dm = m.at("discriminator");
            check_keys(dm, "model.discriminator", {"base_channels", "n_layers"});
            read(dm, "base_channels", c.model.disc_base_channels, "model.discriminator");
            read_optional(dm, "n_layers", c.model.disc_layers, "model.discriminator");
        }
    }
    if (c.model.preset != "teacher" && c.model.preset != "student" && c.model.preset != "s_lite")
        throw ConfigError("model.preset must be teacher, student or s_lite, got '" + c.model.preset + "'");

    if (j.contains("train")) {
        check_keys(j.at("train"), "train", kTrainKeys);
        rethrow_as_config("train", [&] { read_train_config(j.at("train"), c.train, "train"); });
    }
    if (j.contains("distill")) {
        const json& d = j.at("distill");
        check_keys(d, "distill", {"mode", "layer", "norm_kind", "normalize", "alpha_detached", "mapping"});
        std::string s;
        if (d.contains("mode")) {
            read(d, "mode", s, "distill");
            c.distill.mode = rethrow_as_config("distill.mode", [&] { return training::parse_distill_mode(s); });
        }
        read(d, "layer", c.distill.layer, "distill");
        if (d.contains("norm_kind")) {
            read(d, "norm_kind", s, "distill");
            c.distill.attention.norm = rethrow_as_config("distill.norm_kind", [&] { return losses::parse_norm_kind(s); });
        }
        if (d.contains("normalize")) {
            read(d, "normalize", s, "distill");
            c.distill.attention.mode = rethrow_as_config("distill.normalize", [&] { return parse_normalize_mode(s); });
        }
        read(d, "alpha_detached", c.distill.attention.alpha_detached, "distill");
        if (d.contains("mapping")) c.distill.mapping = parse_mapping_json(d.at("mapping"), "distill.mapping");
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, "eval", {"classifier", "localization"});
        std::string clf;
        read(e, "classifier", clf, "eval");
        c.eval.classifier = clf;
        read(e, "localization", c.eval.localization, "eval");
    }
    std::string out;
    read(j, "output", out, "config");
    c.output = out;
    if (c.output.empty()) throw ConfigError("config key 'output' is required");
    c.train.image_size = c.data.image_size;
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

json run_config_json(const RunConfig& c) {
    json train = c.train;
    for (auto it = train.begin(); it != train.end();)
        it = kTrainKeys.count(it.key()) ? std::next(it) : train.erase(it);
    json mapping = json::object();
    for (const auto& [s, t] : c.distill.mapping) mapping[s] = t;
    json model = {{"preset", c.model.preset},
                  {"base_channels", c.model.base_channels},
                  {"n_resblocks", c.model.n_resblocks ? json(*c.model.n_resblocks) : json(nullptr)},
                  {"discriminator",
                   {{"base_channels", c.model.disc_base_channels},
                    {"n_layers", c.model.disc_layers ? json(*c.model.disc_layers) : json(nullptr)}}}};
    return {{"data",
             {{"dir", c.data.dir.string()},
              {"labels", c.data.labels},
              {"image_size", c.data.image_size},
              {"test_images", c.data.test_images}}},
            {"model", model},
            {"train", train},
            {"distill",
             {{"mode", training::to_string(c.distill.mode)},
              {"layer", c.distill.layer},
              {"norm_kind", losses::to_string(c.distill.attention.norm)},
              {"normalize", to_string(c.distill.attention.mode)},
              {"alpha_detached", c.distill.attention.alpha_detached},
              {"mapping", mapping}}},
            {"eval", {{"classifier", c.eval.classifier.string()}, {"localization", c.eval.localization}}},
            {"output", c.output.string()}};
}

json reference_config() {
    RunConfig c;
    c.data.dir = "data/synthetic";
    c.output = "runs/example";
    json j = run_config_json(c);
    j["_comment"] = {
        {"data", "dir holds images/ (or PNGs directly) and the labels CSV; the last test_images rows are held out"},
        {"model", "preset is teacher (6 res blocks), student (3, half width) or s_lite (1, quarter width); "
                  "n_resblocks and discriminator.n_layers override the preset when not null"},
        {"train", "step counts are critic updates; the generator updates every n_critic-th step"},
        {"distill", "mode none|attention|pseudo; norm_kind l1|l2; normalize minmax|l2|none; "
                    "mapping maps student attribute names to teacher attribute names or indices"},
        {"eval", "classifier is a checkpoint written by train-classifier"},
        {"output", "all files of a run are written under this directory"}};
    return j;
}

models::GeneratorSpec generator_for(const ModelSection& m, int n_domains, int image_size) {
    models::GeneratorSpec g = m.preset == "teacher"   ? models::GeneratorSpec::teacher(n_domains, image_size, m.base_channels)
                              : m.preset == "student" ? models::GeneratorSpec::student(n_domains, image_size, m.base_channels)
                                                      : models::GeneratorSpec::s_lite(n_domains, image_size, m.base_channels);
    if (m.n_resblocks) g.n_resblocks = *m.n_resblocks;
    rethrow_as_config("model", [&] {
        g.validate();
        (void)g.width();
    });
    return g;
}

models::DiscriminatorSpec discriminator_for(const ModelSection& m, int n_domains, int image_size) {
    int layers = 0;
    while ((image_size >> (layers + 1)) >= 1 && layers < 6) ++layers;
    models::DiscriminatorSpec d{m.disc_base_channels, m.disc_layers.value_or(layers), n_domains, image_size};
    rethrow_as_config("model.discriminator", [&] { d.validate(); });
    return d;
}

std::vector<int> resolve_mapping(const std::vector<std::pair<std::string, std::string>>& pairs,
                                 const std::vector<std::string>& student, const std::vector<std::string>& teacher) {
    auto find = [](const std::vector<std::string>& names, const std::string& key, const char* side) {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == key) return static_cast<int>(i);
        if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos) {
            const int idx = std::stoi(key);
            if (idx < static_cast<int>(names.size())) return idx;
        }
        std::string known;
        for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError(std::string("unknown ") + side + " attribute '" + key + "' in mapping (known: " + known + ")");
    };
    std::vector<int> out(student.size(), -1);
    for (const auto& [s, t] : pairs) {
        const int si = find(student, s, "student");
        if (out[static_cast<size_t>(si)] != -1) throw ConfigError("student attribute '" + s + "' is mapped twice");
        out[static_cast<size_t>(si)] = find(teacher, t, "teacher");
    }
    for (size_t i = 0; i < out.size(); ++i)
        if (out[i] == -1) throw ConfigError("student attribute '" + student[i] + "' has no mapping");
    rethrow_as_config("mapping", [&] {
        losses::DomainMapping{out}.validate(static_cast<int>(student.size()), static_cast<int>(teacher.size()));
    });
    return out;
}

}  // namespace attnkd::cli
