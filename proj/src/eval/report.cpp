#include "attnkd/eval/report.hpp"

#include <cstdio>
#include <sstream>

#include "attnkd/data/batcher.hpp"

namespace attnkd::eval {

void to_json(nlohmann::json& j, const EvalReport& r) {
    j = {{"model", r.model},
         {"embedder", r.embedder},
         {"attributes", r.attributes},
         {"accuracy", r.accuracy},
         {"mean_accuracy", r.mean_accuracy},
         {"frechet", r.frechet}};
    if (!r.mass_fraction.empty()) {
        j["attention_mass_fraction"] = r.mass_fraction;
        j["mask_area_fraction"] = r.area_fraction;
    }
}

void from_json(const nlohmann::json& j, EvalReport& r) {
    j.at("model").get_to(r.model);
    j.at("embedder").get_to(r.embedder);
    j.at("attributes").get_to(r.attributes);
    j.at("accuracy").get_to(r.accuracy);
    j.at("mean_accuracy").get_to(r.mean_accuracy);
    j.at("frechet").get_to(r.frechet);
    r.mass_fraction = j.value("attention_mass_fraction", std::vector<double>{});
    r.area_fraction = j.value("mask_area_fraction", std::vector<double>{});
}

std::string format_table(const EvalReport& r) {
    std::ostringstream out;
    char buf[128];
    size_t width = 10;
    for (const auto& a : r.attributes) width = std::max(width, a.size() + 2);
    const bool loc = !r.mass_fraction.empty();
    std::snprintf(buf, sizeof buf, "%-*s %10s", static_cast<int>(width), "metric", r.model.c_str());
    out << buf;
    if (loc) out << "   mass  area";
    out << "\n";
    for (size_t i = 0; i < r.attributes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-*s %9.2f%%", static_cast<int>(width), (r.attributes[i] + " ^").c_str(),
                      100.0 * r.accuracy[i]);
        out << buf;
        if (loc) {
            std::snprintf(buf, sizeof buf, "  %5.3f %5.3f", r.mass_fraction[i], r.area_fraction[i]);
            out << buf;
        }
        out << "\n";
    }
    std::snprintf(buf, sizeof buf, "%-*s %9.2f%%\n", static_cast<int>(width), "Mean ^", 100.0 * r.mean_accuracy);
    out << buf;
    std::snprintf(buf, sizeof buf, "%-*s %10.4f\n", static_cast<int>(width), "FID v", r.frechet);
    out << buf;
    return out.str();
}

EvalReport evaluate(const models::ConditionalGenerator& g, const DomainClassifier& c, const data::Dataset& data,
                    const EvalOptions& opt) {
    if (data.size() < 2) throw std::invalid_argument("evaluation needs at least 2 images");
    EvalReport r;
    r.model = opt.model_name;
    const ClassifierEmbedder embedder(c);
    r.embedder = embedder.id();
    Tensor translated;
    const TranslationAccuracy acc = translation_accuracy(g, c, data, {}, &translated);
    r.attributes = acc.attributes;
    r.accuracy = acc.per_attribute;
    r.mean_accuracy = acc.mean;

    std::vector<size_t> idx(data.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const Tensor real = embedder.embed(data::gather(data, idx).images);
    r.frechet = frechet_distance(real, embedder.embed(translated));

    if (opt.critic) {
        const LocalizationResult loc = attention_localization(g, *opt.critic, data, opt.layer);
        r.mass_fraction = loc.mass_fraction;
        r.area_fraction = loc.area_fraction;
    }
    return r;
}

}  // namespace attnkd::eval
