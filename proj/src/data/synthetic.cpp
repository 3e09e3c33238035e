#include "attnkd/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "attnkd/core/rng.hpp"
#include "attnkd/data/png_io.hpp"
#include "json.hpp"

namespace attnkd::data {

namespace {

using Rgb = std::array<float, 3>;

enum class Region { hair, crown, eye_band, cheeks, skin };

struct AttributeInfo {
    const char* name;
    Region region;
    const char* exclusive_group;  // at most one attribute per group in a set
};

constexpr std::array<AttributeInfo, 8> kAttributes{{
    {"black_hair", Region::hair, "hair"},
    {"eyeglasses", Region::eye_band, "eyes"},
    {"rosy_cheeks", Region::cheeks, "cheeks"},
    {"pale_skin", Region::skin, "skin"},
    {"hat", Region::crown, "crown"},
    {"eye_mask", Region::eye_band, "eyes"},
    {"freckles", Region::cheeks, "cheeks"},
    {"tanned_skin", Region::skin, "skin"},
}};

const AttributeInfo& info_for(const std::string& name) {
    for (const auto& a : kAttributes)
        if (name == a.name) return a;
    throw std::invalid_argument("unknown synthetic attribute '" + name + "'");
}

// Face geometry in unit coordinates (u right, v down).
struct Layout {
    double cx, cy, s;

    bool head(double u, double v) const { return sq((u - cx) / (0.27 * s)) + sq((v - cy) / (0.33 * s)) <= 1.0; }
    bool hair(double u, double v) const {
        return v < cy - 0.10 * s && sq((u - cx) / (0.31 * s)) + sq((v - cy) / (0.37 * s)) <= 1.0;
    }
    bool crown(double u, double v) const {
        const bool top = std::fabs(u - cx) <= 0.22 * s && v >= cy - 0.52 * s && v <= cy - 0.24 * s;
        const bool brim = std::fabs(u - cx) <= 0.33 * s && v >= cy - 0.28 * s && v <= cy - 0.22 * s;
        return top || brim;
    }
    bool eye_band(double u, double v) const {
        return std::fabs(u - cx) <= 0.20 * s && v >= cy - 0.09 * s && v <= cy + 0.01 * s;
    }
    bool eye(double u, double v) const {
        const double r = 0.035 * s;
        return sq(u - (cx - 0.1 * s)) + sq(v - (cy - 0.04 * s)) <= r * r ||
               sq(u - (cx + 0.1 * s)) + sq(v - (cy - 0.04 * s)) <= r * r;
    }
    bool cheeks(double u, double v) const {
        const double r = 0.065 * s;
        return sq(u - (cx - 0.15 * s)) + sq(v - (cy + 0.10 * s)) <= r * r ||
               sq(u - (cx + 0.15 * s)) + sq(v - (cy + 0.10 * s)) <= r * r;
    }
    bool mouth(double u, double v) const {
        return std::fabs(u - cx) <= 0.08 * s && v >= cy + 0.19 * s && v <= cy + 0.22 * s;
    }
    bool skin(double u, double v) const {
        return head(u, v) && !hair(u, v) && !eye_band(u, v) && !cheeks(u, v) && !mouth(u, v) && !eye(u, v);
    }
    bool in(Region r, double u, double v) const {
        switch (r) {
            case Region::hair: return hair(u, v);
            case Region::crown: return crown(u, v);
            case Region::eye_band: return eye_band(u, v);
            case Region::cheeks: return cheeks(u, v);
            case Region::skin: return skin(u, v);
        }
        return false;
    }
    static double sq(double x) { return x * x; }
};

Rgb jitter(Rgb c, Rng& rng, float amount) {
    for (auto& v : c) v = std::clamp(v + rng.uniform(-amount, amount), 0.0f, 1.0f);
    return c;
}

Rgb blend(const Rgb& top, const Rgb& under, float alpha) {
    return {alpha * top[0] + (1 - alpha) * under[0], alpha * top[1] + (1 - alpha) * under[1],
            alpha * top[2] + (1 - alpha) * under[2]};
}

float luminance(const Tensor& img, int64_t hw, int64_t p) {
    return ((img[p] + img[hw + p] + img[2 * hw + p]) / 3.0f + 1.0f) * 0.5f;
}

float channel(const Tensor& img, int64_t hw, int c, int64_t p) { return (img[c * hw + p] + 1.0f) * 0.5f; }

Sample render(const SyntheticSpec& spec, size_t index) {
    Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(index)));
    const int S = spec.image_size;
    const int64_t HW = static_cast<int64_t>(S) * S;
    const size_t K = spec.attributes.size();

    std::vector<bool> on(K);
    for (size_t k = 0; k < K; ++k) on[k] = rng.bernoulli(spec.attributes[k].probability);
    auto has = [&](const char* name) {
        for (size_t k = 0; k < K; ++k)
            if (on[k] && spec.attributes[k].name == name) return true;
        return false;
    };

    const Layout L{0.5 + rng.uniform(-0.04f, 0.04f), 0.55 + rng.uniform(-0.03f, 0.03f), rng.uniform(0.95f, 1.05f)};
    const Rgb background = jitter({0.35f, 0.45f, 0.55f}, rng, 0.1f);
    Rgb skin = has("pale_skin") ? Rgb{0.98f, 0.94f, 0.92f} : has("tanned_skin") ? Rgb{0.52f, 0.33f, 0.20f}
                                                                               : Rgb{0.86f, 0.66f, 0.52f};
    skin = jitter(skin, rng, 0.04f);
    const Rgb hair = jitter(has("black_hair") ? Rgb{0.07f, 0.06f, 0.06f} : Rgb{0.50f, 0.32f, 0.16f}, rng, 0.04f);
    const Rgb hat = jitter({0.75f, 0.10f, 0.15f}, rng, 0.04f);
    const Rgb eye = {0.10f, 0.10f, 0.15f};
    const Rgb lens = {0.20f, 0.45f, 0.85f};
    const Rgb mask_black = {0.05f, 0.05f, 0.05f};
    const Rgb rosy = {0.95f, 0.25f, 0.30f};
    const Rgb freckle = {0.25f, 0.12f, 0.05f};
    const Rgb lips = {0.60f, 0.15f, 0.20f};

    Sample sample;
    sample.image = Tensor({3, S, S});
    sample.labels = Tensor({static_cast<int64_t>(K)}, 0.0f);
    sample.masks = Tensor({static_cast<int64_t>(K), S, S}, 0.0f);
    for (size_t k = 0; k < K; ++k) sample.labels[static_cast<int64_t>(k)] = on[k] ? 1.0f : 0.0f;

    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const double u = (x + 0.5) / S, v = (y + 0.5) / S;
            const int64_t p = static_cast<int64_t>(y) * S + x;
            Rgb c = background;
            if (L.head(u, v)) c = skin;
            if (L.hair(u, v)) c = hair;
            if (L.head(u, v) && L.eye(u, v)) c = eye;
            if (L.head(u, v) && L.mouth(u, v)) c = lips;
            if (L.cheeks(u, v)) {
                if (has("rosy_cheeks")) c = blend(rosy, c, 0.75f);
                if (has("freckles") && (x + y) % 2 == 0) c = freckle;
            }
            if (L.eye_band(u, v)) {
                if (has("eyeglasses")) c = blend(lens, c, 0.6f);
                if (has("eye_mask")) c = mask_black;
            }
            if (has("hat") && L.crown(u, v)) c = hat;
            for (int ch = 0; ch < 3; ++ch) {
                const float noisy = std::clamp(c[ch] + spec.noise * static_cast<float>(rng.normal()), 0.0f, 1.0f);
                // quantized exactly as the PNG round trip would
                const float byte = std::round(noisy * 255.0f);
                sample.image[ch * HW + p] = byte / 127.5f - 1.0f;
            }
            for (size_t k = 0; k < K; ++k)
                if (L.in(info_for(spec.attributes[k].name).region, u, v))
                    sample.masks[static_cast<int64_t>(k) * HW + p] = 1.0f;
        }
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.png", index);
    sample.filename = name;
    return sample;
}

// Median of a value over the pixels of `mask` not covered by `exclude`.
float masked_median(const Sample& s, int attribute, const std::vector<int>& exclude,
                    float (*value)(const Tensor&, int64_t, int64_t)) {
    const int64_t HW = s.image.dim(1) * s.image.dim(2);
    std::vector<float> vals;
    for (int64_t p = 0; p < HW; ++p) {
        if (s.masks[attribute * HW + p] == 0.0f) continue;
        bool skip = false;
        for (int e : exclude) skip = skip || s.masks[e * HW + p] != 0.0f;
        if (!skip) vals.push_back(value(s.image, HW, p));
    }
    if (vals.empty()) return std::nanf("");
    std::nth_element(vals.begin(), vals.begin() + static_cast<long>(vals.size() / 2), vals.end());
    return vals[vals.size() / 2];
}

float red_minus_green(const Tensor& img, int64_t hw, int64_t p) { return channel(img, hw, 0, p) - channel(img, hw, 1, p); }
float blue_minus_red(const Tensor& img, int64_t hw, int64_t p) { return channel(img, hw, 2, p) - channel(img, hw, 0, p); }

float masked_mean(const Sample& s, int attribute, float (*value)(const Tensor&, int64_t, int64_t)) {
    const int64_t HW = s.image.dim(1) * s.image.dim(2);
    double sum = 0.0;
    int64_t n = 0;
    for (int64_t p = 0; p < HW; ++p)
        if (s.masks[attribute * HW + p] != 0.0f) {
            sum += value(s.image, HW, p);
            ++n;
        }
    return n ? static_cast<float>(sum / n) : std::nanf("");
}

}  // namespace

const std::vector<std::string>& known_attributes() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& a : kAttributes) n.emplace_back(a.name);
        return n;
    }();
    return names;
}

std::vector<AttributeSpec> SyntheticSpec::teacher_set() {
    return {{"black_hair", 0.5}, {"eyeglasses", 0.5}, {"rosy_cheeks", 0.5}, {"pale_skin", 0.5}};
}

std::vector<AttributeSpec> SyntheticSpec::pseudo_set() {
    return {{"hat", 0.5}, {"eye_mask", 0.5}, {"freckles", 0.5}, {"tanned_skin", 0.5}};
}

void SyntheticSpec::validate() const {
    if (n_images < 0) throw std::invalid_argument("n_images must be >= 0");
    if (image_size < 8) throw std::invalid_argument("image_size must be >= 8");
    if (attributes.size() < 2) throw std::invalid_argument("need at least two attributes");
    std::vector<std::string> groups;
    for (const auto& a : attributes) {
        const auto& info = info_for(a.name);
        if (!(a.probability >= 0.0 && a.probability <= 1.0))
            throw std::invalid_argument("probability for " + a.name + " must lie in [0,1]");
        if (std::find(groups.begin(), groups.end(), info.exclusive_group) != groups.end())
            throw std::invalid_argument("attribute " + a.name + " conflicts with another attribute painting the " +
                                        info.exclusive_group + " region");
        groups.emplace_back(info.exclusive_group);
    }
    if (!(noise >= 0.0f)) throw std::invalid_argument("noise must be >= 0");
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Dataset d;
    d.image_size = spec.image_size;
    for (const auto& a : spec.attributes) d.attributes.push_back(a.name);
    d.samples.reserve(static_cast<size_t>(spec.n_images));
    for (int i = 0; i < spec.n_images; ++i) d.samples.push_back(render(spec, static_cast<size_t>(i)));
    return d;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    if (data.has_masks()) fs::create_directories(dir / "masks");
    std::ofstream csv(dir / "labels.csv");
    csv << "filename";
    for (const auto& a : data.attributes) csv << "," << a;
    csv << "\n";
    const int S = data.image_size;
    const int64_t HW = static_cast<int64_t>(S) * S;
    for (const auto& s : data.samples) {
        write_png(dir / "images" / s.filename, Image8{S, S, 3, tensor_to_rgb8(s.image)});
        csv << s.filename;
        for (int64_t k = 0; k < s.labels.numel(); ++k) csv << "," << (s.labels[k] != 0.0f ? 1 : 0);
        csv << "\n";
        if (s.masks.numel() == 0) continue;
        const std::string stem = fs::path(s.filename).stem().string();
        for (size_t k = 0; k < data.attributes.size(); ++k) {
            std::vector<uint8_t> m(static_cast<size_t>(HW));
            for (int64_t p = 0; p < HW; ++p) m[static_cast<size_t>(p)] = s.masks[static_cast<int64_t>(k) * HW + p] != 0.0f;
            write_png_mask(dir / "masks" / (stem + "." + data.attributes[k] + ".mask.png"), S, S, m);
        }
    }
    if (!csv) throw std::runtime_error("failed writing " + (dir / "labels.csv").string());
}

void generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir) {
    const Dataset d = make_synthetic(spec);
    write_dataset(dir, d);
    nlohmann::json j;
    j["n_images"] = spec.n_images;
    j["image_size"] = spec.image_size;
    j["seed"] = spec.seed;
    j["noise"] = spec.noise;
    for (const auto& a : spec.attributes) j["attributes"].push_back({{"name", a.name}, {"probability", a.probability}});
    std::ofstream(dir / "spec.json") << j.dump(2) << "\n";
}

bool detect_attribute(const Sample& sample, const std::vector<std::string>& attributes, int attribute) {
    if (sample.masks.numel() == 0) throw std::invalid_argument("attribute detection needs region masks");
    const std::string& name = attributes.at(static_cast<size_t>(attribute));
    std::vector<int> crown;
    for (size_t k = 0; k < attributes.size(); ++k)
        if (attributes[k] == "hat") crown.push_back(static_cast<int>(k));
    if (name == "black_hair") return masked_median(sample, attribute, crown, luminance) < 0.2f;
    if (name == "hat") return masked_mean(sample, attribute, red_minus_green) > 0.4f;
    if (name == "eyeglasses") return masked_mean(sample, attribute, blue_minus_red) > 0.1f;
    if (name == "eye_mask") return masked_mean(sample, attribute, luminance) < 0.15f;
    if (name == "rosy_cheeks") return masked_mean(sample, attribute, red_minus_green) > 0.4f;
    if (name == "freckles") {
        const int64_t HW = sample.image.dim(1) * sample.image.dim(2);
        int64_t dark = 0, n = 0;
        for (int64_t p = 0; p < HW; ++p)
            if (sample.masks[attribute * HW + p] != 0.0f) {
                ++n;
                dark += luminance(sample.image, HW, p) < 0.25f;
            }
        return n > 0 && static_cast<double>(dark) / n > 0.25;
    }
    if (name == "pale_skin") return masked_median(sample, attribute, {}, luminance) > 0.85f;
    if (name == "tanned_skin") return masked_median(sample, attribute, {}, luminance) < 0.45f;
    throw std::invalid_argument("no detector for attribute " + name);
}

}  // namespace attnkd::data
