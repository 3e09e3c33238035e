#include "attnkd/eval/classifier.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "attnkd/autograd/ops.hpp"
#include "attnkd/data/batcher.hpp"
#include "attnkd/models/checkpoint.hpp"
#include "attnkd/training/adam.hpp"

namespace attnkd::eval {

namespace {

constexpr float kSlope = 0.2f;
constexpr int64_t kChunk = 64;

Tensor rows(const Tensor& t, int64_t start, int64_t n) {
    Shape s = t.shape();
    const int64_t per = t.numel() / s[0];
    s[0] = n;
    Tensor out(s);
    std::copy(t.ptr() + start * per, t.ptr() + (start + n) * per, out.ptr());
    return out;
}

}  // namespace

void ClassifierSpec::validate() const {
    if (n_domains < 1) throw std::invalid_argument("classifier needs at least one attribute");
    if (n_layers < 1 || base_channels < 1) throw std::invalid_argument("classifier needs n_layers, base_channels >= 1");
    if (image_size % (1 << n_layers) != 0)
        throw std::invalid_argument("classifier image_size must be divisible by 2^n_layers");
}

void to_json(nlohmann::json& j, const ClassifierSpec& s) {
    j = {{"image_size", s.image_size},
         {"n_domains", s.n_domains},
         {"base_channels", s.base_channels},
         {"n_layers", s.n_layers}};
}

void from_json(const nlohmann::json& j, ClassifierSpec& s) {
    j.at("image_size").get_to(s.image_size);
    j.at("n_domains").get_to(s.n_domains);
    j.at("base_channels").get_to(s.base_channels);
    j.at("n_layers").get_to(s.n_layers);
}

DomainClassifier::DomainClassifier(ClassifierSpec spec, RandomSeed seed, std::vector<std::string> attributes)
    : spec_(spec), seed_(seed.value), attributes_(std::move(attributes)) {
    spec_.validate();
    if (static_cast<int>(attributes_.size()) != spec_.n_domains)
        throw std::invalid_argument("classifier attribute list does not match n_domains");
    Rng rng(derive_seed(seed_, "classifier"));
    int64_t in = 3, out = spec_.base_channels;
    for (int i = 1; i <= spec_.n_layers; ++i) {
        const std::string name = "conv" + std::to_string(i);
        const int64_t fan_in = in * 16;
        Layer l;
        l.weight = params_.add(name + ".weight", models::uniform_fan_in({out, in, 4, 4}, fan_in, rng));
        l.bias = params_.add(name + ".bias", models::uniform_fan_in({1, out, 1, 1}, fan_in, rng));
        trunk_.push_back(l);
        in = out;
        out *= 2;
    }
    head_.weight = params_.add("head.weight", models::uniform_fan_in({spec_.n_domains, in, 1, 1}, in, rng));
    head_.bias = params_.add("head.bias", models::uniform_fan_in({1, spec_.n_domains, 1, 1}, in, rng));
}

ad::Var DomainClassifier::features(const ad::Var& x) const {
    const Shape& s = x.value().shape();
    if (s.size() != 4 || s[1] != 3 || s[2] != spec_.image_size || s[3] != spec_.image_size)
        throw std::invalid_argument("classifier expects (B,3," + std::to_string(spec_.image_size) + "," +
                                    std::to_string(spec_.image_size) + ") input, got " + shape_str(s));
    ad::Var h = x;
    for (const Layer& l : trunk_) h = ad::leaky_relu(ad::add(ad::conv2d(h, l.weight, {2, 1}), l.bias), kSlope);
    const float inv = 1.0f / static_cast<float>(h.dim(2) * h.dim(3));
    return ad::reshape(ad::scale(ad::sum_to(h, {h.dim(0), h.dim(1), 1, 1}), inv), {h.dim(0), h.dim(1)});
}

ad::Var DomainClassifier::logits(const ad::Var& x) const {
    const ad::Var f = features(x);
    const ad::Var f4 = ad::reshape(f, {f.dim(0), f.dim(1), 1, 1});
    const ad::Var y = ad::add(ad::conv2d(f4, head_.weight, {1, 0}), head_.bias);
    return ad::reshape(y, {y.dim(0), y.dim(1)});
}

Tensor DomainClassifier::predict_logits(const Tensor& images) const {
    ad::NoGradGuard no_grad;
    const int64_t n = images.dim(0);
    Tensor out({n, spec_.n_domains});
    for (int64_t i = 0; i < n; i += kChunk) {
        const int64_t m = std::min(kChunk, n - i);
        const Tensor y = logits(ad::Var::constant(rows(images, i, m))).value();
        std::copy(y.ptr(), y.ptr() + y.numel(), out.ptr() + i * spec_.n_domains);
    }
    return out;
}

Tensor DomainClassifier::embed(const Tensor& images) const {
    ad::NoGradGuard no_grad;
    const int64_t n = images.dim(0), d = spec_.feature_dim();
    Tensor out({n, d});
    for (int64_t i = 0; i < n; i += kChunk) {
        const int64_t m = std::min(kChunk, n - i);
        const Tensor y = features(ad::Var::constant(rows(images, i, m))).value();
        std::copy(y.ptr(), y.ptr() + y.numel(), out.ptr() + i * d);
    }
    return out;
}

std::vector<double> classifier_accuracy(const DomainClassifier& c, const data::Dataset& data) {
    const int k = c.spec().n_domains;
    if (data.n_domains() != k) throw std::invalid_argument("dataset and classifier disagree on attributes");
    std::vector<size_t> idx(data.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const data::Batch all = data::gather(data, idx);
    const Tensor y = c.predict_logits(all.images);
    std::vector<double> acc(static_cast<size_t>(k), 0.0);
    for (int64_t n = 0; n < y.dim(0); ++n)
        for (int a = 0; a < k; ++a)
            if ((y[n * k + a] >= 0.0f) == (all.labels[n * k + a] > 0.5f)) acc[static_cast<size_t>(a)] += 1.0;
    for (double& v : acc) v /= static_cast<double>(std::max<int64_t>(1, y.dim(0)));
    return acc;
}

TrainedClassifier train_domain_classifier(const data::Dataset& data, const ClassifierTrainConfig& cfg,
                                          const ClassifierSpec& spec_in) {
    if (cfg.holdout_fraction < 0.0 || cfg.holdout_fraction >= 1.0)
        throw std::invalid_argument("holdout_fraction must lie in [0, 1)");
    if (cfg.steps < 0 || cfg.batch_size < 1) throw std::invalid_argument("invalid classifier training settings");
    ClassifierSpec spec = spec_in;
    spec.n_domains = data.n_domains();
    spec.image_size = data.image_size;
    const size_t n_held = static_cast<size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(data.size())));
    auto [train, held] = data.split(data.size() - n_held);
    if (train.size() < static_cast<size_t>(cfg.batch_size))
        throw std::invalid_argument("classifier training split is smaller than one batch");

    TrainedClassifier out{DomainClassifier(spec, RandomSeed{cfg.seed}, data.attributes), {}};
    ClassifierReport& rep = out.report;
    rep.attributes = data.attributes;
    rep.n_train = train.size();
    rep.n_heldout = held.size();

    const int k = spec.n_domains;
    Tensor mask({1, k}, 1.0f);
    for (int a = 0; a < k; ++a) {
        bool seen0 = false, seen1 = false;
        for (const auto& s : train.samples) (s.labels[a] > 0.5f ? seen1 : seen0) = true;
        if (!(seen0 && seen1)) {
            out.model.excluded.push_back(a);
            mask[a] = 0.0f;
            rep.warnings.push_back("attribute '" + data.attributes[static_cast<size_t>(a)] +
                                   "' has a single label value; excluded from classifier training");
        }
    }
    if (static_cast<int>(out.model.excluded.size()) == k)
        throw std::invalid_argument("every attribute has constant labels; refusing to train a classifier");
    const float active = static_cast<float>(k - static_cast<int>(out.model.excluded.size()));

    models::ParameterList& params = out.model.parameters();
    training::Adam opt(params, {cfg.lr, 0.9f, 0.999f, 1e-8f});
    data::Batcher batcher(train, cfg.batch_size, derive_seed(cfg.seed, "classifier-data"), true);
    for (int step = 0; step < cfg.steps; ++step) {
        const data::Batch b = batcher.next();
        const ad::Var s = out.model.logits(ad::Var::constant(b.images));
        const ad::Var t = ad::Var::constant(b.labels);
        const ad::Var per = ad::sub(ad::softplus(s), ad::mul(t, s));
        const ad::Var m = ad::Var::constant(mask);
        const ad::Var loss = ad::scale(ad::sum(ad::mul(per, m)), 1.0f / (active * static_cast<float>(b.images.dim(0))));
        if (!loss.value().all_finite()) throw std::runtime_error("classifier loss became non-finite");
        opt.step(params, ad::grad(loss, params.vars()), cfg.lr);
    }
    params.set_requires_grad(false);

    rep.heldout_accuracy.assign(static_cast<size_t>(k), std::numeric_limits<double>::quiet_NaN());
    if (!held.samples.empty()) {
        const std::vector<double> acc = classifier_accuracy(out.model, held);
        for (int a = 0; a < k; ++a) {
            bool skip = false;
            for (int e : out.model.excluded) skip |= e == a;
            if (!skip) rep.heldout_accuracy[static_cast<size_t>(a)] = acc[static_cast<size_t>(a)];
        }
    }
    return out;
}

void save_classifier(const std::filesystem::path& dir, const DomainClassifier& c) {
    nlohmann::json spec = c.spec();
    spec["attributes"] = c.attributes();
    spec["excluded"] = c.excluded;
    models::save_parameters(dir, {"classifier", spec, c.seed(), 0}, c.parameters());
}

DomainClassifier load_classifier(const std::filesystem::path& dir) {
    const models::CheckpointInfo info = models::read_checkpoint_info(dir);
    if (info.kind != "classifier")
        throw std::runtime_error(dir.string() + " holds a " + info.kind + " checkpoint, not a classifier");
    DomainClassifier c(info.spec.get<ClassifierSpec>(), RandomSeed{info.seed},
                       info.spec.at("attributes").get<std::vector<std::string>>());
    c.excluded = info.spec.value("excluded", std::vector<int>{});
    models::load_parameters(dir, c.parameters());
    c.parameters().set_requires_grad(false);
    return c;
}

}  // namespace attnkd::eval
