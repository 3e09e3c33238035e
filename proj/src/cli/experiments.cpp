#include "attnkd/cli/experiments.hpp"

#include <fstream>

#include "attnkd/data/synthetic.hpp"
#include "attnkd/eval/classifier.hpp"
#include "attnkd/models/checkpoint.hpp"
#include "attnkd/training/trainer.hpp"

namespace attnkd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const ReproConfig& c) {
    j = {{"image_size", c.image_size},
         {"n_train", c.n_train},
         {"n_test", c.n_test},
         {"n_classifier", c.n_classifier},
         {"classifier_steps", c.classifier_steps},
         {"base_channels", c.base_channels},
         {"batch_size", c.batch_size},
         {"teacher_steps", c.teacher_steps},
         {"student_steps", c.student_steps},
         {"lambda_att", c.lambda_att},
         {"teacher_seed", c.teacher_seed},
         {"seeds", c.seeds}};
}

int DistillationResult::wins() const {
    int n = 0;
    for (const auto& s : seeds) n += s.improved();
    return n;
}

namespace {

constexpr uint64_t kTrainDataSeed = 100;
constexpr uint64_t kTestDataSeed = 101;
constexpr uint64_t kClassifierDataSeed = 102;
constexpr uint64_t kPseudoDataSeed = 103;

void say(const ReproConfig& c, const std::string& msg) {
    if (c.log) c.log(msg);
}

data::Dataset synthetic(const ReproConfig& c, int n, uint64_t seed, bool pseudo_set) {
    data::SyntheticSpec s;
    s.n_images = n;
    s.image_size = c.image_size;
    s.attributes = pseudo_set ? data::SyntheticSpec::pseudo_set() : data::SyntheticSpec::teacher_set();
    s.seed = seed;
    return data::make_synthetic(s);
}

training::TrainConfig base_config(const ReproConfig& c, uint64_t seed, int64_t steps, bool teacher) {
    training::TrainConfig t;
    t.seed = seed;
    t.image_size = c.image_size;
    t.batch_size = c.batch_size;
    t.total_steps = steps;
    t.weights.lambda_att = c.lambda_att;
    t.generator = teacher ? models::GeneratorSpec::teacher(4, c.image_size, c.base_channels)
                          : models::GeneratorSpec::student(4, c.image_size, c.base_channels);
    int layers = 0;
    while ((c.image_size >> (layers + 1)) >= 1 && layers < 5) ++layers;
    t.discriminator = {c.base_channels, layers, 4, c.image_size};
    return t;
}

bool cached(const fs::path& dir, const json& key) {
    std::ifstream in(dir / "key.json");
    if (!in) return false;
    try {
        return json::parse(in) == key;
    } catch (const json::exception&) {
        return false;
    }
}

void mark(const fs::path& dir, const json& key) { std::ofstream(dir / "key.json") << key.dump(2) << "\n"; }

eval::DomainClassifier classifier(const ReproConfig& c) {
    const fs::path dir = c.work_dir / "classifier";
    const json key = {{"n", c.n_classifier},
                      {"steps", c.classifier_steps},
                      {"size", c.image_size},
                      {"code", training::code_version()}};
    if (cached(dir, key)) return eval::load_classifier(dir / "model");
    say(c, "training evaluation classifier");
    eval::ClassifierTrainConfig cfg;
    cfg.steps = c.classifier_steps;
    cfg.seed = 7;
    const eval::TrainedClassifier t =
        eval::train_domain_classifier(synthetic(c, c.n_classifier, kClassifierDataSeed, false), cfg, {});
    fs::create_directories(dir);
    eval::save_classifier(dir / "model", t.model);
    std::ofstream(dir / "heldout.json") << json{{"accuracy", t.report.heldout_accuracy}}.dump(2) << "\n";
    mark(dir, key);
    return t.model;
}

struct Trained {
    models::Generator g;
    models::Discriminator d;
};

Trained train_or_load(const ReproConfig& c, const fs::path& dir, const training::TrainConfig& cfg,
                      const data::Dataset& data, training::Teacher teacher, const std::string& label) {
    // The code version is part of the key so a source change never reuses stale runs.
    const json key = {{"config", cfg},
                      {"data", {{"n", data.size()}, {"attributes", data.attributes}}},
                      {"code", training::code_version()}};
    if (cached(dir, key)) return {models::load_generator(dir / "generator"), models::load_discriminator(dir / "discriminator")};
    say(c, "training " + label);
    fs::remove_all(dir);
    fs::create_directories(dir);
    training::Trainer t(cfg, data, teacher,
                        {nullptr, [&](const losses::LossReport& r) {
                             if (r.step % 500 == 0)
                                 say(c, label + " step " + std::to_string(r.step) + " total_G " +
                                            std::to_string(r.total_G) + " att " + std::to_string(r.att));
                         }});
    t.run();
    models::save_generator(dir / "generator", t.state().generator, t.state().step);
    models::save_discriminator(dir / "discriminator", t.state().discriminator, t.state().step);
    std::ofstream csv(dir / "losses.csv");
    losses::write_csv(csv, t.state().history);
    training::write_run_manifest(dir, cfg, {{"label", label}});
    mark(dir, key);
    return {t.state().generator.clone(), t.state().discriminator.clone()};
}

eval::EvalReport evaluate_cached(const fs::path& dir, const models::Generator& g, const eval::DomainClassifier& clf,
                                 const data::Dataset& test, const std::string& name, const models::Discriminator* critic) {
    const fs::path file = dir / (critic ? "eval_localization.json" : "eval.json");
    const uint64_t key = g.parameters().hash() ^ clf.parameters().hash();
    if (std::ifstream in(file); in) {
        try {
            const json j = json::parse(in);
            if (j.at("key") == key && j.at("code") == training::code_version())
                return j.at("report").get<eval::EvalReport>();
        } catch (const json::exception&) {
        }
    }
    eval::EvalOptions opt;
    opt.model_name = name;
    opt.critic = critic;
    const eval::EvalReport r = eval::evaluate(g, clf, test, opt);
    std::ofstream(file) << json{{"key", key}, {"code", training::code_version()}, {"report", r}}.dump(2) << "\n";
    return r;
}

DistillationResult run_distillation(const ReproConfig& c, bool pseudo) {
    const std::string tag = pseudo ? "pseudo" : "attention";
    const data::Dataset train = synthetic(c, c.n_train, kTrainDataSeed, false);
    const data::Dataset test = synthetic(c, c.n_test, kTestDataSeed, false);
    const eval::DomainClassifier clf = classifier(c);

    const data::Dataset teacher_data = pseudo ? synthetic(c, c.n_train, kPseudoDataSeed, true) : train;
    const training::TrainConfig tcfg = base_config(c, c.teacher_seed, c.teacher_steps, true);
    Trained teacher = train_or_load(c, c.work_dir / (pseudo ? "teacher_pseudo" : "teacher"), tcfg, teacher_data, {},
                                    pseudo ? "pseudo teacher" : "teacher");

    DistillationResult out;
    if (!pseudo) out.teacher = evaluate_cached(c.work_dir / "teacher", teacher.g, clf, test, "teacher", nullptr);
    for (uint64_t seed : c.seeds) {
        SeedComparison cmp;
        cmp.seed = seed;
        const std::string s = std::to_string(seed);
        training::TrainConfig none = base_config(c, seed, c.student_steps, false);
        const fs::path base_dir = c.work_dir / ("student_none_" + s);
        Trained a = train_or_load(c, base_dir, none, train, {}, "student none seed " + s);
        cmp.baseline = evaluate_cached(base_dir, a.g, clf, test, "student", nullptr);

        training::TrainConfig dist = none;
        dist.distillation = pseudo ? training::DistillMode::pseudo : training::DistillMode::attention;
        if (pseudo) dist.domain_mapping = {0, 1, 2, 3};
        const fs::path dist_dir = c.work_dir / ("student_" + tag + "_" + s);
        Trained b = train_or_load(c, dist_dir, dist, train, {&teacher.g, &teacher.d}, "student " + tag + " seed " + s);
        cmp.distilled = evaluate_cached(dist_dir, b.g, clf, test, "student+" + tag, nullptr);
        say(c, tag + " seed " + s + ": mean accuracy " + std::to_string(cmp.baseline.mean_accuracy) + " -> " +
                   std::to_string(cmp.distilled.mean_accuracy));
        out.seeds.push_back(std::move(cmp));
    }
    return out;
}

}  // namespace

DistillationResult run_attention_distillation(const ReproConfig& cfg) { return run_distillation(cfg, false); }
DistillationResult run_pseudo_distillation(const ReproConfig& cfg) { return run_distillation(cfg, true); }

eval::EvalReport run_teacher_localization(const ReproConfig& c) {
    const data::Dataset train = synthetic(c, c.n_train, kTrainDataSeed, false);
    const data::Dataset test = synthetic(c, c.n_test, kTestDataSeed, false);
    const eval::DomainClassifier clf = classifier(c);
    const training::TrainConfig tcfg = base_config(c, c.teacher_seed, c.teacher_steps, true);
    Trained teacher = train_or_load(c, c.work_dir / "teacher", tcfg, train, {}, "teacher");
    return evaluate_cached(c.work_dir / "teacher", teacher.g, clf, test, "teacher", &teacher.d);
}

}  // namespace attnkd::cli
