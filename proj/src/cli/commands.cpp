#include "attnkd/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "attnkd/attention/gradcam.hpp"
#include "attnkd/cli/render.hpp"
#include "attnkd/cli/run_config.hpp"
#include "attnkd/data/synthetic.hpp"
#include "attnkd/eval/report.hpp"
#include "attnkd/models/checkpoint.hpp"
#include "attnkd/training/trainer.hpp"

namespace attnkd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

void ensure_writable(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f || !(f << "ok")) throw IoError("output directory " + dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

void ensure_parent_writable(const fs::path& file) {
    ensure_writable(file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f || !(f << text)) throw IoError("failed writing " + p.string());
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw UsageError("cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(p.string() + " is not valid JSON: " + e.what());
    }
}

data::Dataset load_data(const fs::path& dir, const std::string& labels, int image_size) {
    if (!fs::is_directory(dir)) throw UsageError("data directory " + dir.string() + " does not exist");
    const fs::path csv = dir / labels;
    if (!fs::exists(csv)) throw UsageError("data directory " + dir.string() + " has no " + labels);
    data::Dataset d;
    try {
        d = data::load_folder(dir, csv, image_size);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (d.size() == 0) throw UsageError("data directory " + dir.string() + " holds no images");
    return d;
}

std::vector<fs::path> list_images(const fs::path& dir_in) {
    if (!fs::is_directory(dir_in)) throw UsageError("image directory " + dir_in.string() + " does not exist");
    const fs::path dir = fs::is_directory(dir_in / "images") ? dir_in / "images" : dir_in;
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png" &&
            e.path().filename().string().find(".mask.") == std::string::npos)
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw UsageError("no PNG images in " + dir.string());
    return out;
}

// A model argument may name the checkpoint itself or a run directory holding it.
fs::path checkpoint_dir(const fs::path& p, const std::string& kind) {
    if (fs::exists(p / "manifest.json")) return p;
    if (fs::exists(p / kind / "manifest.json")) return p / kind;
    throw UsageError("no " + kind + " checkpoint at " + p.string());
}

std::vector<std::string> attributes_near(const fs::path& ckpt, int n_domains) {
    for (const fs::path& p : {ckpt / "attributes.json", ckpt.parent_path() / "attributes.json"}) {
        if (fs::exists(p)) {
            const auto names = read_json(p).get<std::vector<std::string>>();
            if (static_cast<int>(names.size()) == n_domains) return names;
        }
    }
    std::vector<std::string> names;
    for (int i = 0; i < n_domains; ++i) names.push_back(std::to_string(i));
    return names;
}

int resolve_domain(const std::string& key, const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == key) return static_cast<int>(i);
    if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos) {
        const int idx = std::stoi(key);
        if (idx < static_cast<int>(names.size())) return idx;
    }
    throw UsageError("unknown domain '" + key + "'; known domains: " + join(names));
}

models::Generator load_gen(const fs::path& p) {
    const fs::path dir = checkpoint_dir(p, "generator");
    try {
        return models::load_generator(dir);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
}

models::Discriminator load_disc(const fs::path& p) {
    const fs::path dir = checkpoint_dir(p, "discriminator");
    try {
        return models::load_discriminator(dir);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
}

struct TrainSetup {
    RunConfig run;
    data::Dataset train;
    training::TrainConfig cfg;
};

TrainSetup prepare_training(const fs::path& config_path) {
    TrainSetup s;
    s.run = load_run_config(config_path);
    ensure_writable(s.run.output);
    const data::Dataset all = load_data(s.run.data.dir, s.run.data.labels, s.run.data.image_size);
    if (static_cast<size_t>(s.run.data.test_images) >= all.size())
        throw UsageError("data.test_images leaves no training images");
    s.train = all.split(all.size() - static_cast<size_t>(s.run.data.test_images)).first;
    s.cfg = s.run.train;
    s.cfg.generator = generator_for(s.run.model, s.train.n_domains(), s.run.data.image_size);
    s.cfg.discriminator = discriminator_for(s.run.model, s.train.n_domains(), s.run.data.image_size);
    s.cfg.layer_name = s.run.distill.layer;
    s.cfg.distill = s.run.distill.attention;
    return s;
}

void finish_training(training::Trainer& t, const TrainSetup& s, const std::vector<std::string>& attributes,
                     std::ostream& out) {
    const fs::path ckpt = s.run.output / "checkpoint";
    try {
        t.run(std::nullopt, ckpt);
    } catch (const fs::filesystem_error& e) {
        throw IoError(e.what());
    }
    const auto& st = t.state();
    try {
        models::save_generator(s.run.output / "generator", st.generator, st.step);
        models::save_discriminator(s.run.output / "discriminator", st.discriminator, st.step);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
    std::ofstream csv(s.run.output / "losses.csv");
    losses::write_csv(csv, st.history);
    if (!csv) throw IoError("failed writing losses.csv");
    write_text(s.run.output / "attributes.json", json(attributes).dump() + "\n");
    const auto& last = st.history.back();
    out << "finished " << st.step << " steps; total_D " << last.total_D << " total_G " << last.total_G << " att "
        << last.att << "\n"
        << "outputs in " << s.run.output.string() << "\n";
}

training::Trainer make_trainer(const TrainSetup& s, training::Teacher teacher, bool resume, std::ostream& out) {
    const fs::path ckpt = s.run.output / "checkpoint";
    if (resume && fs::exists(ckpt / "state.json")) {
        training::TrainState st = [&] {
            try {
                return training::load_state(ckpt, s.cfg);
            } catch (const std::exception& e) {
                throw IoError(std::string("cannot resume: ") + e.what());
            }
        }();
        out << "resuming at step " << st.step << "\n";
        return training::Trainer(s.cfg, s.train, std::move(st), teacher);
    }
    return training::Trainer(s.cfg, s.train, teacher);
}

int cmd_train_teacher(const fs::path& config, bool resume, std::ostream& out) {
    TrainSetup s = prepare_training(config);
    if (s.run.distill.mode != training::DistillMode::none)
        throw UsageError("distill.mode must be none for train-teacher; use train-student for distillation");
    s.cfg.distillation = training::DistillMode::none;
    s.cfg.validate();
    training::write_run_manifest(s.run.output, s.cfg, {{"command", "train-teacher"}, {"run_config", run_config_json(s.run)}});
    training::Trainer t = make_trainer(s, {}, resume, out);
    finish_training(t, s, s.train.attributes, out);
    return kExitOk;
}

int cmd_train_student(const fs::path& config, const std::string& teacher_dir, const std::string& mode_arg,
                      const std::string& mapping_arg, bool resume, std::ostream& out) {
    TrainSetup s = prepare_training(config);
    const training::DistillMode mode = mode_arg.empty() ? s.run.distill.mode : training::parse_distill_mode(mode_arg);
    std::vector<std::pair<std::string, std::string>> pairs = s.run.distill.mapping;
    if (!mapping_arg.empty()) {
        const json j = fs::exists(mapping_arg) ? read_json(mapping_arg) : [&] {
            try {
                return json::parse(mapping_arg);
            } catch (const json::exception&) {
                throw UsageError("--mapping is neither a readable file nor a JSON object");
            }
        }();
        pairs = parse_mapping_json(j, "mapping");
    }
    if (mode == training::DistillMode::pseudo && pairs.empty())
        throw UsageError("--mode pseudo needs a domain mapping (--mapping or distill.mapping)");
    if (mode != training::DistillMode::pseudo && !pairs.empty())
        throw UsageError("a domain mapping is only used with --mode pseudo");
    s.cfg.distillation = mode;

    std::optional<models::Generator> tg;
    std::optional<models::Discriminator> td;
    training::Teacher teacher;
    if (mode != training::DistillMode::none) {
        if (teacher_dir.empty()) throw UsageError("--teacher is required for mode " + std::string(to_string(mode)));
        tg.emplace(load_gen(teacher_dir));
        td.emplace(load_disc(teacher_dir));
        teacher = {&*tg, &*td};
        if (mode == training::DistillMode::pseudo)
            s.cfg.domain_mapping = resolve_mapping(pairs, s.train.attributes,
                                                   attributes_near(checkpoint_dir(teacher_dir, "generator"), tg->n_domains()));
    }
    s.cfg.validate();
    training::write_run_manifest(s.run.output, s.cfg,
                                 {{"command", "train-student"},
                                  {"teacher", teacher_dir},
                                  {"teacher_generator_hash", tg ? tg->parameters().hash() : 0},
                                  {"run_config", run_config_json(s.run)}});
    training::Trainer t = make_trainer(s, teacher, resume, out);
    finish_training(t, s, s.train.attributes, out);
    return kExitOk;
}

int cmd_extract_attention(const std::string& model, const std::string& disc, const std::string& images,
                          const std::string& domain, const std::string& layers_arg, const fs::path& out_dir,
                          std::ostream& out) {
    const models::Generator g = load_gen(model);
    const models::Discriminator d = load_disc(disc);
    if (d.n_domains() != g.n_domains() || d.spec().image_size != g.spec().image_size)
        throw UsageError("generator and discriminator checkpoints are incompatible");
    const auto names = attributes_near(checkpoint_dir(model, "generator"), g.n_domains());
    const int dom = resolve_domain(domain, names);
    std::vector<std::string> layers = layers_arg == "all" ? g.layer_names() : split_list(layers_arg);
    if (layers.empty()) throw UsageError("--layers is empty");
    const auto known = g.layer_names();
    for (const auto& l : layers)
        if (l != models::kLastResblockConv && std::find(known.begin(), known.end(), l) == known.end())
            throw UsageError("unknown layer '" + l + "'; known layers: " + join(known) + ", " + models::kLastResblockConv);
    const auto files = list_images(images);
    ensure_writable(out_dir);

    int written = 0;
    for (const auto& f : files) {
        const data::Image8 img = data::read_png(f, 3);
        const int64_t sz = g.spec().image_size;
        const Tensor x = data::image_to_tensor(img.pixels, img.width, img.height, g.spec().image_size).reshaped({1, 3, sz, sz});
        attention::AttentionRequest req;
        req.generator = &g;
        req.critic = &d;
        req.x = ad::Var::constant(x);
        req.domain_index = dom;
        const auto maps = attention::attention_for_layers(req, layers);
        for (size_t i = 0; i < layers.size(); ++i) {
            const Tensor& m = maps[i].data.value();
            Tensor map2({m.dim(1), m.dim(2)});
            std::copy(m.ptr(), m.ptr() + m.numel(), map2.ptr());
            const Tensor unit = unit_range(map2);
            const std::string stem = f.stem().string() + "." + layers[i];
            data::write_png(out_dir / (stem + ".overlay.png"), overlay(img, unit));
            data::write_png_gray16(out_dir / (stem + ".raw.png"), static_cast<int>(unit.dim(1)),
                                   static_cast<int>(unit.dim(0)), to_gray16(unit));
            ++written;
        }
    }
    out << "wrote " << written << " overlays for domain " << names[static_cast<size_t>(dom)] << " to "
        << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& model, const std::string& classifier, const std::string& data_dir,
                 const std::string& labels, const std::string& disc, const std::string& name, const fs::path& out_dir,
                 std::ostream& out) {
    if (!fs::exists(fs::path(classifier) / "manifest.json"))
        throw UsageError("no classifier checkpoint at " + classifier);
    const eval::DomainClassifier clf = [&] {
        try {
            return eval::load_classifier(classifier);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }();
    const models::Generator g = load_gen(model);
    const data::Dataset d = load_data(data_dir, labels, g.spec().image_size);
    if (d.attributes != clf.attributes())
        throw UsageError("dataset attributes (" + join(d.attributes) + ") differ from the classifier's (" +
                         join(clf.attributes()) + ")");
    std::optional<models::Discriminator> critic;
    if (!disc.empty()) critic.emplace(load_disc(disc));
    ensure_writable(out_dir);
    eval::EvalOptions opt;
    opt.model_name = name;
    if (critic) {
        if (!d.has_masks()) throw UsageError("localization needs attribute masks in the data directory");
        opt.critic = &*critic;
    }
    const eval::EvalReport r = eval::evaluate(g, clf, d, opt);
    write_text(out_dir / "report.json", json(r).dump(2) + "\n");
    const std::string table = eval::format_table(r);
    write_text(out_dir / "report.txt", table);
    out << table;
    return kExitOk;
}

int cmd_render_grid(const std::string& models_arg, const std::string& images, const std::string& domains_arg,
                    const std::string& labels, const fs::path& out_file, std::ostream& out) {
    const auto model_paths = split_list(models_arg);
    if (model_paths.empty()) throw UsageError("--models needs at least one checkpoint");
    std::vector<models::Generator> gens;
    for (const auto& p : model_paths) gens.push_back(load_gen(p));
    const int size = gens.front().spec().image_size, k = gens.front().n_domains();
    for (const auto& g : gens)
        if (g.spec().image_size != size || g.n_domains() != k)
            throw UsageError("models differ in image size or domain count");
    const auto names = attributes_near(checkpoint_dir(model_paths.front(), "generator"), k);
    std::vector<int> domains;
    for (const auto& dname : split_list(domains_arg)) domains.push_back(resolve_domain(dname, names));
    if (domains.empty()) throw UsageError("--domains needs at least one domain");

    std::vector<Tensor> inputs, base_labels;
    if (!labels.empty()) {
        const data::Dataset d = load_data(images, labels, size);
        if (d.n_domains() != k) throw UsageError("labels file does not match the models' domain count");
        for (const auto& s : d.samples) {
            inputs.push_back(s.image);
            base_labels.push_back(s.labels);
        }
    } else {
        for (const auto& f : list_images(images)) {
            const data::Image8 img = data::read_png(f, 3);
            inputs.push_back(data::image_to_tensor(img.pixels, img.width, img.height, size));
            base_labels.push_back(Tensor({k}, 0.0f));
        }
    }
    ensure_parent_writable(out_file);

    std::vector<std::vector<Tensor>> cells;
    ad::NoGradGuard no_grad;
    for (size_t i = 0; i < inputs.size(); ++i) {
        std::vector<Tensor> row;
        Tensor x = inputs[i];
        if (x.rank() == 3) x = x.reshaped({1, 3, size, size});
        row.push_back(x.reshaped({3, size, size}));
        for (const auto& g : gens)
            for (int dom : domains) {
                Tensor c = base_labels[i].reshaped({1, k});
                c[dom] = 1.0f;
                const Tensor y = g.forward(ad::Var::constant(x), ad::Var::constant(c), {}).image.value();
                row.push_back(y.reshaped({3, size, size}));
            }
        cells.push_back(std::move(row));
    }
    const data::Image8 grid = compose_grid(cells);
    data::write_png(out_file, grid);
    out << "wrote " << cells.size() << "x" << cells.front().size() << " grid to " << out_file.string() << "\n";
    return kExitOk;
}

int cmd_generate_data(const fs::path& out_dir, int n, int size, uint64_t seed, const std::string& set,
                      const std::string& attrs, float noise, std::ostream& out) {
    data::SyntheticSpec s;
    s.n_images = n;
    s.image_size = size;
    s.seed = seed;
    s.noise = noise;
    if (!attrs.empty()) {
        for (const auto& a : split_list(attrs)) s.attributes.push_back({a, 0.5});
    } else if (set == "teacher") {
        s.attributes = data::SyntheticSpec::teacher_set();
    } else if (set == "pseudo") {
        s.attributes = data::SyntheticSpec::pseudo_set();
    } else {
        throw UsageError("--set must be teacher or pseudo");
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    ensure_writable(out_dir);
    data::generate_synthetic(s, out_dir);
    out << "wrote " << n << " images to " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_train_classifier(const std::string& data_dir, const std::string& labels, const fs::path& out_dir,
                         const eval::ClassifierTrainConfig& cfg, int image_size, std::ostream& out, std::ostream& err) {
    const data::Dataset d = load_data(data_dir, labels, image_size);
    ensure_writable(out_dir);
    eval::TrainedClassifier t = [&] {
        try {
            return eval::train_domain_classifier(d, cfg, {});
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    for (const auto& w : t.report.warnings) err << "warning: " << w << "\n";
    eval::save_classifier(out_dir, t.model);
    json rep = {{"attributes", t.report.attributes},
                {"heldout_accuracy", json::array()},
                {"warnings", t.report.warnings},
                {"n_train", t.report.n_train},
                {"n_heldout", t.report.n_heldout}};
    for (double a : t.report.heldout_accuracy) rep["heldout_accuracy"].push_back(std::isnan(a) ? json(nullptr) : json(a));
    write_text(out_dir / "report.json", rep.dump(2) + "\n");
    for (size_t i = 0; i < t.report.attributes.size(); ++i)
        out << t.report.attributes[i] << ": held-out accuracy " << rep["heldout_accuracy"][i].dump() << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"attention distillation for multi-domain image translation", "attnkd"};
    app.require_subcommand(1);
    std::function<int()> action;

    std::string config, teacher, mode, mapping, model, disc, images, domain, layers = "all", classifier, data_dir,
        labels = "labels.csv", name = "model", models_arg, domains, out_path, set = "teacher", grid_labels;
    bool resume = false;
    int n = 16, size = 32;
    uint64_t seed = 0;
    float noise = 0.02f;
    eval::ClassifierTrainConfig ccfg;

    auto* tt = app.add_subcommand("train-teacher", "train a teacher generator and discriminator");
    tt->add_option("config", config, "run config JSON")->required();
    tt->add_flag("--resume", resume, "continue from the run's checkpoint when present");
    tt->callback([&] { action = [&] { return cmd_train_teacher(config, resume, out); }; });

    auto* ts = app.add_subcommand("train-student", "train a student, optionally distilling teacher attention");
    ts->add_option("config", config, "run config JSON")->required();
    ts->add_option("--teacher", teacher, "teacher run directory");
    ts->add_option("--mode", mode, "none, attention or pseudo (overrides distill.mode)");
    ts->add_option("--mapping", mapping, "student->teacher attribute mapping: JSON object or file");
    ts->add_flag("--resume", resume, "continue from the run's checkpoint when present");
    ts->callback([&] { action = [&] { return cmd_train_student(config, teacher, mode, mapping, resume, out); }; });

    auto* ea = app.add_subcommand("extract-attention", "write attention overlays and raw maps");
    ea->add_option("--model", model, "generator checkpoint or run directory")->required();
    ea->add_option("--discriminator", disc, "discriminator checkpoint or run directory")->required();
    ea->add_option("--images", images, "directory of PNG images")->required();
    ea->add_option("--domain", domain, "target domain name or index")->required();
    ea->add_option("--layers", layers, "comma-separated layer names or 'all'");
    ea->add_option("--out", out_path, "output directory")->required();
    ea->callback([&] {
        action = [&] { return cmd_extract_attention(model, disc, images, domain, layers, out_path, out); };
    });

    auto* ev = app.add_subcommand("evaluate", "translation accuracy and Fréchet distance");
    ev->add_option("--model", model, "generator checkpoint or run directory")->required();
    ev->add_option("--classifier", classifier, "classifier checkpoint")->required();
    ev->add_option("--data", data_dir, "data directory")->required();
    ev->add_option("--labels", labels, "labels CSV inside the data directory");
    ev->add_option("--discriminator", disc, "also measure attention localization with this discriminator");
    ev->add_option("--name", name, "model name in the report");
    ev->add_option("--out", out_path, "output directory")->required();
    ev->callback([&] {
        action = [&] { return cmd_evaluate(model, classifier, data_dir, labels, disc, name, out_path, out); };
    });

    auto* rg = app.add_subcommand("render-grid", "input | model outputs comparison grid");
    rg->add_option("--models", models_arg, "comma-separated generator checkpoints")->required();
    rg->add_option("--images", images, "directory of PNG images")->required();
    rg->add_option("--domains", domains, "comma-separated domain names or indices")->required();
    rg->add_option("--labels", grid_labels, "labels CSV inside the image directory; targets keep the other labels");
    rg->add_option("--out", out_path, "output PNG")->required();
    rg->callback([&] { action = [&] { return cmd_render_grid(models_arg, images, domains, grid_labels, out_path, out); }; });

    std::string attr_list;
    auto* gd = app.add_subcommand("generate-data", "write a synthetic attribute dataset");
    gd->add_option("--out", out_path, "output directory")->required();
    gd->add_option("--n", n, "number of images")->check(CLI::PositiveNumber);
    gd->add_option("--size", size, "image size");
    gd->add_option("--seed", seed, "seed");
    gd->add_option("--set", set, "teacher or pseudo attribute set");
    gd->add_option("--attributes", attr_list, "comma-separated attribute names (overrides --set)");
    gd->add_option("--noise", noise, "pixel noise std in [0,1] units");
    gd->callback([&] {
        action = [&] { return cmd_generate_data(out_path, n, size, seed, set, attr_list, noise, out); };
    });

    auto* tc = app.add_subcommand("train-classifier", "train the evaluation attribute classifier");
    tc->add_option("--data", data_dir, "data directory")->required();
    tc->add_option("--labels", labels, "labels CSV inside the data directory");
    tc->add_option("--out", out_path, "checkpoint directory")->required();
    tc->add_option("--size", size, "image size");
    tc->add_option("--steps", ccfg.steps, "training steps");
    tc->add_option("--batch-size", ccfg.batch_size, "batch size");
    tc->add_option("--lr", ccfg.lr, "step size");
    tc->add_option("--seed", ccfg.seed, "seed");
    tc->add_option("--holdout", ccfg.holdout_fraction, "held-out fraction");
    tc->callback([&] {
        action = [&] { return cmd_train_classifier(data_dir, labels, out_path, ccfg, size, out, err); };
    });

    auto* cr = app.add_subcommand("config-reference", "write the default run config with field notes");
    cr->add_option("--out", out_path, "output JSON file")->required();
    cr->callback([&] {
        action = [&] {
            ensure_parent_writable(out_path);
            write_text(out_path, reference_config().dump(2) + "\n");
            return kExitOk;
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        return action();
    } catch (const training::NonFiniteLoss& e) {
        err << "error: " << e.what() << " (last good checkpoint kept)\n";
        return kExitNumeric;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace attnkd::cli
