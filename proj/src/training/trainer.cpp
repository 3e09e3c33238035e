#include "attnkd/training/trainer.hpp"

#include <fstream>

#include "attnkd/attention/gradcam.hpp"
#include "attnkd/models/checkpoint.hpp"

namespace attnkd::training {

namespace fs = std::filesystem;

std::string code_version() { return ATTNKD_CODE_VERSION; }

TrainState::TrainState(const TrainConfig& cfg)
    : generator(cfg.generator, RandomSeed{derive_seed(cfg.seed, "generator")}),
      discriminator(cfg.discriminator, RandomSeed{derive_seed(cfg.seed, "discriminator")}),
      g_optimizer(generator.parameters(), cfg.g_optimizer),
      d_optimizer(discriminator.parameters(), cfg.d_optimizer),
      rng(derive_seed(cfg.seed, "train")) {}

namespace {

void require_finite(const ad::Var& v, int64_t step, const char* what) {
    if (!v.value().all_finite()) throw NonFiniteLoss(step, what);
}

void require_finite(const std::vector<ad::Var>& grads, int64_t step, const char* what) {
    for (const auto& g : grads) require_finite(g, step, what);
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, const data::Dataset& data, Teacher teacher, TrainHooks hooks)
    : Trainer(cfg, data, TrainState(cfg), teacher, std::move(hooks)) {}

Trainer::Trainer(TrainConfig cfg, const data::Dataset& data, TrainState state, Teacher teacher, TrainHooks hooks)
    : cfg_(std::move(cfg)),
      data_(&data),
      teacher_(teacher),
      hooks_(std::move(hooks)),
      state_(std::make_unique<TrainState>(std::move(state))),
      batcher_(data, cfg_.batch_size, derive_seed(cfg_.seed, "data"), cfg_.flip) {
    cfg_.validate();
    if (data.n_domains() != cfg_.generator.n_domains)
        throw std::invalid_argument("dataset has " + std::to_string(data.n_domains()) + " domains, config expects " +
                                    std::to_string(cfg_.generator.n_domains));
    if (data.image_size != cfg_.image_size)
        throw std::invalid_argument("dataset image size " + std::to_string(data.image_size) + " differs from config " +
                                    std::to_string(cfg_.image_size));
    if (!state_->batcher_state.empty()) batcher_.restore(state_->batcher_state);
    check_compatibility();
}

void Trainer::check_compatibility() {
    const bool distill = cfg_.distillation != DistillMode::none;
    if (!distill) {
        if (teacher_.generator || teacher_.discriminator)
            throw std::invalid_argument("a teacher was given but distillation is 'none'");
        return;
    }
    if (!teacher_.generator || !teacher_.discriminator)
        throw std::invalid_argument("distillation mode '" + std::string(to_string(cfg_.distillation)) +
                                    "' needs a teacher generator and discriminator");
    teacher_.generator->parameters().set_requires_grad(false);
    teacher_.discriminator->parameters().set_requires_grad(false);

    const int n_student = cfg_.generator.n_domains;
    const int n_teacher = teacher_.generator->n_domains();
    if (teacher_.discriminator->n_domains() != n_teacher)
        throw std::invalid_argument("teacher generator and discriminator disagree on n_domains");
    if (teacher_.discriminator->spec().image_size != cfg_.image_size)
        throw std::invalid_argument("teacher discriminator was built for a different image size");
    mapping_ = cfg_.distillation == DistillMode::pseudo ? losses::DomainMapping{cfg_.domain_mapping}
                                                        : losses::DomainMapping::identity(n_student);
    mapping_.validate(n_student, n_teacher);

    // Spatial sizes at the distillation layer must agree; never resized.
    ad::NoGradGuard no_grad;
    const ad::Var x = ad::Var::constant(Tensor({1, 3, cfg_.image_size, cfg_.image_size}, 0.0f));
    const ad::Var cs = ad::Var::constant(Tensor({1, n_student}, 0.0f));
    const ad::Var ct = ad::Var::constant(Tensor({1, n_teacher}, 0.0f));
    const Shape fs = state_->generator.forward(x, cs, {cfg_.layer_name}).features.at(cfg_.layer_name).data.shape();
    const Shape ft = teacher_.generator->forward(x, ct, {cfg_.layer_name}).features.at(cfg_.layer_name).data.shape();
    if (fs[2] != ft[2] || fs[3] != ft[3])
        throw std::invalid_argument("teacher and student maps at " + cfg_.layer_name + " differ in spatial size (" +
                                    shape_str(ft) + " vs " + shape_str(fs) + "); choose a layer of equal depth");
}

std::vector<int> Trainer::sample_domains(const Tensor& labels, Tensor& target) {
    const int64_t b = labels.dim(0), k = labels.dim(1);
    target = labels;
    std::vector<int> domains(static_cast<size_t>(b));
    for (int64_t n = 0; n < b; ++n) {
        const int d = static_cast<int>(state_->rng.below(static_cast<uint64_t>(k)));
        domains[static_cast<size_t>(n)] = d;
        target[n * k + d] = 1.0f - target[n * k + d];
    }
    return domains;
}

const losses::LossReport& Trainer::step() {
    if (done()) throw std::logic_error("training already reached total_steps");
    TrainState& st = *state_;
    const int64_t s = st.step;
    const int64_t reported = s + 1;
    const losses::LossWeights& w = cfg_.weights;

    const data::Batch batch = batcher_.next();
    Tensor c_trg;
    const std::vector<int> domains = sample_domains(batch.labels, c_trg);
    const ad::Var x = ad::Var::constant(batch.images);
    const ad::Var org = ad::Var::constant(batch.labels);
    const ad::Var trg = ad::Var::constant(c_trg);

    losses::LossReport r;
    r.step = reported;

    {
        const models::CriticOutput real = st.discriminator.forward(x);
        require_finite(real.adv, reported, "critic output on real images");
        const ad::Var cls_real = losses::classification_loss(real.cls, batch.labels, cfg_.cls_kind);
        Tensor fake;
        {
            ad::NoGradGuard no_grad;
            fake = st.generator.forward(x, trg).image.value();
        }
        const models::CriticOutput fake_out = st.discriminator.forward(ad::Var::constant(fake));
        require_finite(fake_out.adv, reported, "critic output on translated images");
        const ad::Var gp = losses::gradient_penalty(st.discriminator, batch.images, fake, st.rng);
        const losses::AdversarialLosses adv = losses::adversarial_losses(real.adv, fake_out.adv, gp, w.lambda_gp);
        const ad::Var total_d = losses::discriminator_objective(adv.d, cls_real, w);
        require_finite(total_d, reported, "total_D");
        const auto grads = ad::grad(total_d, st.discriminator.parameters().vars());
        require_finite(grads, reported, "critic gradients");
        st.d_optimizer.step(st.discriminator.parameters(), grads, cfg_.lr_at(cfg_.d_optimizer.lr, s));
        r.adv_D = adv.d.item();
        r.cls = cls_real.item();
        r.gp = gp.item();
        r.total_D = total_d.item();
    }

    if (reported % cfg_.n_critic == 0) {
        const bool distill = cfg_.distillation != DistillMode::none;
        std::vector<std::string> capture;
        if (distill) capture.push_back(cfg_.layer_name);
        const models::GeneratorOutput fwd = st.generator.forward(x, trg, capture);
        const models::CriticOutput out = st.discriminator.forward(fwd.image);
        losses::GeneratorTerms terms;
        terms.adv = ad::neg(ad::mean(out.adv));
        terms.cls = losses::classification_loss(out.cls, c_trg, cfg_.cls_kind);
        terms.rec = losses::reconstruction_loss(x, st.generator.forward(fwd.image, org).image);
        if (distill) {
            std::vector<int> pseudo;
            for (int d : domains) pseudo.push_back(mapping_.at(d));
            attention::AttentionRequest req;
            req.generator = teacher_.generator;
            req.critic = teacher_.discriminator;
            req.x = x;
            req.domain_indices = pseudo;
            req.target_labels = mapping_.map_labels(c_trg, teacher_.generator->n_domains());
            req.layer_name = cfg_.layer_name;
            req.alpha_detached = cfg_.distill.alpha_detached;
            req.network = NetworkId::teacher;
            const AttentionMap a_t = attention::compute_attention(req);
            const ad::Var score = attention::class_score(*teacher_.discriminator, fwd.image, pseudo);
            const AttentionMap a_s = attention::attention_from_scores(
                fwd.features.at(cfg_.layer_name), score, pseudo, cfg_.distill.alpha_detached, NetworkId::student);
            if (hooks_.on_attention) {
                hooks_.on_attention(a_t);
                hooks_.on_attention(a_s);
            }
            terms.att = losses::attention_distillation_loss(a_t, a_s, cfg_.distill);
        }
        const ad::Var total_g = losses::generator_objective(terms, w);
        require_finite(total_g, reported, "total_G");
        if (terms.att.defined()) require_finite(terms.att, reported, "attention distillation loss");
        const auto grads = ad::grad(total_g, st.generator.parameters().vars());
        require_finite(grads, reported, "generator gradients");
        st.g_optimizer.step(st.generator.parameters(), grads, cfg_.lr_at(cfg_.g_optimizer.lr, s));
        last_g_.adv_G = terms.adv.item();
        last_g_.cls_G = terms.cls.item();
        last_g_.rec = terms.rec.item();
        last_g_.att = terms.att.defined() ? terms.att.item() : 0.0;
        last_g_.total_G = total_g.item();
        r.g_updated = true;
    } else if (!st.history.empty()) {
        last_g_ = st.history.back();
    }
    r.adv_G = last_g_.adv_G;
    r.cls_G = last_g_.cls_G;
    r.rec = last_g_.rec;
    r.att = last_g_.att;
    r.total_G = last_g_.total_G;

    st.history.push_back(r);
    st.step = reported;
    st.batcher_state = batcher_.serialize();
    if (hooks_.on_step) hooks_.on_step(r);
    return st.history.back();
}

void Trainer::run(std::optional<int64_t> max_steps, const std::optional<fs::path>& checkpoint_dir) {
    int64_t done_here = 0;
    while (!done() && (!max_steps || done_here < *max_steps)) {
        step();
        ++done_here;
        if (checkpoint_dir && cfg_.checkpoint_every > 0 && state_->step % cfg_.checkpoint_every == 0)
            save_state(*checkpoint_dir, *state_, cfg_);
    }
    if (checkpoint_dir) save_state(*checkpoint_dir, *state_, cfg_);
}

namespace {

models::ParameterList moments_list(const TrainState& st) {
    models::ParameterList list;
    auto add = [&](const char* prefix, const models::ParameterList& params, const Adam& opt) {
        for (size_t i = 0; i < params.items().size(); ++i) {
            list.add(std::string(prefix) + ".m." + params.items()[i].name, opt.first_moments()[i]);
            list.add(std::string(prefix) + ".v." + params.items()[i].name, opt.second_moments()[i]);
        }
    };
    add("g", st.generator.parameters(), st.g_optimizer);
    add("d", st.discriminator.parameters(), st.d_optimizer);
    return list;
}

nlohmann::json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed " + p.string() + ": " + e.what());
    }
}

}  // namespace

void save_state(const fs::path& dir, const TrainState& st, const TrainConfig& cfg) {
    // written beside the target and swapped in, so an interrupted save never
    // replaces the previous good checkpoint
    const fs::path tmp = dir.string() + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    models::save_generator(tmp / "generator", st.generator, st.step);
    models::save_discriminator(tmp / "discriminator", st.discriminator, st.step);
    models::save_parameters(tmp / "optimizer",
                            {"adam_moments", {{"g_steps", st.g_optimizer.steps()}, {"d_steps", st.d_optimizer.steps()}},
                             cfg.seed, st.step},
                            moments_list(st));
    nlohmann::json j = {{"step", st.step},
                        {"config", cfg},
                        {"rng", st.rng.serialize()},
                        {"batcher", st.batcher_state},
                        {"code_version", code_version()}};
    std::ofstream(tmp / "state.json") << j.dump(2) << "\n";
    {
        std::ofstream csv(tmp / "losses.csv");
        losses::write_csv(csv, st.history);
        if (!csv) throw std::runtime_error("failed writing " + (tmp / "losses.csv").string());
    }
    const fs::path old = dir.string() + ".old";
    fs::remove_all(old);
    if (fs::exists(dir)) fs::rename(dir, old);
    fs::rename(tmp, dir);
    fs::remove_all(old);
}

TrainConfig read_state_config(const fs::path& dir) {
    return config_from_json(read_json_file(dir / "state.json").at("config"));
}

TrainState load_state(const fs::path& dir, const TrainConfig& cfg) {
    const nlohmann::json j = read_json_file(dir / "state.json");
    const TrainConfig saved = config_from_json(j.at("config"));
    if (saved.seed != cfg.seed) throw std::runtime_error("checkpoint seed differs from config seed");
    if (nlohmann::json(saved.generator) != nlohmann::json(cfg.generator) ||
        nlohmann::json(saved.discriminator) != nlohmann::json(cfg.discriminator))
        throw std::runtime_error("checkpoint model specs differ from config");

    TrainState st(cfg);
    st.step = j.at("step").get<int64_t>();
    models::load_parameters(dir / "generator", st.generator.parameters());
    models::load_parameters(dir / "discriminator", st.discriminator.parameters());
    models::ParameterList moments = moments_list(st);
    const models::CheckpointInfo info = models::load_parameters(dir / "optimizer", moments);
    std::vector<Tensor> gm, gv, dm, dv;
    const size_t ng = st.generator.parameters().items().size();
    for (size_t i = 0; i < moments.items().size(); i += 2) {
        auto& m = i / 2 < ng ? gm : dm;
        auto& v = i / 2 < ng ? gv : dv;
        m.push_back(moments.items()[i].var.value());
        v.push_back(moments.items()[i + 1].var.value());
    }
    st.g_optimizer.restore(info.spec.at("g_steps").get<int64_t>(), std::move(gm), std::move(gv));
    st.d_optimizer.restore(info.spec.at("d_steps").get<int64_t>(), std::move(dm), std::move(dv));
    st.rng = Rng::deserialize(j.at("rng").get<std::string>());
    st.batcher_state = j.at("batcher").get<std::string>();
    std::ifstream csv(dir / "losses.csv");
    if (!csv) throw std::runtime_error("missing " + (dir / "losses.csv").string());
    st.history = losses::read_csv(csv);
    if (static_cast<int64_t>(st.history.size()) != st.step)
        throw std::runtime_error("loss history length does not match the checkpoint step");
    return st;
}

void write_run_manifest(const fs::path& dir, const TrainConfig& cfg, const nlohmann::json& extra) {
    fs::create_directories(dir);
    nlohmann::json j = {{"config", cfg},
                        {"code_version", code_version()},
                        {"seeds",
                         {{"base", cfg.seed},
                          {"generator", derive_seed(cfg.seed, "generator")},
                          {"discriminator", derive_seed(cfg.seed, "discriminator")},
                          {"train", derive_seed(cfg.seed, "train")},
                          {"data", derive_seed(cfg.seed, "data")}}}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream(dir / "run.json") << j.dump(2) << "\n";
}

}  // namespace attnkd::training
