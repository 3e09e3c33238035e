#include "attnkd/losses/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace attnkd::losses {

void LossWeights::validate() const {
    for (float v : {lambda_cls, lambda_rec, lambda_att, lambda_gp})
        if (!(v >= 0.0f) || !std::isfinite(v)) throw std::invalid_argument("loss weights must be finite and >= 0");
}

AdversarialLosses adversarial_losses(const ad::Var& real_patch, const ad::Var& fake_patch, const ad::Var& gp,
                                     float lambda_gp) {
    if (real_patch.shape() != fake_patch.shape())
        throw std::invalid_argument("real and fake patch scores differ in shape");
    if (!real_patch.value().all_finite() || !fake_patch.value().all_finite() || !gp.value().all_finite())
        throw std::runtime_error("non-finite critic output");
    const ad::Var fake_mean = ad::mean(fake_patch);
    AdversarialLosses out;
    out.d = ad::add(ad::sub(fake_mean, ad::mean(real_patch)), ad::scale(gp, lambda_gp));
    out.g = ad::neg(fake_mean);
    return out;
}

ad::Var gradient_penalty_at(const models::DomainCritic& critic, const Tensor& x_hat) {
    ad::GradModeGuard enable(true);
    const ad::Var xh = ad::Var::parameter(x_hat);
    const ad::Var adv = critic.forward(xh).adv;
    const ad::Var g = ad::grad(ad::sum(adv), {xh}, ad::Var(), true)[0];
    if (!g.value().all_finite()) throw std::runtime_error("non-finite gradient in gradient penalty");
    const int64_t b = x_hat.dim(0);
    const ad::Var sq = ad::reshape(ad::sum_to(ad::square(g), {b, 1, 1, 1}), {b});
    const ad::Var norm = ad::sqrt_safe(sq);
    return ad::mean(ad::square(ad::shift(norm, -1.0f)));
}

ad::Var gradient_penalty(const models::DomainCritic& critic, const Tensor& real, const Tensor& fake, Rng& rng) {
    if (real.shape() != fake.shape()) throw std::invalid_argument("gradient_penalty: real and fake shapes differ");
    const int64_t b = real.dim(0);
    const int64_t per = real.numel() / b;
    Tensor x_hat(real.shape());
    for (int64_t s = 0; s < b; ++s) {
        const float e = static_cast<float>(rng.uniform());
        for (int64_t i = s * per; i < (s + 1) * per; ++i) x_hat[i] = e * real[i] + (1.0f - e) * fake[i];
    }
    return gradient_penalty_at(critic, x_hat);
}

ClassificationKind parse_classification_kind(std::string_view s) {
    if (s == "multi_label") return ClassificationKind::multi_label;
    if (s == "single_label") return ClassificationKind::single_label;
    throw std::invalid_argument("unknown classification kind '" + std::string(s) +
                                "' (expected multi_label or single_label)");
}

std::string_view to_string(ClassificationKind k) {
    return k == ClassificationKind::multi_label ? "multi_label" : "single_label";
}

ad::Var classification_loss(const ClassScore& scores, const Tensor& target, ClassificationKind kind) {
    const ad::Var& s = scores.scores;
    if (s.shape() != target.shape())
        throw std::invalid_argument("classification_loss: scores " + shape_str(s.shape()) + " vs target " +
                                    shape_str(target.shape()));
    const ad::Var t = ad::Var::constant(target);
    if (kind == ClassificationKind::multi_label) return ad::mean(ad::sub(ad::softplus(s), ad::mul(t, s)));
    // logsumexp with a constant max shift, minus the target logit
    const int64_t b = s.dim(0);
    const ad::Var m = ad::reduce_max_to(s, {b, 1}).detach();
    const ad::Var lse = ad::add(ad::log(ad::sum_to(ad::exp(ad::sub(s, m)), {b, 1})), m);
    const ad::Var picked = ad::sum_to(ad::mul(s, t), {b, 1});
    return ad::mean(ad::sub(lse, picked));
}

ad::Var reconstruction_loss(const ad::Var& x, const ad::Var& x_cycled) {
    if (x.shape() != x_cycled.shape())
        throw std::invalid_argument("reconstruction_loss: shapes " + shape_str(x.shape()) + " and " +
                                    shape_str(x_cycled.shape()) + " differ");
    return ad::mean(ad::abs(ad::sub(x, x_cycled)));
}

NormKind parse_norm_kind(std::string_view s) {
    if (s == "l1") return NormKind::l1;
    if (s == "l2") return NormKind::l2;
    throw std::invalid_argument("unknown norm kind '" + std::string(s) + "' (expected l1 or l2)");
}

std::string_view to_string(NormKind k) { return k == NormKind::l1 ? "l1" : "l2"; }

ad::Var attention_distillation_loss(const AttentionMap& teacher, const AttentionMap& student, const DistillConfig& cfg) {
    if (teacher.data.shape() != student.data.shape())
        throw std::invalid_argument("teacher map " + shape_str(teacher.data.shape()) + " and student map " +
                                    shape_str(student.data.shape()) +
                                    " differ; extract both at layers with equal spatial size instead of resizing");
    const ad::Var t = normalize_map(teacher.data.detach(), cfg.mode);
    const ad::Var s = normalize_map(student.data, cfg.mode);
    const ad::Var diff = ad::sub(s, t);
    const int64_t b = diff.dim(0);
    const float inv_area = 1.0f / static_cast<float>(diff.dim(1) * diff.dim(2));
    if (cfg.norm == NormKind::l1) return ad::mean(ad::abs(diff));
    const ad::Var ms = ad::scale(ad::sum_to(ad::square(diff), {b, 1, 1}), inv_area);
    return ad::mean(ad::sqrt_safe(ms));
}

DomainMapping DomainMapping::identity(int n) {
    DomainMapping m;
    for (int i = 0; i < n; ++i) m.teacher_index.push_back(i);
    return m;
}

int DomainMapping::at(int student_index) const {
    if (student_index < 0 || student_index >= static_cast<int>(teacher_index.size()))
        throw std::out_of_range("no pseudo-domain mapping for student domain " + std::to_string(student_index));
    return teacher_index[static_cast<size_t>(student_index)];
}

void DomainMapping::validate(int n_student, int n_teacher) const {
    if (static_cast<int>(teacher_index.size()) != n_student)
        throw std::invalid_argument("domain mapping covers " + std::to_string(teacher_index.size()) + " of " +
                                    std::to_string(n_student) + " student domains");
    std::vector<bool> used(static_cast<size_t>(std::max(n_teacher, 0)), false);
    for (int t : teacher_index) {
        if (t < 0 || t >= n_teacher)
            throw std::invalid_argument("domain mapping target " + std::to_string(t) + " outside teacher domain set");
        if (used[static_cast<size_t>(t)]) throw std::invalid_argument("domain mapping is not injective");
        used[static_cast<size_t>(t)] = true;
    }
}

Tensor DomainMapping::map_labels(const Tensor& student_labels, int n_teacher) const {
    const int64_t b = student_labels.dim(0), k = student_labels.dim(1);
    Tensor out(Shape{b, n_teacher}, 0.0f);
    for (int64_t s = 0; s < b; ++s)
        for (int64_t j = 0; j < k; ++j) out[s * n_teacher + at(static_cast<int>(j))] = student_labels[s * k + j];
    return out;
}

ad::Var pseudo_attention_loss(const models::ConditionalGenerator& teacher, const models::ConditionalGenerator& student,
                              const models::DomainCritic& teacher_critic, const PseudoInputs& in,
                              const DomainMapping& mapping, const DistillConfig& cfg) {
    mapping.validate(student.n_domains(), teacher.n_domains());
    std::vector<int> pseudo;
    for (int k : in.student_domains) pseudo.push_back(mapping.at(k));

    attention::AttentionRequest treq;
    treq.generator = &teacher;
    treq.critic = &teacher_critic;
    treq.x = in.x;
    treq.domain_indices = pseudo;
    treq.target_labels = mapping.map_labels(in.student_labels, teacher.n_domains());
    treq.layer_name = in.layer_name;
    treq.alpha_detached = cfg.alpha_detached;
    treq.network = NetworkId::teacher;

    attention::AttentionRequest sreq = treq;
    sreq.generator = &student;
    sreq.target_labels = in.student_labels;
    sreq.network = NetworkId::student;

    return attention_distillation_loss(attention::compute_attention(treq), attention::compute_attention(sreq), cfg);
}

ad::Var generator_objective(const GeneratorTerms& t, const LossWeights& w) {
    ad::Var total = ad::add(ad::add(t.adv, ad::scale(t.cls, w.lambda_cls)), ad::scale(t.rec, w.lambda_rec));
    if (t.att.defined() && w.lambda_att != 0.0f) total = ad::add(total, ad::scale(t.att, w.lambda_att));
    return total;
}

ad::Var discriminator_objective(const ad::Var& adv_d, const ad::Var& cls, const LossWeights& w) {
    return ad::add(adv_d, ad::scale(cls, w.lambda_cls));
}

Totals student_objectives(double adv_D, double cls_D, double adv_G, double cls_G, double rec, double att,
                          const LossWeights& w) {
    Totals t;
    t.total_D = adv_D + w.lambda_cls * cls_D;
    t.total_G = adv_G + w.lambda_cls * cls_G + w.lambda_rec * rec + w.lambda_att * att;
    return t;
}

}  // namespace attnkd::losses
