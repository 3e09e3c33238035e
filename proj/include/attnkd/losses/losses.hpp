#pragma once

#include <string_view>
#include <vector>

#include "attnkd/attention/gradcam.hpp"
#include "attnkd/core/rng.hpp"
#include "attnkd/models/interfaces.hpp"

namespace attnkd::losses {

struct LossWeights {
    float lambda_cls = 1.0f;
    float lambda_rec = 10.0f;
    float lambda_att = 10.0f;
    float lambda_gp = 10.0f;

    void validate() const;
};

struct AdversarialLosses {
    ad::Var d;  // mean(fake) - mean(real) + lambda_gp * gp
    ad::Var g;  // -mean(fake)
};

AdversarialLosses adversarial_losses(const ad::Var& real_patch, const ad::Var& fake_patch, const ad::Var& gp,
                                     float lambda_gp);

// mean_b (||d adv / d x_hat||_2 - 1)^2 at x_hat = e*real + (1-e)*fake with one
// e ~ U[0,1) per sample. The result is differentiable in the critic.
ad::Var gradient_penalty(const models::DomainCritic& critic, const Tensor& real, const Tensor& fake, Rng& rng);
ad::Var gradient_penalty_at(const models::DomainCritic& critic, const Tensor& x_hat);

enum class ClassificationKind { multi_label, single_label };
ClassificationKind parse_classification_kind(std::string_view s);
std::string_view to_string(ClassificationKind k);

// multi_label: binary cross-entropy on logits, averaged over batch and domains.
// single_label: softmax cross-entropy against the target's hot index.
ad::Var classification_loss(const ClassScore& scores, const Tensor& target,
                            ClassificationKind kind = ClassificationKind::multi_label);

// Mean absolute difference.
ad::Var reconstruction_loss(const ad::Var& x, const ad::Var& x_cycled);

enum class NormKind { l1, l2 };
NormKind parse_norm_kind(std::string_view s);
std::string_view to_string(NormKind k);

struct DistillConfig {
    NormKind norm = NormKind::l1;
    NormalizeMode mode = NormalizeMode::minmax;
    bool alpha_detached = true;
};

// Both maps are normalized per sample, then compared per pixel: mean |d| for
// l1, root-mean-square for l2, averaged over the batch. The teacher side is
// detached.
ad::Var attention_distillation_loss(const AttentionMap& teacher, const AttentionMap& student, const DistillConfig& cfg);

// Student domain j is explained by teacher domain mapping[j].
struct DomainMapping {
    std::vector<int> teacher_index;

    static DomainMapping identity(int n);
    int at(int student_index) const;
    // Throws unless total over n_student, injective and within n_teacher.
    void validate(int n_student, int n_teacher) const;
    // (B, n_student) labels -> (B, n_teacher) labels; unmapped teacher domains are 0.
    Tensor map_labels(const Tensor& student_labels, int n_teacher) const;
};

struct PseudoInputs {
    ad::Var x;                          // (B, 3, H, W)
    Tensor student_labels;              // (B, n_student) target labels
    std::vector<int> student_domains;   // sampled domain per sample, student indexing
    std::string layer_name = models::kLastResblockConv;
};

// Both maps are scored by the teacher critic on the mapped pseudo domain.
// The student generator translates with its own labels; the teacher with the
// mapped ones. With an identity mapping this is the plain distillation loss.
ad::Var pseudo_attention_loss(const models::ConditionalGenerator& teacher, const models::ConditionalGenerator& student,
                              const models::DomainCritic& teacher_critic, const PseudoInputs& in,
                              const DomainMapping& mapping, const DistillConfig& cfg);

struct GeneratorTerms {
    ad::Var adv, cls, rec, att;  // att may be undefined
};

// adv + l_cls*cls + l_rec*rec [+ l_att*att]. The attention term is left out of
// the graph entirely when lambda_att is 0 or att is undefined.
ad::Var generator_objective(const GeneratorTerms& t, const LossWeights& w);
// adv_d + l_cls*cls, with gp already folded into adv_d.
ad::Var discriminator_objective(const ad::Var& adv_d, const ad::Var& cls, const LossWeights& w);

struct Totals {
    double total_D = 0.0;
    double total_G = 0.0;
};
Totals student_objectives(double adv_D, double cls_D, double adv_G, double cls_G, double rec, double att,
                          const LossWeights& w);

}  // namespace attnkd::losses
