#include <cmath>
#include <sstream>

#include "attnkd/losses/report.hpp"
#include "attnkd/models/discriminator.hpp"
#include "doctest.h"
#include "test_support.hpp"
#include "toy_networks.hpp"

using namespace attnkd;
using namespace attnkd::losses;

namespace {

ad::Var c(Tensor t) { return ad::Var::constant(std::move(t)); }

AttentionMap map_of(Tensor t) {
    AttentionMap m;
    m.data = ad::Var::constant(std::move(t));
    return m;
}

}  // namespace

TEST_CASE("adversarial loss examples") {
    Rng rng(1);
    const Tensor p = testing::random_tensor({2, 1, 2, 2}, rng);
    const auto same = adversarial_losses(c(p), c(p), c(Tensor::scalar(0.3f)), 10.0f);
    CHECK(same.d.item() == doctest::Approx(3.0f).epsilon(1e-7));

    const auto zero_fake = adversarial_losses(c(p), c(Tensor({2, 1, 2, 2}, 0.0f)), c(Tensor::scalar(0.0f)), 10.0f);
    CHECK(zero_fake.g.item() == 0.0f);

    const auto ex = adversarial_losses(c(Tensor({1, 1, 1, 1}, 5.0f)), c(Tensor({1, 1, 1, 1}, 2.0f)),
                                       c(Tensor::scalar(0.1f)), 10.0f);
    CHECK(ex.d.item() == doctest::Approx(-2.0f).epsilon(1e-6));
    CHECK(ex.g.item() == -2.0f);

    CHECK_THROWS(adversarial_losses(c(Tensor({1, 1, 2, 2})), c(Tensor({1, 1, 1, 1})), c(Tensor::scalar(0)), 1));
}

TEST_CASE("gradient penalty closed forms") {
    toy::Critic critic(2, 4, 3);
    Tensor u = critic.u.value();
    double n2 = 0.0;
    for (float v : u.values()) n2 += static_cast<double>(v) * v;
    Rng rng(5);
    const Tensor real = testing::random_tensor({3, 3, 4, 4}, rng);
    const Tensor fake = testing::random_tensor({3, 3, 4, 4}, rng);
    for (float target : {1.0f, 3.0f}) {
        Tensor w = u;
        for (int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<float>(u[i] * target / std::sqrt(n2));
        critic.u = ad::Var::parameter(w);
        const float gp = gradient_penalty(critic, real, fake, rng).item();
        const float want = (target - 1.0f) * (target - 1.0f);
        CHECK(std::abs(gp - want) < (target == 1.0f ? 1e-6 : 1e-5));
    }

    const models::Discriminator d(models::DiscriminatorSpec{8, 5, 3, 32}, RandomSeed{1});
    const Tensor r32 = testing::random_tensor({2, 3, 32, 32}, rng);
    const Tensor f32 = testing::random_tensor({2, 3, 32, 32}, rng);
    const ad::Var gp = gradient_penalty(d, r32, f32, rng);
    CHECK(gp.item() >= 0.0f);
    CHECK(std::isfinite(gp.item()));
    // the penalty must train the critic
    const ad::Var gw = ad::grad(gp, {d.parameters().get("conv1.weight")})[0];
    CHECK(testing::max_abs_diff(gw.value(), Tensor(gw.shape(), 0.0f)) > 0.0);
}

TEST_CASE("gradient penalty gradient matches finite differences") {
    toy::Critic critic(2, 4, 3);
    Rng rng(6);
    const Tensor x_hat = testing::random_tensor({2, 3, 4, 4}, rng);
    // a nonlinear critic: adv = sum(tanh(conv)) so the penalty depends on x
    struct Tanh : models::DomainCritic {
        const toy::Critic& inner;
        explicit Tanh(const toy::Critic& c) : inner(c) {}
        models::CriticOutput forward(const ad::Var& x) const override {
            auto o = inner.forward(ad::tanh(x));
            return o;
        }
        int n_domains() const override { return inner.n_domains(); }
    };
    const double err = testing::gradient_check(
        [&](const ad::Var& u) {
            toy::Critic local = critic;
            local.u = u;
            const Tanh t(local);
            return gradient_penalty_at(t, x_hat);
        },
        critic.u.value());
    CHECK(err < 2e-2);
}

TEST_CASE("classification loss") {
    Tensor target({2, 3}, {1, 0, 1, 0, 0, 1});
    Tensor logits(target.shape());
    for (int64_t i = 0; i < 6; ++i) logits[i] = target[i] == 1.0f ? 50.0f : -50.0f;
    CHECK(classification_loss({c(logits)}, target).item() < 1e-6f);
    CHECK(classification_loss({c(Tensor({2, 3}, 0.0f))}, target).item() == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    Rng rng(4);
    const Tensor s = testing::random_tensor({4, 5}, rng, -4.0f, 4.0f);
    Tensor t({4, 5});
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    double want = 0.0;
    for (int64_t i = 0; i < s.numel(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(s[i])));
        want -= t[i] * std::log(p) + (1 - t[i]) * std::log(1 - p);
    }
    CHECK(std::abs(classification_loss({c(s)}, t).item() - want / 20.0) < 1e-6);

    Tensor hot({4, 5}, 0.0f);
    for (int b = 0; b < 4; ++b) hot[b * 5 + (b * 2) % 5] = 1.0f;
    double ce = 0.0;
    for (int b = 0; b < 4; ++b) {
        double z = 0.0;
        for (int k = 0; k < 5; ++k) z += std::exp(static_cast<double>(s[b * 5 + k]));
        ce += std::log(z) - s[b * 5 + (b * 2) % 5];
    }
    CHECK(std::abs(classification_loss({c(s)}, hot, ClassificationKind::single_label).item() - ce / 4.0) < 1e-6);
    CHECK_THROWS(classification_loss({c(s)}, Tensor({4, 4})));
}

TEST_CASE("reconstruction loss") {
    Rng rng(2);
    const Tensor x = testing::random_tensor({2, 3, 4, 4}, rng);
    CHECK(reconstruction_loss(c(x), c(x)).item() == 0.0f);
    Tensor shifted = x;
    for (auto& v : shifted.storage()) v += 0.5f;
    CHECK(reconstruction_loss(c(x), c(shifted)).item() == doctest::Approx(0.5f).epsilon(1e-6));
    const Tensor y = testing::random_tensor({2, 3, 4, 4}, rng);
    double want = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) want += std::fabs(static_cast<double>(x[i]) - y[i]);
    CHECK(std::abs(reconstruction_loss(c(x), c(y)).item() - want / x.numel()) < 1e-6);
    CHECK_THROWS(reconstruction_loss(c(x), c(Tensor({2, 3, 4, 2}))));
}

TEST_CASE("attention distillation loss identities") {
    Rng rng(3);
    const Tensor a = testing::random_tensor({2, 4, 4}, rng, 0.0f, 2.0f);
    const Tensor b = testing::random_tensor({2, 4, 4}, rng, 0.0f, 2.0f);
    const Tensor m = testing::random_tensor({2, 4, 4}, rng, 0.0f, 2.0f);
    for (auto norm : {NormKind::l1, NormKind::l2})
        for (auto mode : {NormalizeMode::minmax, NormalizeMode::l2, NormalizeMode::none}) {
            const DistillConfig cfg{norm, mode, true};
            CHECK(attention_distillation_loss(map_of(a), map_of(a), cfg).item() == 0.0f);
            const float ab = attention_distillation_loss(map_of(a), map_of(b), cfg).item();
            CHECK(ab > 0.0f);
            CHECK(ab == doctest::Approx(attention_distillation_loss(map_of(b), map_of(a), cfg).item()).epsilon(1e-6));
            const float am = attention_distillation_loss(map_of(a), map_of(m), cfg).item();
            const float mb = attention_distillation_loss(map_of(m), map_of(b), cfg).item();
            CHECK(ab <= am + mb + 1e-6f);
        }

    const DistillConfig raw{NormKind::l1, NormalizeMode::none, true};
    CHECK(attention_distillation_loss(map_of(Tensor({1, 2, 2}, 1.0f)), map_of(Tensor({1, 2, 2}, 0.0f)), raw).item() ==
          1.0f);
    const DistillConfig raw2{NormKind::l2, NormalizeMode::none, true};
    CHECK(attention_distillation_loss(map_of(Tensor({1, 2, 2}, 1.0f)), map_of(Tensor({1, 2, 2}, 0.0f)), raw2).item() ==
          doctest::Approx(1.0f));

    CHECK_THROWS_WITH_AS(attention_distillation_loss(map_of(Tensor({1, 4, 4})), map_of(Tensor({1, 8, 8})), raw),
                         doctest::Contains("resizing"), std::invalid_argument);
}

TEST_CASE("distillation gradient reaches only the student") {
    Rng rng(3);
    AttentionMap t, s;
    t.data = ad::Var::parameter(testing::random_tensor({2, 4, 4}, rng, 0.0f, 1.0f));
    s.data = ad::Var::parameter(testing::random_tensor({2, 4, 4}, rng, 0.0f, 1.0f));
    const auto g = ad::grad(attention_distillation_loss(t, s, {}), {t.data, s.data});
    CHECK(g[0].value().max_value() == 0.0f);
    CHECK(g[0].value().min_value() == 0.0f);
    CHECK(g[1].value().max_value() > 0.0f);
}

TEST_CASE("identical teacher and student networks give zero loss") {
    const models::Generator teacher(models::GeneratorSpec::student(3, 32, 16), RandomSeed{4});
    const models::Generator student = teacher.clone();
    const models::Discriminator d(models::DiscriminatorSpec{8, 5, 3, 32}, RandomSeed{5});
    Rng rng(6);
    PseudoInputs in;
    in.x = ad::Var::constant(testing::random_tensor({2, 3, 32, 32}, rng));
    in.student_labels = Tensor({2, 3}, {1, 0, 0, 0, 1, 1});
    in.student_domains = {0, 2};
    const float loss = pseudo_attention_loss(teacher, student, d, in, DomainMapping::identity(3), {}).item();
    CHECK(std::abs(loss) < 1e-6f);
}

TEST_CASE("pseudo loss reduces to plain distillation under the identity mapping") {
    const toy::Generator teacher(3, 3, 1);
    const toy::Generator student(2, 3, 2);
    const toy::Critic d(3, 4, 3);
    Rng rng(7);
    PseudoInputs in;
    in.x = ad::Var::constant(testing::random_tensor({2, 3, 4, 4}, rng));
    in.student_labels = Tensor({2, 3}, {0, 1, 0, 1, 0, 1});
    in.student_domains = {1, 2};
    in.layer_name = "feat";

    attention::AttentionRequest req;
    req.critic = &d;
    req.x = in.x;
    req.domain_indices = in.student_domains;
    req.target_labels = in.student_labels;
    req.layer_name = "feat";
    req.generator = &teacher;
    const AttentionMap at = attention::compute_attention(req);
    req.generator = &student;
    const AttentionMap as = attention::compute_attention(req);
    const DistillConfig cfg;
    const float plain = attention_distillation_loss(at, as, cfg).item();
    const float pseudo = pseudo_attention_loss(teacher, student, d, in, DomainMapping::identity(3), cfg).item();
    CHECK(std::abs(plain - pseudo) < 1e-6f);
    CHECK(plain > 0.0f);

    const DomainMapping swapped{{0, 2, 1}};
    const float other = pseudo_attention_loss(teacher, student, d, in, swapped, cfg).item();
    CHECK(std::isfinite(other));
    CHECK(other >= 0.0f);
    CHECK(other != pseudo);
}

TEST_CASE("domain mapping validation") {
    CHECK_NOTHROW(DomainMapping{{2, 0}}.validate(2, 3));
    CHECK_THROWS(DomainMapping{{0}}.validate(2, 3));
    CHECK_THROWS(DomainMapping{{1, 1}}.validate(2, 3));
    CHECK_THROWS(DomainMapping{{0, 3}}.validate(2, 3));
    CHECK_THROWS_AS(DomainMapping{{0}}.at(1), std::out_of_range);
    const Tensor mapped = DomainMapping{{2, 0}}.map_labels(Tensor({1, 2}, {1, 0}), 3);
    CHECK(mapped == Tensor({1, 3}, {0, 0, 1}));
}

TEST_CASE("objective composition") {
    const LossWeights w;
    const Totals t = student_objectives(0.0, 0.0, 1.0, 2.0, 3.0, 4.0, w);
    CHECK(t.total_G == 73.0);
    const Totals z = student_objectives(0, 0, 0, 0, 0, 0, w);
    CHECK(z.total_D == 0.0);
    CHECK(z.total_G == 0.0);

    const GeneratorTerms terms{c(Tensor::scalar(1)), c(Tensor::scalar(2)), c(Tensor::scalar(3)), c(Tensor::scalar(4))};
    CHECK(generator_objective(terms, w).item() == 73.0f);
    LossWeights no_att = w;
    no_att.lambda_att = 0.0f;
    GeneratorTerms baseline = terms;
    baseline.att = ad::Var();
    CHECK(generator_objective(terms, no_att).item() == generator_objective(baseline, w).item());
    CHECK(discriminator_objective(c(Tensor::scalar(-1.5f)), c(Tensor::scalar(0.5f)), w).item() == -1.0f);
    LossWeights bad;
    bad.lambda_rec = -1.0f;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("total_G gradient matches finite differences on a tiny model") {
    const toy::Generator teacher(2, 3, 11);
    toy::Generator student(2, 3, 12);
    const toy::Critic d(3, 4, 13);
    Rng rng(14);
    const Tensor x = testing::random_tensor({2, 3, 4, 4}, rng);
    const Tensor labels({2, 3}, {1, 0, 0, 0, 0, 1});
    const Tensor original({2, 3}, {0, 1, 0, 0, 1, 0});
    const std::vector<int> domains{0, 2};
    const LossWeights w;
    // the exact derivative needs alpha on the graph; the detached default
    // deliberately drops the path through alpha
    const DistillConfig cfg{NormKind::l1, NormalizeMode::none, false};

    auto total_g = [&](const ad::Var& w1) {
        student.w1 = w1;
        const auto fwd = student.forward(c(x), c(labels), {"feat"});
        const auto critic = d.forward(fwd.image);
        const ad::Var adv = ad::neg(ad::mean(critic.adv));
        const ad::Var cls = classification_loss(critic.cls, labels);
        const ad::Var rec = reconstruction_loss(c(x), student.forward(fwd.image, c(original), {}).image);
        attention::AttentionRequest req;
        req.generator = &teacher;
        req.critic = &d;
        req.x = c(x);
        req.domain_indices = domains;
        req.target_labels = labels;
        req.layer_name = "feat";
        const AttentionMap at = attention::compute_attention(req);
        const ad::Var score = attention::class_score(d, fwd.image, domains);
        const AttentionMap as =
            attention::attention_from_scores(fwd.features.at("feat"), score, domains, false, NetworkId::student);
        return generator_objective({adv, cls, rec, attention_distillation_loss(at, as, cfg)}, w);
    };
    CHECK(testing::gradient_check(total_g, student.w1.value(), 1e-3, 5e-2, 10) < 1e-2);
}

TEST_CASE("loss CSV round trip") {
    LossReport r;
    r.step = 7;
    r.adv_D = -1.25;
    r.adv_G = 0.1;
    r.cls = 0.7;
    r.rec = 0.3;
    r.att = 0.05;
    r.gp = 0.01;
    r.cls_G = 0.4;
    r.g_updated = true;
    const LossWeights w;
    const Totals t = student_objectives(r.adv_D, r.cls, r.adv_G, r.cls_G, r.rec, r.att, w);
    r.total_D = t.total_D;
    r.total_G = t.total_G;
    CHECK(r.recompose_error(w, true) == 0.0);
    CHECK(csv_header() == "step,adv_D,adv_G,cls,rec,att,gp,total_D,total_G,cls_G,g_updated");
    std::stringstream ss;
    write_csv(ss, {r, r});
    const auto back = read_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(to_csv_row(back[1]) == to_csv_row(r));
    CHECK(back[0].total_G == r.total_G);
}
