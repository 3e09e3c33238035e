#pragma once

// Small networks whose Grad-CAM quantities can be computed by plain loops.
//
//   F     = W1 * [x, tile(c)]          (1x1 conv, n channels)
//   image = tanh(W2 * F)               (1x1 conv, 3 channels)
//   y_k   = sum_{c,m,n} V[k,c,m,n] image[c,m,n]

#include <cmath>
#include <vector>

#include "attnkd/models/interfaces.hpp"
#include "attnkd/models/layers.hpp"

namespace toy {

using attnkd::Shape;
using attnkd::Tensor;
using attnkd::ad::Var;

inline Tensor uniform(Shape shape, attnkd::Rng& rng, float lo, float hi) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

class Generator final : public attnkd::models::ConditionalGenerator {
public:
    Generator(int channels, int n_domains, uint64_t seed) : n_domains_(n_domains) {
        attnkd::Rng rng(seed);
        w1 = Var::parameter(uniform({channels, 3 + n_domains, 1, 1}, rng, -1.0f, 1.0f));
        w2 = Var::parameter(uniform({3, channels, 1, 1}, rng, -1.0f, 1.0f));
    }

    // Image as a function of the feature maps.
    Var tail(const Var& F) const { return attnkd::ad::tanh(attnkd::ad::conv2d(F, w2, {1, 0})); }

    attnkd::models::GeneratorOutput forward(const Var& x, const Var& labels,
                                            const std::vector<std::string>& capture) const override {
        namespace ad = attnkd::ad;
        for (const auto& name : capture)
            if (name != "feat") throw std::invalid_argument("unknown toy layer " + name);
        const Var in = ad::concat_channels({x, attnkd::models::tile_labels(labels, x.dim(2), x.dim(3))});
        Var F = ad::conv2d(in, w1, {1, 0});
        if (!capture.empty() && ad::grad_enabled() && !F.requires_grad()) F = Var::parameter(F.value());
        attnkd::models::GeneratorOutput out;
        for (const auto& name : capture) out.features[name] = {F, name};
        out.image = tail(F);
        return out;
    }
    std::vector<std::string> layer_names() const override { return {"feat"}; }
    int n_domains() const override { return n_domains_; }

    Var w1, w2;

private:
    int n_domains_;
};

class Critic final : public attnkd::models::DomainCritic {
public:
    Critic(int n_domains, int size, uint64_t seed) : n_domains_(n_domains) {
        attnkd::Rng rng(seed);
        v = Var::parameter(uniform({n_domains, 3, size, size}, rng, -1.0f, 1.0f));
        u = Var::parameter(uniform({1, 3, size, size}, rng, -1.0f, 1.0f));
    }

    attnkd::models::CriticOutput forward(const Var& x) const override {
        namespace ad = attnkd::ad;
        attnkd::models::CriticOutput out;
        out.adv = ad::conv2d(x, u, {1, 0});
        out.cls.scores = ad::reshape(ad::conv2d(x, v, {1, 0}), {x.dim(0), n_domains_});
        return out;
    }
    int n_domains() const override { return n_domains_; }

    Var v, u;

private:
    int n_domains_;
};

struct LoopResult {
    std::vector<double> F;      // (B, n, H, W)
    std::vector<double> dF;     // d y_{idx[b]} / dF
    std::vector<double> alpha;  // (B, n)
    std::vector<double> map;    // (B, H, W)
};

inline LoopResult loop_oracle(const Generator& g, const Critic& d, const Tensor& x, const Tensor& labels,
                              const std::vector<int>& idx) {
    const int64_t B = x.dim(0), H = x.dim(2), W = x.dim(3), HW = H * W;
    const int64_t n = g.w1.dim(0), cin = g.w1.dim(1), K = labels.dim(1);
    const Tensor& w1 = g.w1.value();
    const Tensor& w2 = g.w2.value();
    const Tensor& v = d.v.value();
    LoopResult r;
    r.F.assign(static_cast<size_t>(B * n * HW), 0.0);
    r.dF.assign(r.F.size(), 0.0);
    r.alpha.assign(static_cast<size_t>(B * n), 0.0);
    r.map.assign(static_cast<size_t>(B * HW), 0.0);
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t j = 0; j < n; ++j)
            for (int64_t p = 0; p < HW; ++p) {
                double s = 0.0;
                for (int64_t c = 0; c < cin; ++c) {
                    const double in = c < 3 ? x[(b * 3 + c) * HW + p] : labels[b * K + (c - 3)];
                    s += w1[j * cin + c] * in;
                }
                r.F[(b * n + j) * HW + p] = s;
            }
        for (int64_t c = 0; c < 3; ++c)
            for (int64_t p = 0; p < HW; ++p) {
                double pre = 0.0;
                for (int64_t j = 0; j < n; ++j) pre += w2[c * n + j] * r.F[(b * n + j) * HW + p];
                const double img = std::tanh(pre);
                const double dimg = v[(idx[b] * 3 + c) * HW + p] * (1.0 - img * img);
                for (int64_t j = 0; j < n; ++j) r.dF[(b * n + j) * HW + p] += dimg * w2[c * n + j];
            }
        for (int64_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int64_t p = 0; p < HW; ++p) s += r.dF[(b * n + j) * HW + p];
            r.alpha[b * n + j] = s / static_cast<double>(HW);
        }
        for (int64_t p = 0; p < HW; ++p) {
            double s = 0.0;
            for (int64_t j = 0; j < n; ++j) s += r.alpha[b * n + j] * r.F[(b * n + j) * HW + p];
            r.map[b * HW + p] = std::max(0.0, s);
        }
    }
    return r;
}

// y_{idx[b]} summed over the batch, as a function of the feature maps.
inline double score_from_features(const Generator& g, const Critic& d, const Tensor& F, const std::vector<int>& idx) {
    attnkd::ad::NoGradGuard no_grad;
    const Tensor scores = d.forward(g.tail(Var::constant(F))).cls.scores.value();
    double s = 0.0;
    for (size_t b = 0; b < idx.size(); ++b) s += scores[static_cast<int64_t>(b) * d.n_domains() + idx[b]];
    return s;
}

}  // namespace toy
