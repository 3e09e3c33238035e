#include "attnkd/eval/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "attnkd/attention/gradcam.hpp"
#include "attnkd/data/batcher.hpp"

namespace attnkd::eval {

namespace {

constexpr int64_t kChunk = 32;
constexpr double kMassEpsilon = 1e-12;

using Matrix = Eigen::MatrixXd;

void moments(const Tensor& f, Eigen::VectorXd& mu, Matrix& cov) {
    const int64_t n = f.dim(0), d = f.dim(1);
    Matrix x(n, d);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) x(i, j) = f[i * d + j];
    mu = x.colwise().mean();
    const Matrix c = x.rowwise() - mu.transpose();
    cov = (c.transpose() * c) / static_cast<double>(n - 1);
}

Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    const Eigen::VectorXd l = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<size_t> iota(size_t n) {
    std::vector<size_t> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

double frechet_distance(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw std::invalid_argument("frechet_distance expects (N,d) and (M,d) features");
    if (a.dim(0) < 2 || b.dim(0) < 2) throw std::invalid_argument("frechet_distance needs at least 2 samples per set");
    Eigen::VectorXd mu_a, mu_b;
    Matrix s_a, s_b;
    moments(a, mu_a, s_a);
    moments(b, mu_b, s_b);
    // Tr((S_a S_b)^1/2) via the symmetric PSD product sqrt(S_a) S_b sqrt(S_a)
    const Matrix ra = psd_sqrt(s_a);
    Eigen::SelfAdjointEigenSolver<Matrix> es(ra * s_b * ra);
    const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double d2 = (mu_a - mu_b).squaredNorm() + s_a.trace() + s_b.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, d2);
}

TranslationAccuracy translation_accuracy(const models::ConditionalGenerator& g, const DomainClassifier& c,
                                         const data::Dataset& data, const std::vector<int>& targets_in,
                                         Tensor* translated) {
    const int k = data.n_domains();
    if (g.n_domains() != k || c.spec().n_domains != k)
        throw std::invalid_argument("generator, classifier and dataset disagree on the number of attributes");
    std::vector<int> targets = targets_in;
    if (targets.empty())
        for (int a = 0; a < k; ++a) targets.push_back(a);
    for (int a : targets)
        if (a < 0 || a >= k) throw std::out_of_range("target attribute index out of range");

    const int64_t n = static_cast<int64_t>(data.size());
    const int64_t size = data.image_size;
    const int64_t per_image = 3 * size * size;
    if (translated) *translated = Tensor({n * static_cast<int64_t>(targets.size()), 3, size, size});

    std::vector<int64_t> hits(targets.size(), 0);
    ad::NoGradGuard no_grad;
    for (int64_t start = 0; start < n; start += kChunk) {
        const int64_t m = std::min(kChunk, n - start);
        std::vector<size_t> idx(static_cast<size_t>(m));
        for (int64_t i = 0; i < m; ++i) idx[static_cast<size_t>(i)] = static_cast<size_t>(start + i);
        const data::Batch b = data::gather(data, idx);
        for (size_t t = 0; t < targets.size(); ++t) {
            Tensor labels = b.labels;
            for (int64_t i = 0; i < m; ++i) labels[i * k + targets[t]] = 1.0f;
            const Tensor y = g.forward(ad::Var::constant(b.images), ad::Var::constant(labels), {}).image.value();
            const Tensor s = c.predict_logits(y);
            for (int64_t i = 0; i < m; ++i) hits[t] += s[i * k + targets[t]] >= 0.0f;
            if (translated)
                for (int64_t i = 0; i < m; ++i)
                    std::copy(y.ptr() + i * per_image, y.ptr() + (i + 1) * per_image,
                              translated->ptr() + ((start + i) * static_cast<int64_t>(targets.size()) +
                                                   static_cast<int64_t>(t)) * per_image);
        }
    }
    TranslationAccuracy out;
    for (size_t t = 0; t < targets.size(); ++t) {
        out.attributes.push_back(data.attributes[static_cast<size_t>(targets[t])]);
        out.per_attribute.push_back(n > 0 ? static_cast<double>(hits[t]) / static_cast<double>(n) : 0.0);
        out.mean += out.per_attribute.back();
    }
    out.mean /= static_cast<double>(targets.size());
    return out;
}

Tensor resample_mask(const Tensor& mask, int64_t h, int64_t w) {
    if (mask.rank() != 2) throw std::invalid_argument("mask must have shape (H,W)");
    const int64_t mh = mask.dim(0), mw = mask.dim(1);
    Tensor out({h, w});
    for (int64_t y = 0; y < h; ++y) {
        const int64_t sy = std::min(mh - 1, (2 * y + 1) * mh / (2 * h));
        for (int64_t x = 0; x < w; ++x) {
            const int64_t sx = std::min(mw - 1, (2 * x + 1) * mw / (2 * w));
            out[y * w + x] = mask[sy * mw + sx];
        }
    }
    return out;
}

double attention_mass_fraction(const Tensor& map, const Tensor& mask) {
    if (map.rank() != 2) throw std::invalid_argument("attention map must have shape (h,w)");
    const Tensor m = resample_mask(mask, map.dim(0), map.dim(1));
    double inside = 0.0, total = 0.0, area = 0.0;
    for (int64_t i = 0; i < map.numel(); ++i) {
        if (!(map[i] >= 0.0f)) throw std::invalid_argument("attention map must be non-negative and finite");
        const bool in = m[i] > 0.5f;
        area += in;
        total += map[i];
        if (in) inside += map[i];
    }
    if (area == 0.0) throw std::invalid_argument("mask is empty at the map resolution");
    return std::clamp(inside / (total + kMassEpsilon), 0.0, 1.0);
}

LocalizationResult attention_localization(const models::ConditionalGenerator& g, const models::DomainCritic& critic,
                                          const data::Dataset& data, const std::string& layer) {
    if (!data.has_masks()) throw std::invalid_argument("dataset has no attribute masks");
    const int k = data.n_domains();
    const int64_t size = data.image_size;
    LocalizationResult out;
    out.attributes = data.attributes;
    out.mass_fraction.assign(static_cast<size_t>(k), 0.0);
    out.area_fraction.assign(static_cast<size_t>(k), 0.0);
    std::vector<int64_t> counted(static_cast<size_t>(k), 0);

    const std::vector<size_t> all = iota(data.size());
    for (size_t start = 0; start < all.size(); start += kChunk) {
        const size_t m = std::min<size_t>(kChunk, all.size() - start);
        const std::vector<size_t> idx(all.begin() + static_cast<long>(start), all.begin() + static_cast<long>(start + m));
        const data::Batch b = data::gather(data, idx);
        for (int a = 0; a < k; ++a) {
            Tensor labels = b.labels;
            for (size_t i = 0; i < m; ++i) labels[static_cast<int64_t>(i) * k + a] = 1.0f;
            attention::AttentionRequest req;
            req.generator = &g;
            req.critic = &critic;
            req.x = ad::Var::constant(b.images);
            req.domain_index = a;
            req.target_labels = labels;
            req.layer_name = layer;
            const Tensor maps = attention::compute_attention(req).data.value();
            const int64_t h = maps.dim(1), w = maps.dim(2);
            for (size_t i = 0; i < m; ++i) {
                const Tensor& masks = data.samples[idx[i]].masks;
                Tensor mask({size, size});
                std::copy(masks.ptr() + a * size * size, masks.ptr() + (a + 1) * size * size, mask.ptr());
                Tensor map({h, w});
                std::copy(maps.ptr() + static_cast<int64_t>(i) * h * w,
                          maps.ptr() + static_cast<int64_t>(i + 1) * h * w, map.ptr());
                const Tensor small = resample_mask(mask, h, w);
                double area = 0.0;
                for (int64_t p = 0; p < small.numel(); ++p) area += small[p] > 0.5f;
                if (area == 0.0) continue;
                out.mass_fraction[static_cast<size_t>(a)] += attention_mass_fraction(map, mask);
                out.area_fraction[static_cast<size_t>(a)] += area / static_cast<double>(h * w);
                ++counted[static_cast<size_t>(a)];
            }
        }
    }
    for (int a = 0; a < k; ++a) {
        const double c = static_cast<double>(std::max<int64_t>(1, counted[static_cast<size_t>(a)]));
        out.mass_fraction[static_cast<size_t>(a)] /= c;
        out.area_fraction[static_cast<size_t>(a)] /= c;
    }
    return out;
}

}  // namespace attnkd::eval
