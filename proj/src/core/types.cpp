#include "attnkd/core/types.hpp"

#include <cmath>
#include <stdexcept>

#include "attnkd/autograd/ops.hpp"

namespace attnkd {

ImageBatch::ImageBatch(Tensor data) : data_(std::move(data)) {
    const Shape& s = data_.shape();
    if (s.size() != 4 || s[0] < 1 || s[1] != 3)
        throw std::invalid_argument("ImageBatch expects shape (B,3,H,W), got " + shape_str(s));
    if (s[2] != s[3]) throw std::invalid_argument("ImageBatch expects square images, got " + shape_str(s));
    if (s[2] < 32 || (s[2] & (s[2] - 1)) != 0)
        throw std::invalid_argument("ImageBatch size must be a power of two >= 32, got " + std::to_string(s[2]));
    for (float v : data_.values()) {
        if (!std::isfinite(v)) throw std::invalid_argument("ImageBatch contains non-finite values");
        if (v < -1.0f || v > 1.0f) throw std::invalid_argument("ImageBatch values must lie in [-1,1]");
    }
}

DomainVector::DomainVector(Tensor labels) : labels_(std::move(labels)) {
    const Shape& s = labels_.shape();
    if (s.size() != 2 || s[0] < 1 || s[1] < 2)
        throw std::invalid_argument("DomainVector expects shape (B, n_domains>=2), got " + shape_str(s));
    for (float v : labels_.values())
        if (v != 0.0f && v != 1.0f) throw std::invalid_argument("DomainVector entries must be 0 or 1");
}

DomainVector DomainVector::one_hot(int64_t batch, int n_domains, int index) {
    if (index < 0 || index >= n_domains)
        throw std::out_of_range("domain index " + std::to_string(index) + " out of range for " +
                                std::to_string(n_domains) + " domains");
    Tensor t(Shape{batch, n_domains}, 0.0f);
    for (int64_t b = 0; b < batch; ++b) t[b * n_domains + index] = 1.0f;
    return DomainVector(std::move(t));
}

std::string_view to_string(NetworkId id) { return id == NetworkId::teacher ? "teacher" : "student"; }

NormalizeMode parse_normalize_mode(std::string_view s) {
    if (s == "minmax") return NormalizeMode::minmax;
    if (s == "l2") return NormalizeMode::l2;
    if (s == "none") return NormalizeMode::none;
    throw std::invalid_argument("unknown normalize mode '" + std::string(s) + "' (expected minmax, l2 or none)");
}

std::string_view to_string(NormalizeMode m) {
    switch (m) {
        case NormalizeMode::minmax: return "minmax";
        case NormalizeMode::l2: return "l2";
        case NormalizeMode::none: return "none";
    }
    return "none";
}

ad::Var normalize_map(const ad::Var& maps, NormalizeMode mode) {
    if (mode == NormalizeMode::none) return maps;
    if (maps.value().rank() != 3) throw std::invalid_argument("attention maps must have shape (B,h,w)");
    const Shape per_sample{maps.dim(0), 1, 1};
    if (mode == NormalizeMode::minmax) {
        const ad::Var lo = ad::reduce_min_to(maps, per_sample);
        const ad::Var hi = ad::reduce_max_to(maps, per_sample);
        return ad::div(ad::sub(maps, lo), ad::shift(ad::sub(hi, lo), kNormEpsilon));
    }
    const ad::Var norm = ad::sqrt_safe(ad::sum_to(ad::square(maps), per_sample));
    return ad::div(maps, ad::shift(norm, kNormEpsilon));
}

AttentionMap normalize_map(const AttentionMap& map, NormalizeMode mode) {
    AttentionMap out = map;
    out.data = normalize_map(map.data, mode);
    return out;
}

}  // namespace attnkd
