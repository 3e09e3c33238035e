#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "attnkd/autograd/var.hpp"
#include "attnkd/core/tensor.hpp"

namespace attnkd {

// Batch of RGB images, shape (B, 3, H, W), values in [-1, 1].
class ImageBatch {
public:
    // Validates shape, range and finiteness; throws std::invalid_argument.
    explicit ImageBatch(Tensor data);
    const Tensor& tensor() const noexcept { return data_; }
    int64_t batch() const { return data_.dim(0); }
    int64_t size() const { return data_.dim(2); }

private:
    Tensor data_;
};

// Binary target-domain labels, shape (B, n_domains), entries exactly 0 or 1.
class DomainVector {
public:
    explicit DomainVector(Tensor labels);
    static DomainVector one_hot(int64_t batch, int n_domains, int index);
    const Tensor& tensor() const noexcept { return labels_; }
    int64_t batch() const { return labels_.dim(0); }
    int n_domains() const { return static_cast<int>(labels_.dim(1)); }

private:
    Tensor labels_;
};

// Activations (B, n, h, w) captured at a named generator layer. Captured
// maps stay on the autograd graph.
struct FeatureMaps {
    ad::Var data;
    std::string layer_name;
};

enum class NetworkId { teacher, student };
std::string_view to_string(NetworkId id);

// Non-negative (B, h, w) attention maps plus their provenance.
struct AttentionMap {
    ad::Var data;
    std::vector<int> domain_indices;  // one per sample
    std::string layer_name;
    NetworkId network = NetworkId::teacher;
};

// Pre-sigmoid domain classification logits, shape (B, n_domains).
struct ClassScore {
    ad::Var scores;
};

enum class NormalizeMode { minmax, l2, none };
NormalizeMode parse_normalize_mode(std::string_view s);
std::string_view to_string(NormalizeMode m);

inline constexpr float kNormEpsilon = 1e-8f;

// Per-sample rescaling of an attention map; differentiable.
//   minmax: (a - min) / (max - min + eps)
//   l2:     a / (||a||_2 + eps)
AttentionMap normalize_map(const AttentionMap& map, NormalizeMode mode);
ad::Var normalize_map(const ad::Var& maps, NormalizeMode mode);

}  // namespace attnkd
