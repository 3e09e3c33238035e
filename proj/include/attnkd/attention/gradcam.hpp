#pragma once

#include <optional>
#include <string>
#include <vector>

#include "attnkd/models/generator.hpp"
#include "attnkd/models/interfaces.hpp"

namespace attnkd::attention {

struct AlphaWeights {
    ad::Var values;  // (B, n)
};

struct AttentionRequest {
    const models::ConditionalGenerator* generator = nullptr;
    const models::DomainCritic* critic = nullptr;
    ad::Var x;  // (B, 3, H, W) in [-1, 1]
    int domain_index = 0;
    // Per-sample domains; when empty every sample uses domain_index.
    std::vector<int> domain_indices;
    // Labels fed to the generator; defaults to the one-hot of each sample's domain.
    std::optional<Tensor> target_labels;
    std::string layer_name = models::kLastResblockConv;
    bool alpha_detached = true;
    NetworkId network = NetworkId::teacher;
};

// Pre-sigmoid logit of each sample's domain, shape (B).
ad::Var class_score(const models::DomainCritic& critic, const ad::Var& image, const std::vector<int>& domain_indices);
ad::Var class_score(const models::DomainCritic& critic, const ImageBatch& image, int domain_index);

// Spatial mean of each gradient channel: (B, n, h, w) -> (B, n).
AlphaWeights compute_alpha(const ad::Var& grad_maps);

// ReLU(sum_k alpha_k F_k) with alpha = GAP(d scores / d F). `scores` holds
// one logit per sample and must depend on `features`. Detached alpha is a
// constant; otherwise it stays on the graph.
AttentionMap attention_from_scores(const FeatureMaps& features, const ad::Var& scores,
                                   const std::vector<int>& domain_indices, bool alpha_detached, NetworkId network);

AttentionMap compute_attention(const AttentionRequest& req);

// One generator forward, then one gradient pass per listed layer. Duplicate
// names give identical maps.
std::vector<AttentionMap> attention_for_layers(const AttentionRequest& req, const std::vector<std::string>& layers);

// Resolves per-sample domains of a request; validates each index.
std::vector<int> request_domains(const AttentionRequest& req);

}  // namespace attnkd::attention
