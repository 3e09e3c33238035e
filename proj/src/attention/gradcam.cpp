#include "attnkd/attention/gradcam.hpp"

#include <stdexcept>

namespace attnkd::attention {

namespace {

void check_index(int index, int n_domains) {
    if (index < 0 || index >= n_domains)
        throw std::out_of_range("domain index " + std::to_string(index) + " out of range for " +
                                std::to_string(n_domains) + " domains");
}

Tensor one_hot_rows(const std::vector<int>& indices, int n_domains) {
    Tensor t(Shape{static_cast<int64_t>(indices.size()), n_domains}, 0.0f);
    for (size_t b = 0; b < indices.size(); ++b) t[static_cast<int64_t>(b) * n_domains + indices[b]] = 1.0f;
    return t;
}

}  // namespace

ad::Var class_score(const models::DomainCritic& critic, const ad::Var& image, const std::vector<int>& domain_indices) {
    if (static_cast<int64_t>(domain_indices.size()) != image.dim(0))
        throw std::invalid_argument("need one domain index per sample");
    for (int i : domain_indices) check_index(i, critic.n_domains());
    const ad::Var scores = critic.forward(image).cls.scores;
    const ad::Var mask = ad::Var::constant(one_hot_rows(domain_indices, critic.n_domains()));
    return ad::reshape(ad::sum_to(ad::mul(scores, mask), {image.dim(0), 1}), {image.dim(0)});
}

ad::Var class_score(const models::DomainCritic& critic, const ImageBatch& image, int domain_index) {
    check_index(domain_index, critic.n_domains());
    return class_score(critic, ad::Var::constant(image.tensor()),
                       std::vector<int>(static_cast<size_t>(image.batch()), domain_index));
}

AlphaWeights compute_alpha(const ad::Var& grad_maps) {
    if (grad_maps.value().rank() != 4) throw std::invalid_argument("compute_alpha expects (B,n,h,w)");
    const int64_t b = grad_maps.dim(0), n = grad_maps.dim(1);
    const float inv_area = 1.0f / static_cast<float>(grad_maps.dim(2) * grad_maps.dim(3));
    return {ad::reshape(ad::scale(ad::sum_to(grad_maps, {b, n, 1, 1}), inv_area), {b, n})};
}

AttentionMap attention_from_scores(const FeatureMaps& features, const ad::Var& scores,
                                   const std::vector<int>& domain_indices, bool alpha_detached, NetworkId network) {
    const ad::Var& F = features.data;
    if (!F.requires_grad())
        throw std::invalid_argument("feature maps at " + features.layer_name + " are not on the autograd graph");
    const ad::Var dF = ad::grad(ad::sum(scores), {F}, ad::Var(), !alpha_detached)[0];
    if (!dF.value().all_finite())
        throw std::runtime_error("non-finite class-score gradient at layer " + features.layer_name);
    ad::Var alpha = compute_alpha(dF).values;
    if (alpha_detached) alpha = alpha.detach();

    const int64_t b = F.dim(0), n = F.dim(1), h = F.dim(2), w = F.dim(3);
    const ad::Var weighted = ad::mul(F, ad::reshape(alpha, {b, n, 1, 1}));
    AttentionMap map;
    map.data = ad::relu(ad::reshape(ad::sum_to(weighted, {b, 1, h, w}), {b, h, w}));
    map.domain_indices = domain_indices;
    map.layer_name = features.layer_name;
    map.network = network;
    return map;
}

std::vector<int> request_domains(const AttentionRequest& req) {
    if (!req.generator || !req.critic) throw std::invalid_argument("attention request needs a generator and a critic");
    const int64_t batch = req.x.dim(0);
    std::vector<int> domains = req.domain_indices.empty() ? std::vector<int>(static_cast<size_t>(batch), req.domain_index)
                                                          : req.domain_indices;
    if (static_cast<int64_t>(domains.size()) != batch) throw std::invalid_argument("need one domain index per sample");
    for (int i : domains) check_index(i, req.critic->n_domains());
    return domains;
}

std::vector<AttentionMap> attention_for_layers(const AttentionRequest& req, const std::vector<std::string>& layers) {
    const std::vector<int> domains = request_domains(req);
    ad::GradModeGuard enable(true);
    ad::Var labels;
    if (req.target_labels) {
        labels = ad::Var::constant(*req.target_labels);
    } else {
        for (int i : domains) check_index(i, req.generator->n_domains());
        labels = ad::Var::constant(one_hot_rows(domains, req.generator->n_domains()));
    }
    const models::GeneratorOutput out = req.generator->forward(req.x, labels, layers);
    const ad::Var scores = class_score(*req.critic, out.image, domains);
    std::vector<AttentionMap> maps;
    for (const auto& name : layers)
        maps.push_back(attention_from_scores(out.features.at(name), scores, domains, req.alpha_detached, req.network));
    return maps;
}

AttentionMap compute_attention(const AttentionRequest& req) {
    return attention_for_layers(req, {req.layer_name}).front();
}

}  // namespace attnkd::attention
