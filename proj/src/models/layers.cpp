#include "attnkd/models/layers.hpp"

#include <stdexcept>

namespace attnkd::models {

ad::Var Conv2d::operator()(const ad::Var& x) const {
    ad::Var y = ad::conv2d(x, weight, geometry);
    return bias.defined() ? ad::add(y, bias) : y;
}

ad::Var ConvTranspose2d::operator()(const ad::Var& x) const { return ad::conv_transpose2d(x, weight, geometry); }

ad::Var InstanceNorm2d::operator()(const ad::Var& x) const { return instance_norm(x, gamma, beta, eps); }

Conv2d make_conv(ParameterList& params, const std::string& name, int64_t in, int64_t out, int64_t kernel,
                 int64_t stride, int64_t pad, bool with_bias, Rng& rng) {
    const int64_t fan_in = in * kernel * kernel;
    Conv2d c;
    c.weight = params.add(name + ".weight", uniform_fan_in({out, in, kernel, kernel}, fan_in, rng));
    if (with_bias) c.bias = params.add(name + ".bias", uniform_fan_in({1, out, 1, 1}, fan_in, rng));
    c.geometry = {stride, pad};
    return c;
}

ConvTranspose2d make_conv_transpose(ParameterList& params, const std::string& name, int64_t in, int64_t out,
                                    int64_t kernel, int64_t stride, int64_t pad, Rng& rng) {
    // fan-in follows weight dim 1 as for transposed convolutions elsewhere
    const int64_t fan_in = out * kernel * kernel;
    ConvTranspose2d c;
    c.weight = params.add(name + ".weight", uniform_fan_in({in, out, kernel, kernel}, fan_in, rng));
    c.geometry = {stride, pad};
    return c;
}

InstanceNorm2d make_instance_norm(ParameterList& params, const std::string& name, int64_t channels) {
    InstanceNorm2d n;
    n.gamma = params.add(name + ".gamma", Tensor({1, channels, 1, 1}, 1.0f));
    n.beta = params.add(name + ".beta", Tensor({1, channels, 1, 1}, 0.0f));
    return n;
}

ad::Var instance_norm(const ad::Var& x, const ad::Var& gamma, const ad::Var& beta, float eps) {
    if (x.value().rank() != 4) throw std::invalid_argument("instance_norm expects NCHW input");
    const Shape stat_shape{x.dim(0), x.dim(1), 1, 1};
    const float inv_hw = 1.0f / static_cast<float>(x.dim(2) * x.dim(3));
    const ad::Var mean = ad::scale(ad::sum_to(x, stat_shape), inv_hw);
    const ad::Var centered = ad::sub(x, mean);
    const ad::Var var = ad::scale(ad::sum_to(ad::square(centered), stat_shape), inv_hw);
    const ad::Var normed = ad::div(centered, ad::sqrt(ad::shift(var, eps)));
    return ad::add(ad::mul(normed, gamma), beta);
}

ad::Var tile_labels(const ad::Var& labels, int64_t h, int64_t w) {
    if (labels.value().rank() != 2) throw std::invalid_argument("labels must have shape (B, K)");
    const ad::Var r = ad::reshape(labels, {labels.dim(0), labels.dim(1), 1, 1});
    return ad::expand(r, {labels.dim(0), labels.dim(1), h, w});
}

}  // namespace attnkd::models
