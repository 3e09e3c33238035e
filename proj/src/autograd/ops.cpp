#include "attnkd/autograd/ops.hpp"

#include <stdexcept>

namespace attnkd::ad {

using kernels::BinaryOp;
using kernels::UnaryOp;

namespace {

Var const_like(Tensor t) { return Var::constant(std::move(t)); }

Var reduce_like(const Var& g, const Var& like) {
    return g.shape() == like.shape() ? g : sum_to(g, like.shape());
}

}  // namespace

Var add(const Var& a, const Var& b) {
    return make_op("add", tops::binary(BinaryOp::add, a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
        std::vector<Var> out(2);
        if (c.needs[0]) out[0] = reduce_like(c.grad, c.inputs[0]);
        if (c.needs[1]) out[1] = reduce_like(c.grad, c.inputs[1]);
        return out;
    });
}

Var sub(const Var& a, const Var& b) {
    return make_op("sub", tops::binary(BinaryOp::sub, a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
        std::vector<Var> out(2);
        if (c.needs[0]) out[0] = reduce_like(c.grad, c.inputs[0]);
        if (c.needs[1]) out[1] = neg(reduce_like(c.grad, c.inputs[1]));
        return out;
    });
}

Var mul(const Var& a, const Var& b) {
    return make_op("mul", tops::binary(BinaryOp::mul, a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
        std::vector<Var> out(2);
        if (c.needs[0]) out[0] = reduce_like(mul(c.grad, c.inputs[1]), c.inputs[0]);
        if (c.needs[1]) out[1] = reduce_like(mul(c.grad, c.inputs[0]), c.inputs[1]);
        return out;
    });
}

Var div(const Var& a, const Var& b) {
    return make_op("div", tops::binary(BinaryOp::div, a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
        std::vector<Var> out(2);
        if (c.needs[0]) out[0] = reduce_like(div(c.grad, c.inputs[1]), c.inputs[0]);
        // d(a/b)/db = -(a/b)/b
        if (c.needs[1]) out[1] = reduce_like(neg(div(mul(c.grad, c.self), c.inputs[1])), c.inputs[1]);
        return out;
    });
}

Var neg(const Var& a) {
    return make_op("neg", tops::unary(UnaryOp::neg, a.value()), {a},
                   [](const BackwardContext& c) { return std::vector<Var>{neg(c.grad)}; });
}

Var scale(const Var& a, float s) {
    return make_op("scale", tops::unary(UnaryOp::scale, a.value(), s), {a},
                   [s](const BackwardContext& c) { return std::vector<Var>{scale(c.grad, s)}; });
}

Var shift(const Var& a, float s) {
    return make_op("shift", tops::unary(UnaryOp::shift, a.value(), s), {a},
                   [](const BackwardContext& c) { return std::vector<Var>{c.grad}; });
}

Var square(const Var& a) {
    return make_op("square", tops::unary(UnaryOp::square, a.value()), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{mul(c.grad, scale(c.inputs[0], 2.0f))};
    });
}

Var sqrt(const Var& a) {
    return make_op("sqrt", tops::unary(UnaryOp::sqrt, a.value()), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{div(c.grad, scale(c.self, 2.0f))};
    });
}

Var sqrt_safe(const Var& a) {
    return make_op("sqrt_safe", tops::unary(UnaryOp::sqrt, a.value()), {a}, [](const BackwardContext& c) {
        Tensor alive(c.self.shape()), dead(c.self.shape());
        for (int64_t i = 0; i < alive.numel(); ++i) {
            alive[i] = c.self.value()[i] > 0.0f ? 0.5f : 0.0f;
            dead[i] = c.self.value()[i] > 0.0f ? 0.0f : 1.0f;
        }
        const Var inv = div(Var::constant(std::move(alive)), add(c.self, Var::constant(std::move(dead))));
        return std::vector<Var>{mul(c.grad, inv)};
    });
}

Var exp(const Var& a) {
    return make_op("exp", tops::unary(UnaryOp::exp, a.value()), {a},
                   [](const BackwardContext& c) { return std::vector<Var>{mul(c.grad, c.self)}; });
}

Var log(const Var& a) {
    return make_op("log", tops::unary(UnaryOp::log, a.value()), {a},
                   [](const BackwardContext& c) { return std::vector<Var>{div(c.grad, c.inputs[0])}; });
}

Var abs(const Var& a) {
    return make_op("abs", tops::unary(UnaryOp::abs, a.value()), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{mul(c.grad, const_like(tops::unary(UnaryOp::sign, c.inputs[0].value())))};
    });
}

Var relu(const Var& a) {
    return make_op("relu", tops::unary(UnaryOp::relu, a.value()), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{mul(c.grad, const_like(tops::unary(UnaryOp::leaky_mask, c.inputs[0].value(), 0.0f)))};
    });
}

Var leaky_relu(const Var& a, float slope) {
    return make_op("leaky_relu", tops::unary(UnaryOp::leaky_relu, a.value(), slope), {a},
                   [slope](const BackwardContext& c) {
                       return std::vector<Var>{
                           mul(c.grad, const_like(tops::unary(UnaryOp::leaky_mask, c.inputs[0].value(), slope)))};
                   });
}

Var tanh(const Var& a) {
    return make_op("tanh", tops::unary(UnaryOp::tanh, a.value()), {a}, [](const BackwardContext& c) {
        // 1 - y^2
        return std::vector<Var>{mul(c.grad, shift(neg(square(c.self)), 1.0f))};
    });
}

Var sigmoid(const Var& a) {
    return make_op("sigmoid", tops::unary(UnaryOp::sigmoid, a.value()), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{mul(c.grad, mul(c.self, shift(neg(c.self), 1.0f)))};
    });
}

Var softplus(const Var& a) {
    return make_op("softplus", tops::unary(UnaryOp::softplus, a.value()), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{mul(c.grad, sigmoid(c.inputs[0]))};
    });
}

Var sum_to(const Var& a, const Shape& shape) {
    if (a.shape() == shape) return a;
    return make_op("sum_to", tops::sum_to(a.value(), shape), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{expand(c.grad, c.inputs[0].shape())};
    });
}

Var expand(const Var& a, const Shape& shape) {
    if (a.shape() == shape) return a;
    return make_op("expand", tops::expand(a.value(), shape), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{sum_to(c.grad, c.inputs[0].shape())};
    });
}

Var sum(const Var& a) { return sum_to(reshape(a, Shape{a.numel()}), Shape{1}); }

Var mean(const Var& a) { return scale(sum(a), 1.0f / static_cast<float>(a.numel())); }

Var reshape(const Var& a, const Shape& shape) {
    if (a.shape() == shape) return a;
    return make_op("reshape", a.value().reshaped(shape), {a}, [](const BackwardContext& c) {
        return std::vector<Var>{reshape(c.grad, c.inputs[0].shape())};
    });
}

namespace {
Var reduce_extreme(const Var& a, const Shape& shape, bool take_max) {
    auto ext = tops::reduce_extremum(a.value(), shape, take_max);
    Var mask = Var::constant(std::move(ext.mask));
    return make_op(take_max ? "reduce_max" : "reduce_min", std::move(ext.value), {a},
                   [mask](const BackwardContext& c) {
                       return std::vector<Var>{mul(expand(c.grad, c.inputs[0].shape()), mask)};
                   });
}
}  // namespace

Var reduce_max_to(const Var& a, const Shape& shape) { return reduce_extreme(a, shape, true); }
Var reduce_min_to(const Var& a, const Shape& shape) { return reduce_extreme(a, shape, false); }

Var concat_channels(const std::vector<Var>& parts) {
    std::vector<const Tensor*> vals;
    vals.reserve(parts.size());
    for (const Var& p : parts) vals.push_back(&p.value());
    return make_op("concat_channels", tops::concat_channels(vals), parts, [](const BackwardContext& c) {
        std::vector<Var> out(c.inputs.size());
        int64_t off = 0;
        for (size_t i = 0; i < c.inputs.size(); ++i) {
            const int64_t len = c.inputs[i].dim(1);
            if (c.needs[i]) out[i] = slice_channels(c.grad, off, len);
            off += len;
        }
        return out;
    });
}

Var slice_channels(const Var& a, int64_t start, int64_t len) {
    return make_op("slice_channels", tops::slice_channels(a.value(), start, len), {a},
                   [start](const BackwardContext& c) {
                       return std::vector<Var>{pad_channels(c.grad, start, c.inputs[0].dim(1))};
                   });
}

Var pad_channels(const Var& a, int64_t start, int64_t total) {
    return make_op("pad_channels", tops::pad_channels(a.value(), start, total), {a},
                   [start](const BackwardContext& c) {
                       return std::vector<Var>{slice_channels(c.grad, start, c.inputs[0].dim(1))};
                   });
}

// conv2d, its input adjoint and its weight adjoint are the three partial
// derivatives of the trilinear form <y, conv(x, w)>, so their backward
// passes close over the same family.

Var conv2d(const Var& x, const Var& w, const tops::ConvGeometry& g) {
    return make_op("conv2d", tops::conv2d(x.value(), w.value(), g), {x, w}, [g](const BackwardContext& c) {
        std::vector<Var> out(2);
        if (c.needs[0]) out[0] = conv2d_input_grad(c.grad, c.inputs[1], c.inputs[0].shape(), g);
        if (c.needs[1]) out[1] = conv2d_weight_grad(c.inputs[0], c.grad, c.inputs[1].shape(), g);
        return out;
    });
}

Var conv2d_input_grad(const Var& gy, const Var& w, const Shape& x_shape, const tops::ConvGeometry& g) {
    return make_op("conv2d_input_grad", tops::conv2d_input_grad(gy.value(), w.value(), x_shape, g), {gy, w},
                   [g](const BackwardContext& c) {
                       std::vector<Var> out(2);
                       if (c.needs[0]) out[0] = conv2d(c.grad, c.inputs[1], g);
                       if (c.needs[1]) out[1] = conv2d_weight_grad(c.grad, c.inputs[0], c.inputs[1].shape(), g);
                       return out;
                   });
}

Var conv2d_weight_grad(const Var& x, const Var& gy, const Shape& w_shape, const tops::ConvGeometry& g) {
    return make_op("conv2d_weight_grad", tops::conv2d_weight_grad(x.value(), gy.value(), w_shape, g), {x, gy},
                   [g](const BackwardContext& c) {
                       std::vector<Var> out(2);
                       if (c.needs[0]) out[0] = conv2d_input_grad(c.inputs[1], c.grad, c.inputs[0].shape(), g);
                       if (c.needs[1]) out[1] = conv2d(c.inputs[0], c.grad, g);
                       return out;
                   });
}

Var conv_transpose2d(const Var& x, const Var& w, const tops::ConvGeometry& g) {
    if (x.value().rank() != 4 || w.value().rank() != 4 || x.dim(1) != w.dim(0))
        throw std::invalid_argument("conv_transpose2d: input " + shape_str(x.shape()) + " weight " +
                                    shape_str(w.shape()));
    const int64_t oh = (x.dim(2) - 1) * g.stride - 2 * g.pad + w.dim(2);
    const int64_t ow = (x.dim(3) - 1) * g.stride - 2 * g.pad + w.dim(3);
    return conv2d_input_grad(x, w, Shape{x.dim(0), w.dim(1), oh, ow}, g);
}

}  // namespace attnkd::ad
