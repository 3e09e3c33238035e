#include <cmath>

#include "attnkd/autograd/ops.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace attnkd;
using ad::Var;
using testing::gradient_check;
using testing::random_tensor;

namespace {
// Random projection so every output element contributes with a distinct weight.
Var project(const Var& y, uint64_t seed) {
    Rng rng(seed);
    return ad::sum(ad::mul(y, Var::constant(random_tensor(y.shape(), rng))));
}
}  // namespace

TEST_CASE("elementwise ops match finite differences") {
    Rng rng(1);
    const Tensor x = random_tensor({2, 3, 4}, rng, 0.2f, 1.5f);
    const Tensor other = random_tensor({2, 3, 4}, rng, 0.5f, 1.5f);
    const Var o = Var::constant(other);
    CHECK(gradient_check([&](const Var& v) { return project(ad::mul(v, o), 1); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::div(o, v), 2); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::sqrt(v), 3); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::log(v), 4); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::exp(v), 5); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::tanh(v), 6); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::sigmoid(v), 7); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::softplus(v), 8); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::square(v), 9); }, x) < 1e-2);
}

TEST_CASE("broadcasting ops reduce gradients to operand shapes") {
    Rng rng(2);
    const Tensor x = random_tensor({2, 3, 4, 5}, rng);
    const Var per_channel = Var::constant(random_tensor({1, 3, 1, 1}, rng, 0.5f, 1.5f));
    CHECK(gradient_check([&](const Var& v) { return project(ad::mul(v, per_channel), 1); }, x) < 1e-2);
    const Tensor c = random_tensor({1, 3, 1, 1}, rng, 0.5f, 1.5f);
    const Var big = Var::constant(x);
    CHECK(gradient_check([&](const Var& v) { return project(ad::div(big, v), 2); }, c) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::sum_to(v, {2, 3, 1, 1}), 3); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::sum_to(v, {1, 3, 1, 5}), 4); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::expand(v, {2, 3, 4, 5}), 5); }, c) < 1e-2);
}

TEST_CASE("sum_to and expand agree with loop oracles") {
    Rng rng(3);
    const Tensor x = random_tensor({2, 3, 4, 5}, rng);
    const Tensor s = tops::sum_to(x, {1, 3, 1, 5});
    for (int c = 0; c < 3; ++c)
        for (int w = 0; w < 5; ++w) {
            double acc = 0;
            for (int n = 0; n < 2; ++n)
                for (int h = 0; h < 4; ++h) acc += x.at(n, c, h, w);
            CHECK(s.at(0, c, 0, w) == doctest::Approx(acc).epsilon(1e-6));
        }
    const Tensor e = tops::expand(s, {2, 3, 4, 5});
    CHECK(e.at(1, 2, 3, 4) == s.at(0, 2, 0, 4));
    const Tensor b = tops::binary(kernels::BinaryOp::sub, x, s);
    CHECK(b.at(1, 1, 2, 3) == x.at(1, 1, 2, 3) - s.at(0, 1, 0, 3));
}

TEST_CASE("convolution ops match a direct loop oracle") {
    Rng rng(4);
    const Tensor x = random_tensor({2, 3, 7, 6}, rng);
    const Tensor w = random_tensor({4, 3, 3, 3}, rng);
    const tops::ConvGeometry g{2, 1};
    const Tensor y = tops::conv2d(x, w, g);
    REQUIRE(y.shape() == Shape{2, 4, 4, 3});
    double worst = 0.0;
    for (int n = 0; n < 2; ++n)
        for (int o = 0; o < 4; ++o)
            for (int oy = 0; oy < 4; ++oy)
                for (int ox = 0; ox < 3; ++ox) {
                    double acc = 0;
                    for (int c = 0; c < 3; ++c)
                        for (int kh = 0; kh < 3; ++kh)
                            for (int kw = 0; kw < 3; ++kw) {
                                const int iy = oy * 2 + kh - 1, ix = ox * 2 + kw - 1;
                                if (iy < 0 || iy >= 7 || ix < 0 || ix >= 6) continue;
                                acc += double(x.at(n, c, iy, ix)) * w.at(o, c, kh, kw);
                            }
                    worst = std::max(worst, std::fabs(acc - y.at(n, o, oy, ox)));
                }
    CHECK(worst < 1e-5);
}

TEST_CASE("convolution gradients match finite differences") {
    Rng rng(5);
    const Tensor x = random_tensor({2, 3, 6, 6}, rng);
    const Tensor w = random_tensor({4, 3, 4, 4}, rng);
    const tops::ConvGeometry g{2, 1};
    const Var wc = Var::constant(w), xc = Var::constant(x);
    CHECK(gradient_check([&](const Var& v) { return project(ad::conv2d(v, wc, g), 1); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::conv2d(xc, v, g), 2); }, w) < 1e-2);
    const Tensor wt = random_tensor({3, 2, 4, 4}, rng);
    const Var wtc = Var::constant(wt);
    CHECK(gradient_check([&](const Var& v) { return project(ad::conv_transpose2d(v, wtc, g), 3); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::conv_transpose2d(xc, v, g), 4); }, wt) < 1e-2);
}

TEST_CASE("double backward through convolution and leaky relu matches finite differences") {
    // f(w) = || d/dx sum(leaky(conv(x, w))) ||^2, the shape of a gradient penalty.
    Rng rng(6);
    const Tensor x = random_tensor({1, 2, 5, 5}, rng);
    const Tensor w = random_tensor({3, 2, 3, 3}, rng);
    const tops::ConvGeometry g{1, 1};
    const Var w2 = Var::constant(random_tensor({2, 3, 3, 3}, rng));
    auto f = [&](const Var& wv) {
        Var xv = Var::parameter(x);
        Var y = ad::leaky_relu(ad::conv2d(xv, wv, g), 0.2f);
        Var out = project(ad::conv2d(y, w2, g), 7);
        Var gx = ad::grad(out, {xv}, Var(), true)[0];
        return ad::sum(ad::square(gx));
    };
    CHECK(gradient_check(f, w, 1e-3, 1e-1) < 1e-2);
}

TEST_CASE("grad returns zeros for unreachable inputs and respects targets inside the graph") {
    Var a = Var::parameter(Tensor({2}, std::vector<float>{1, 2}));
    Var b = Var::parameter(Tensor({2}, std::vector<float>{3, 4}));
    Var mid = ad::mul(a, a);
    Var out = ad::sum(ad::scale(mid, 3.0f));
    auto gs = ad::grad(out, {b, mid, a});
    CHECK(gs[0].value()[0] == 0.0f);
    CHECK(gs[1].value()[1] == 3.0f);
    CHECK(gs[2].value()[1] == 12.0f);  // 3 * 2a
}

TEST_CASE("no-grad mode records nothing") {
    Var a = Var::parameter(Tensor({1}, 2.0f));
    ad::NoGradGuard ng;
    Var b = ad::mul(a, a);
    CHECK_FALSE(b.requires_grad());
    CHECK(b.is_leaf());
}

TEST_CASE("reduce max/min route gradient to the first extremum") {
    Var a = Var::parameter(Tensor({1, 1, 2, 2}, std::vector<float>{1, 5, 5, -2}));
    Var mx = ad::reduce_max_to(a, {1, 1, 1, 1});
    Var mn = ad::reduce_min_to(a, {1, 1, 1, 1});
    CHECK(mx.item() == 5.0f);
    CHECK(mn.item() == -2.0f);
    auto g = ad::grad(ad::add(mx, ad::scale(mn, 2.0f)), {a})[0].value();
    CHECK(g[0] == 0.0f);
    CHECK(g[1] == 1.0f);
    CHECK(g[2] == 0.0f);
    CHECK(g[3] == 2.0f);
}

TEST_CASE("channel concat and slice are adjoint") {
    Rng rng(8);
    const Tensor x = random_tensor({2, 5, 3, 3}, rng);
    const Var other = Var::constant(random_tensor({2, 2, 3, 3}, rng));
    CHECK(gradient_check([&](const Var& v) { return project(ad::concat_channels({other, v}), 1); }, x) < 1e-2);
    CHECK(gradient_check([&](const Var& v) { return project(ad::slice_channels(v, 1, 3), 2); }, x) < 1e-2);
}

TEST_CASE("sqrt_safe has a zero derivative at zero") {
    using namespace attnkd;
    const ad::Var x = ad::Var::parameter(Tensor({3}, {0.0f, 4.0f, 0.25f}));
    const Tensor g = ad::grad(ad::sum(ad::sqrt_safe(x)), {x})[0].value();
    CHECK(g[0] == 0.0f);
    CHECK(g[1] == doctest::Approx(0.25f));
    CHECK(g[2] == doctest::Approx(1.0f));
    Rng rng(1);
    CHECK(testing::gradient_check([](const ad::Var& v) { return ad::sum(ad::sqrt_safe(v)); },
                                  testing::random_tensor({2, 3}, rng, 0.5f, 2.0f)) < 1e-2);
}
