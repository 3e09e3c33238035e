#include "attnkd/core/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace attnkd::tops {
namespace {

Shape pad_left(const Shape& s, size_t rank) {
    if (s.size() > rank) throw std::invalid_argument("shape " + shape_str(s) + " has too many dims");
    Shape r(rank - s.size(), 1);
    r.insert(r.end(), s.begin(), s.end());
    return r;
}

std::vector<int64_t> strides_of(const Shape& s) {
    std::vector<int64_t> st(s.size(), 1);
    for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
    return st;
}

// Collapsed iteration plan for a contiguous output with up to two broadcast inputs.
struct Plan {
    std::vector<int64_t> dims;
    std::vector<int64_t> sa;
    std::vector<int64_t> sb;
};

Plan make_plan(const Shape& out, const Shape& a_in, const Shape& b_in) {
    const size_t rank = out.size();
    const Shape a = pad_left(a_in, rank);
    const Shape b = pad_left(b_in, rank);
    auto sta = strides_of(a);
    auto stb = strides_of(b);
    Plan p;
    for (size_t i = 0; i < rank; ++i) {
        if (out[i] == 1) continue;
        const int64_t sa = a[i] == 1 ? 0 : sta[i];
        const int64_t sb = b[i] == 1 ? 0 : stb[i];
        if (!p.dims.empty()) {
            const int64_t d = out[i];
            if (p.sa.back() == sa * d && p.sb.back() == sb * d) {
                p.dims.back() *= d;
                p.sa.back() = sa;
                p.sb.back() = sb;
                continue;
            }
        }
        p.dims.push_back(out[i]);
        p.sa.push_back(sa);
        p.sb.push_back(sb);
    }
    if (p.dims.empty()) {
        p.dims = {1};
        p.sa = {0};
        p.sb = {0};
    }
    return p;
}

// Calls f(outer_linear, off_a, off_b) for every outer index of the plan.
template <class F>
void for_each_outer(const Plan& p, F&& f) {
    const size_t r = p.dims.size();
    if (r == 1) {
        f(int64_t{0}, int64_t{0}, int64_t{0});
        return;
    }
    std::vector<int64_t> idx(r - 1, 0);
    int64_t outer_total = 1;
    for (size_t i = 0; i + 1 < r; ++i) outer_total *= p.dims[i];
    int64_t oa = 0, ob = 0;
    for (int64_t lin = 0; lin < outer_total; ++lin) {
        f(lin, oa, ob);
        for (int i = static_cast<int>(r) - 2; i >= 0; --i) {
            ++idx[i];
            oa += p.sa[i];
            ob += p.sb[i];
            if (idx[i] < p.dims[i]) break;
            oa -= p.sa[i] * idx[i];
            ob -= p.sb[i] * idx[i];
            idx[i] = 0;
        }
    }
}

float apply_op(BinaryOp op, float x, float y) {
    switch (op) {
        case BinaryOp::add: return x + y;
        case BinaryOp::sub: return x - y;
        case BinaryOp::mul: return x * y;
        case BinaryOp::div: return x / y;
    }
    return 0.0f;
}

}  // namespace

Shape broadcast_shape(const Shape& a_in, const Shape& b_in) {
    const size_t rank = std::max(a_in.size(), b_in.size());
    const Shape a = pad_left(a_in, rank);
    const Shape b = pad_left(b_in, rank);
    Shape out(rank);
    for (size_t i = 0; i < rank; ++i) {
        if (a[i] == b[i] || b[i] == 1) out[i] = a[i];
        else if (a[i] == 1) out[i] = b[i];
        else throw std::invalid_argument("cannot broadcast " + shape_str(a_in) + " with " + shape_str(b_in));
    }
    return out;
}

Tensor binary(BinaryOp op, const Tensor& a, const Tensor& b) {
    const auto& kt = kernels::active();
    if (a.shape() == b.shape()) {
        Tensor out(a.shape());
        kt.binary(op, kernels::BroadcastMode::vv, a.ptr(), b.ptr(), out.ptr(), a.numel());
        return out;
    }
    const Shape oshape = broadcast_shape(a.shape(), b.shape());
    Tensor out(oshape);
    const Plan p = make_plan(oshape, a.shape(), b.shape());
    const int64_t inner = p.dims.back();
    const int64_t ia = p.sa.back();
    const int64_t ib = p.sb.back();
    float* o = out.ptr();
    for_each_outer(p, [&](int64_t lin, int64_t oa, int64_t ob) {
        float* dst = o + lin * inner;
        const float* pa = a.ptr() + oa;
        const float* pb = b.ptr() + ob;
        if (ia && ib) kt.binary(op, kernels::BroadcastMode::vv, pa, pb, dst, inner);
        else if (ia) kt.binary(op, kernels::BroadcastMode::vs, pa, pb, dst, inner);
        else if (ib) kt.binary(op, kernels::BroadcastMode::sv, pa, pb, dst, inner);
        else std::fill(dst, dst + inner, apply_op(op, *pa, *pb));
    });
    return out;
}

Tensor unary(UnaryOp op, const Tensor& a, float param) {
    Tensor out(a.shape());
    kernels::active().unary(op, a.ptr(), out.ptr(), a.numel(), param);
    return out;
}

Tensor sum_to(const Tensor& a, const Shape& shape_in) {
    if (a.shape() == shape_in) return a;
    const size_t rank = a.shape().size();
    const Shape target = pad_left(shape_in, rank);
    // Validate and build (len, reduced) groups.
    std::vector<int64_t> lens;
    std::vector<bool> reduced;
    for (size_t i = 0; i < rank; ++i) {
        const int64_t d = a.shape()[i];
        if (target[i] != d && target[i] != 1)
            throw std::invalid_argument("sum_to: " + shape_str(a.shape()) + " -> " + shape_str(shape_in));
        if (d == 1) continue;
        const bool red = target[i] == 1;
        if (!lens.empty() && reduced.back() == red) {
            lens.back() *= d;
        } else {
            lens.push_back(d);
            reduced.push_back(red);
        }
    }
    Tensor out(shape_in);
    if (lens.empty()) {
        out[0] = a[0];
        return out;
    }
    std::vector<double> acc(static_cast<size_t>(out.numel()), 0.0);
    const size_t g = lens.size();
    std::vector<int64_t> ostride(g, 0);
    {
        int64_t s = 1;
        for (int i = static_cast<int>(g) - 1; i >= 0; --i) {
            if (!reduced[i]) {
                ostride[i] = s;
                s *= lens[i];
            }
        }
    }
    const int64_t inner = lens.back();
    const bool inner_reduced = reduced.back();
    const auto& kt = kernels::active();
    std::vector<int64_t> idx(g, 0);
    int64_t outer_total = 1;
    for (size_t i = 0; i + 1 < g; ++i) outer_total *= lens[i];
    int64_t ooff = 0;
    const float* src = a.ptr();
    for (int64_t lin = 0; lin < outer_total; ++lin) {
        const float* row = src + lin * inner;
        if (inner_reduced) {
            acc[static_cast<size_t>(ooff)] += kt.sum(row, inner);
        } else {
            double* dst = acc.data() + ooff;
            for (int64_t j = 0; j < inner; ++j) dst[j] += row[j];
        }
        for (int i = static_cast<int>(g) - 2; i >= 0; --i) {
            ++idx[i];
            ooff += ostride[i];
            if (idx[i] < lens[i]) break;
            ooff -= ostride[i] * idx[i];
            idx[i] = 0;
        }
    }
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = static_cast<float>(acc[static_cast<size_t>(i)]);
    return out;
}

Tensor expand(const Tensor& a, const Shape& shape) {
    if (a.shape() == shape) return a;
    const Shape check = broadcast_shape(shape, a.shape());
    if (check != shape) throw std::invalid_argument("expand: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    Tensor out(shape);
    const Plan p = make_plan(shape, a.shape(), a.shape());
    const int64_t inner = p.dims.back();
    const int64_t ia = p.sa.back();
    float* o = out.ptr();
    for_each_outer(p, [&](int64_t lin, int64_t oa, int64_t) {
        float* dst = o + lin * inner;
        const float* pa = a.ptr() + oa;
        if (ia) std::memcpy(dst, pa, static_cast<size_t>(inner) * sizeof(float));
        else std::fill(dst, dst + inner, *pa);
    });
    return out;
}

double sum(const Tensor& a) { return kernels::active().sum(a.ptr(), a.numel()); }

double mean(const Tensor& a) {
    if (a.numel() == 0) throw std::invalid_argument("mean of empty tensor");
    return sum(a) / static_cast<double>(a.numel());
}

Extremum reduce_extremum(const Tensor& a, const Shape& shape_in, bool take_max) {
    const size_t rank = a.shape().size();
    const Shape target = pad_left(shape_in, rank);
    for (size_t i = 0; i < rank; ++i) {
        if (target[i] != a.shape()[i] && target[i] != 1)
            throw std::invalid_argument("reduce_extremum: " + shape_str(a.shape()) + " -> " + shape_str(shape_in));
    }
    const auto tstr = strides_of(target);
    std::vector<int64_t> ostride(rank);
    for (size_t i = 0; i < rank; ++i) ostride[i] = target[i] == 1 ? 0 : tstr[i];

    Extremum r{Tensor(shape_in), Tensor(a.shape(), 0.0f)};
    const int64_t n_out = r.value.numel();
    std::vector<int64_t> best(static_cast<size_t>(n_out), -1);
    std::vector<int64_t> idx(rank, 0);
    int64_t ooff = 0;
    for (int64_t lin = 0; lin < a.numel(); ++lin) {
        auto& b = best[static_cast<size_t>(ooff)];
        const float v = a[lin];
        if (b < 0 || (take_max ? v > a[b] : v < a[b])) b = lin;
        for (int i = static_cast<int>(rank) - 1; i >= 0; --i) {
            ++idx[i];
            ooff += ostride[i];
            if (idx[i] < a.shape()[i]) break;
            ooff -= ostride[i] * idx[i];
            idx[i] = 0;
        }
    }
    for (int64_t o = 0; o < n_out; ++o) {
        const int64_t b = best[static_cast<size_t>(o)];
        r.value[o] = a[b];
        r.mask[b] = 1.0f;
    }
    return r;
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose2d expects a matrix");
    const int64_t rows = a.dim(0), cols = a.dim(1);
    Tensor out(Shape{cols, rows});
    constexpr int64_t kB = 32;
    for (int64_t i0 = 0; i0 < rows; i0 += kB)
        for (int64_t j0 = 0; j0 < cols; j0 += kB)
            for (int64_t i = i0; i < std::min(rows, i0 + kB); ++i)
                for (int64_t j = j0; j < std::min(cols, j0 + kB); ++j) out[j * rows + i] = a[i * cols + j];
    return out;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    const Shape& s0 = parts[0]->shape();
    if (s0.size() != 4) throw std::invalid_argument("concat_channels expects NCHW tensors");
    int64_t total_c = 0;
    for (const Tensor* t : parts) {
        const Shape& s = t->shape();
        if (s.size() != 4 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3])
            throw std::invalid_argument("concat_channels: incompatible shape " + shape_str(s));
        total_c += s[1];
    }
    const int64_t n = s0[0], hw = s0[2] * s0[3];
    Tensor out(Shape{n, total_c, s0[2], s0[3]});
    for (int64_t b = 0; b < n; ++b) {
        float* dst = out.ptr() + b * total_c * hw;
        for (const Tensor* t : parts) {
            const int64_t block = t->dim(1) * hw;
            std::memcpy(dst, t->ptr() + b * block, static_cast<size_t>(block) * sizeof(float));
            dst += block;
        }
    }
    return out;
}

Tensor slice_channels(const Tensor& a, int64_t start, int64_t len) {
    if (a.rank() != 4 || start < 0 || start + len > a.dim(1))
        throw std::invalid_argument("slice_channels out of range for " + shape_str(a.shape()));
    const int64_t n = a.dim(0), c = a.dim(1), hw = a.dim(2) * a.dim(3);
    Tensor out(Shape{n, len, a.dim(2), a.dim(3)});
    for (int64_t b = 0; b < n; ++b)
        std::memcpy(out.ptr() + b * len * hw, a.ptr() + (b * c + start) * hw,
                    static_cast<size_t>(len * hw) * sizeof(float));
    return out;
}

Tensor pad_channels(const Tensor& a, int64_t start, int64_t total) {
    if (a.rank() != 4 || start < 0 || start + a.dim(1) > total)
        throw std::invalid_argument("pad_channels out of range for " + shape_str(a.shape()));
    const int64_t n = a.dim(0), len = a.dim(1), hw = a.dim(2) * a.dim(3);
    Tensor out(Shape{n, total, a.dim(2), a.dim(3)});
    for (int64_t b = 0; b < n; ++b)
        std::memcpy(out.ptr() + (b * total + start) * hw, a.ptr() + b * len * hw,
                    static_cast<size_t>(len * hw) * sizeof(float));
    return out;
}

int64_t conv_out_size(int64_t in, int64_t kernel, const ConvGeometry& g) {
    const int64_t span = in + 2 * g.pad - kernel;
    if (span < 0) throw std::invalid_argument("convolution kernel larger than padded input");
    return span / g.stride + 1;
}

namespace {

struct ConvDims {
    int64_t n, c, h, w, o, kh, kw, oh, ow;
    int64_t rows() const { return c * kh * kw; }
    int64_t p() const { return oh * ow; }
    int64_t cols() const { return n * oh * ow; }
};

ConvDims conv_dims(const Shape& x, const Shape& w, const ConvGeometry& g) {
    if (x.size() != 4 || w.size() != 4) throw std::invalid_argument("conv2d expects 4-d input and weight");
    if (x[1] != w[1])
        throw std::invalid_argument("conv2d channel mismatch: input " + shape_str(x) + " weight " + shape_str(w));
    ConvDims d{x[0], x[1], x[2], x[3], w[0], w[2], w[3], 0, 0};
    d.oh = conv_out_size(d.h, d.kh, g);
    d.ow = conv_out_size(d.w, d.kw, g);
    return d;
}

// col[r][n*P + p], r = (c*KH + kh)*KW + kw
void im2col(const float* x, const ConvDims& d, const ConvGeometry& g, float* col) {
    const int64_t cols = d.cols(), P = d.p();
    for (int64_t c = 0; c < d.c; ++c)
        for (int64_t kh = 0; kh < d.kh; ++kh)
            for (int64_t kw = 0; kw < d.kw; ++kw) {
                float* row = col + ((c * d.kh + kh) * d.kw + kw) * cols;
                for (int64_t n = 0; n < d.n; ++n) {
                    const float* plane = x + (n * d.c + c) * d.h * d.w;
                    float* dst = row + n * P;
                    for (int64_t oy = 0; oy < d.oh; ++oy) {
                        const int64_t iy = oy * g.stride + kh - g.pad;
                        float* drow = dst + oy * d.ow;
                        if (iy < 0 || iy >= d.h) {
                            std::fill(drow, drow + d.ow, 0.0f);
                            continue;
                        }
                        const float* srow = plane + iy * d.w;
                        for (int64_t ox = 0; ox < d.ow; ++ox) {
                            const int64_t ix = ox * g.stride + kw - g.pad;
                            drow[ox] = (ix >= 0 && ix < d.w) ? srow[ix] : 0.0f;
                        }
                    }
                }
            }
}

void col2im(const float* col, const ConvDims& d, const ConvGeometry& g, float* x) {
    std::fill(x, x + d.n * d.c * d.h * d.w, 0.0f);
    const int64_t cols = d.cols(), P = d.p();
    for (int64_t c = 0; c < d.c; ++c)
        for (int64_t kh = 0; kh < d.kh; ++kh)
            for (int64_t kw = 0; kw < d.kw; ++kw) {
                const float* row = col + ((c * d.kh + kh) * d.kw + kw) * cols;
                for (int64_t n = 0; n < d.n; ++n) {
                    float* plane = x + (n * d.c + c) * d.h * d.w;
                    const float* src = row + n * P;
                    for (int64_t oy = 0; oy < d.oh; ++oy) {
                        const int64_t iy = oy * g.stride + kh - g.pad;
                        if (iy < 0 || iy >= d.h) continue;
                        float* drow = plane + iy * d.w;
                        const float* srow = src + oy * d.ow;
                        for (int64_t ox = 0; ox < d.ow; ++ox) {
                            const int64_t ix = ox * g.stride + kw - g.pad;
                            if (ix >= 0 && ix < d.w) drow[ix] += srow[ox];
                        }
                    }
                }
            }
}

bool is_pointwise(const ConvDims& d, const ConvGeometry& g) {
    return d.kh == 1 && d.kw == 1 && g.stride == 1 && g.pad == 0;
}

// NCHW (N, O, P) <-> matrix (O, N*P)
void nchw_to_matrix(const float* src, int64_t n, int64_t o, int64_t p, float* dst) {
    for (int64_t b = 0; b < n; ++b)
        for (int64_t k = 0; k < o; ++k)
            std::memcpy(dst + k * n * p + b * p, src + (b * o + k) * p, static_cast<size_t>(p) * sizeof(float));
}

void matrix_to_nchw(const float* src, int64_t n, int64_t o, int64_t p, float* dst) {
    for (int64_t b = 0; b < n; ++b)
        for (int64_t k = 0; k < o; ++k)
            std::memcpy(dst + (b * o + k) * p, src + k * n * p + b * p, static_cast<size_t>(p) * sizeof(float));
}

// Column matrix (rows x N*P) for x; pointwise convs reuse x's layout.
std::vector<float> columns_for(const Tensor& x, const ConvDims& d, const ConvGeometry& g) {
    std::vector<float> col(static_cast<size_t>(d.rows() * d.cols()));
    if (is_pointwise(d, g)) nchw_to_matrix(x.ptr(), d.n, d.c, d.p(), col.data());
    else im2col(x.ptr(), d, g, col.data());
    return col;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const ConvGeometry& g) {
    const ConvDims d = conv_dims(x.shape(), w.shape(), g);
    const auto col = columns_for(x, d, g);
    std::vector<float> y2(static_cast<size_t>(d.o * d.cols()));
    kernels::active().gemm(d.o, d.cols(), d.rows(), w.ptr(), d.rows(), col.data(), d.cols(), y2.data(), d.cols(),
                           false);
    Tensor y(Shape{d.n, d.o, d.oh, d.ow});
    matrix_to_nchw(y2.data(), d.n, d.o, d.p(), y.ptr());
    return y;
}

Tensor conv2d_input_grad(const Tensor& gy, const Tensor& w, const Shape& x_shape, const ConvGeometry& g) {
    const ConvDims d = conv_dims(x_shape, w.shape(), g);
    if (gy.shape() != Shape{d.n, d.o, d.oh, d.ow})
        throw std::invalid_argument("conv2d_input_grad: gradient shape " + shape_str(gy.shape()) +
                                    " inconsistent with input " + shape_str(x_shape));
    std::vector<float> g2(static_cast<size_t>(d.o * d.cols()));
    nchw_to_matrix(gy.ptr(), d.n, d.o, d.p(), g2.data());
    const Tensor wt = transpose2d(w.reshaped(Shape{d.o, d.rows()}));
    std::vector<float> col(static_cast<size_t>(d.rows() * d.cols()));
    kernels::active().gemm(d.rows(), d.cols(), d.o, wt.ptr(), d.o, g2.data(), d.cols(), col.data(), d.cols(),
                           false);
    Tensor gx(x_shape);
    if (is_pointwise(d, g)) matrix_to_nchw(col.data(), d.n, d.c, d.p(), gx.ptr());
    else col2im(col.data(), d, g, gx.ptr());
    return gx;
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gy, const Shape& w_shape, const ConvGeometry& g) {
    const ConvDims d = conv_dims(x.shape(), w_shape, g);
    if (gy.shape() != Shape{d.n, d.o, d.oh, d.ow})
        throw std::invalid_argument("conv2d_weight_grad: gradient shape " + shape_str(gy.shape()) +
                                    " inconsistent with input " + shape_str(x.shape()));
    const auto col = columns_for(x, d, g);
    const Tensor colt = transpose2d(Tensor(Shape{d.rows(), d.cols()}, col));
    std::vector<float> g2(static_cast<size_t>(d.o * d.cols()));
    nchw_to_matrix(gy.ptr(), d.n, d.o, d.p(), g2.data());
    Tensor gw(w_shape);
    kernels::active().gemm(d.o, d.rows(), d.cols(), g2.data(), d.cols(), colt.ptr(), d.rows(), gw.ptr(), d.rows(),
                           false);
    return gw;
}

Tensor resize_bilinear(const Tensor& x, int64_t out_h, int64_t out_w) {
    if (x.rank() != 4) throw std::invalid_argument("resize_bilinear expects NCHW");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor out(Shape{n, c, out_h, out_w});
    const double sy = static_cast<double>(h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(w) / static_cast<double>(out_w);
    for (int64_t oy = 0; oy < out_h; ++oy) {
        const double fy = std::max(0.0, (oy + 0.5) * sy - 0.5);
        const int64_t y0 = std::min(static_cast<int64_t>(fy), h - 1);
        const int64_t y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (int64_t ox = 0; ox < out_w; ++ox) {
            const double fx = std::max(0.0, (ox + 0.5) * sx - 0.5);
            const int64_t x0 = std::min(static_cast<int64_t>(fx), w - 1);
            const int64_t x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - static_cast<double>(x0);
            for (int64_t b = 0; b < n; ++b)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const double v = (1 - wy) * ((1 - wx) * x.at(b, ch, y0, x0) + wx * x.at(b, ch, y0, x1)) +
                                     wy * ((1 - wx) * x.at(b, ch, y1, x0) + wx * x.at(b, ch, y1, x1));
                    out.at(b, ch, oy, ox) = static_cast<float>(v);
                }
        }
    }
    return out;
}

}  // namespace attnkd::tops
