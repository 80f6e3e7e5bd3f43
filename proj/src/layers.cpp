#include "layers.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Core>

namespace yunet::detail {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void im2col(const T* src, int channels, int height, int width, int kernel, int stride, int pad,
            int out_h, int out_w, T* cols) {
    const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                T* row = cols + ((static_cast<std::size_t>(c) * kernel + ky) * kernel + kx) * plane;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    T* dst = row + static_cast<std::size_t>(oy) * out_w;
                    if (iy < 0 || iy >= height) {
                        std::fill(dst, dst + out_w, T{0});
                        continue;
                    }
                    const T* line = src + (static_cast<std::size_t>(c) * height + iy) * width;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[ox] = (ix < 0 || ix >= width) ? T{0} : line[ix];
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const T* cols, int channels, int height, int width, int kernel, int stride, int pad,
            int out_h, int out_w, T* dst) {
    const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const T* row = cols + ((static_cast<std::size_t>(c) * kernel + ky) * kernel + kx) * plane;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= height) continue;
                    T* line = dst + (static_cast<std::size_t>(c) * height + iy) * width;
                    const T* src = row + static_cast<std::size_t>(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < width) line[ix] += src[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
T sigmoid(T x) {
    return T{1} / (T{1} + std::exp(-x));
}

} // namespace

// ---------------------------------------------------------------------------
// ParamBuilder

template <typename T>
std::size_t ParamBuilder<T>::kaiming(const std::string& name, Shape shape, int fan_in) {
    BasicTensor<T> t(std::move(shape));
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : t.values()) v = static_cast<T>(dist(rng_));
    return params_.add(name, std::move(t));
}

template <typename T>
std::size_t ParamBuilder<T>::constant(const std::string& name, Shape shape, T value) {
    return params_.add(name, BasicTensor<T>(std::move(shape), value));
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T> Conv2d<T>::make(ParamBuilder<T>& b, const std::string& name, int in, int out, int kernel,
                          int stride, bool with_bias) {
    Conv2d c;
    c.in_channels = in;
    c.out_channels = out;
    c.kernel = kernel;
    c.stride = stride;
    c.pad = kernel / 2;
    c.weight = b.kaiming(name + ".weight", {out, in, kernel, kernel}, in * kernel * kernel);
    if (with_bias) c.bias = static_cast<long>(b.constant(name + ".bias", {out}, T{0}));
    return c;
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
    const int oh = (in[2] + 2 * pad - kernel) / stride + 1;
    const int ow = (in[3] + 2 * pad - kernel) / stride + 1;
    return {in[0], out_channels, oh, ow};
}

template <typename T>
BasicTensor<T> Conv2d<T>::forward(const ParameterSet<T>& p, const BasicTensor<T>& x) const {
    const Shape os = output_shape(x.shape());
    BasicTensor<T> y(os);
    const int k_rows = in_channels * kernel * kernel;
    const int plane = os[2] * os[3];
    const bool pointwise = kernel == 1 && stride == 1;
    std::vector<T> cols(pointwise ? 0 : static_cast<std::size_t>(k_rows) * plane);
    ConstMatMap<T> w(p.tensor(weight).data(), out_channels, k_rows);
    for (int n = 0; n < x.n(); ++n) {
        const T* src = x.sample(n);
        if (!pointwise) {
            im2col(src, in_channels, x.h(), x.w(), kernel, stride, pad, os[2], os[3], cols.data());
            src = cols.data();
        }
        ConstMatMap<T> c(src, k_rows, plane);
        MatMap<T> out(y.sample(n), out_channels, plane);
        out.noalias() = w * c;
        if (bias >= 0) {
            const T* bv = p.tensor(static_cast<std::size_t>(bias)).data();
            for (int o = 0; o < out_channels; ++o) out.row(o).array() += bv[o];
        }
    }
    return y;
}

template <typename T>
BasicTensor<T> Conv2d<T>::backward(const ParameterSet<T>& p, const BasicTensor<T>& x,
                                   const BasicTensor<T>& dy, ParameterSet<T>& g) const {
    BasicTensor<T> dx(x.shape());
    const int k_rows = in_channels * kernel * kernel;
    const int plane = dy.h() * dy.w();
    const bool pointwise = kernel == 1 && stride == 1;
    std::vector<T> cols(pointwise ? 0 : static_cast<std::size_t>(k_rows) * plane);
    std::vector<T> dcols(pointwise ? 0 : static_cast<std::size_t>(k_rows) * plane);
    ConstMatMap<T> w(p.tensor(weight).data(), out_channels, k_rows);
    MatMap<T> dw(g.tensor(weight).data(), out_channels, k_rows);
    for (int n = 0; n < x.n(); ++n) {
        const T* src = x.sample(n);
        if (!pointwise) {
            im2col(src, in_channels, x.h(), x.w(), kernel, stride, pad, dy.h(), dy.w(), cols.data());
            src = cols.data();
        }
        ConstMatMap<T> c(src, k_rows, plane);
        ConstMatMap<T> d(dy.sample(n), out_channels, plane);
        dw.noalias() += d * c.transpose();
        if (bias >= 0) {
            T* db = g.tensor(static_cast<std::size_t>(bias)).data();
            for (int o = 0; o < out_channels; ++o) db[o] += d.row(o).sum();
        }
        if (pointwise) {
            MatMap<T> dxs(dx.sample(n), k_rows, plane);
            dxs.noalias() = w.transpose() * d;
        } else {
            MatMap<T> dc(dcols.data(), k_rows, plane);
            dc.noalias() = w.transpose() * d;
            col2im(dcols.data(), in_channels, x.h(), x.w(), kernel, stride, pad, dy.h(), dy.w(),
                   dx.sample(n));
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// GroupNorm

int group_count(int channels) {
    for (int g : {8, 4, 2}) {
        if (channels % g == 0 && channels / g >= 2) return g;
    }
    return 1;
}

template <typename T>
GroupNorm<T> GroupNorm<T>::make(ParamBuilder<T>& b, const std::string& name, int channels) {
    GroupNorm gn;
    gn.channels = channels;
    gn.groups = group_count(channels);
    gn.gamma = b.constant(name + ".gamma", {channels}, T{1});
    gn.beta = b.constant(name + ".beta", {channels}, T{0});
    return gn;
}

template <typename T>
BasicTensor<T> GroupNorm<T>::forward(const ParameterSet<T>& p, const BasicTensor<T>& x,
                                     Cache* cache) const {
    BasicTensor<T> y(x.shape());
    const int per_group = channels / groups;
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    const std::size_t m = per_group * plane;
    const T* gamma_v = p.tensor(gamma).data();
    const T* beta_v = p.tensor(beta).data();
    if (cache) {
        cache->normalized = BasicTensor<T>(x.shape());
        cache->inv_std.assign(static_cast<std::size_t>(x.n()) * groups, T{0});
    }
    for (int n = 0; n < x.n(); ++n) {
        for (int g = 0; g < groups; ++g) {
            const std::size_t offset = (static_cast<std::size_t>(n) * channels + g * per_group) * plane;
            const T* src = x.data() + offset;
            double sum = 0.0;
            for (std::size_t i = 0; i < m; ++i) sum += src[i];
            const double mean = sum / static_cast<double>(m);
            double var = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double d = src[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(m);
            const T inv = static_cast<T>(1.0 / std::sqrt(var + eps));
            const T mean_t = static_cast<T>(mean);
            T* dst = y.data() + offset;
            T* norm = cache ? cache->normalized.data() + offset : nullptr;
            for (int cc = 0; cc < per_group; ++cc) {
                const int ch = g * per_group + cc;
                for (std::size_t i = 0; i < plane; ++i) {
                    const std::size_t k = cc * plane + i;
                    const T xh = (src[k] - mean_t) * inv;
                    if (norm) norm[k] = xh;
                    dst[k] = gamma_v[ch] * xh + beta_v[ch];
                }
            }
            if (cache) cache->inv_std[static_cast<std::size_t>(n) * groups + g] = inv;
        }
    }
    return y;
}

template <typename T>
BasicTensor<T> GroupNorm<T>::backward(const ParameterSet<T>& p, const Cache& cache,
                                      const BasicTensor<T>& dy, ParameterSet<T>& g) const {
    BasicTensor<T> dx(dy.shape());
    const int per_group = channels / groups;
    const std::size_t plane = static_cast<std::size_t>(dy.h()) * dy.w();
    const std::size_t m = per_group * plane;
    const T* gamma_v = p.tensor(gamma).data();
    T* dgamma = g.tensor(gamma).data();
    T* dbeta = g.tensor(beta).data();
    std::vector<T> dxhat(m);
    for (int n = 0; n < dy.n(); ++n) {
        for (int grp = 0; grp < groups; ++grp) {
            const std::size_t offset = (static_cast<std::size_t>(n) * channels + grp * per_group) * plane;
            const T* d = dy.data() + offset;
            const T* xh = cache.normalized.data() + offset;
            double sum_dxhat = 0.0;
            double sum_dxhat_xhat = 0.0;
            for (int cc = 0; cc < per_group; ++cc) {
                const int ch = grp * per_group + cc;
                double dg = 0.0;
                double db = 0.0;
                for (std::size_t i = 0; i < plane; ++i) {
                    const std::size_t k = cc * plane + i;
                    dg += static_cast<double>(d[k]) * xh[k];
                    db += d[k];
                    dxhat[k] = d[k] * gamma_v[ch];
                    sum_dxhat += dxhat[k];
                    sum_dxhat_xhat += static_cast<double>(dxhat[k]) * xh[k];
                }
                dgamma[ch] += static_cast<T>(dg);
                dbeta[ch] += static_cast<T>(db);
            }
            const T inv = cache.inv_std[static_cast<std::size_t>(n) * groups + grp];
            const T mean_d = static_cast<T>(sum_dxhat / static_cast<double>(m));
            const T mean_dx = static_cast<T>(sum_dxhat_xhat / static_cast<double>(m));
            T* out = dx.data() + offset;
            for (std::size_t k = 0; k < m; ++k) out[k] = inv * (dxhat[k] - mean_d - xh[k] * mean_dx);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// ConvBlock

template <typename T>
ConvBlock<T> ConvBlock<T>::make(ParamBuilder<T>& b, const std::string& name, int in, int out,
                                int kernel, int stride) {
    ConvBlock blk;
    blk.conv = Conv2d<T>::make(b, name + ".conv", in, out, kernel, stride, false);
    blk.norm = GroupNorm<T>::make(b, name + ".norm", out);
    return blk;
}

template <typename T>
BasicTensor<T> ConvBlock<T>::forward(const ParameterSet<T>& p, const BasicTensor<T>& x,
                                     Cache* cache) const {
    BasicTensor<T> z = conv.forward(p, x);
    BasicTensor<T> a = norm.forward(p, z, cache ? &cache->norm : nullptr);
    if (cache) {
        cache->input = x;
        cache->pre_activation = a;
    }
    for (auto& v : a.values()) v = v * sigmoid(v);
    return a;
}

template <typename T>
BasicTensor<T> ConvBlock<T>::backward(const ParameterSet<T>& p, const Cache& cache,
                                      const BasicTensor<T>& dy, ParameterSet<T>& g) const {
    BasicTensor<T> da(dy.shape());
    const auto pre = cache.pre_activation.values();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const T s = sigmoid(pre[i]);
        da[i] = dy[i] * s * (T{1} + pre[i] * (T{1} - s));
    }
    BasicTensor<T> dz = norm.backward(p, cache.norm, da, g);
    return conv.backward(p, cache.input, dz, g);
}

// ---------------------------------------------------------------------------
// Bottleneck

template <typename T>
Bottleneck<T> Bottleneck<T>::make(ParamBuilder<T>& b, const std::string& name, int channels,
                                  bool shortcut) {
    Bottleneck blk;
    blk.cv1 = ConvBlock<T>::make(b, name + ".cv1", channels, channels, 1, 1);
    blk.cv2 = ConvBlock<T>::make(b, name + ".cv2", channels, channels, 3, 1);
    blk.shortcut = shortcut;
    return blk;
}

template <typename T>
BasicTensor<T> Bottleneck<T>::forward(const ParameterSet<T>& p, const BasicTensor<T>& x,
                                      Cache* cache) const {
    BasicTensor<T> h = cv1.forward(p, x, cache ? &cache->c1 : nullptr);
    BasicTensor<T> y = cv2.forward(p, h, cache ? &cache->c2 : nullptr);
    if (shortcut) add_inplace(y, x);
    return y;
}

template <typename T>
BasicTensor<T> Bottleneck<T>::backward(const ParameterSet<T>& p, const Cache& cache,
                                       const BasicTensor<T>& dy, ParameterSet<T>& g) const {
    BasicTensor<T> dh = cv2.backward(p, cache.c2, dy, g);
    BasicTensor<T> dx = cv1.backward(p, cache.c1, dh, g);
    if (shortcut) add_inplace(dx, dy);
    return dx;
}

// ---------------------------------------------------------------------------
// CspBlock

template <typename T>
CspBlock<T> CspBlock<T>::make(ParamBuilder<T>& b, const std::string& name, int in, int out,
                              int repeats, bool shortcut) {
    const int hidden = std::max(out / 2, 1);
    CspBlock blk;
    blk.cv1 = ConvBlock<T>::make(b, name + ".cv1", in, hidden, 1, 1);
    blk.cv2 = ConvBlock<T>::make(b, name + ".cv2", in, hidden, 1, 1);
    for (int i = 0; i < repeats; ++i) {
        blk.stack.push_back(Bottleneck<T>::make(b, name + ".m." + std::to_string(i), hidden, shortcut));
    }
    blk.cv3 = ConvBlock<T>::make(b, name + ".cv3", 2 * hidden, out, 1, 1);
    return blk;
}

template <typename T>
BasicTensor<T> CspBlock<T>::forward(const ParameterSet<T>& p, const BasicTensor<T>& x,
                                    Cache* cache) const {
    if (cache) cache->stack.resize(stack.size());
    BasicTensor<T> a = cv1.forward(p, x, cache ? &cache->c1 : nullptr);
    for (std::size_t i = 0; i < stack.size(); ++i) {
        a = stack[i].forward(p, a, cache ? &cache->stack[i] : nullptr);
    }
    BasicTensor<T> c = cv2.forward(p, x, cache ? &cache->c2 : nullptr);
    return cv3.forward(p, concat_channels(a, c), cache ? &cache->c3 : nullptr);
}

template <typename T>
BasicTensor<T> CspBlock<T>::backward(const ParameterSet<T>& p, const Cache& cache,
                                     const BasicTensor<T>& dy, ParameterSet<T>& g) const {
    BasicTensor<T> dcat = cv3.backward(p, cache.c3, dy, g);
    auto [da, dc] = split_channels(dcat, cv1.out_channels());
    for (std::size_t i = stack.size(); i-- > 0;) da = stack[i].backward(p, cache.stack[i], da, g);
    BasicTensor<T> dx = cv1.backward(p, cache.c1, da, g);
    add_inplace(dx, cv2.backward(p, cache.c2, dc, g));
    return dx;
}

// ---------------------------------------------------------------------------
// PoolPyramid

template <typename T>
PoolPyramid<T> PoolPyramid<T>::make(ParamBuilder<T>& b, const std::string& name, int channels) {
    const int hidden = std::max(channels / 2, 1);
    PoolPyramid blk;
    blk.cv1 = ConvBlock<T>::make(b, name + ".cv1", channels, hidden, 1, 1);
    blk.cv2 = ConvBlock<T>::make(b, name + ".cv2", 4 * hidden, channels, 1, 1);
    return blk;
}

template <typename T>
BasicTensor<T> PoolPyramid<T>::forward(const ParameterSet<T>& p, const BasicTensor<T>& x,
                                       Cache* cache) const {
    BasicTensor<T> h = cv1.forward(p, x, cache ? &cache->c1 : nullptr);
    BasicTensor<T> y1 = max_pool5(h, cache ? &cache->argmax[0] : nullptr);
    BasicTensor<T> y2 = max_pool5(y1, cache ? &cache->argmax[1] : nullptr);
    BasicTensor<T> y3 = max_pool5(y2, cache ? &cache->argmax[2] : nullptr);
    BasicTensor<T> cat = concat_channels(concat_channels(h, y1), concat_channels(y2, y3));
    return cv2.forward(p, cat, cache ? &cache->c2 : nullptr);
}

template <typename T>
BasicTensor<T> PoolPyramid<T>::backward(const ParameterSet<T>& p, const Cache& cache,
                                        const BasicTensor<T>& dy, ParameterSet<T>& g) const {
    const int hidden = cv1.out_channels();
    BasicTensor<T> dcat = cv2.backward(p, cache.c2, dy, g);
    auto [dh, rest] = split_channels(dcat, hidden);
    auto [dy1, rest2] = split_channels(rest, hidden);
    auto [dy2, dy3] = split_channels(rest2, hidden);
    const Shape& s = dh.shape();
    add_inplace(dy2, max_pool5_backward(s, cache.argmax[2], dy3));
    add_inplace(dy1, max_pool5_backward(s, cache.argmax[1], dy2));
    add_inplace(dh, max_pool5_backward(s, cache.argmax[0], dy1));
    return cv1.backward(p, cache.c1, dh, g);
}

// ---------------------------------------------------------------------------
// Stateless helpers

template <typename T>
BasicTensor<T> max_pool5(const BasicTensor<T>& x, std::vector<std::uint32_t>* argmax) {
    BasicTensor<T> y(x.shape());
    const int h = x.h();
    const int w = x.w();
    if (argmax) argmax->assign(y.size(), 0);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t planes = static_cast<std::size_t>(x.n()) * x.c();
    for (std::size_t pl = 0; pl < planes; ++pl) {
        const T* src = x.data() + pl * plane;
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                T best = -std::numeric_limits<T>::infinity();
                std::size_t best_idx = 0;
                for (int iy = std::max(oy - 2, 0); iy <= std::min(oy + 2, h - 1); ++iy) {
                    for (int ix = std::max(ox - 2, 0); ix <= std::min(ox + 2, w - 1); ++ix) {
                        const std::size_t k = static_cast<std::size_t>(iy) * w + ix;
                        if (src[k] > best) {
                            best = src[k];
                            best_idx = k;
                        }
                    }
                }
                const std::size_t o = pl * plane + static_cast<std::size_t>(oy) * w + ox;
                y[o] = best;
                if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(pl * plane + best_idx);
            }
        }
    }
    return y;
}

template <typename T>
BasicTensor<T> max_pool5_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                                  const BasicTensor<T>& dy) {
    BasicTensor<T> dx(in_shape);
    for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
    return dx;
}

template <typename T>
BasicTensor<T> upsample2x(const BasicTensor<T>& x) {
    BasicTensor<T> y({x.n(), x.c(), 2 * x.h(), 2 * x.w()});
    const int w = x.w();
    const int ow = 2 * w;
    const std::size_t planes = static_cast<std::size_t>(x.n()) * x.c();
    for (std::size_t pl = 0; pl < planes; ++pl) {
        const T* src = x.data() + pl * x.h() * w;
        T* dst = y.data() + pl * 4 * x.h() * w;
        for (int oy = 0; oy < 2 * x.h(); ++oy) {
            const T* line = src + static_cast<std::size_t>(oy / 2) * w;
            T* out = dst + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) out[ox] = line[ox / 2];
        }
    }
    return y;
}

template <typename T>
BasicTensor<T> upsample2x_backward(const BasicTensor<T>& dy) {
    BasicTensor<T> dx({dy.n(), dy.c(), dy.h() / 2, dy.w() / 2});
    const int w = dx.w();
    const int ow = dy.w();
    const std::size_t planes = static_cast<std::size_t>(dy.n()) * dy.c();
    for (std::size_t pl = 0; pl < planes; ++pl) {
        const T* src = dy.data() + pl * dy.h() * ow;
        T* dst = dx.data() + pl * dx.h() * w;
        for (int oy = 0; oy < dy.h(); ++oy) {
            const T* line = src + static_cast<std::size_t>(oy) * ow;
            T* out = dst + static_cast<std::size_t>(oy / 2) * w;
            for (int ox = 0; ox < ow; ++ox) out[ox / 2] += line[ox];
        }
    }
    return dx;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    BasicTensor<T> y({a.n(), a.c() + b.c(), a.h(), a.w()});
    const std::size_t sa = a.size() / a.n();
    const std::size_t sb = b.size() / b.n();
    for (int n = 0; n < a.n(); ++n) {
        std::copy_n(a.sample(n), sa, y.sample(n));
        std::copy_n(b.sample(n), sb, y.sample(n) + sa);
    }
    return y;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& x, int first) {
    BasicTensor<T> a({x.n(), first, x.h(), x.w()});
    BasicTensor<T> b({x.n(), x.c() - first, x.h(), x.w()});
    const std::size_t sa = a.size() / a.n();
    const std::size_t sb = b.size() / b.n();
    for (int n = 0; n < x.n(); ++n) {
        std::copy_n(x.sample(n), sa, a.sample(n));
        std::copy_n(x.sample(n) + sa, sb, b.sample(n));
    }
    return {std::move(a), std::move(b)};
}

template <typename T>
void add_inplace(BasicTensor<T>& dst, const BasicTensor<T>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

#define YUNET_INSTANTIATE(T)                                                                        \
    template class ParamBuilder<T>;                                                                 \
    template struct Conv2d<T>;                                                                      \
    template struct GroupNorm<T>;                                                                   \
    template struct ConvBlock<T>;                                                                   \
    template struct Bottleneck<T>;                                                                  \
    template struct CspBlock<T>;                                                                    \
    template struct PoolPyramid<T>;                                                                 \
    template BasicTensor<T> max_pool5(const BasicTensor<T>&, std::vector<std::uint32_t>*);         \
    template BasicTensor<T> max_pool5_backward(const Shape&, const std::vector<std::uint32_t>&,    \
                                               const BasicTensor<T>&);                             \
    template BasicTensor<T> upsample2x(const BasicTensor<T>&);                                      \
    template BasicTensor<T> upsample2x_backward(const BasicTensor<T>&);                             \
    template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);          \
    template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>&, int); \
    template void add_inplace(BasicTensor<T>&, const BasicTensor<T>&);

YUNET_INSTANTIATE(float)
YUNET_INSTANTIATE(double)

#undef YUNET_INSTANTIATE

} // namespace yunet::detail
