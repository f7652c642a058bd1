#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "veil/core/common.hpp"
#include "veil/core/rng.hpp"
#include "veil/core/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#define VEIL_OMP_FOR _Pragma("omp parallel for schedule(static)")
#else
#define VEIL_OMP_FOR
#endif

namespace veil::nn {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapM = Eigen::Map<MatRM<T>>;
template <class T>
using CMapM = Eigen::Map<const MatRM<T>>;
template <class T>
using StridedMapM = Eigen::Map<MatRM<T>, 0, Eigen::Stride<Eigen::Dynamic, 1>>;

template <class T>
struct Param {
    std::string name;
    Tensor<T> w;
    Tensor<T> g;

    void setup(std::string n, int a, int b, int c, int d) {
        name = std::move(n);
        w = Tensor<T>(a, b, c, d);
        g = Tensor<T>(a, b, c, d);
    }
};

template <class T>
using ParamRefs = std::vector<Param<T>*>;

// ---------------------------------------------------------------------------
// im2col / col2im for grouped 2-D convolution (one sample, one group slice)

template <class T>
void im2col(const T* x, int ch, int h, int w, int k, int stride, int pad,
            int oh, int ow, T* col) {
    for (int ic = 0; ic < ch; ++ic) {
        const T* plane = x + size_t(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = col + (size_t(ic) * k * k + size_t(ky) * k + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < ow; ++ox) row[oy * ow + ox] = T(0);
                        continue;
                    }
                    const T* src = plane + size_t(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        row[oy * ow + ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <class T>
void col2im(const T* col, int ch, int h, int w, int k, int stride, int pad,
            int oh, int ow, T* x) {
    std::fill(x, x + size_t(ch) * h * w, T(0));
    for (int ic = 0; ic < ch; ++ic) {
        T* plane = x + size_t(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = col + (size_t(ic) * k * k + size_t(ky) * k + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = plane + size_t(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) dst[ix] += row[oy * ow + ox];
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Conv2d: supports groups == 1 (dense) and groups == in_ch == out_ch
// (depthwise, direct loops). Weight layout [out_ch, in_ch/groups, k, k].

template <class T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::string name, int in_ch, int out_ch, int k, int stride, int groups, Rng& rng)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(k / 2), groups_(groups) {
        require(in_ch % groups == 0 && out_ch % groups == 0, "conv ", name, ": bad groups");
        w_.setup(name + ".w", out_ch, in_ch / groups, k, k);
        b_.setup(name + ".b", out_ch, 1, 1, 1);
        const double fan_in = double(in_ch / groups) * k * k;
        const double fan_out = double(out_ch / groups) * k * k;
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w_.w.v) v = T(rng.uniform(-bound, bound));
    }

    int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }
    int out_w(int w) const { return (w + 2 * pad_ - k_) / stride_ + 1; }
    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

    size_t param_count() const { return w_.w.size() + b_.w.size(); }
    void params(ParamRefs<T>& out) { out.push_back(&w_); out.push_back(&b_); }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        require(x.c == in_ch_, "conv ", w_.name, ": got ", x.c, " channels, want ", in_ch_);
        if (train) x_ = x;
        in_h_ = x.h; in_w_ = x.w;
        const int oh = out_h(x.h), ow = out_w(x.w);
        Tensor<T> y(x.n, out_ch_, oh, ow);

        if (groups_ == 1 && k_ == 1 && stride_ == 1) {
            // pointwise: plain GEMM per sample, no column buffer
            CMapM<T> wm(w_.w.data(), out_ch_, in_ch_);
            VEIL_OMP_FOR
            for (int n = 0; n < x.n; ++n) {
                CMapM<T> xm(x.sample(n), in_ch_, x.plane());
                MapM<T> ym(y.sample(n), out_ch_, y.plane());
                ym.noalias() = wm * xm;
            }
        } else if (groups_ == in_ch_ && groups_ == out_ch_) {
            VEIL_OMP_FOR
            for (int n = 0; n < x.n; ++n) depthwise_fwd(x.sample(n), y.sample(n), x.h, x.w, oh, ow);
        } else {
            const int inpg = in_ch_ / groups_, outpg = out_ch_ / groups_;
            const size_t col_rows = size_t(inpg) * k_ * k_;
            // strip rows so the column buffer stays modest at high resolution
            const int strip = strip_rows(oh, ow, col_rows);
            VEIL_OMP_FOR
            for (int n = 0; n < x.n; ++n) {
                std::vector<T> col(col_rows * size_t(strip) * ow);
                for (int g = 0; g < groups_; ++g)
                    gemm_fwd_strips(x.sample(n) + size_t(g) * inpg * x.h * x.w,
                                    y.sample(n) + size_t(g) * outpg * y.plane(),
                                    g, x.h, x.w, oh, ow, strip, col.data());
            }
        }
        // bias
        VEIL_OMP_FOR
        for (int n = 0; n < y.n; ++n)
            for (int oc = 0; oc < out_ch_; ++oc) {
                T* p = y.chan(n, oc);
                const T bv = b_.w.v[size_t(oc)];
                for (int i = 0; i < y.plane(); ++i) p[i] += bv;
            }
        return y;
    }

    // Returns dx and accumulates parameter gradients. Deterministic: per-sample
    // contributions are reduced in sample order.
    Tensor<T> backward(const Tensor<T>& dy) {
        require(!x_.empty(), "conv ", w_.name, ": backward without cached forward");
        const int oh = dy.h, ow = dy.w;
        Tensor<T> dx(x_.n, in_ch_, in_h_, in_w_);
        std::vector<T> dw_scratch(size_t(x_.n) * w_.w.size(), T(0));
        std::vector<T> db_scratch(size_t(x_.n) * out_ch_, T(0));

        if (groups_ == 1 && k_ == 1 && stride_ == 1) {
            CMapM<T> wm(w_.w.data(), out_ch_, in_ch_);
            VEIL_OMP_FOR
            for (int n = 0; n < x_.n; ++n) {
                CMapM<T> dym(dy.sample(n), out_ch_, dy.plane());
                CMapM<T> xm(x_.sample(n), in_ch_, x_.plane());
                MapM<T> dxm(dx.sample(n), in_ch_, dx.plane());
                MapM<T> dwm(&dw_scratch[size_t(n) * w_.w.size()], out_ch_, in_ch_);
                dxm.noalias() = wm.transpose() * dym;
                dwm.noalias() = dym * xm.transpose();
                for (int oc = 0; oc < out_ch_; ++oc)
                    db_scratch[size_t(n) * out_ch_ + oc] = dym.row(oc).sum();
            }
        } else if (groups_ == in_ch_ && groups_ == out_ch_) {
            VEIL_OMP_FOR
            for (int n = 0; n < x_.n; ++n)
                depthwise_bwd(x_.sample(n), dy.sample(n), dx.sample(n),
                              &dw_scratch[size_t(n) * w_.w.size()],
                              &db_scratch[size_t(n) * out_ch_], oh, ow);
        } else {
            const int inpg = in_ch_ / groups_, outpg = out_ch_ / groups_;
            const size_t col_rows = size_t(inpg) * k_ * k_;
            VEIL_OMP_FOR
            for (int n = 0; n < x_.n; ++n) {
                std::vector<T> col(col_rows * size_t(oh) * ow);
                std::vector<T> dcol(col_rows * size_t(oh) * ow);
                for (int g = 0; g < groups_; ++g) {
                    const T* xg = x_.sample(n) + size_t(g) * inpg * in_h_ * in_w_;
                    const T* dyg = dy.sample(n) + size_t(g) * outpg * oh * ow;
                    T* dxg = dx.sample(n) + size_t(g) * inpg * in_h_ * in_w_;
                    im2col(xg, inpg, in_h_, in_w_, k_, stride_, pad_, oh, ow, col.data());
                    CMapM<T> wm(w_.w.data() + size_t(g) * outpg * col_rows, outpg, col_rows);
                    CMapM<T> dym(dyg, outpg, oh * ow);
                    CMapM<T> cm(col.data(), col_rows, oh * ow);
                    MapM<T> dcm(dcol.data(), col_rows, oh * ow);
                    MapM<T> dwm(&dw_scratch[size_t(n) * w_.w.size()] + size_t(g) * outpg * col_rows,
                                outpg, col_rows);
                    dcm.noalias() = wm.transpose() * dym;
                    dwm.noalias() = dym * cm.transpose();
                    col2im(dcol.data(), inpg, in_h_, in_w_, k_, stride_, pad_, oh, ow, dxg);
                    for (int oc = 0; oc < outpg; ++oc)
                        db_scratch[size_t(n) * out_ch_ + g * outpg + oc] = dym.row(oc).sum();
                }
            }
        }

        for (int n = 0; n < x_.n; ++n) {
            const T* dwn = &dw_scratch[size_t(n) * w_.w.size()];
            for (size_t i = 0; i < w_.w.size(); ++i) w_.g.v[i] += dwn[i];
            const T* dbn = &db_scratch[size_t(n) * out_ch_];
            for (int oc = 0; oc < out_ch_; ++oc) b_.g.v[size_t(oc)] += dbn[oc];
        }
        x_ = Tensor<T>();
        return dx;
    }

    Param<T>& weight() { return w_; }
    Param<T>& bias() { return b_; }

private:
    static int strip_rows(int oh, int ow, size_t col_rows) {
        const size_t budget = size_t(4) << 20; // elements per column buffer
        size_t rows = budget / (col_rows * size_t(std::max(ow, 1)));
        rows = std::max<size_t>(1, std::min<size_t>(rows, size_t(oh)));
        return int(rows);
    }

    void gemm_fwd_strips(const T* xg, T* yg, int g, int h, int w, int oh, int ow,
                         int strip, T* col) {
        const int inpg = in_ch_ / groups_, outpg = out_ch_ / groups_;
        const size_t col_rows = size_t(inpg) * k_ * k_;
        CMapM<T> wm(w_.w.data() + size_t(g) * outpg * col_rows, outpg, col_rows);
        for (int oy0 = 0; oy0 < oh; oy0 += strip) {
            const int rows = std::min(strip, oh - oy0);
            // columns for output rows [oy0, oy0+rows)
            for (int ic = 0; ic < inpg; ++ic) {
                const T* plane = xg + size_t(ic) * h * w;
                for (int ky = 0; ky < k_; ++ky)
                    for (int kx = 0; kx < k_; ++kx) {
                        T* dst = col + (size_t(ic) * k_ * k_ + size_t(ky) * k_ + kx) * rows * ow;
                        for (int r = 0; r < rows; ++r) {
                            const int iy = (oy0 + r) * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= h) {
                                for (int ox = 0; ox < ow; ++ox) dst[r * ow + ox] = T(0);
                                continue;
                            }
                            const T* src = plane + size_t(iy) * w;
                            for (int ox = 0; ox < ow; ++ox) {
                                const int ix = ox * stride_ - pad_ + kx;
                                dst[r * ow + ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                            }
                        }
                    }
            }
            CMapM<T> cm(col, col_rows, size_t(rows) * ow);
            StridedMapM<T> ym(yg + size_t(oy0) * ow, outpg, size_t(rows) * ow,
                              Eigen::Stride<Eigen::Dynamic, 1>(oh * ow, 1));
            ym.noalias() = wm * cm;
        }
    }

    void depthwise_fwd(const T* x, T* y, int h, int w, int oh, int ow) const {
        for (int ch = 0; ch < in_ch_; ++ch) {
            const T* plane = x + size_t(ch) * h * w;
            const T* kw = w_.w.data() + size_t(ch) * k_ * k_;
            T* out = y + size_t(ch) * oh * ow;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T acc = 0;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pad_ + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pad_ + kx;
                            if (ix >= 0 && ix < w) acc += kw[ky * k_ + kx] * plane[iy * w + ix];
                        }
                    }
                    out[oy * ow + ox] = acc;
                }
        }
    }

    void depthwise_bwd(const T* x, const T* dy, T* dx, T* dw, T* db, int oh, int ow) const {
        std::fill(dx, dx + size_t(in_ch_) * in_h_ * in_w_, T(0));
        for (int ch = 0; ch < in_ch_; ++ch) {
            const T* plane = x + size_t(ch) * in_h_ * in_w_;
            const T* dyp = dy + size_t(ch) * oh * ow;
            const T* kw = w_.w.data() + size_t(ch) * k_ * k_;
            T* dxp = dx + size_t(ch) * in_h_ * in_w_;
            T* dwp = dw + size_t(ch) * k_ * k_;
            T dbacc = 0;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const T g = dyp[oy * ow + ox];
                    dbacc += g;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pad_ + ky;
                        if (iy < 0 || iy >= in_h_) continue;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pad_ + kx;
                            if (ix < 0 || ix >= in_w_) continue;
                            dwp[ky * k_ + kx] += g * plane[iy * in_w_ + ix];
                            dxp[iy * in_w_ + ix] += g * kw[ky * k_ + kx];
                        }
                    }
                }
            db[ch] = dbacc;
        }
    }

    int in_ch_ = 0, out_ch_ = 0, k_ = 0, stride_ = 1, pad_ = 0, groups_ = 1;
    int in_h_ = 0, in_w_ = 0;
    Param<T> w_, b_;
    Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Activations

template <class T>
class SiLU {
public:
    Tensor<T> forward(const Tensor<T>& x, bool train) {
        if (train) x_ = x;
        Tensor<T> y = x;
        T* p = y.data();
        const int64_t n = int64_t(y.size());
        VEIL_OMP_FOR
        for (int64_t i = 0; i < n; ++i) {
            const T s = T(1) / (T(1) + std::exp(-p[i]));
            p[i] = p[i] * s;
        }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        const T* xp = x_.data();
        T* p = dx.data();
        const int64_t n = int64_t(dx.size());
        VEIL_OMP_FOR
        for (int64_t i = 0; i < n; ++i) {
            const T s = T(1) / (T(1) + std::exp(-xp[i]));
            p[i] *= s * (T(1) + xp[i] * (T(1) - s));
        }
        x_ = Tensor<T>();
        return dx;
    }

private:
    Tensor<T> x_;
};

template <class T>
class SigmoidLayer {
public:
    Tensor<T> forward(const Tensor<T>& x, bool train) {
        Tensor<T> y = x;
        T* p = y.data();
        const int64_t n = int64_t(y.size());
        VEIL_OMP_FOR
        for (int64_t i = 0; i < n; ++i) p[i] = T(1) / (T(1) + std::exp(-p[i]));
        if (train) y_ = y;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        const T* yp = y_.data();
        T* p = dx.data();
        const int64_t n = int64_t(dx.size());
        VEIL_OMP_FOR
        for (int64_t i = 0; i < n; ++i) p[i] *= yp[i] * (T(1) - yp[i]);
        y_ = Tensor<T>();
        return dx;
    }

private:
    Tensor<T> y_;
};

// ---------------------------------------------------------------------------

template <class T>
class Upsample2x {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> y(x.n, x.c, x.h * 2, x.w * 2);
        VEIL_OMP_FOR
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c) {
                const T* src = x.chan(n, c);
                T* dst = y.chan(n, c);
                for (int iy = 0; iy < x.h; ++iy)
                    for (int ix = 0; ix < x.w; ++ix) {
                        const T v = src[iy * x.w + ix];
                        T* row0 = dst + (2 * iy) * y.w + 2 * ix;
                        T* row1 = row0 + y.w;
                        row0[0] = v; row0[1] = v; row1[0] = v; row1[1] = v;
                    }
            }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
        VEIL_OMP_FOR
        for (int n = 0; n < dy.n; ++n)
            for (int c = 0; c < dy.c; ++c) {
                const T* src = dy.chan(n, c);
                T* dst = dx.chan(n, c);
                for (int iy = 0; iy < dx.h; ++iy)
                    for (int ix = 0; ix < dx.w; ++ix) {
                        const T* row0 = src + (2 * iy) * dy.w + 2 * ix;
                        const T* row1 = row0 + dy.w;
                        dst[iy * dx.w + ix] = row0[0] + row0[1] + row1[0] + row1[1];
                    }
            }
        return dx;
    }
};

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.n == b.n && a.h == b.h && a.w == b.w, "concat: spatial shape mismatch");
    Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
    VEIL_OMP_FOR
    for (int n = 0; n < a.n; ++n) {
        std::copy(a.sample(n), a.sample(n) + size_t(a.c) * a.plane(), y.sample(n));
        std::copy(b.sample(n), b.sample(n) + size_t(b.c) * b.plane(),
                  y.sample(n) + size_t(a.c) * a.plane());
    }
    return y;
}

template <class T>
void split_channels(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db, int ca, int cb) {
    da = Tensor<T>(dy.n, ca, dy.h, dy.w);
    db = Tensor<T>(dy.n, cb, dy.h, dy.w);
    VEIL_OMP_FOR
    for (int n = 0; n < dy.n; ++n) {
        std::copy(dy.sample(n), dy.sample(n) + size_t(ca) * dy.plane(), da.sample(n));
        std::copy(dy.sample(n) + size_t(ca) * dy.plane(),
                  dy.sample(n) + size_t(ca + cb) * dy.plane(), db.sample(n));
    }
}

// ---------------------------------------------------------------------------

template <class T>
class Linear {
public:
    Linear() = default;
    Linear(std::string name, int in_dim, int out_dim, Rng& rng) : in_(in_dim), out_(out_dim) {
        w_.setup(name + ".w", out_dim, in_dim, 1, 1);
        b_.setup(name + ".b", out_dim, 1, 1, 1);
        const double bound = std::sqrt(6.0 / (in_dim + out_dim));
        for (auto& v : w_.w.v) v = T(rng.uniform(-bound, bound));
    }

    size_t param_count() const { return w_.w.size() + b_.w.size(); }
    void params(ParamRefs<T>& out) { out.push_back(&w_); out.push_back(&b_); }

    // x: (n, in, 1, 1) -> (n, out, 1, 1)
    Tensor<T> forward(const Tensor<T>& x, bool train) {
        require(x.c * x.h * x.w == in_, "linear ", w_.name, ": input dim mismatch");
        if (train) x_ = x;
        Tensor<T> y(x.n, out_, 1, 1);
        CMapM<T> xm(x.data(), x.n, in_);
        CMapM<T> wm(w_.w.data(), out_, in_);
        MapM<T> ym(y.data(), x.n, out_);
        ym.noalias() = xm * wm.transpose();
        for (int n = 0; n < x.n; ++n)
            for (int o = 0; o < out_; ++o) y.v[size_t(n) * out_ + o] += b_.w.v[size_t(o)];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(x_.n, x_.c, x_.h, x_.w);
        CMapM<T> dym(dy.data(), dy.n, out_);
        CMapM<T> xm(x_.data(), x_.n, in_);
        CMapM<T> wm(w_.w.data(), out_, in_);
        MapM<T> dxm(dx.data(), dx.n, in_);
        MapM<T> dwm(w_.g.data(), out_, in_);
        dxm.noalias() = dym * wm;
        dwm.noalias() += dym.transpose() * xm;
        for (int n = 0; n < dy.n; ++n)
            for (int o = 0; o < out_; ++o) b_.g.v[size_t(o)] += dy.v[size_t(n) * out_ + o];
        x_ = Tensor<T>();
        return dx;
    }

private:
    int in_ = 0, out_ = 0;
    Param<T> w_, b_;
    Tensor<T> x_;
};

template <class T>
class GlobalAvgPool {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        in_h_ = x.h; in_w_ = x.w;
        Tensor<T> y(x.n, x.c, 1, 1);
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c) {
                const T* p = x.chan(n, c);
                T acc = 0;
                for (int i = 0; i < x.plane(); ++i) acc += p[i];
                y.at(n, c, 0, 0) = acc / T(x.plane());
            }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.n, dy.c, in_h_, in_w_);
        const T scale = T(1) / T(in_h_ * in_w_);
        for (int n = 0; n < dy.n; ++n)
            for (int c = 0; c < dy.c; ++c) {
                const T g = dy.at(n, c, 0, 0) * scale;
                T* p = dx.chan(n, c);
                for (int i = 0; i < dx.plane(); ++i) p[i] = g;
            }
        return dx;
    }

private:
    int in_h_ = 0, in_w_ = 0;
};

} // namespace veil::nn
