#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "veil/core/image.hpp"

namespace veil::metrics {

inline double mse(const Frame& a, const Frame& b) {
    require(a.height == b.height && a.width == b.width, "mse: shape mismatch");
    double acc = 0;
    for (size_t i = 0; i < a.px.size(); ++i) acc += sqr(double(a.px[i]) - double(b.px[i]));
    return acc / double(a.px.size());
}

// 10*log10(1/MSE) on the [0,1] range; equal inputs report +inf.
inline double psnr(const Frame& a, const Frame& b) {
    const double m = mse(a, b);
    if (m <= 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

namespace detail {

inline const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        std::vector<double> k(11);
        const double sigma = 1.5;
        double sum = 0;
        for (int i = 0; i < 11; ++i) {
            k[size_t(i)] = std::exp(-sqr(i - 5) / (2 * sigma * sigma));
            sum += k[size_t(i)];
        }
        for (auto& v : k) v /= sum;
        return k;
    }();
    return w;
}

// separable valid-region gaussian filter
inline void gauss_valid(const std::vector<double>& in, int h, int w, std::vector<double>& tmp,
                        std::vector<double>& out) {
    const auto& k = ssim_window();
    const int ow = w - 10, oh = h - 10;
    tmp.assign(size_t(h) * ow, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0;
            for (int i = 0; i < 11; ++i) acc += k[size_t(i)] * in[size_t(y) * w + x + i];
            tmp[size_t(y) * ow + x] = acc;
        }
    out.assign(size_t(oh) * ow, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0;
            for (int i = 0; i < 11; ++i) acc += k[size_t(i)] * tmp[size_t(y + i) * ow + x];
            out[size_t(y) * ow + x] = acc;
        }
}

} // namespace detail

// Mean local SSIM, 11x11 gaussian window sigma=1.5, C1=(0.01)^2 C2=(0.03)^2
// on the [0,1] range, averaged over the valid region and the three channels.
inline double ssim(const Frame& a, const Frame& b) {
    require(a.height == b.height && a.width == b.width, "ssim: shape mismatch");
    require(a.height >= 11 && a.width >= 11, "ssim: frames must be at least 11x11");
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    const int h = a.height, w = a.width;
    std::vector<double> xa(size_t(h) * w), xb(size_t(h) * w), xaa(size_t(h) * w),
        xbb(size_t(h) * w), xab(size_t(h) * w);
    std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
    double total = 0;
    for (int ch = 0; ch < 3; ++ch) {
        const float* pa = a.chan(ch);
        const float* pb = b.chan(ch);
        for (size_t i = 0; i < xa.size(); ++i) {
            xa[i] = pa[i];
            xb[i] = pb[i];
            xaa[i] = double(pa[i]) * pa[i];
            xbb[i] = double(pb[i]) * pb[i];
            xab[i] = double(pa[i]) * pb[i];
        }
        detail::gauss_valid(xa, h, w, tmp, mu_a);
        detail::gauss_valid(xb, h, w, tmp, mu_b);
        detail::gauss_valid(xaa, h, w, tmp, m_aa);
        detail::gauss_valid(xbb, h, w, tmp, m_bb);
        detail::gauss_valid(xab, h, w, tmp, m_ab);
        double acc = 0;
        for (size_t i = 0; i < mu_a.size(); ++i) {
            const double va = m_aa[i] - mu_a[i] * mu_a[i];
            const double vb = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            acc += ((2 * mu_a[i] * mu_b[i] + C1) * (2 * cov + C2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + C1) * (va + vb + C2));
        }
        total += acc / double(mu_a.size());
    }
    return total / 3.0;
}

} // namespace veil::metrics
