#pragma once

#include <cmath>
#include <vector>

#include "veil/core/image.hpp"
#include "veil/models/utility.hpp"

namespace veil {

// Task-agnostic full-frame gaussian blur with the usual kernel-to-sigma
// convention sigma = 0.3*((k-1)*0.5 - 1) + 0.8; reflect (mirror) border.
// k == 1 is the bitwise identity.
inline Frame gaussian_blur_full(const Frame& x, int k) {
    require(k >= 1 && k % 2 == 1, "gaussian_blur_full: kernel size must be odd, got ", k);
    if (k == 1) return x;

    const double sigma = 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8;
    std::vector<double> kern(static_cast<size_t>(k), 0.0);
    const int half = k / 2;
    double sum = 0;
    for (int i = 0; i < k; ++i) {
        kern[size_t(i)] = std::exp(-sqr(i - half) / (2 * sigma * sigma));
        sum += kern[size_t(i)];
    }
    for (auto& v : kern) v /= sum;

    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    };

    Frame out = x;
    std::vector<double> tmp(size_t(x.height) * x.width);
    for (int ch = 0; ch < 3; ++ch) {
        const float* src = x.chan(ch);
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) {
                double acc = 0;
                for (int i = -half; i <= half; ++i)
                    acc += kern[size_t(i + half)] * src[y * x.width + reflect(xx + i, x.width)];
                tmp[size_t(y) * x.width + xx] = acc;
            }
        float* dst = out.chan(ch);
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) {
                double acc = 0;
                for (int i = -half; i <= half; ++i)
                    acc += kern[size_t(i + half)] * tmp[size_t(reflect(y + i, x.height)) * x.width + xx];
                dst[y * x.width + xx] = float(clamp01(acc));
            }
    }
    return out;
}

// Two-step baseline: detect persons, blur only the (padded) detected boxes.
// Pixels outside the boxes are untouched; a missed person stays in the clear.
inline Frame detect_then_blur(const Frame& x, UtilityAdapter& person_detector, int k,
                              double score_thresh, double pad_frac = 0.10,
                              int person_class = kPersonClass) {
    require(person_detector.task() == Task::detect, "detect_then_blur: adapter must detect");
    require(k >= 1 && k % 2 == 1, "detect_then_blur: kernel size must be odd");

    auto preds = person_detector.predict(x);
    std::vector<BBox> boxes;
    for (const auto& d : preds.boxes)
        if (d.cls == person_class && d.score >= score_thresh) boxes.push_back(d);
    if (boxes.empty() || k == 1) return x;

    const Frame blurred = gaussian_blur_full(x, k);
    Frame out = x;
    for (const auto& b : boxes) {
        const double pw = b.width() * pad_frac, ph = b.height() * pad_frac;
        const int x0 = std::max(0, int(std::floor(b.x0 - pw)));
        const int y0 = std::max(0, int(std::floor(b.y0 - ph)));
        const int x1 = std::min(x.width, int(std::ceil(b.x1 + pw)));
        const int y1 = std::min(x.height, int(std::ceil(b.y1 + ph)));
        for (int ch = 0; ch < 3; ++ch)
            for (int y = y0; y < y1; ++y)
                for (int xx = x0; xx < x1; ++xx) out.at(ch, y, xx) = blurred.at(ch, y, xx);
    }
    return out;
}

} // namespace veil
