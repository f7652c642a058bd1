#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "veil/core/geometry.hpp"
#include "veil/core/types.hpp"
#include "veil/models/trunk.hpp"

namespace veil {

using Detection = BBox; // score and cls are carried on the box

struct DetectorConfig {
    int c0 = 16;
    int n_classes = 2;
    double score_thresh = 0.30;
    double nms_iou = 0.50;
    int max_dets = 32;
    double w_hm = 1.0, w_size = 0.1, w_off = 1.0;
};

// Greedy class-aware NMS: keep by descending score, drop overlaps >= thresh.
inline std::vector<Detection> non_max_suppression(std::vector<Detection> dets, double iou_thresh) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        bool suppressed = false;
        for (const auto& k : kept)
            if (k.cls == d.cls && iou(k, d) >= iou_thresh) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

// Anchor-free center-heatmap detector: class heatmap + size + center offset
// at stride 4, per the CenterNet recipe.
template <class T>
class DetectorNet {
public:
    struct Heads {
        Tensor<T> hm;   // logits, n x n_classes x hs x ws
        Tensor<T> size; // n x 2 (w,h in grid units)
        Tensor<T> off;  // n x 2 (dx,dy in [0,1))
    };

    DetectorNet() = default;

    DetectorNet(const DetectorConfig& cfg, uint64_t seed) : cfg_(cfg) {
        Rng rng(seed, /*stream=*/0xDE7);
        trunk_ = Trunk<T>(cfg.c0, rng);
        const int tc = trunk_.out_channels();
        hm_head_ = nn::Conv2d<T>("det.hm", tc, cfg.n_classes, 1, 1, 1, rng);
        size_head_ = nn::Conv2d<T>("det.size", tc, 2, 1, 1, 1, rng);
        off_head_ = nn::Conv2d<T>("det.off", tc, 2, 1, 1, 1, rng);
        // bias the heatmap towards background at init
        for (auto& b : hm_head_.bias().w.v) b = T(-2.19);
    }

    static constexpr int stride() { return Trunk<T>::stride(); }
    const DetectorConfig& config() const { return cfg_; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> out;
        trunk_.params(out);
        hm_head_.params(out);
        size_head_.params(out);
        off_head_.params(out);
        return out;
    }

    Heads forward(const Tensor<T>& x, bool train) {
        Tensor<T> f = trunk_.forward(x, train);
        Heads h;
        h.hm = hm_head_.forward(f, train);
        h.size = size_head_.forward(f, train);
        h.off = off_head_.forward(f, train);
        return h;
    }

    Tensor<T> backward(const Heads& g) {
        Tensor<T> gt = hm_head_.backward(g.hm);
        Tensor<T> gs = size_head_.backward(g.size);
        Tensor<T> go = off_head_.backward(g.off);
        for (size_t i = 0; i < gt.size(); ++i) gt.v[i] += gs.v[i] + go.v[i];
        return trunk_.backward(gt);
    }

private:
    DetectorConfig cfg_;
    Trunk<T> trunk_;
    nn::Conv2d<T> hm_head_, size_head_, off_head_;
};

// ---------------------------------------------------------------------------
// Targets and loss

template <class T>
struct DetTargets {
    Tensor<T> hm; // gaussian-splatted, peak 1 at object centers
    struct Item {
        int n, cls, cy, cx;
        T tw, th, tox, toy;
    };
    std::vector<Item> items;
};

template <class T>
DetTargets<T> build_det_targets(std::span<const Annotation* const> anns, int img_h, int img_w,
                                int n_classes, int stride = 4) {
    const int hs = img_h / stride, ws = img_w / stride;
    DetTargets<T> t;
    t.hm = Tensor<T>(int(anns.size()), n_classes, hs, ws);
    for (size_t n = 0; n < anns.size(); ++n) {
        for (const auto& b : anns[n]->boxes) {
            if (b.cls < 0 || b.cls >= n_classes) continue;
            const double gx = b.cx() / stride, gy = b.cy() / stride;
            const int cx = std::min(ws - 1, std::max(0, int(gx)));
            const int cy = std::min(hs - 1, std::max(0, int(gy)));
            const double gw = b.width() / stride, gh = b.height() / stride;
            const int radius = std::max(0, int(std::floor(std::min(gw, gh) / 2.0)));
            const double sigma = std::max(0.45, (2.0 * radius + 1.0) / 6.0);
            for (int dy = -3 * radius - 1; dy <= 3 * radius + 1; ++dy)
                for (int dx = -3 * radius - 1; dx <= 3 * radius + 1; ++dx) {
                    const int y = cy + dy, x = cx + dx;
                    if (x < 0 || x >= ws || y < 0 || y >= hs) continue;
                    const T g = T(std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
                    T& cell = t.hm.at(int(n), b.cls, y, x);
                    cell = std::max(cell, g);
                }
            t.hm.at(int(n), b.cls, cy, cx) = T(1);
            t.items.push_back({int(n), b.cls, cy, cx, T(gw), T(gh), T(gx - cx), T(gy - cy)});
        }
    }
    return t;
}

template <class T>
struct DetLoss {
    double total = 0, hm = 0, reg = 0;
    typename DetectorNet<T>::Heads grads;
};

// Penalty-reduced focal loss on the heatmap + L1 on size/offset at centers.
template <class T>
DetLoss<T> det_loss(const typename DetectorNet<T>::Heads& out, const DetTargets<T>& tgt,
                    const DetectorConfig& cfg) {
    DetLoss<T> L;
    L.grads.hm = zeros_like(out.hm);
    L.grads.size = zeros_like(out.size);
    L.grads.off = zeros_like(out.off);

    const double eps = 1e-6;
    int n_pos = 0;
    for (const auto& v : tgt.hm.v)
        if (v >= T(1)) ++n_pos;
    const double norm = std::max(1, n_pos);

    double hm_loss = 0;
    for (size_t i = 0; i < out.hm.size(); ++i) {
        const double z = double(out.hm.v[i]);
        double p = 1.0 / (1.0 + std::exp(-z));
        p = std::min(1.0 - eps, std::max(eps, p));
        const double y = double(tgt.hm.v[i]);
        double dLdp;
        if (y >= 1.0) {
            hm_loss -= (1 - p) * (1 - p) * std::log(p);
            dLdp = -(-2.0 * (1 - p) * std::log(p) + (1 - p) * (1 - p) / p);
        } else {
            const double w = std::pow(1.0 - y, 4.0);
            hm_loss -= w * p * p * std::log(1 - p);
            dLdp = -w * (2.0 * p * std::log(1 - p) - p * p / (1 - p));
        }
        L.grads.hm.v[i] = T(cfg.w_hm / norm * dLdp * p * (1 - p));
    }
    L.hm = hm_loss / norm;

    double reg_loss = 0;
    const double item_norm = std::max<size_t>(1, tgt.items.size()) * 2.0;
    for (const auto& it : tgt.items) {
        const T pw = out.size.at(it.n, 0, it.cy, it.cx);
        const T ph = out.size.at(it.n, 1, it.cy, it.cx);
        const T pox = out.off.at(it.n, 0, it.cy, it.cx);
        const T poy = out.off.at(it.n, 1, it.cy, it.cx);
        reg_loss += cfg.w_size * (std::abs(double(pw - it.tw)) + std::abs(double(ph - it.th)));
        reg_loss += cfg.w_off * (std::abs(double(pox - it.tox)) + std::abs(double(poy - it.toy)));
        auto sign = [](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); };
        L.grads.size.at(it.n, 0, it.cy, it.cx) += T(cfg.w_size / item_norm * sign(double(pw - it.tw)));
        L.grads.size.at(it.n, 1, it.cy, it.cx) += T(cfg.w_size / item_norm * sign(double(ph - it.th)));
        L.grads.off.at(it.n, 0, it.cy, it.cx) += T(cfg.w_off / item_norm * sign(double(pox - it.tox)));
        L.grads.off.at(it.n, 1, it.cy, it.cx) += T(cfg.w_off / item_norm * sign(double(poy - it.toy)));
    }
    L.reg = reg_loss / item_norm;

    L.total = cfg.w_hm * L.hm + L.reg;
    return L;
}

// ---------------------------------------------------------------------------
// Decoding

template <class T>
std::vector<Detection> decode_detections(const typename DetectorNet<T>::Heads& out, int slot,
                                         int img_h, int img_w, const DetectorConfig& cfg) {
    const int hs = out.hm.h, ws = out.hm.w, stride = DetectorNet<T>::stride();
    std::vector<Detection> cands;
    for (int cls = 0; cls < out.hm.c; ++cls) {
        const T* plane = out.hm.chan(slot, cls);
        for (int y = 0; y < hs; ++y)
            for (int x = 0; x < ws; ++x) {
                const double score = 1.0 / (1.0 + std::exp(-double(plane[y * ws + x])));
                if (score < cfg.score_thresh) continue;
                bool peak = true; // strict 3x3 local max, ties broken towards earlier cells
                for (int dy = -1; dy <= 1 && peak; ++dy)
                    for (int dx = -1; dx <= 1 && peak; ++dx) {
                        if (dy == 0 && dx == 0) continue;
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= hs || xx < 0 || xx >= ws) continue;
                        const T other = plane[yy * ws + xx];
                        if (other > plane[y * ws + x] ||
                            (other == plane[y * ws + x] && (dy < 0 || (dy == 0 && dx < 0))))
                            peak = false;
                    }
                if (!peak) continue;
                const double ox = double(out.off.at(slot, 0, y, x));
                const double oy = double(out.off.at(slot, 1, y, x));
                const double bw = std::max(0.25, double(out.size.at(slot, 0, y, x))) * stride;
                const double bh = std::max(0.25, double(out.size.at(slot, 1, y, x))) * stride;
                const double cx = (x + ox) * stride, cy = (y + oy) * stride;
                Detection d;
                d.x0 = std::max(0.0, cx - bw / 2);
                d.y0 = std::max(0.0, cy - bh / 2);
                d.x1 = std::min(double(img_w), cx + bw / 2);
                d.y1 = std::min(double(img_h), cy + bh / 2);
                d.cls = cls;
                d.score = score;
                if (d.x1 - d.x0 < 1e-3 || d.y1 - d.y0 < 1e-3) continue;
                cands.push_back(d);
            }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (int(cands.size()) > cfg.max_dets) cands.resize(size_t(cfg.max_dets));
    return non_max_suppression(std::move(cands), cfg.nms_iou);
}

} // namespace veil
