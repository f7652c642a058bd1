#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "veil/core/types.hpp"
#include "veil/models/trunk.hpp"

namespace veil {

struct PoseConfig {
    int c0 = 16;
    int n_joints = 5;
    double center_thresh = 0.30;
    int max_persons = 8;
    int window_px = 24; // joint search window around a detected center
    double target_sigma = 1.0; // gaussian sigma in grid cells
};

// Heatmap pose network: per-joint heatmaps plus one person-center channel,
// all at stride 4. Linear head, trained with MSE against rendered gaussians.
template <class T>
class PoseNet {
public:
    PoseNet() = default;

    PoseNet(const PoseConfig& cfg, uint64_t seed) : cfg_(cfg) {
        Rng rng(seed, /*stream=*/0x905E);
        trunk_ = Trunk<T>(cfg.c0, rng);
        head_ = nn::Conv2d<T>("pose.head", trunk_.out_channels(), cfg.n_joints + 1, 1, 1, 1, rng);
    }

    static constexpr int stride() { return Trunk<T>::stride(); }
    const PoseConfig& config() const { return cfg_; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> out;
        trunk_.params(out);
        head_.params(out);
        return out;
    }

    // Output: n x (n_joints+1) x hs x ws; last channel is the center map.
    Tensor<T> forward(const Tensor<T>& x, bool train) {
        return head_.forward(trunk_.forward(x, train), train);
    }

    Tensor<T> backward(const Tensor<T>& dy) { return trunk_.backward(head_.backward(dy)); }

private:
    PoseConfig cfg_;
    Trunk<T> trunk_;
    nn::Conv2d<T> head_;
};

// Joint and center heatmap targets. Joint gaussians are rendered at
// continuous grid positions u = p/stride - 0.5 so cell centers align with
// pixel centers and sub-pixel refinement is meaningful.
template <class T>
Tensor<T> build_pose_targets(std::span<const Annotation* const> anns, int img_h, int img_w,
                             const PoseConfig& cfg, int stride = 4) {
    const int hs = img_h / stride, ws = img_w / stride;
    Tensor<T> tgt(int(anns.size()), cfg.n_joints + 1, hs, ws);
    const double s2 = 2.0 * cfg.target_sigma * cfg.target_sigma;
    auto splat = [&](int n, int ch, double ux, double uy) {
        const int x0 = std::max(0, int(ux) - 3), x1 = std::min(ws - 1, int(ux) + 3);
        const int y0 = std::max(0, int(uy) - 3), y1 = std::min(hs - 1, int(uy) + 3);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const T g = T(std::exp(-(sqr(x - ux) + sqr(y - uy)) / s2));
                T& cell = tgt.at(n, ch, y, x);
                cell = std::max(cell, g);
            }
    };
    for (size_t n = 0; n < anns.size(); ++n) {
        for (const auto& kp : anns[n]->keypoints) {
            require(int(kp.joints.size()) == cfg.n_joints,
                    "pose targets: keypoint set has ", kp.joints.size(), " joints, expected ",
                    cfg.n_joints);
            double mx = 0, my = 0;
            int vis = 0;
            for (int j = 0; j < cfg.n_joints; ++j) {
                const auto& jt = kp.joints[size_t(j)];
                if (jt.v <= 0) continue;
                splat(int(n), j, jt.x / stride - 0.5, jt.y / stride - 0.5);
                mx += jt.x;
                my += jt.y;
                ++vis;
            }
            if (vis > 0)
                splat(int(n), cfg.n_joints, (mx / vis) / stride - 0.5, (my / vis) / stride - 0.5);
        }
    }
    return tgt;
}

template <class T>
struct PoseLoss {
    double total = 0;
    Tensor<T> grad;
};

// Plain MSE over all heatmap channels (joints + center).
template <class T>
PoseLoss<T> pose_loss(const Tensor<T>& out, const Tensor<T>& tgt) {
    require(out.same_shape(tgt), "pose_loss: shape mismatch");
    PoseLoss<T> L;
    L.grad = zeros_like(out);
    double acc = 0;
    const double scale = 2.0 / double(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double d = double(out.v[i]) - double(tgt.v[i]);
        acc += d * d;
        L.grad.v[i] = T(scale * d);
    }
    L.total = acc / double(out.size());
    return L;
}

// ---------------------------------------------------------------------------
// Decoding: person centers from the center channel, then per-joint argmax
// within a window around each center, with quadratic sub-pixel refinement.

template <class T>
std::vector<KeypointSet> decode_pose(const Tensor<T>& out, int slot, const PoseConfig& cfg) {
    const int hs = out.h, ws = out.w, stride = PoseNet<T>::stride();
    const int ctr = cfg.n_joints;
    const T* cmap = out.chan(slot, ctr);

    struct Center {
        int y, x;
        double score;
    };
    std::vector<Center> centers;
    for (int y = 0; y < hs; ++y)
        for (int x = 0; x < ws; ++x) {
            const double v = double(cmap[y * ws + x]);
            if (v < cfg.center_thresh) continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy)
                for (int dx = -1; dx <= 1 && peak; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= hs || xx < 0 || xx >= ws) continue;
                    const T other = cmap[yy * ws + xx];
                    if (other > cmap[y * ws + x] ||
                        (other == cmap[y * ws + x] && (dy < 0 || (dy == 0 && dx < 0))))
                        peak = false;
                }
            if (peak) centers.push_back({y, x, v});
        }
    std::stable_sort(centers.begin(), centers.end(),
                     [](const Center& a, const Center& b) { return a.score > b.score; });
    if (int(centers.size()) > cfg.max_persons) centers.resize(size_t(cfg.max_persons));

    const int win = std::max(1, cfg.window_px / (2 * stride));
    std::vector<KeypointSet> people;
    for (const auto& c : centers) {
        KeypointSet kp;
        kp.score = c.score;
        double jx0 = 1e30, jy0 = 1e30, jx1 = -1e30, jy1 = -1e30;
        for (int j = 0; j < cfg.n_joints; ++j) {
            const T* jmap = out.chan(slot, j);
            int by = c.y, bx = c.x;
            T best = jmap[c.y * ws + c.x];
            for (int y = std::max(0, c.y - win); y <= std::min(hs - 1, c.y + win); ++y)
                for (int x = std::max(0, c.x - win); x <= std::min(ws - 1, c.x + win); ++x)
                    if (jmap[y * ws + x] > best) {
                        best = jmap[y * ws + x];
                        by = y;
                        bx = x;
                    }
            // quadratic refinement along each axis
            auto refine = [&](int p, int lo, int hi, T vm1, T v0, T vp1) {
                if (p <= lo || p >= hi) return 0.0;
                const double denom = 2.0 * v0 - vm1 - vp1;
                if (std::abs(denom) < 1e-12) return 0.0;
                return std::min(0.5, std::max(-0.5, 0.5 * double(vp1 - vm1) / denom));
            };
            const double fx = refine(bx, 0, ws - 1, bx > 0 ? jmap[by * ws + bx - 1] : T(0),
                                     jmap[by * ws + bx], bx < ws - 1 ? jmap[by * ws + bx + 1] : T(0));
            const double fy = refine(by, 0, hs - 1, by > 0 ? jmap[(by - 1) * ws + bx] : T(0),
                                     jmap[by * ws + bx], by < hs - 1 ? jmap[(by + 1) * ws + bx] : T(0));
            Joint jt;
            jt.x = (bx + fx + 0.5) * stride;
            jt.y = (by + fy + 0.5) * stride;
            jt.v = 1;
            kp.joints.push_back(jt);
            jx0 = std::min(jx0, jt.x);
            jy0 = std::min(jy0, jt.y);
            jx1 = std::max(jx1, jt.x);
            jy1 = std::max(jy1, jt.y);
        }
        kp.area = std::max(1.0, (jx1 - jx0) * (jy1 - jy0));
        people.push_back(std::move(kp));
    }
    return people;
}

} // namespace veil
