#pragma once

#include <cmath>
#include <vector>

#include "veil/core/common.hpp"
#include "veil/core/types.hpp"

namespace veil {

inline double iou(const BBox& a, const BBox& b) {
    const double ix0 = std::max(a.x0, b.x0);
    const double iy0 = std::max(a.y0, b.y0);
    const double ix1 = std::min(a.x1, b.x1);
    const double iy1 = std::min(a.y1, b.y1);
    const double iw = ix1 - ix0;
    const double ih = iy1 - iy0;
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

// Object keypoint similarity. Only ground-truth-visible joints contribute;
// k_i = 2 * sigma_i, scale s^2 = gt.area.
inline double oks(const KeypointSet& pred, const KeypointSet& gt,
                  const std::vector<double>& per_joint_sigma) {
    require(pred.joints.size() == gt.joints.size(), "oks: joint count mismatch (",
            pred.joints.size(), " vs ", gt.joints.size(), ")");
    require(gt.area > 0, "oks: ground-truth area must be positive");
    require(per_joint_sigma.size() >= gt.joints.size(),
            "oks: need at least ", gt.joints.size(), " sigmas, got ", per_joint_sigma.size());
    double acc = 0;
    int visible = 0;
    for (size_t i = 0; i < gt.joints.size(); ++i) {
        if (gt.joints[i].v <= 0) continue;
        ++visible;
        const double dx = pred.joints[i].x - gt.joints[i].x;
        const double dy = pred.joints[i].y - gt.joints[i].y;
        const double k = 2.0 * per_joint_sigma[i];
        acc += std::exp(-(dx * dx + dy * dy) / (2.0 * gt.area * k * k));
    }
    return visible == 0 ? 0.0 : acc / visible;
}

inline std::vector<double> uniform_sigmas(size_t joints, double sigma = 0.05) {
    return std::vector<double>(joints, sigma);
}

} // namespace veil
