#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "veil/core/common.hpp"
#include "veil/core/image.hpp"

namespace veil {

// Class ids shared across the synthetic tasks.
inline constexpr int kTaskObjectClass = 0; // "plank"
inline constexpr int kPersonClass = 1;

// Axis-aligned box in continuous pixel coordinates, origin top-left.
// score < 0 means "absent" (ground truth).
struct BBox {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int cls = 0;
    double score = -1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    double cx() const { return 0.5 * (x0 + x1); }
    double cy() const { return 0.5 * (y0 + y1); }
    bool has_score() const { return score >= 0.0; }
};

inline BBox make_bbox(double x0, double y0, double x1, double y1, int cls,
                      int frame_w, int frame_h, double score = -1.0) {
    BBox b;
    b.x0 = std::min(std::max(x0, 0.0), double(frame_w));
    b.y0 = std::min(std::max(y0, 0.0), double(frame_h));
    b.x1 = std::min(std::max(x1, 0.0), double(frame_w));
    b.y1 = std::min(std::max(y1, 0.0), double(frame_h));
    b.cls = cls;
    b.score = score;
    require(b.x0 < b.x1 && b.y0 < b.y1, "degenerate box [", x0, ",", y0, ",", x1, ",", y1,
            "] after clipping to ", frame_w, "x", frame_h);
    return b;
}

inline void validate_bbox(const BBox& b, const std::string& ctx) {
    require(b.x0 < b.x1 && b.y0 < b.y1, ctx, ": degenerate box [", b.x0, ",", b.y0, ",",
            b.x1, ",", b.y1, "]");
    if (b.has_score()) require(b.score <= 1.0, ctx, ": score ", b.score, " above 1");
}

struct Joint {
    double x = 0, y = 0;
    int v = 0; // visibility flag, 0 or 1
};

struct KeypointSet {
    std::vector<Joint> joints;
    double area = 0;       // object scale s^2 in px^2
    double score = -1.0;   // absent for ground truth

    bool has_score() const { return score >= 0.0; }
};

inline void validate_keypoints(const KeypointSet& k, size_t expected_joints,
                               const std::string& ctx) {
    require(k.area > 0, ctx, ": keypoint set with non-positive area ", k.area);
    if (expected_joints > 0)
        require(k.joints.size() == expected_joints, ctx, ": joint count ", k.joints.size(),
                " != expected ", expected_joints);
    for (const auto& j : k.joints)
        require(j.v == 0 || j.v == 1, ctx, ": visibility flag must be 0 or 1");
}

struct Annotation {
    std::string frame_id;
    std::vector<BBox> boxes;
    std::vector<KeypointSet> keypoints;
    int identity = -1; // -1 = absent; only set for synthetic frames

    bool has_identity() const { return identity >= 0; }
};

struct Dataset {
    std::vector<Frame> frames;
    std::map<std::string, Annotation> annotations;
    std::string split = "test"; // train | val | test
    int n_identities = -1;      // -1 = absent

    const Annotation& ann(const std::string& id) const {
        auto it = annotations.find(id);
        require(it != annotations.end(), "dataset: no annotation for frame '", id, "'");
        return it->second;
    }

    size_t size() const { return frames.size(); }
};

inline void validate_dataset(const Dataset& ds) {
    require(ds.split == "train" || ds.split == "val" || ds.split == "test",
            "dataset: bad split tag '", ds.split, "'");
    require(ds.frames.size() == ds.annotations.size(),
            "dataset: ", ds.frames.size(), " frames but ", ds.annotations.size(),
            " annotation records");
    size_t joint_count = 0;
    for (const auto& f : ds.frames) {
        validate_frame(f);
        const auto& a = ds.ann(f.id);
        for (const auto& b : a.boxes) validate_bbox(b, cat("frame '", f.id, "'"));
        for (const auto& k : a.keypoints) {
            if (joint_count == 0) joint_count = k.joints.size();
            validate_keypoints(k, joint_count, cat("frame '", f.id, "'"));
        }
        if (a.has_identity())
            require(ds.n_identities > 0 && a.identity < ds.n_identities,
                    "frame '", f.id, "': identity ", a.identity,
                    " outside [0,", ds.n_identities, ")");
    }
}

} // namespace veil
