#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "veil/core/geometry.hpp"
#include "veil/core/types.hpp"

namespace veil::metrics {

// Area under the monotone precision envelope over recall (all-points
// interpolation), from a score-ordered TP/FP sequence.
inline double ap_from_matches(const std::vector<bool>& is_tp, size_t n_gt) {
    if (n_gt == 0) return is_tp.empty() ? 1.0 : 0.0;
    if (is_tp.empty()) return 0.0;
    std::vector<double> prec(is_tp.size()), rec(is_tp.size());
    size_t tp = 0;
    for (size_t i = 0; i < is_tp.size(); ++i) {
        if (is_tp[i]) ++tp;
        prec[i] = double(tp) / double(i + 1);
        rec[i] = double(tp) / double(n_gt);
    }
    for (size_t i = is_tp.size() - 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
    double ap = rec[0] * prec[0];
    for (size_t i = 1; i < is_tp.size(); ++i) ap += (rec[i] - rec[i - 1]) * prec[i];
    return ap;
}

namespace detail {

// Greedy matching over a pooled, score-sorted prediction list. Predictions
// match the highest-similarity unmatched GT in their frame at sim >= thresh.
// GT marked "ignore" can absorb a prediction (it is then dropped from
// scoring) but never counts towards recall.
template <class P, class G, class SimFn, class ScoreFn>
double pooled_ap(const std::vector<std::vector<P>>& preds,
                 const std::vector<std::vector<G>>& gts,
                 const std::vector<std::vector<bool>>& gt_ignored, SimFn sim, ScoreFn score,
                 double thresh) {
    struct Flat {
        int frame;
        int idx;
        double score;
    };
    std::vector<Flat> flat;
    for (size_t f = 0; f < preds.size(); ++f)
        for (size_t i = 0; i < preds[f].size(); ++i)
            flat.push_back({int(f), int(i), score(preds[f][i])});
    std::stable_sort(flat.begin(), flat.end(),
                     [](const Flat& a, const Flat& b) { return a.score > b.score; });

    size_t n_gt = 0;
    std::vector<std::vector<bool>> used(gts.size());
    for (size_t f = 0; f < gts.size(); ++f) {
        used[f].assign(gts[f].size(), false);
        for (size_t g = 0; g < gts[f].size(); ++g)
            if (!gt_ignored[f][g]) ++n_gt;
    }

    std::vector<bool> is_tp;
    is_tp.reserve(flat.size());
    for (const auto& fp : flat) {
        const auto& p = preds[size_t(fp.frame)][size_t(fp.idx)];
        const auto& fgts = gts[size_t(fp.frame)];
        int best = -1;
        double best_sim = -1.0;
        for (size_t g = 0; g < fgts.size(); ++g) {
            if (used[size_t(fp.frame)][g] || gt_ignored[size_t(fp.frame)][g]) continue;
            const double s = sim(p, fgts[g]);
            if (s >= thresh && s > best_sim) {
                best_sim = s;
                best = int(g);
            }
        }
        if (best >= 0) {
            used[size_t(fp.frame)][size_t(best)] = true;
            is_tp.push_back(true);
            continue;
        }
        // an ignored GT may absorb the prediction
        bool absorbed = false;
        for (size_t g = 0; g < fgts.size() && !absorbed; ++g)
            if (gt_ignored[size_t(fp.frame)][g] && sim(p, fgts[g]) >= thresh) absorbed = true;
        if (!absorbed) is_tp.push_back(false);
    }
    if (n_gt == 0) return is_tp.empty() ? 1.0 : 0.0;
    return ap_from_matches(is_tp, n_gt);
}

} // namespace detail

// Single-pool AP at an IoU threshold (predictions and GT of one class).
inline double average_precision(const std::vector<BBox>& preds, const std::vector<BBox>& gts,
                                double iou_thresh) {
    std::vector<std::vector<BBox>> p{preds}, g{gts};
    std::vector<std::vector<bool>> ign{std::vector<bool>(gts.size(), false)};
    return detail::pooled_ap(
        p, g, ign, [](const BBox& a, const BBox& b) { return iou(a, b); },
        [](const BBox& a) { return a.score; }, iou_thresh);
}

// mAP@IoU: AP pooled over frames per class, averaged over classes present in
// the ground truth.
inline double map50(const std::vector<std::vector<BBox>>& per_frame_preds,
                    const std::vector<std::vector<BBox>>& per_frame_gts,
                    double iou_thresh = 0.5) {
    require(per_frame_preds.size() == per_frame_gts.size(), "map50: frame count mismatch");
    std::set<int> classes;
    for (const auto& f : per_frame_gts)
        for (const auto& b : f) classes.insert(b.cls);
    if (classes.empty()) {
        for (const auto& f : per_frame_preds)
            if (!f.empty()) return 0.0;
        return 1.0;
    }
    double acc = 0;
    for (int cls : classes) {
        std::vector<std::vector<BBox>> p(per_frame_preds.size()), g(per_frame_gts.size());
        std::vector<std::vector<bool>> ign(per_frame_gts.size());
        for (size_t f = 0; f < per_frame_preds.size(); ++f) {
            for (const auto& b : per_frame_preds[f])
                if (b.cls == cls) p[f].push_back(b);
            for (const auto& b : per_frame_gts[f])
                if (b.cls == cls) {
                    g[f].push_back(b);
                    ign[f].push_back(false);
                }
        }
        acc += detail::pooled_ap(
            p, g, ign, [](const BBox& a, const BBox& b) { return iou(a, b); },
            [](const BBox& a) { return a.score; }, iou_thresh);
    }
    return acc / double(classes.size());
}

// mAP@OKS for keypoint sets (single person class).
inline double oks_map50(const std::vector<std::vector<KeypointSet>>& per_frame_preds,
                        const std::vector<std::vector<KeypointSet>>& per_frame_gts,
                        const std::vector<double>& sigmas, double oks_thresh = 0.5) {
    require(per_frame_preds.size() == per_frame_gts.size(), "oks_map50: frame count mismatch");
    std::vector<std::vector<bool>> ign(per_frame_gts.size());
    for (size_t f = 0; f < per_frame_gts.size(); ++f)
        ign[f].assign(per_frame_gts[f].size(), false);
    return detail::pooled_ap(
        per_frame_preds, per_frame_gts, ign,
        [&](const KeypointSet& p, const KeypointSet& g) { return oks(p, g, sigmas); },
        [](const KeypointSet& p) { return p.score; }, oks_thresh);
}

// ---------------------------------------------------------------------------
// Size-stratified mAP: GT outside the bin is ignored (absorbs predictions but
// is never scoreable); bins with no GT report absent.

struct SizeBins {
    double small_max; // area < small_max          -> small
    double medium_max; // small_max <= a < medium_max -> medium, else large
};

struct SizeStratifiedMap {
    std::optional<double> small, medium, large;

    std::optional<double> by_name(const std::string& name) const {
        if (name == "small") return small;
        if (name == "medium") return medium;
        if (name == "large") return large;
        return std::nullopt;
    }
};

inline SizeStratifiedMap map_by_size(const std::vector<std::vector<BBox>>& per_frame_preds,
                                     const std::vector<std::vector<BBox>>& per_frame_gts,
                                     const SizeBins& bins, double iou_thresh = 0.5) {
    require(bins.small_max < bins.medium_max, "map_by_size: bins must be ordered");
    auto bin_of = [&](const BBox& b) {
        const double a = b.area();
        if (a < bins.small_max) return 0;
        if (a < bins.medium_max) return 1;
        return 2;
    };
    SizeStratifiedMap out;
    for (int bin = 0; bin < 3; ++bin) {
        std::set<int> classes;
        size_t bin_gt = 0;
        for (const auto& f : per_frame_gts)
            for (const auto& b : f)
                if (bin_of(b) == bin) {
                    classes.insert(b.cls);
                    ++bin_gt;
                }
        if (bin_gt == 0) continue; // absent bin
        double acc = 0;
        for (int cls : classes) {
            std::vector<std::vector<BBox>> p(per_frame_preds.size()), g(per_frame_gts.size());
            std::vector<std::vector<bool>> ign(per_frame_gts.size());
            for (size_t f = 0; f < per_frame_gts.size(); ++f) {
                for (const auto& b : per_frame_preds[f])
                    if (b.cls == cls) p[f].push_back(b);
                for (const auto& b : per_frame_gts[f])
                    if (b.cls == cls) {
                        g[f].push_back(b);
                        ign[f].push_back(bin_of(b) != bin);
                    }
            }
            acc += detail::pooled_ap(
                p, g, ign, [](const BBox& a, const BBox& b) { return iou(a, b); },
                [](const BBox& a) { return a.score; }, iou_thresh);
        }
        const double v = acc / double(classes.size());
        if (bin == 0) out.small = v;
        else if (bin == 1) out.medium = v;
        else out.large = v;
    }
    return out;
}

} // namespace veil::metrics
