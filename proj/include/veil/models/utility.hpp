#pragma once

#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "veil/metrics/ap.hpp"
#include "veil/models/detector.hpp"
#include "veil/models/pose.hpp"
#include "veil/nn/adam.hpp"
#include "veil/nn/checkpoint.hpp"
#include "veil/nn/net_util.hpp"
#include "veil/nn/pad.hpp"

namespace veil {

enum class Task { detect, pose };

inline std::string task_name(Task t) { return t == Task::detect ? "detect" : "pose"; }

struct UtilityTrainConfig {
    int steps = 600;
    int batch = 16;
    double lr = 1e-3;
    uint64_t seed = 7;
    double sanity_floor = 0.85; // held-out metric floor; warning if unmet
    int log_every = 0;          // 0 = silent
    DetectorConfig det;
    PoseConfig pose;
};

template <class T>
struct BatchView {
    Tensor<T> x;
    std::vector<const Annotation*> anns;
};

template <class T>
BatchView<T> make_batch(const Dataset& ds, std::span<const size_t> idx) {
    require(!idx.empty(), "make_batch: empty index list");
    const Frame& first = ds.frames[idx[0]];
    BatchView<T> b;
    b.x = Tensor<T>(int(idx.size()), 3, first.height, first.width);
    for (size_t i = 0; i < idx.size(); ++i) {
        const Frame& f = ds.frames[idx[i]];
        require(f.height == first.height && f.width == first.width,
                "make_batch: mixed frame sizes");
        frame_into_tensor(f, b.x, int(i));
        b.anns.push_back(&ds.ann(f.id));
    }
    return b;
}

// Epoch-shuffled index stream, deterministic in its seed.
class BatchSampler {
public:
    BatchSampler(size_t n, uint64_t seed) : rng_(seed, /*stream=*/0xBA7C), order_(n) {
        for (size_t i = 0; i < n; ++i) order_[i] = i;
        cursor_ = n;
    }

    std::vector<size_t> next(size_t batch) {
        std::vector<size_t> out;
        out.reserve(batch);
        for (size_t i = 0; i < batch; ++i) {
            if (cursor_ >= order_.size()) {
                for (size_t j = order_.size(); j-- > 1;)
                    std::swap(order_[j], order_[rng_.below(j + 1)]);
                cursor_ = 0;
            }
            out.push_back(order_[cursor_++]);
        }
        return out;
    }

private:
    Rng rng_;
    std::vector<size_t> order_;
    size_t cursor_ = 0;
};

// Frozen task model with a uniform contract: predictions for evaluation and
// a task loss differentiable w.r.t. the input frame.
class UtilityAdapter {
public:
    struct Predictions {
        std::vector<Detection> boxes;
        std::vector<KeypointSet> keypoints;
    };

    struct LossResult {
        double loss = 0;
        Tensor<float> dinput;
    };

    UtilityAdapter() = default;

    Task task() const { return task_; }
    bool frozen() const { return frozen_; }
    const std::string& frozen_hash() const { return frozen_hash_; }
    double val_metric() const { return val_metric_; }
    const DetectorConfig& detector_config() const { return det_cfg_; }
    const PoseConfig& pose_config() const { return pose_cfg_; }
    uint64_t seed() const { return seed_; }

    nn::ParamRefs<float> params() {
        return task_ == Task::detect ? det_.params() : pose_.params();
    }

    std::string hash() { return nn::param_hash(params()); }

    void freeze() {
        frozen_ = true;
        frozen_hash_ = hash();
    }

    // ---- training -----------------------------------------------------

    static UtilityAdapter train_toy_detector(const Dataset& train, const Dataset& val,
                                             const UtilityTrainConfig& cfg) {
        size_t total_boxes = 0;
        for (const auto& [id, a] : train.annotations) total_boxes += a.boxes.size();
        require(total_boxes > 0, "train_toy_detector: training dataset contains no boxes");

        UtilityAdapter u;
        u.task_ = Task::detect;
        u.det_cfg_ = cfg.det;
        u.seed_ = cfg.seed;
        u.det_ = DetectorNet<float>(cfg.det, cfg.seed);

        auto params = u.det_.params();
        nn::Adam<float> opt(params, cfg.lr);
        BatchSampler sampler(train.size(), cfg.seed);
        for (int step = 0; step < cfg.steps; ++step) {
            auto idx = sampler.next(size_t(std::min<int>(cfg.batch, int(train.size()))));
            auto batch = make_batch<float>(train, idx);
            auto tgt = build_det_targets<float>(batch.anns, batch.x.h, batch.x.w,
                                                cfg.det.n_classes);
            nn::zero_grads(params);
            auto out = u.det_.forward(batch.x, /*train=*/true);
            auto L = det_loss<float>(out, tgt, cfg.det);
            u.det_.backward(L.grads);
            opt.step();
            if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps))
                std::cerr << "[train-detector] step " << step << " loss " << L.total << "\n";
        }
        u.freeze();
        u.val_metric_ = u.eval_map(val);
        u.floor_met_ = u.val_metric_ >= cfg.sanity_floor;
        if (!u.floor_met_)
            std::cerr << "[train-detector] warning: val mAP@0.5 " << u.val_metric_
                      << " below sanity floor " << cfg.sanity_floor << "\n";
        return u;
    }

    static UtilityAdapter train_toy_pose(const Dataset& train, const Dataset& val,
                                         const UtilityTrainConfig& cfg) {
        size_t total_kps = 0;
        for (const auto& [id, a] : train.annotations) total_kps += a.keypoints.size();
        require(total_kps > 0, "train_toy_pose: training dataset contains no keypoints");

        UtilityAdapter u;
        u.task_ = Task::pose;
        u.pose_cfg_ = cfg.pose;
        u.seed_ = cfg.seed;
        u.pose_ = PoseNet<float>(cfg.pose, cfg.seed);

        auto params = u.pose_.params();
        nn::Adam<float> opt(params, cfg.lr);
        BatchSampler sampler(train.size(), cfg.seed);
        for (int step = 0; step < cfg.steps; ++step) {
            auto idx = sampler.next(size_t(std::min<int>(cfg.batch, int(train.size()))));
            auto batch = make_batch<float>(train, idx);
            auto tgt = build_pose_targets<float>(batch.anns, batch.x.h, batch.x.w, cfg.pose);
            nn::zero_grads(params);
            auto out = u.pose_.forward(batch.x, /*train=*/true);
            auto L = pose_loss<float>(out, tgt);
            u.pose_.backward(L.grad);
            opt.step();
            if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps))
                std::cerr << "[train-pose] step " << step << " loss " << L.total << "\n";
        }
        u.freeze();
        u.val_metric_ = u.eval_oks_map(val);
        u.floor_met_ = u.val_metric_ >= cfg.sanity_floor;
        if (!u.floor_met_)
            std::cerr << "[train-pose] warning: val OKS-mAP " << u.val_metric_
                      << " below sanity floor " << cfg.sanity_floor << "\n";
        return u;
    }

    // ---- inference ----------------------------------------------------

    Predictions predict(const Frame& f) {
        require(frozen_, "predict: adapter must be frozen");
        return predict_impl(f);
    }

    // ---- differentiable task loss --------------------------------------

    // Batch loss with gradient w.r.t. input pixels. Parameter gradients are
    // computed into scratch and discarded; weights are never touched.
    LossResult task_loss_input_grad(const Tensor<float>& x,
                                    std::span<const Annotation* const> anns) {
        LossResult r;
        if (task_ == Task::detect) {
            auto tgt = build_det_targets<float>(anns, x.h, x.w, det_cfg_.n_classes);
            auto params = det_.params();
            nn::zero_grads(params);
            auto out = det_.forward(x, /*train=*/true);
            auto L = det_loss<float>(out, tgt, det_cfg_);
            r.loss = L.total;
            r.dinput = det_.backward(L.grads);
            nn::zero_grads(params);
        } else {
            auto tgt = build_pose_targets<float>(anns, x.h, x.w, pose_cfg_);
            auto params = pose_.params();
            nn::zero_grads(params);
            auto out = pose_.forward(x, /*train=*/true);
            auto L = pose_loss<float>(out, tgt);
            r.loss = L.total;
            r.dinput = pose_.backward(L.grad);
            nn::zero_grads(params);
        }
        return r;
    }

    double task_loss_value(const Tensor<float>& x, std::span<const Annotation* const> anns) {
        if (task_ == Task::detect) {
            auto tgt = build_det_targets<float>(anns, x.h, x.w, det_cfg_.n_classes);
            auto out = det_.forward(x, /*train=*/false);
            return det_loss<float>(out, tgt, det_cfg_).total;
        }
        auto tgt = build_pose_targets<float>(anns, x.h, x.w, pose_cfg_);
        auto out = pose_.forward(x, /*train=*/false);
        return pose_loss<float>(out, tgt).total;
    }

    // Single-frame loss (the spec-level operation). Empty annotations are
    // valid: the detector loss reduces to its background term.
    double task_loss(const Frame& f, const Annotation& gt) {
        if (task_ == Task::pose)
            for (const auto& k : gt.keypoints)
                require(int(k.joints.size()) == pose_cfg_.n_joints,
                        "task_loss: annotation joint count mismatches pose adapter");
        Tensor<float> x(1, 3, f.height, f.width);
        frame_into_tensor(f, x, 0);
        const Annotation* a = &gt;
        return task_loss_value(x, std::span<const Annotation* const>(&a, 1));
    }

    // ---- evaluation helpers --------------------------------------------

    double eval_map(const Dataset& ds) {
        std::vector<std::vector<BBox>> preds, gts;
        for (const auto& f : ds.frames) {
            preds.push_back(predict_impl(f).boxes);
            gts.push_back(ds.ann(f.id).boxes);
        }
        return metrics::map50(preds, gts, 0.5);
    }

    double eval_oks_map(const Dataset& ds) {
        std::vector<std::vector<KeypointSet>> preds, gts;
        for (const auto& f : ds.frames) {
            preds.push_back(predict_impl(f).keypoints);
            gts.push_back(ds.ann(f.id).keypoints);
        }
        return metrics::oks_map50(preds, gts, uniform_sigmas(size_t(pose_cfg_.n_joints)), 0.5);
    }

    // ---- persistence ----------------------------------------------------

    void save(const std::string& path) {
        nlohmann::json arch;
        arch["task"] = task_name(task_);
        if (task_ == Task::detect) {
            arch["c0"] = det_cfg_.c0;
            arch["n_classes"] = det_cfg_.n_classes;
            arch["score_thresh"] = det_cfg_.score_thresh;
            arch["nms_iou"] = det_cfg_.nms_iou;
        } else {
            arch["c0"] = pose_cfg_.c0;
            arch["n_joints"] = pose_cfg_.n_joints;
            arch["center_thresh"] = pose_cfg_.center_thresh;
            arch["window_px"] = pose_cfg_.window_px;
        }
        nlohmann::json prov = {{"val_metric", val_metric_}, {"floor_met", floor_met_}};
        nn::save_checkpoint(path, "utility", arch, seed_, prov, params());
    }

    static UtilityAdapter load(const std::string& path) {
        auto header = nn::peek_checkpoint(path);
        require(header.kind == "utility", "UtilityAdapter::load: '", path, "' holds kind '",
                header.kind, "'");
        UtilityAdapter u;
        const std::string task = header.arch.value("task", "detect");
        u.seed_ = header.seed;
        if (task == "detect") {
            u.task_ = Task::detect;
            u.det_cfg_.c0 = header.arch.value("c0", 16);
            u.det_cfg_.n_classes = header.arch.value("n_classes", 2);
            u.det_cfg_.score_thresh = header.arch.value("score_thresh", 0.30);
            u.det_cfg_.nms_iou = header.arch.value("nms_iou", 0.50);
            u.det_ = DetectorNet<float>(u.det_cfg_, header.seed);
        } else {
            u.task_ = Task::pose;
            u.pose_cfg_.c0 = header.arch.value("c0", 16);
            u.pose_cfg_.n_joints = header.arch.value("n_joints", 5);
            u.pose_cfg_.center_thresh = header.arch.value("center_thresh", 0.30);
            u.pose_cfg_.window_px = header.arch.value("window_px", 24);
            u.pose_ = PoseNet<float>(u.pose_cfg_, header.seed);
        }
        auto h = nn::load_checkpoint(path, "utility", u.params());
        u.val_metric_ = h.provenance.value("val_metric", -1.0);
        u.floor_met_ = h.provenance.value("floor_met", false);
        u.freeze();
        return u;
    }

private:
    Predictions predict_impl(const Frame& f) {
        Tensor<float> x(1, 3, f.height, f.width);
        frame_into_tensor(f, x, 0);
        Tensor<float> padded = pad_to_multiple(x, 4);
        Predictions p;
        if (task_ == Task::detect) {
            auto out = det_.forward(padded, /*train=*/false);
            p.boxes = decode_detections<float>(out, 0, f.height, f.width, det_cfg_);
        } else {
            auto out = pose_.forward(padded, /*train=*/false);
            p.keypoints = decode_pose<float>(out, 0, pose_cfg_);
        }
        return p;
    }

    Task task_ = Task::detect;
    DetectorConfig det_cfg_;
    PoseConfig pose_cfg_;
    DetectorNet<float> det_;
    PoseNet<float> pose_;
    uint64_t seed_ = 0;
    bool frozen_ = false;
    std::string frozen_hash_;
    double val_metric_ = -1;
    bool floor_met_ = false;
};

} // namespace veil
