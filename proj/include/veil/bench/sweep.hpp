#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>

#include "veil/baselines/blur.hpp"
#include "veil/bench/config.hpp"
#include "veil/bench/manifest.hpp"
#include "veil/core/dataset_io.hpp"
#include "veil/metrics/identity.hpp"
#include "veil/metrics/ssim.hpp"
#include "veil/trainer/adversarial.hpp"

namespace veil {

inline std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct TradeoffPoint {
    std::string method; // obfuscator | blur | detect_blur
    double knob = 0;    // lambda or kernel size
    double map50 = 0;
    std::optional<double> oks_map50;
    metrics::SizeStratifiedMap size_map;
    double attack_mse = 0;
    double attack_ssim = 0;
    double ssim_direct = 0;
    double identity_acc = 0;
    double cotrained_final_rec = std::numeric_limits<double>::quiet_NaN();
    bool weak_cotrained = false;
    bool train_aborted = false;
};

inline nlohmann::json point_report_json(const TradeoffPoint& p, const std::string& cfg_hash) {
    nlohmann::json sm = nlohmann::json::object();
    auto put_bin = [&](const char* name, const std::optional<double>& v) {
        sm[name] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    put_bin("small", p.size_map.small);
    put_bin("medium", p.size_map.medium);
    put_bin("large", p.size_map.large);
    nlohmann::json j = {{"method", p.method},
                        {"knob", p.knob},
                        {"map50", p.map50},
                        {"map_by_size", sm},
                        {"oks_map50", p.oks_map50 ? nlohmann::json(*p.oks_map50)
                                                  : nlohmann::json(nullptr)},
                        {"attack_mse", p.attack_mse},
                        {"attack_ssim", p.attack_ssim},
                        {"ssim_direct", p.ssim_direct},
                        {"identity_acc", p.identity_acc},
                        {"perceptanon_ha2", nullptr},
                        {"config_hash", cfg_hash},
                        {"cotrained_final_rec", p.cotrained_final_rec},
                        {"weak_cotrained", p.weak_cotrained},
                        {"train_aborted", p.train_aborted}};
    return j;
}

inline TradeoffPoint point_from_report_json(const nlohmann::json& j) {
    TradeoffPoint p;
    p.method = j.value("method", "");
    p.knob = j.value("knob", 0.0);
    p.map50 = j.value("map50", 0.0);
    if (j.contains("oks_map50") && !j["oks_map50"].is_null())
        p.oks_map50 = j["oks_map50"].get<double>();
    if (j.contains("map_by_size")) {
        const auto& sm = j["map_by_size"];
        auto get_bin = [&](const char* name) -> std::optional<double> {
            if (sm.contains(name) && !sm[name].is_null()) return sm[name].get<double>();
            return std::nullopt;
        };
        p.size_map.small = get_bin("small");
        p.size_map.medium = get_bin("medium");
        p.size_map.large = get_bin("large");
    }
    p.attack_mse = j.value("attack_mse", 0.0);
    p.attack_ssim = j.value("attack_ssim", 0.0);
    p.ssim_direct = j.value("ssim_direct", 0.0);
    p.identity_acc = j.value("identity_acc", 0.0);
    p.cotrained_final_rec = j.value("cotrained_final_rec",
                                    std::numeric_limits<double>::quiet_NaN());
    p.weak_cotrained = j.value("weak_cotrained", false);
    p.train_aborted = j.value("train_aborted", false);
    return p;
}

struct DominanceReport {
    bool obfuscator_wins_matched_pair = false; // exists matched pair with higher mAP
    bool blur_never_dominates = true;
    int matched_pairs = 0;
    double tolerance = 0.05;
};

// Matched pairs at |attack_ssim| difference <= tolerance; Pareto dominance
// (higher utility, lower attack ssim) for the "never dominates" side.
inline DominanceReport dominance_check(const std::vector<TradeoffPoint>& points,
                                       double tolerance = 0.05) {
    DominanceReport r;
    r.tolerance = tolerance;
    for (const auto& o : points) {
        if (o.method != "obfuscator") continue;
        for (const auto& b : points) {
            if (b.method != "blur") continue;
            if (std::abs(o.attack_ssim - b.attack_ssim) <= tolerance) {
                ++r.matched_pairs;
                if (o.map50 > b.map50) r.obfuscator_wins_matched_pair = true;
            }
            const bool dominates = b.map50 >= o.map50 && b.attack_ssim <= o.attack_ssim &&
                                   (b.map50 > o.map50 || b.attack_ssim < o.attack_ssim);
            if (dominates) r.blur_never_dominates = false;
        }
    }
    return r;
}

struct SweepResult {
    std::vector<TradeoffPoint> points;
    double clean_map50 = 0;
    std::optional<double> clean_oks_map50;
    metrics::SizeStratifiedMap clean_size_map;
    double clean_identity_acc = 0;
    double identity_fixture_attack_ssim = 0; // attack when O(x) = x
    DominanceReport dominance;
    std::string points_csv_path;
    std::string summary_path;
    std::string manifest_path;
};

// Shared per-sweep state: datasets and the frozen utility adapters.
struct SweepContext {
    RunConfig cfg;
    Dataset train, val, test;
    UtilityAdapter detector;
    std::optional<UtilityAdapter> pose;
    std::vector<std::vector<BBox>> test_gt_boxes;
    std::vector<std::vector<KeypointSet>> test_gt_kps;
};

inline SweepContext prepare_sweep_context(const RunConfig& cfg, bool verbose = true) {
    SweepContext ctx;
    ctx.cfg = cfg;
    SceneSpec spec = cfg.scene;
    spec.seed = cfg.train_seed;
    ctx.train = generate_dataset(spec, cfg.train_frames, "train");
    spec.seed = cfg.val_seed;
    ctx.val = generate_dataset(spec, cfg.val_frames, "val");
    spec.seed = cfg.test_seed;
    ctx.test = generate_dataset(spec, cfg.test_frames, "test");

    if (verbose) std::cerr << "[sweep] training utility detector...\n";
    ctx.detector = UtilityAdapter::train_toy_detector(ctx.train, ctx.val, cfg.detector);
    if (verbose)
        std::cerr << "[sweep] detector val mAP@0.5 = " << ctx.detector.val_metric() << "\n";
    if (cfg.train_pose) {
        if (verbose) std::cerr << "[sweep] training utility pose model...\n";
        ctx.pose = UtilityAdapter::train_toy_pose(ctx.train, ctx.val, cfg.pose);
        if (verbose)
            std::cerr << "[sweep] pose val OKS-mAP = " << ctx.pose->val_metric() << "\n";
    }
    for (const auto& f : ctx.test.frames) {
        ctx.test_gt_boxes.push_back(ctx.test.ann(f.id).boxes);
        ctx.test_gt_kps.push_back(ctx.test.ann(f.id).keypoints);
    }
    return ctx;
}

// Utility + privacy proxies for one frame transform, under the frozen
// original adapters (no retraining on transformed data).
struct TransformEval {
    double map50 = 0;
    std::optional<double> oks_map50;
    metrics::SizeStratifiedMap size_map;
    double ssim_direct = 0;
    double identity_acc = 0;
    AttackReport attack;
};

inline TransformEval evaluate_transform(SweepContext& ctx, const FrameTransform& t,
                                        bool run_attack = true) {
    TransformEval ev;
    Dataset obf_train = transform_dataset(ctx.train, t);
    Dataset obf_test = transform_dataset(ctx.test, t);

    std::vector<std::vector<BBox>> preds;
    preds.reserve(obf_test.frames.size());
    double sdir = 0;
    for (size_t i = 0; i < obf_test.frames.size(); ++i) {
        preds.push_back(ctx.detector.predict(obf_test.frames[i]).boxes);
        sdir += metrics::ssim(ctx.test.frames[i], obf_test.frames[i]);
    }
    ev.map50 = metrics::map50(preds, ctx.test_gt_boxes, 0.5);
    ev.size_map = metrics::map_by_size(preds, ctx.test_gt_boxes, ctx.cfg.size_bins, 0.5);
    ev.ssim_direct = sdir / double(obf_test.frames.size());

    if (ctx.pose) {
        std::vector<std::vector<KeypointSet>> kp_preds;
        kp_preds.reserve(obf_test.frames.size());
        for (const auto& f : obf_test.frames)
            kp_preds.push_back(ctx.pose->predict(f).keypoints);
        ev.oks_map50 = metrics::oks_map50(
            kp_preds, ctx.test_gt_kps,
            uniform_sigmas(size_t(ctx.cfg.pose.pose.n_joints)), 0.5);
    }

    ev.identity_acc = metrics::identity_attack(person_crops(obf_train, ctx.cfg.identity_pad_px),
                                               person_crops(obf_test, ctx.cfg.identity_pad_px),
                                               ctx.cfg.scene.n_identities, ctx.cfg.identity);
    if (run_attack)
        ev.attack = attack_evaluate_paired(ctx.train, obf_train, ctx.test, obf_test,
                                           ctx.cfg.attack);
    return ev;
}

inline void write_points_csv(const std::vector<TradeoffPoint>& points, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "sweep: cannot write '", path, "'");
    out << "method,knob,map50,attack_ssim,attack_mse,ssim_direct,identity_acc\n";
    for (const auto& p : points)
        out << p.method << "," << fmt_g(p.knob) << "," << fmt_g(p.map50) << ","
            << fmt_g(p.attack_ssim) << "," << fmt_g(p.attack_mse) << ","
            << fmt_g(p.ssim_direct) << "," << fmt_g(p.identity_acc) << "\n";
    require(out.good(), "sweep: write failure for '", path, "'");
}

inline std::vector<TradeoffPoint> read_points_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "sweep: cannot open '", path, "'");
    std::string line;
    std::getline(in, line); // header
    std::vector<TradeoffPoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TradeoffPoint p;
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, p.method, ',');
        auto next = [&]() {
            std::getline(ss, tok, ',');
            return std::stod(tok);
        };
        p.knob = next();
        p.map50 = next();
        p.attack_ssim = next();
        p.attack_mse = next();
        p.ssim_direct = next();
        p.identity_acc = next();
        out.push_back(std::move(p));
    }
    return out;
}

inline void write_train_history(const TrainHistory& h, const std::string& csv_path) {
    std::ofstream out(csv_path);
    require(out.good(), "history: cannot write '", csv_path, "'");
    out << "step,l_util,l_rec,l_total\n";
    for (const auto& r : h.records)
        out << r.step << "," << fmt_g(r.l_util) << "," << fmt_g(r.l_rec) << ","
            << fmt_g(r.l_o_total) << "\n";
    require(out.good(), "history: write failure for '", csv_path, "'");
}

inline std::string knob_tag(double knob) {
    std::string s = fmt_g(knob);
    for (auto& ch : s)
        if (ch == '.') ch = 'p';
    return s;
}

// Full sweep: one adversarial run + independent attack per lambda, one
// evaluation per blur kernel, all proxies per point. Points persist
// incrementally and are reused when re-run with the same config.
inline SweepResult run_sweep(const RunConfig& cfg, bool verbose = true) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    const std::string cfg_hash = config_hash(cfg);
    fs::create_directories(fs::path(cfg.out_dir) / "points");

    SweepContext ctx = prepare_sweep_context(cfg, verbose);
    SweepResult res;

    // clean references: identity transform
    FrameTransform ident = [](const Frame& f) { return f; };
    {
        TransformEval ev = evaluate_transform(ctx, ident, /*run_attack=*/true);
        res.clean_map50 = ev.map50;
        res.clean_oks_map50 = ev.oks_map50;
        res.clean_size_map = ev.size_map;
        res.clean_identity_acc = ev.identity_acc;
        res.identity_fixture_attack_ssim = ev.attack.final_test_ssim;
        if (verbose)
            std::cerr << "[sweep] clean mAP " << ev.map50 << ", clean identity acc "
                      << ev.identity_acc << ", identity-fixture attack ssim "
                      << ev.attack.final_test_ssim << "\n";
    }

    auto detector_hash = ctx.detector.hash();
    RunManifest man;
    man.command = "sweep";
    man.run_id = make_run_id("sweep", cfg_hash);
    man.config = run_config_to_json(cfg);
    man.dataset_hashes = {{"train", Hasher().pod(dataset_content_hash(ctx.train)).hex()},
                          {"val", Hasher().pod(dataset_content_hash(ctx.val)).hex()},
                          {"test", Hasher().pod(dataset_content_hash(ctx.test)).hex()}};
    man.model_hashes["detector"] = detector_hash;
    if (ctx.pose) man.model_hashes["pose"] = ctx.pose->hash();

    auto point_dir = [&](const std::string& method, double knob) {
        return (fs::path(cfg.out_dir) / "points" / cat(method, "_", knob_tag(knob))).string();
    };

    auto finish_point = [&](TradeoffPoint& p, const std::string& dir) {
        fs::create_directories(dir);
        const std::string report = dir + "/report.json";
        std::ofstream out(report);
        out << point_report_json(p, cfg_hash).dump(2) << "\n";
        require(out.good(), "sweep: cannot write '", report, "'");
        man.report_paths.push_back(report);
        res.points.push_back(p);
        write_points_csv(res.points, (fs::path(cfg.out_dir) / "points.csv").string());
    };

    auto try_resume = [&](const std::string& dir, TradeoffPoint& p) {
        const std::string report = dir + "/report.json";
        if (!fs::exists(report)) return false;
        std::ifstream in(report);
        nlohmann::json j;
        try {
            in >> j;
        } catch (...) {
            return false;
        }
        if (j.value("config_hash", "") != cfg_hash) return false;
        p = point_from_report_json(j);
        man.report_paths.push_back(report);
        res.points.push_back(p);
        return true;
    };

    // ---- learned obfuscator points (one adversarial run per lambda)
    const bool do_obf =
        std::find(cfg.methods.begin(), cfg.methods.end(), "obfuscator") != cfg.methods.end();
    if (do_obf) {
        for (double lambda : cfg.lambdas) {
            const std::string dir = point_dir("obfuscator", lambda);
            TradeoffPoint p;
            if (try_resume(dir, p)) {
                if (verbose) std::cerr << "[sweep] resume obfuscator lambda=" << lambda << "\n";
                continue;
            }
            if (verbose) std::cerr << "[sweep] obfuscator lambda=" << lambda << "\n";
            fs::create_directories(dir);
            ObfuscatorModel<float> o(cfg.obf_arch, cfg.obf_seed);
            DeobfuscatorModel<float> d(cfg.deobf_arch, cfg.deobf_seed);
            TrainConfig tc = cfg.train;
            tc.lambda = lambda;
            TrainHistory hist = adversarial_train(o, ctx.detector, d, ctx.train, tc);
            write_train_history(hist, dir + "/history.csv");
            {
                nlohmann::json hman = {{"lambda", lambda},
                                       {"seed", tc.seed},
                                       {"o_hash", hist.o_hash},
                                       {"d_hash", hist.d_hash},
                                       {"u_hash", hist.u_hash},
                                       {"wall_clock_sec", hist.wall_clock_sec},
                                       {"aborted_non_finite", hist.aborted_non_finite},
                                       {"history_hash", Hasher().pod(hist.hash()).hex()}};
                std::ofstream hout(dir + "/train_manifest.json");
                hout << hman.dump(2) << "\n";
            }
            o.provenance() = {{"trained", "adversarial"},
                              {"lambda", lambda},
                              {"train_seed", tc.seed},
                              {"utility_hash", hist.u_hash}};
            export_model(o, dir + "/obfuscator.ckpt");
            export_deobfuscator(d, dir + "/deobfuscator.ckpt");

            TransformEval ev = evaluate_transform(
                ctx, [&](const Frame& f) { return o.obfuscate(f); }, true);
            p.method = "obfuscator";
            p.knob = lambda;
            p.map50 = ev.map50;
            p.oks_map50 = ev.oks_map50;
            p.size_map = ev.size_map;
            p.attack_mse = ev.attack.final_test_recon_mse;
            p.attack_ssim = ev.attack.final_test_ssim;
            p.ssim_direct = ev.ssim_direct;
            p.identity_acc = ev.identity_acc;
            p.train_aborted = hist.aborted_non_finite;
            if (!hist.records.empty()) {
                p.cotrained_final_rec = hist.records.back().l_rec;
                p.weak_cotrained =
                    ev.attack.final_test_recon_mse < 0.9 * p.cotrained_final_rec;
            }
            man.model_hashes[cat("obfuscator_lambda_", knob_tag(lambda))] = hist.o_hash;
            finish_point(p, dir);
            if (verbose)
                std::cerr << "[sweep]   mAP " << p.map50 << ", attack ssim " << p.attack_ssim
                          << ", identity acc " << p.identity_acc << "\n";
        }
    }

    // ---- blur baseline points
    const bool do_blur =
        std::find(cfg.methods.begin(), cfg.methods.end(), "blur") != cfg.methods.end();
    if (do_blur) {
        for (int k : cfg.blur_ks) {
            const std::string dir = point_dir("blur", k);
            TradeoffPoint p;
            if (try_resume(dir, p)) {
                if (verbose) std::cerr << "[sweep] resume blur k=" << k << "\n";
                continue;
            }
            if (verbose) std::cerr << "[sweep] blur k=" << k << "\n";
            TransformEval ev = evaluate_transform(
                ctx, [k](const Frame& f) { return gaussian_blur_full(f, k); }, true);
            p.method = "blur";
            p.knob = k;
            p.map50 = ev.map50;
            p.oks_map50 = ev.oks_map50;
            p.size_map = ev.size_map;
            p.attack_mse = ev.attack.final_test_recon_mse;
            p.attack_ssim = ev.attack.final_test_ssim;
            p.ssim_direct = ev.ssim_direct;
            p.identity_acc = ev.identity_acc;
            finish_point(p, dir);
            if (verbose)
                std::cerr << "[sweep]   mAP " << p.map50 << ", attack ssim " << p.attack_ssim
                          << ", identity acc " << p.identity_acc << "\n";
        }
    }

    // ---- detect-then-blur baseline points
    const bool do_dblur =
        std::find(cfg.methods.begin(), cfg.methods.end(), "detect_blur") != cfg.methods.end();
    if (do_dblur) {
        for (int k : cfg.blur_ks) {
            const std::string dir = point_dir("detect_blur", k);
            TradeoffPoint p;
            if (try_resume(dir, p)) {
                if (verbose) std::cerr << "[sweep] resume detect_blur k=" << k << "\n";
                continue;
            }
            if (verbose) std::cerr << "[sweep] detect_blur k=" << k << "\n";
            TransformEval ev = evaluate_transform(
                ctx,
                [&, k](const Frame& f) {
                    return detect_then_blur(f, ctx.detector, k, cfg.detect_blur_score_thresh);
                },
                true);
            p.method = "detect_blur";
            p.knob = k;
            p.map50 = ev.map50;
            p.oks_map50 = ev.oks_map50;
            p.size_map = ev.size_map;
            p.attack_mse = ev.attack.final_test_recon_mse;
            p.attack_ssim = ev.attack.final_test_ssim;
            p.ssim_direct = ev.ssim_direct;
            p.identity_acc = ev.identity_acc;
            finish_point(p, dir);
        }
    }

    res.dominance = dominance_check(res.points);

    // summary + manifest
    res.points_csv_path = (fs::path(cfg.out_dir) / "points.csv").string();
    res.summary_path = (fs::path(cfg.out_dir) / "summary.json").string();
    res.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
    {
        nlohmann::json sm = nlohmann::json::object();
        auto put_bin = [&](const char* name, const std::optional<double>& v) {
            sm[name] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        put_bin("small", res.clean_size_map.small);
        put_bin("medium", res.clean_size_map.medium);
        put_bin("large", res.clean_size_map.large);
        nlohmann::json j = {
            {"clean_map50", res.clean_map50},
            {"clean_oks_map50", res.clean_oks_map50 ? nlohmann::json(*res.clean_oks_map50)
                                                    : nlohmann::json(nullptr)},
            {"clean_map_by_size", sm},
            {"clean_identity_acc", res.clean_identity_acc},
            {"identity_fixture_attack_ssim", res.identity_fixture_attack_ssim},
            {"dominance",
             {{"obfuscator_wins_matched_pair", res.dominance.obfuscator_wins_matched_pair},
              {"blur_never_dominates", res.dominance.blur_never_dominates},
              {"matched_pairs", res.dominance.matched_pairs},
              {"tolerance", res.dominance.tolerance}}},
            {"config_hash", cfg_hash}};
        std::ofstream out(res.summary_path);
        out << j.dump(2) << "\n";
        require(out.good(), "sweep: cannot write summary");
        man.report_paths.push_back(res.summary_path);
    }
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, res.manifest_path);
    return res;
}

} // namespace veil
