#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "veil/metrics/ap.hpp"
#include "veil/metrics/identity.hpp"
#include "veil/models/unet.hpp"
#include "veil/models/utility.hpp"
#include "veil/synth/generator.hpp"
#include "veil/trainer/adversarial.hpp"

namespace veil {

inline constexpr int kConfigVersion = 1;

struct RunConfig {
    std::string out_dir = "runs/out";

    // dataset
    SceneSpec scene;
    int train_frames = 500, val_frames = 100, test_frames = 100;
    uint64_t train_seed = 101, val_seed = 202, test_seed = 303;

    // utility models
    UtilityTrainConfig detector;
    UtilityTrainConfig pose;
    bool train_pose = false;

    // adversarial components
    UNetConfig obf_arch{16, 2};
    uint64_t obf_seed = 11;
    UNetConfig deobf_arch{32, 2};
    uint64_t deobf_seed = 13;
    TrainConfig train;
    AttackConfig attack;

    // identity attack
    metrics::IdentityAttackConfig identity;
    double identity_pad_px = 1.0;

    // sweep grids
    std::vector<double> lambdas{0.25, 1.0, 4.0};
    std::vector<int> blur_ks{1, 5, 9, 17, 33, 65};
    std::vector<std::string> methods{"obfuscator", "blur", "detect_blur"};
    double detect_blur_score_thresh = 0.50;

    // evaluation
    metrics::SizeBins size_bins{64.0, 256.0};
};

namespace config_detail {

inline void check_keys(const nlohmann::json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
    require(j.is_object(), "config: section '", section, "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        require(ok, "config: unknown key '", key, "' in section '", section, "'");
    }
}

inline void parse_range(const nlohmann::json& j, const std::string& ctx, int& lo, int& hi) {
    require(j.is_array() && j.size() == 2, "config: ", ctx, " must be [min,max]");
    lo = j[0].get<int>();
    hi = j[1].get<int>();
}

} // namespace config_detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    using config_detail::check_keys;
    using config_detail::parse_range;

    check_keys(j, "(root)",
               {"version", "out_dir", "dataset", "detector", "pose", "obfuscator",
                "deobfuscator", "train", "attack", "identity", "sweep", "eval"});
    const int version = j.value("version", kConfigVersion);
    require(version == kConfigVersion, "config: version ", version, " unsupported");

    RunConfig c;
    c.detector.sanity_floor = 0.85;
    c.pose.seed = 8;
    c.pose.sanity_floor = 0.80;
    c.out_dir = j.value("out_dir", c.out_dir);

    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        check_keys(d, "dataset",
                   {"image_size", "n_task_objects", "n_persons", "n_identities", "background",
                    "noise_std", "train_frames", "val_frames", "test_frames", "train_seed",
                    "val_seed", "test_seed"});
        if (d.contains("image_size")) {
            int h, w;
            parse_range(d["image_size"], "dataset.image_size", h, w);
            c.scene.height = h;
            c.scene.width = w;
        }
        if (d.contains("n_task_objects"))
            parse_range(d["n_task_objects"], "dataset.n_task_objects",
                        c.scene.min_task_objects, c.scene.max_task_objects);
        if (d.contains("n_persons"))
            parse_range(d["n_persons"], "dataset.n_persons", c.scene.min_persons,
                        c.scene.max_persons);
        c.scene.n_identities = d.value("n_identities", c.scene.n_identities);
        c.scene.background = d.value("background", c.scene.background);
        c.scene.noise_std = d.value("noise_std", c.scene.noise_std);
        c.train_frames = d.value("train_frames", c.train_frames);
        c.val_frames = d.value("val_frames", c.val_frames);
        c.test_frames = d.value("test_frames", c.test_frames);
        c.train_seed = d.value("train_seed", c.train_seed);
        c.val_seed = d.value("val_seed", c.val_seed);
        c.test_seed = d.value("test_seed", c.test_seed);
    }

    if (j.contains("detector")) {
        const auto& d = j["detector"];
        check_keys(d, "detector",
                   {"c0", "steps", "batch", "lr", "seed", "sanity_floor", "score_thresh",
                    "nms_iou"});
        c.detector.det.c0 = d.value("c0", c.detector.det.c0);
        c.detector.steps = d.value("steps", c.detector.steps);
        c.detector.batch = d.value("batch", c.detector.batch);
        c.detector.lr = d.value("lr", c.detector.lr);
        c.detector.seed = d.value("seed", c.detector.seed);
        c.detector.sanity_floor = d.value("sanity_floor", 0.85);
        c.detector.det.score_thresh = d.value("score_thresh", c.detector.det.score_thresh);
        c.detector.det.nms_iou = d.value("nms_iou", c.detector.det.nms_iou);
    }

    if (j.contains("pose")) {
        const auto& d = j["pose"];
        check_keys(d, "pose",
                   {"c0", "steps", "batch", "lr", "seed", "sanity_floor", "center_thresh",
                    "window_px", "enabled"});
        c.train_pose = d.value("enabled", true);
        c.pose.pose.c0 = d.value("c0", c.pose.pose.c0);
        c.pose.steps = d.value("steps", c.pose.steps);
        c.pose.batch = d.value("batch", c.pose.batch);
        c.pose.lr = d.value("lr", c.pose.lr);
        c.pose.seed = d.value("seed", c.pose.seed);
        c.pose.sanity_floor = d.value("sanity_floor", c.pose.sanity_floor);
        c.pose.pose.center_thresh = d.value("center_thresh", c.pose.pose.center_thresh);
        c.pose.pose.window_px = d.value("window_px", c.pose.pose.window_px);
    }

    if (j.contains("obfuscator")) {
        const auto& d = j["obfuscator"];
        check_keys(d, "obfuscator", {"c0", "depth", "seed"});
        c.obf_arch.c0 = d.value("c0", c.obf_arch.c0);
        c.obf_arch.depth = d.value("depth", c.obf_arch.depth);
        c.obf_seed = d.value("seed", c.obf_seed);
    }
    if (j.contains("deobfuscator")) {
        const auto& d = j["deobfuscator"];
        check_keys(d, "deobfuscator", {"c0", "depth", "seed"});
        c.deobf_arch.c0 = d.value("c0", c.deobf_arch.c0);
        c.deobf_arch.depth = d.value("depth", c.deobf_arch.depth);
        c.deobf_seed = d.value("seed", c.deobf_seed);
    }
    if (j.contains("train")) {
        const auto& d = j["train"];
        check_keys(d, "train",
                   {"lambda", "lr_o", "lr_d", "steps", "d_steps_per_o_step", "batch_size",
                    "seed", "checkpoint_every", "log_every"});
        c.train.lambda = d.value("lambda", c.train.lambda);
        c.train.lr_o = d.value("lr_o", c.train.lr_o);
        c.train.lr_d = d.value("lr_d", c.train.lr_d);
        c.train.steps = d.value("steps", c.train.steps);
        c.train.d_steps_per_o_step = d.value("d_steps_per_o_step", c.train.d_steps_per_o_step);
        c.train.batch_size = d.value("batch_size", c.train.batch_size);
        c.train.seed = d.value("seed", c.train.seed);
        c.train.checkpoint_every = d.value("checkpoint_every", c.train.checkpoint_every);
        c.train.log_every = d.value("log_every", c.train.log_every);
    }
    if (j.contains("attack")) {
        const auto& d = j["attack"];
        check_keys(d, "attack", {"steps", "batch", "lr", "seed", "eval_every", "c0", "depth"});
        c.attack.steps = d.value("steps", c.attack.steps);
        c.attack.batch = d.value("batch", c.attack.batch);
        c.attack.lr = d.value("lr", c.attack.lr);
        c.attack.seed = d.value("seed", c.attack.seed);
        c.attack.eval_every = d.value("eval_every", c.attack.eval_every);
        c.attack.arch.c0 = d.value("c0", c.attack.arch.c0);
        c.attack.arch.depth = d.value("depth", c.attack.arch.depth);
    }
    if (j.contains("identity")) {
        const auto& d = j["identity"];
        check_keys(d, "identity", {"steps", "batch", "lr", "seed", "pad_px"});
        c.identity.steps = d.value("steps", c.identity.steps);
        c.identity.batch = d.value("batch", c.identity.batch);
        c.identity.lr = d.value("lr", c.identity.lr);
        c.identity.seed = d.value("seed", c.identity.seed);
        c.identity_pad_px = d.value("pad_px", c.identity_pad_px);
    }
    if (j.contains("sweep")) {
        const auto& d = j["sweep"];
        check_keys(d, "sweep", {"lambdas", "blur_ks", "methods", "detect_blur_score_thresh"});
        if (d.contains("lambdas")) c.lambdas = d["lambdas"].get<std::vector<double>>();
        if (d.contains("blur_ks")) c.blur_ks = d["blur_ks"].get<std::vector<int>>();
        if (d.contains("methods")) c.methods = d["methods"].get<std::vector<std::string>>();
        c.detect_blur_score_thresh = d.value("detect_blur_score_thresh",
                                             c.detect_blur_score_thresh);
        for (const auto& m : c.methods)
            require(m == "obfuscator" || m == "blur" || m == "detect_blur",
                    "config: unknown sweep method '", m, "'");
    }
    if (j.contains("eval")) {
        const auto& d = j["eval"];
        check_keys(d, "eval", {"size_bins"});
        if (d.contains("size_bins")) {
            require(d["size_bins"].is_array() && d["size_bins"].size() == 2,
                    "config: eval.size_bins must be [small_max, medium_max]");
            c.size_bins.small_max = d["size_bins"][0].get<double>();
            c.size_bins.medium_max = d["size_bins"][1].get<double>();
        }
    }
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open '", path, "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("config: malformed JSON in '", path, "': ", e.what());
    }
    return parse_run_config(j);
}

// Full snapshot, sufficient to re-parse into the identical RunConfig.
inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["version"] = kConfigVersion;
    j["out_dir"] = c.out_dir;
    j["dataset"] = {{"image_size", {c.scene.height, c.scene.width}},
                    {"n_task_objects", {c.scene.min_task_objects, c.scene.max_task_objects}},
                    {"n_persons", {c.scene.min_persons, c.scene.max_persons}},
                    {"n_identities", c.scene.n_identities},
                    {"background", c.scene.background},
                    {"noise_std", c.scene.noise_std},
                    {"train_frames", c.train_frames},
                    {"val_frames", c.val_frames},
                    {"test_frames", c.test_frames},
                    {"train_seed", c.train_seed},
                    {"val_seed", c.val_seed},
                    {"test_seed", c.test_seed}};
    j["detector"] = {{"c0", c.detector.det.c0},     {"steps", c.detector.steps},
                     {"batch", c.detector.batch},   {"lr", c.detector.lr},
                     {"seed", c.detector.seed},     {"sanity_floor", c.detector.sanity_floor},
                     {"score_thresh", c.detector.det.score_thresh},
                     {"nms_iou", c.detector.det.nms_iou}};
    j["pose"] = {{"enabled", c.train_pose},         {"c0", c.pose.pose.c0},
                 {"steps", c.pose.steps},           {"batch", c.pose.batch},
                 {"lr", c.pose.lr},                 {"seed", c.pose.seed},
                 {"sanity_floor", c.pose.sanity_floor},
                 {"center_thresh", c.pose.pose.center_thresh},
                 {"window_px", c.pose.pose.window_px}};
    j["obfuscator"] = {{"c0", c.obf_arch.c0}, {"depth", c.obf_arch.depth}, {"seed", c.obf_seed}};
    j["deobfuscator"] = {{"c0", c.deobf_arch.c0},
                         {"depth", c.deobf_arch.depth},
                         {"seed", c.deobf_seed}};
    j["train"] = {{"lambda", c.train.lambda},
                  {"lr_o", c.train.lr_o},
                  {"lr_d", c.train.lr_d},
                  {"steps", c.train.steps},
                  {"d_steps_per_o_step", c.train.d_steps_per_o_step},
                  {"batch_size", c.train.batch_size},
                  {"seed", c.train.seed},
                  {"checkpoint_every", c.train.checkpoint_every},
                  {"log_every", c.train.log_every}};
    j["attack"] = {{"steps", c.attack.steps},   {"batch", c.attack.batch},
                   {"lr", c.attack.lr},         {"seed", c.attack.seed},
                   {"eval_every", c.attack.eval_every},
                   {"c0", c.attack.arch.c0},    {"depth", c.attack.arch.depth}};
    j["identity"] = {{"steps", c.identity.steps},
                     {"batch", c.identity.batch},
                     {"lr", c.identity.lr},
                     {"seed", c.identity.seed},
                     {"pad_px", c.identity_pad_px}};
    j["sweep"] = {{"lambdas", c.lambdas},
                  {"blur_ks", c.blur_ks},
                  {"methods", c.methods},
                  {"detect_blur_score_thresh", c.detect_blur_score_thresh}};
    j["eval"] = {{"size_bins", {c.size_bins.small_max, c.size_bins.medium_max}}};
    return j;
}

// Hash of the experiment-relevant configuration; out_dir is excluded so the
// same experiment re-run into another directory produces identical reports.
inline std::string config_hash(const RunConfig& c) {
    nlohmann::json j = run_config_to_json(c);
    j.erase("out_dir");
    Hasher h;
    h.str(j.dump());
    return h.hex();
}

} // namespace veil
