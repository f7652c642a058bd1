// veil: desk-scale benchmark for task-preserving visual obfuscation.
//
// Subcommands: generate, train-utility, train-obfuscator, attack, baseline,
// evaluate, sweep, plot, bench. Every run writes a manifest sufficient to
// reproduce it bit-for-bit with the same build.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "veil/baselines/blur.hpp"
#include "veil/bench/config.hpp"
#include "veil/bench/manifest.hpp"
#include "veil/bench/plot.hpp"
#include "veil/bench/sweep.hpp"
#include "veil/bench/throughput.hpp"
#include "veil/core/dataset_io.hpp"
#include "veil/trainer/adversarial.hpp"

namespace fs = std::filesystem;
using namespace veil;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out;
};

RunManifest base_manifest(const std::string& command, const RunConfig& cfg) {
    RunManifest m;
    m.command = command;
    m.config = run_config_to_json(cfg);
    m.run_id = make_run_id(command, config_hash(cfg));
    return m;
}

std::string hash_str(uint64_t h) { return Hasher().pod(h).hex(); }

Dataset dataset_from_config(const RunConfig& cfg, const std::string& split) {
    SceneSpec spec = cfg.scene;
    int frames = cfg.test_frames;
    if (split == "train") {
        spec.seed = cfg.train_seed;
        frames = cfg.train_frames;
    } else if (split == "val") {
        spec.seed = cfg.val_seed;
        frames = cfg.val_frames;
    } else {
        spec.seed = cfg.test_seed;
        frames = cfg.test_frames;
    }
    return generate_dataset(spec, frames, split);
}

int cmd_generate(const CommonArgs& a, const std::vector<std::string>& splits) {
    RunConfig cfg = load_run_config(a.config_path);
    const std::string out = a.out.empty() ? cfg.out_dir + "/datasets" : a.out;
    RunManifest man = base_manifest("generate", cfg);
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& split : splits) {
        Dataset ds = dataset_from_config(cfg, split);
        const std::string dir = out + "/" + split;
        save_dataset(ds, dir);
        man.dataset_hashes[split] = hash_str(dataset_content_hash(ds));
        std::cout << "wrote " << ds.size() << " frames to " << dir << "\n";
    }
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, out + "/manifest.json");
    return 0;
}

int cmd_train_utility(const CommonArgs& a, const std::string& task,
                      const std::string& train_dir, const std::string& val_dir) {
    RunConfig cfg = load_run_config(a.config_path);
    const std::string out = a.out.empty() ? cfg.out_dir + "/utility_" + task + ".ckpt" : a.out;
    RunManifest man = base_manifest("train-utility", cfg);
    const auto t0 = std::chrono::steady_clock::now();

    Dataset train = train_dir.empty() ? dataset_from_config(cfg, "train")
                                      : load_dataset(train_dir);
    Dataset val = val_dir.empty() ? dataset_from_config(cfg, "val") : load_dataset(val_dir);
    man.dataset_hashes["train"] = hash_str(dataset_content_hash(train));
    man.dataset_hashes["val"] = hash_str(dataset_content_hash(val));

    UtilityAdapter u;
    if (task == "detect")
        u = UtilityAdapter::train_toy_detector(train, val, cfg.detector);
    else if (task == "pose")
        u = UtilityAdapter::train_toy_pose(train, val, cfg.pose);
    else
        fail("train-utility: unknown task '", task, "' (use detect or pose)");

    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    u.save(out);
    man.model_hashes[task] = u.hash();
    man.report_paths.push_back(out);
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, out + ".manifest.json");
    std::cout << "trained " << task << " adapter, val metric " << u.val_metric() << ", saved "
              << out << "\n";
    return 0;
}

int cmd_train_obfuscator(const CommonArgs& a, const std::string& utility_ckpt, double lambda,
                         bool lambda_set) {
    RunConfig cfg = load_run_config(a.config_path);
    const std::string out = a.out.empty() ? cfg.out_dir + "/obf_train" : a.out;
    fs::create_directories(out);
    RunManifest man = base_manifest("train-obfuscator", cfg);
    const auto t0 = std::chrono::steady_clock::now();

    Dataset train = dataset_from_config(cfg, "train");
    Dataset val = dataset_from_config(cfg, "val");
    man.dataset_hashes["train"] = hash_str(dataset_content_hash(train));

    UtilityAdapter u;
    if (utility_ckpt.empty()) {
        std::cerr << "training utility detector from config...\n";
        u = UtilityAdapter::train_toy_detector(train, val, cfg.detector);
    } else {
        u = UtilityAdapter::load(utility_ckpt);
    }
    man.model_hashes["utility"] = u.hash();

    TrainConfig tc = cfg.train;
    if (lambda_set) tc.lambda = lambda;
    ObfuscatorModel<float> o(cfg.obf_arch, cfg.obf_seed);
    DeobfuscatorModel<float> d(cfg.deobf_arch, cfg.deobf_seed);
    TrainHistory hist = adversarial_train(o, u, d, train, tc);

    o.provenance() = {{"trained", "adversarial"},
                      {"lambda", tc.lambda},
                      {"train_seed", tc.seed},
                      {"utility_hash", hist.u_hash}};
    export_model(o, out + "/obfuscator.ckpt");
    export_deobfuscator(d, out + "/deobfuscator.ckpt");
    write_train_history(hist, out + "/history.csv");
    man.model_hashes["obfuscator"] = hist.o_hash;
    man.model_hashes["deobfuscator"] = hist.d_hash;
    man.report_paths = {out + "/history.csv"};
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, out + "/manifest.json");
    std::cout << "adversarial training done (lambda " << tc.lambda << ", "
              << hist.records.size() << " logged steps"
              << (hist.aborted_non_finite ? ", ABORTED on non-finite loss" : "") << ")\n"
              << "obfuscator: " << out << "/obfuscator.ckpt\n";
    return 0;
}

int cmd_attack(const CommonArgs& a, const std::string& obf_ckpt, const std::string& method,
               int blur_k) {
    RunConfig cfg = load_run_config(a.config_path);
    const std::string out = a.out.empty() ? cfg.out_dir + "/attack_report.json" : a.out;
    RunManifest man = base_manifest("attack", cfg);
    const auto t0 = std::chrono::steady_clock::now();

    Dataset train = dataset_from_config(cfg, "train");
    Dataset test = dataset_from_config(cfg, "test");
    man.dataset_hashes["train"] = hash_str(dataset_content_hash(train));
    man.dataset_hashes["test"] = hash_str(dataset_content_hash(test));

    AttackReport rep;
    if (!obf_ckpt.empty()) {
        ObfuscatorModel<float> o = import_model(obf_ckpt);
        man.model_hashes["obfuscator"] = o.hash();
        rep = attack_evaluate(o, train, test, cfg.attack);
    } else if (method == "blur") {
        rep = attack_evaluate_fn([blur_k](const Frame& f) { return gaussian_blur_full(f, blur_k); },
                                 train, test, cfg.attack);
    } else if (method == "identity") {
        rep = attack_evaluate_fn([](const Frame& f) { return f; }, train, test, cfg.attack);
    } else {
        fail("attack: provide --obfuscator, or --method blur|identity");
    }
    man.model_hashes["attacker"] = rep.attacker_hash;

    nlohmann::json j = {{"final_test_recon_mse", rep.final_test_recon_mse},
                        {"final_test_ssim", rep.final_test_ssim},
                        {"attacker_hash", rep.attacker_hash},
                        {"curve", nlohmann::json::array()}};
    for (const auto& c : rep.curve)
        j["curve"].push_back({{"step", c.step}, {"test_mse", c.test_mse}, {"test_ssim", c.test_ssim}});
    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    std::ofstream of(out);
    of << j.dump(2) << "\n";
    require(of.good(), "attack: cannot write '", out, "'");
    man.report_paths = {out};
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, out + ".manifest.json");
    std::cout << "attack: test MSE " << rep.final_test_recon_mse << ", test SSIM "
              << rep.final_test_ssim << " -> " << out << "\n";
    return 0;
}

int cmd_baseline(const CommonArgs& a, const std::string& method, int k,
                 const std::string& in_dir, const std::string& utility_ckpt,
                 double score_thresh) {
    RunConfig cfg = load_run_config(a.config_path);
    const std::string out = a.out.empty() ? cfg.out_dir + "/baseline_out" : a.out;
    RunManifest man = base_manifest("baseline", cfg);
    const auto t0 = std::chrono::steady_clock::now();

    Dataset ds = in_dir.empty() ? dataset_from_config(cfg, "test") : load_dataset(in_dir);
    man.dataset_hashes["input"] = hash_str(dataset_content_hash(ds));

    Dataset transformed;
    if (method == "blur") {
        transformed = transform_dataset(ds, [k](const Frame& f) { return gaussian_blur_full(f, k); });
    } else if (method == "detect-blur") {
        require(!utility_ckpt.empty(), "baseline: detect-blur needs --utility");
        UtilityAdapter u = UtilityAdapter::load(utility_ckpt);
        man.model_hashes["utility"] = u.hash();
        transformed = transform_dataset(
            ds, [&](const Frame& f) { return detect_then_blur(f, u, k, score_thresh); });
    } else {
        fail("baseline: unknown method '", method, "' (use blur or detect-blur)");
    }
    save_dataset(transformed, out);
    man.dataset_hashes["output"] = hash_str(dataset_content_hash(transformed));
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, out + "/manifest.json");
    std::cout << "baseline " << method << " k=" << k << " -> " << out << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& a, const std::string& utility_ckpt,
                 const std::string& obf_ckpt, const std::string& method, int k,
                 const std::string& data_dir) {
    RunConfig cfg = load_run_config(a.config_path);
    const std::string out = a.out.empty() ? cfg.out_dir + "/eval_report.json" : a.out;
    RunManifest man = base_manifest("evaluate", cfg);
    const auto t0 = std::chrono::steady_clock::now();

    Dataset test = data_dir.empty() ? dataset_from_config(cfg, "test") : load_dataset(data_dir);
    man.dataset_hashes["test"] = hash_str(dataset_content_hash(test));

    UtilityAdapter u;
    if (utility_ckpt.empty()) {
        Dataset train = dataset_from_config(cfg, "train");
        Dataset val = dataset_from_config(cfg, "val");
        std::cerr << "training utility detector from config...\n";
        u = UtilityAdapter::train_toy_detector(train, val, cfg.detector);
    } else {
        u = UtilityAdapter::load(utility_ckpt);
    }
    man.model_hashes["utility"] = u.hash();

    FrameTransform t = [](const Frame& f) { return f; };
    std::string method_name = "clean";
    double knob = 0;
    if (!obf_ckpt.empty()) {
        auto o = std::make_shared<ObfuscatorModel<float>>(import_model(obf_ckpt));
        man.model_hashes["obfuscator"] = o->hash();
        t = [o](const Frame& f) { return o->obfuscate(f); };
        method_name = "obfuscator";
    } else if (method == "blur") {
        t = [k](const Frame& f) { return gaussian_blur_full(f, k); };
        method_name = "blur";
        knob = k;
    } else if (method == "detect-blur") {
        auto up = std::make_shared<UtilityAdapter>(u);
        const double st = cfg.detect_blur_score_thresh;
        t = [up, k, st](const Frame& f) { return detect_then_blur(f, *up, k, st); };
        method_name = "detect_blur";
        knob = k;
    }

    Dataset transformed = transform_dataset(test, t);
    std::vector<std::vector<BBox>> preds, gts;
    double sdir = 0;
    for (size_t i = 0; i < transformed.frames.size(); ++i) {
        preds.push_back(u.predict(transformed.frames[i]).boxes);
        gts.push_back(test.ann(test.frames[i].id).boxes);
        sdir += metrics::ssim(test.frames[i], transformed.frames[i]);
    }
    sdir /= double(test.frames.size());

    TradeoffPoint p;
    p.method = method_name;
    p.knob = knob;
    p.map50 = metrics::map50(preds, gts, 0.5);
    p.size_map = metrics::map_by_size(preds, gts, cfg.size_bins, 0.5);
    p.ssim_direct = sdir;
    nlohmann::json j = point_report_json(p, config_hash(cfg));
    j.erase("attack_mse"); // attack proxies come from the attack subcommand
    j.erase("attack_ssim");
    j.erase("identity_acc");
    j.erase("cotrained_final_rec");
    j.erase("weak_cotrained");
    j.erase("train_aborted");

    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    std::ofstream of(out);
    of << j.dump(2) << "\n";
    require(of.good(), "evaluate: cannot write '", out, "'");
    man.report_paths = {out};
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, out + ".manifest.json");
    std::cout << "evaluate " << method_name << ": mAP@0.5 " << p.map50 << ", ssim_direct "
              << p.ssim_direct << " -> " << out << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& a, const std::string& from_manifest) {
    RunConfig cfg;
    if (!from_manifest.empty()) {
        RunManifest prev = load_manifest(from_manifest);
        cfg = parse_run_config(prev.config);
        if (!a.out.empty()) cfg.out_dir = a.out;
    } else {
        cfg = load_run_config(a.config_path);
        if (!a.out.empty()) cfg.out_dir = a.out;
    }
    SweepResult res = run_sweep(cfg, /*verbose=*/true);
    emit_curve_plot(res.points, cfg.out_dir + "/curves");
    // size plot: clean vs the mid obfuscator point when present
    const TradeoffPoint* obf_mid = nullptr;
    for (const auto& p : res.points)
        if (p.method == "obfuscator") obf_mid = &p;
    if (obf_mid) emit_size_plot(res.clean_size_map, obf_mid->size_map, cfg.out_dir + "/size_map");
    std::cout << "sweep complete: " << res.points.size() << " points\n"
              << "  clean mAP@0.5        " << res.clean_map50 << "\n"
              << "  points csv           " << res.points_csv_path << "\n"
              << "  summary              " << res.summary_path << "\n"
              << "  manifest             " << res.manifest_path << "\n"
              << "  dominance: obfuscator wins matched pair = "
              << (res.dominance.obfuscator_wins_matched_pair ? "yes" : "no")
              << ", blur never dominates = "
              << (res.dominance.blur_never_dominates ? "yes" : "no") << "\n";
    return 0;
}

int cmd_plot(const std::string& points_csv, const std::string& out_prefix) {
    auto points = read_points_csv(points_csv);
    emit_curve_plot(points, out_prefix);
    std::cout << "wrote " << out_prefix << ".png and " << out_prefix << ".svg\n";
    return 0;
}

int cmd_bench(const CommonArgs& a, const std::string& obf_ckpt,
              const std::vector<std::string>& resolutions, int frames) {
    RunConfig cfg = load_run_config(a.config_path);
    const std::string out = a.out.empty() ? cfg.out_dir + "/bench_report.json" : a.out;
    RunManifest man = base_manifest("bench", cfg);
    const auto t0 = std::chrono::steady_clock::now();

    ObfuscatorModel<float> o =
        obf_ckpt.empty() ? ObfuscatorModel<float>(cfg.obf_arch, cfg.obf_seed)
                         : import_model(obf_ckpt);
    man.model_hashes["obfuscator"] = o.hash();

    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : resolutions) {
        const auto xpos = r.find('x');
        require(xpos != std::string::npos, "bench: resolution must look like 640x640, got '", r,
                "'");
        const int w = std::stoi(r.substr(0, xpos));
        const int h = std::stoi(r.substr(xpos + 1));
        ThroughputReport rep = bench_throughput(o, h, w, frames);
        j.push_back(rep.to_json());
        std::cout << "bench " << w << "x" << h << ": "
                  << (rep.completed ? cat("median ", rep.median_ms, " ms, fps ", rep.fps)
                                    : cat("FAILED (", rep.error, ")"))
                  << "\n";
    }
    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    std::ofstream of(out);
    of << j.dump(2) << "\n";
    require(of.good(), "bench: cannot write '", out, "'");
    man.report_paths = {out};
    man.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(man, out + ".manifest.json");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"veil: task-preserving visual obfuscation benchmark"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> gen_splits{"train", "val", "test"};
    std::string task = "detect", train_dir, val_dir, utility_ckpt, obf_ckpt;
    std::string method, in_dir, data_dir, from_manifest, points_csv, out_prefix;
    std::vector<std::string> resolutions{"64x64", "640x640", "1280x1280"};
    int blur_k = 9, bench_frames = 20;
    double lambda = 1.0, score_thresh = 0.5;
    bool lambda_set = false;

    auto add_common = [&](CLI::App* sc, bool config_required = true) {
        auto* opt = sc->add_option("--config", args.config_path, "run config file (JSON)");
        if (config_required) opt->required();
        sc->add_option("--out", args.out, "output path (overrides config out_dir)");
    };

    auto* sc_gen = app.add_subcommand("generate", "generate synthetic datasets");
    add_common(sc_gen);
    sc_gen->add_option("--splits", gen_splits, "splits to generate");

    auto* sc_tu = app.add_subcommand("train-utility", "train and freeze a task model");
    add_common(sc_tu);
    sc_tu->add_option("--task", task, "detect | pose");
    sc_tu->add_option("--train-data", train_dir, "train dataset dir (default: generated)");
    sc_tu->add_option("--val-data", val_dir, "val dataset dir (default: generated)");

    auto* sc_to = app.add_subcommand("train-obfuscator", "adversarial obfuscator training");
    add_common(sc_to);
    sc_to->add_option("--utility", utility_ckpt, "frozen utility checkpoint (default: train)");
    sc_to->add_option("--lambda", lambda, "privacy weight")->each([&](const std::string&) {
        lambda_set = true;
    });

    auto* sc_at = app.add_subcommand("attack", "fresh-attacker reconstruction evaluation");
    add_common(sc_at);
    sc_at->add_option("--obfuscator", obf_ckpt, "obfuscator checkpoint");
    sc_at->add_option("--method", method, "blur | identity (fixture transforms)");
    sc_at->add_option("--k", blur_k, "blur kernel size");

    auto* sc_bl = app.add_subcommand("baseline", "apply a baseline anonymizer to a dataset");
    add_common(sc_bl);
    sc_bl->add_option("--method", method, "blur | detect-blur")->required();
    sc_bl->add_option("--k", blur_k, "blur kernel size");
    sc_bl->add_option("--in", in_dir, "input dataset dir (default: generated test split)");
    sc_bl->add_option("--utility", utility_ckpt, "detector checkpoint for detect-blur");
    sc_bl->add_option("--score-thresh", score_thresh, "detection threshold for detect-blur");

    auto* sc_ev = app.add_subcommand("evaluate", "utility + similarity metrics for a transform");
    add_common(sc_ev);
    sc_ev->add_option("--utility", utility_ckpt, "utility checkpoint (default: train)");
    sc_ev->add_option("--obfuscator", obf_ckpt, "obfuscator checkpoint");
    sc_ev->add_option("--method", method, "blur | detect-blur");
    sc_ev->add_option("--k", blur_k, "blur kernel size");
    sc_ev->add_option("--data", data_dir, "dataset dir (default: generated test split)");

    auto* sc_sw = app.add_subcommand("sweep", "lambda/kernel sweeps -> privacy-utility curves");
    add_common(sc_sw, /*config_required=*/false);
    sc_sw->add_option("--from-manifest", from_manifest, "reproduce a persisted run manifest");

    auto* sc_pl = app.add_subcommand("plot", "re-plot curves from a points CSV");
    sc_pl->add_option("--points", points_csv, "points.csv from a sweep")->required();
    sc_pl->add_option("--out", out_prefix, "output path prefix")->required();

    auto* sc_be = app.add_subcommand("bench", "obfuscator throughput at given resolutions");
    add_common(sc_be);
    sc_be->add_option("--obfuscator", obf_ckpt, "obfuscator checkpoint (default: fresh init)");
    sc_be->add_option("--resolutions", resolutions, "list like 64x64 640x640");
    sc_be->add_option("--frames", bench_frames, "frames per resolution");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sc_gen->parsed()) return cmd_generate(args, gen_splits);
        if (sc_tu->parsed()) return cmd_train_utility(args, task, train_dir, val_dir);
        if (sc_to->parsed()) return cmd_train_obfuscator(args, utility_ckpt, lambda, lambda_set);
        if (sc_at->parsed()) return cmd_attack(args, obf_ckpt, method, blur_k);
        if (sc_bl->parsed()) return cmd_baseline(args, method, blur_k, in_dir, utility_ckpt,
                                                 score_thresh);
        if (sc_ev->parsed()) return cmd_evaluate(args, utility_ckpt, obf_ckpt, method, blur_k,
                                                 data_dir);
        if (sc_sw->parsed()) {
            if (from_manifest.empty())
                require(!args.config_path.empty(), "sweep: --config or --from-manifest required");
            return cmd_sweep(args, from_manifest);
        }
        if (sc_pl->parsed()) return cmd_plot(points_csv, out_prefix);
        if (sc_be->parsed()) return cmd_bench(args, obf_ckpt, resolutions, bench_frames);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
