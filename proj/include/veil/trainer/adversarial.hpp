#pragma once

#include <chrono>
#include <functional>
#include <iostream>

#include "veil/metrics/ssim.hpp"
#include "veil/models/deobfuscator.hpp"
#include "veil/models/obfuscator.hpp"
#include "veil/models/utility.hpp"

namespace veil {

struct TrainConfig {
    double lambda = 1.0; // privacy weight on the reconstruction term
    double lr_o = 1e-4;
    double lr_d = 1e-4;
    int steps = 1000;
    int d_steps_per_o_step = 1;
    int batch_size = 16;
    uint64_t seed = 0;
    int checkpoint_every = 100;
    int log_every = 10;
};

inline void validate_train_config(const TrainConfig& c) {
    require(c.lambda >= 0, "train config: lambda must be >= 0");
    require(c.lr_o > 0 && c.lr_d > 0, "train config: learning rates must be positive");
    require(c.steps >= 1 && c.batch_size >= 1 && c.d_steps_per_o_step >= 1,
            "train config: steps/batch/d_steps must be positive");
}

struct HistoryRecord {
    int step;
    double l_util, l_rec, l_o_total;
};

struct TrainHistory {
    std::vector<HistoryRecord> records;
    double wall_clock_sec = 0;
    std::string o_hash, d_hash, u_hash;
    bool aborted_non_finite = false;

    uint64_t hash() const {
        Hasher h;
        for (const auto& r : records) h.pod(r.step).pod(r.l_util).pod(r.l_rec).pod(r.l_o_total);
        h.str(o_hash).str(d_hash).str(u_hash).pod(aborted_non_finite);
        return h.value();
    }
};

// L_O = L_util - lambda * L_rec: the obfuscator keeps the task and starves
// the adversary.
inline double compose_obfuscator_loss(double l_util, double l_rec, double lambda) {
    return l_util - lambda * l_rec;
}

// Alternating min-max: d_steps_per_o_step updates of D (minimizing L_rec with
// O fixed), then one update of O (minimizing L_O with D fixed). U is frozen
// throughout; its hash is checked before and after.
inline TrainHistory adversarial_train(ObfuscatorModel<float>& o, UtilityAdapter& u,
                                      DeobfuscatorModel<float>& d, const Dataset& train,
                                      const TrainConfig& cfg) {
    validate_train_config(cfg);
    require(u.frozen(), "adversarial_train: utility adapter must be frozen");
    require(!train.frames.empty(), "adversarial_train: empty training dataset");
    const std::string u_hash_before = u.hash();

    const auto t0 = std::chrono::steady_clock::now();
    TrainHistory hist;
    auto o_params = o.params();
    auto d_params = d.params();
    nn::Adam<float> opt_o(o_params, cfg.lr_o);
    nn::Adam<float> opt_d(d_params, cfg.lr_d);
    BatchSampler sampler(train.size(), cfg.seed);

    auto snap_o = nn::snapshot_params(o_params);
    auto snap_d = nn::snapshot_params(d_params);

    const size_t B = size_t(std::min<int>(cfg.batch_size, int(train.size())));
    for (int step = 0; step < cfg.steps; ++step) {
        double l_rec_d = 0;
        if (cfg.lambda > 0) {
            for (int j = 0; j < cfg.d_steps_per_o_step; ++j) {
                auto batch = make_batch<float>(train, sampler.next(B));
                Tensor<float> xp = o.forward(batch.x, /*train=*/false);
                nn::zero_grads(d_params);
                Tensor<float> xhat = d.forward(xp, /*train=*/true);
                l_rec_d = recon_loss(xhat, batch.x);
                d.backward(recon_loss_grad(xhat, batch.x));
                opt_d.step();
            }
        }

        auto batch = make_batch<float>(train, sampler.next(B));
        nn::zero_grads(o_params);
        Tensor<float> xp = o.forward(batch.x, /*train=*/true);
        auto util = u.task_loss_input_grad(xp, batch.anns);
        Tensor<float> g = util.dinput;
        double l_rec_o = 0;
        if (cfg.lambda > 0) {
            nn::zero_grads(d_params);
            Tensor<float> xhat = d.forward(xp, /*train=*/true);
            l_rec_o = recon_loss(xhat, batch.x);
            Tensor<float> gd = d.backward(recon_loss_grad(xhat, batch.x));
            const float lam = float(cfg.lambda);
            for (size_t i = 0; i < g.size(); ++i) g.v[i] -= lam * gd.v[i];
            nn::zero_grads(d_params); // D is fixed during the O step
        }
        o.backward(g);
        opt_o.step();

        const double l_total = compose_obfuscator_loss(util.loss, l_rec_o, cfg.lambda);
        if (!std::isfinite(l_total) || !std::isfinite(l_rec_d)) {
            std::cerr << "[adversarial] non-finite loss at step " << step
                      << "; restoring last checkpoint\n";
            nn::restore_params(o_params, snap_o);
            nn::restore_params(d_params, snap_d);
            hist.aborted_non_finite = true;
            break;
        }
        if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps))
            hist.records.push_back({step, util.loss, l_rec_o, l_total});
        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
            snap_o = nn::snapshot_params(o_params);
            snap_d = nn::snapshot_params(d_params);
        }
    }

    require(u.hash() == u_hash_before,
            "adversarial_train: frozen utility parameters changed during training");
    hist.o_hash = o.hash();
    hist.d_hash = d.hash();
    hist.u_hash = u_hash_before;
    hist.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return hist;
}

// ---------------------------------------------------------------------------
// Independent post-hoc attack: a fresh deobfuscator trained from scratch on
// (transform(x), x) pairs from the train split, reported on the test split.
// This, not the co-trained adversary, is the headline privacy proxy.

struct AttackConfig {
    int steps = 400;
    int batch = 16;
    double lr = 1e-3;
    uint64_t seed = 23;
    int eval_every = 100;
    UNetConfig arch{32, 2};
};

struct AttackCurvePoint {
    int step;
    double test_mse, test_ssim;
};

struct AttackReport {
    double final_test_recon_mse = 0;
    double final_test_ssim = 0;
    std::vector<AttackCurvePoint> curve;
    std::string attacker_hash;
    // set when the fresh attacker reconstructs markedly better than the
    // co-trained adversary did (co-trained D was too weak)
    bool weak_cotrained_adversary = false;
};

using FrameTransform = std::function<Frame(const Frame&)>;

// Variant taking already-transformed copies of both splits (frames aligned
// index-for-index with the originals).
inline AttackReport attack_evaluate_paired(const Dataset& train, const Dataset& obf_train,
                                           const Dataset& test, const Dataset& obf_test,
                                           const AttackConfig& cfg) {
    require(!train.frames.empty() && !test.frames.empty(), "attack: empty dataset");
    require(obf_train.frames.size() == train.frames.size() &&
                obf_test.frames.size() == test.frames.size(),
            "attack: transformed split sizes mismatch");

    DeobfuscatorModel<float> atk(cfg.arch, cfg.seed);
    auto params = atk.params();
    nn::Adam<float> opt(params, cfg.lr);
    BatchSampler sampler(train.size(), cfg.seed);

    AttackReport rep;
    const size_t B = size_t(std::min<int>(cfg.batch, int(train.size())));

    auto eval_test = [&](int step) {
        double m = 0, s = 0;
        for (size_t i = 0; i < test.frames.size(); ++i) {
            Frame rec = atk.reconstruct(obf_test.frames[i]);
            clamp_frame(rec);
            m += metrics::mse(rec, test.frames[i]);
            s += metrics::ssim(rec, test.frames[i]);
        }
        m /= double(test.frames.size());
        s /= double(test.frames.size());
        rep.curve.push_back({step, m, s});
        return std::pair(m, s);
    };

    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<size_t> idx = sampler.next(B);
        Tensor<float> x(int(B), 3, train.frames[0].height, train.frames[0].width);
        Tensor<float> xp(int(B), 3, train.frames[0].height, train.frames[0].width);
        for (size_t i = 0; i < idx.size(); ++i) {
            frame_into_tensor(train.frames[idx[i]], x, int(i));
            frame_into_tensor(obf_train.frames[idx[i]], xp, int(i));
        }
        nn::zero_grads(params);
        Tensor<float> xhat = atk.forward(xp, /*train=*/true);
        const double l = recon_loss(xhat, x);
        require(std::isfinite(l), "attack: non-finite loss at step ", step);
        atk.backward(recon_loss_grad(xhat, x));
        opt.step();
        if (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0 && step + 1 < cfg.steps)
            eval_test(step + 1);
    }
    auto [m, s] = eval_test(cfg.steps);
    rep.final_test_recon_mse = m;
    rep.final_test_ssim = s;
    rep.attacker_hash = atk.hash();
    return rep;
}

inline Dataset transform_dataset(const Dataset& ds, const FrameTransform& transform) {
    Dataset out = ds;
    for (auto& f : out.frames) {
        Frame t = transform(f);
        t.id = f.id;
        clamp_frame(t);
        f = std::move(t);
    }
    return out;
}

inline AttackReport attack_evaluate_fn(const FrameTransform& transform, const Dataset& train,
                                       const Dataset& test, const AttackConfig& cfg) {
    Dataset obf_train = transform_dataset(train, transform);
    Dataset obf_test = transform_dataset(test, transform);
    return attack_evaluate_paired(train, obf_train, test, obf_test, cfg);
}

inline AttackReport attack_evaluate(ObfuscatorModel<float>& o_frozen, const Dataset& train,
                                    const Dataset& test, const AttackConfig& cfg) {
    return attack_evaluate_fn([&](const Frame& f) { return o_frozen.obfuscate(f); }, train,
                              test, cfg);
}

} // namespace veil
