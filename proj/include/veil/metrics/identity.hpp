#pragma once

#include <cmath>
#include <vector>

#include "veil/nn/adam.hpp"
#include "veil/nn/layers.hpp"
#include "veil/nn/net_util.hpp"
#include "veil/synth/generator.hpp"

namespace veil::metrics {

struct IdentityAttackConfig {
    int steps = 400;
    int batch = 32;
    double lr = 1e-3;
    uint64_t seed = 99;
};

// Small convnet probing how much identity texture survives a transform.
// Chance accuracy is 1/n_identities.
template <class T = float>
class IdentityClassifier {
public:
    IdentityClassifier() = default;

    IdentityClassifier(int n_identities, uint64_t seed) : n_id_(n_identities) {
        Rng rng(seed, /*stream=*/0x1DB);
        c1_ = nn::Conv2d<T>("idnet.c1", 3, 16, 3, 2, 1, rng);
        c2_ = nn::Conv2d<T>("idnet.c2", 16, 32, 3, 2, 1, rng);
        c3_ = nn::Conv2d<T>("idnet.c3", 32, 32, 3, 2, 1, rng);
        fc_ = nn::Linear<T>("idnet.fc", 32, n_identities, rng);
    }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> out;
        c1_.params(out);
        c2_.params(out);
        c3_.params(out);
        fc_.params(out);
        return out;
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        Tensor<T> f = a1_.forward(c1_.forward(x, train), train);
        f = a2_.forward(c2_.forward(f, train), train);
        f = a3_.forward(c3_.forward(f, train), train);
        return fc_.forward(gap_.forward(f), train);
    }

    void backward(const Tensor<T>& dlogits) {
        Tensor<T> g = gap_.backward(fc_.backward(dlogits));
        g = c3_.backward(a3_.backward(g));
        g = c2_.backward(a2_.backward(g));
        c1_.backward(a1_.backward(g));
    }

    void train(const std::vector<PersonCrop>& crops, const IdentityAttackConfig& cfg) {
        require(!crops.empty(), "identity attack: no training crops");
        Rng rng(cfg.seed, /*stream=*/0x7123);
        auto opt = nn::Adam<T>(params(), cfg.lr);
        std::vector<size_t> order(crops.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        size_t cursor = order.size(); // trigger initial shuffle

        const int B = std::min<int>(cfg.batch, int(crops.size()));
        Tensor<T> x(B, 3, kCropSize, kCropSize);
        for (int step = 0; step < cfg.steps; ++step) {
            std::vector<int> labels(static_cast<size_t>(B));
            for (int b = 0; b < B; ++b) {
                if (cursor >= order.size()) {
                    for (size_t i = order.size(); i-- > 1;)
                        std::swap(order[i], order[rng.below(i + 1)]);
                    cursor = 0;
                }
                const auto& crop = crops[order[cursor++]];
                frame_into_tensor(crop.crop, x, b);
                labels[size_t(b)] = crop.identity;
            }
            nn::zero_grads(params());
            Tensor<T> logits = forward(x, /*train=*/true);
            Tensor<T> dlogits = zeros_like(logits);
            softmax_ce_grad(logits, labels, dlogits);
            backward(dlogits);
            opt.step();
        }
    }

    int predict(const Frame& crop) {
        Tensor<T> x(1, 3, kCropSize, kCropSize);
        require(crop.height == kCropSize && crop.width == kCropSize,
                "identity classifier: crop must be ", kCropSize, "x", kCropSize);
        frame_into_tensor(crop, x, 0);
        Tensor<T> logits = forward(x, /*train=*/false);
        int best = 0;
        for (int i = 1; i < n_id_; ++i)
            if (logits.v[size_t(i)] > logits.v[size_t(best)]) best = i;
        return best;
    }

    double accuracy(const std::vector<PersonCrop>& crops) {
        require(!crops.empty(), "identity attack: no evaluation crops");
        size_t correct = 0;
        for (const auto& c : crops)
            if (predict(c.crop) == c.identity) ++correct;
        return double(correct) / double(crops.size());
    }

private:
    static void softmax_ce_grad(const Tensor<T>& logits, const std::vector<int>& labels,
                                Tensor<T>& dlogits) {
        const int B = logits.n, C = logits.c;
        for (int b = 0; b < B; ++b) {
            const T* z = logits.data() + size_t(b) * C;
            T* dz = dlogits.data() + size_t(b) * C;
            double mx = double(z[0]);
            for (int i = 1; i < C; ++i) mx = std::max(mx, double(z[i]));
            double sum = 0;
            for (int i = 0; i < C; ++i) sum += std::exp(double(z[i]) - mx);
            for (int i = 0; i < C; ++i) {
                const double p = std::exp(double(z[i]) - mx) / sum;
                dz[i] = T((p - (labels[size_t(b)] == i ? 1.0 : 0.0)) / B);
            }
        }
    }

    int n_id_ = 0;
    nn::Conv2d<T> c1_, c2_, c3_;
    nn::SiLU<T> a1_, a2_, a3_;
    nn::GlobalAvgPool<T> gap_;
    nn::Linear<T> fc_;
};

// Trains on (obfuscated) train-split crops, reports held-out accuracy.
inline double identity_attack(const std::vector<PersonCrop>& crops_train,
                              const std::vector<PersonCrop>& crops_test, int n_identities,
                              const IdentityAttackConfig& cfg = {}) {
    require(n_identities >= 2, "identity_attack: need at least 2 identities");
    IdentityClassifier<float> clf(n_identities, cfg.seed);
    clf.train(crops_train, cfg);
    return clf.accuracy(crops_test);
}

} // namespace veil::metrics
