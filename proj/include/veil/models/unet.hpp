#pragma once

#include <vector>

#include "veil/nn/layers.hpp"
#include "veil/nn/net_util.hpp"
#include "veil/nn/pad.hpp"

namespace veil {

struct UNetConfig {
    int c0 = 16;   // base channel width
    int depth = 2; // number of stride-2 stages
};

// Encoder-decoder image-to-image network: depthwise-separable blocks,
// stride-2 downsampling, nearest-neighbor upsampling, skip connections,
// sigmoid output. Channels double per stage. There is no full-resolution
// shortcut from the raw input to the output.
template <class T>
class UNet {
public:
    UNet() = default;

    UNet(const UNetConfig& cfg, uint64_t seed) : cfg_(cfg) {
        require(cfg.depth >= 1, "unet: depth must be >= 1 (must downsample at least once)");
        require(cfg.c0 >= 2, "unet: c0 must be >= 2");
        Rng rng(seed, /*stream=*/0xC0DE);
        const int d = cfg.depth;
        auto ch = [&](int i) { return cfg.c0 << i; };

        stem_ = nn::Conv2d<T>("stem", 3, ch(0), 3, 1, 1, rng);
        for (int i = 0; i < d; ++i) {
            enc_dw_.emplace_back(cat("enc", i, ".dw"), ch(i), ch(i), 3, 2, ch(i), rng);
            enc_pw_.emplace_back(cat("enc", i, ".pw"), ch(i), ch(i + 1), 1, 1, 1, rng);
        }
        mid_dw_ = nn::Conv2d<T>("mid.dw", ch(d), ch(d), 3, 1, ch(d), rng);
        mid_pw_ = nn::Conv2d<T>("mid.pw", ch(d), ch(d), 1, 1, 1, rng);
        for (int i = 0; i < d; ++i) {
            const int in_ch = ch(i + 1) + ch(i);
            dec_dw_.emplace_back(cat("dec", i, ".dw"), in_ch, in_ch, 3, 1, in_ch, rng);
            dec_pw_.emplace_back(cat("dec", i, ".pw"), in_ch, ch(i), 1, 1, 1, rng);
        }
        head_ = nn::Conv2d<T>("head", ch(0), 3, 3, 1, 1, rng);

        enc_act1_.resize(size_t(d));
        enc_act2_.resize(size_t(d));
        dec_act1_.resize(size_t(d));
        dec_act2_.resize(size_t(d));
        ups_.resize(size_t(d));
    }

    const UNetConfig& config() const { return cfg_; }
    int stride_multiple() const { return 1 << cfg_.depth; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> out;
        stem_.params(out);
        for (size_t i = 0; i < enc_dw_.size(); ++i) {
            enc_dw_[i].params(out);
            enc_pw_[i].params(out);
        }
        mid_dw_.params(out);
        mid_pw_.params(out);
        for (size_t i = 0; i < dec_dw_.size(); ++i) {
            dec_dw_[i].params(out);
            dec_pw_[i].params(out);
        }
        head_.params(out);
        return out;
    }

    size_t param_count() {
        return nn::param_count(params());
    }

    // Input must be divisible by 2^depth; callers handle padding.
    Tensor<T> forward(const Tensor<T>& x, bool train) {
        const int d = cfg_.depth;
        require(x.c == 3, "unet: expected 3 input channels");
        require(x.h % (1 << d) == 0 && x.w % (1 << d) == 0,
                "unet: input ", x.w, "x", x.h, " not divisible by ", 1 << d);

        std::vector<Tensor<T>> skips(static_cast<size_t>(d));
        Tensor<T> f = stem_act_.forward(stem_.forward(x, train), train);
        skips[0] = f;
        for (int i = 0; i < d; ++i) {
            f = enc_act1_[size_t(i)].forward(enc_dw_[size_t(i)].forward(f, train), train);
            f = enc_act2_[size_t(i)].forward(enc_pw_[size_t(i)].forward(f, train), train);
            if (i + 1 < d) skips[size_t(i + 1)] = f;
        }
        f = mid_act1_.forward(mid_dw_.forward(f, train), train);
        f = mid_act2_.forward(mid_pw_.forward(f, train), train);
        for (int i = d - 1; i >= 0; --i) {
            Tensor<T> u = ups_[size_t(i)].forward(f);
            Tensor<T> cat2 = nn::concat_channels(u, skips[size_t(i)]);
            f = dec_act1_[size_t(i)].forward(dec_dw_[size_t(i)].forward(cat2, train), train);
            f = dec_act2_[size_t(i)].forward(dec_pw_[size_t(i)].forward(f, train), train);
        }
        return out_sig_.forward(head_.forward(f, train), train);
    }

    // Gradient w.r.t. the input; parameter gradients are accumulated.
    Tensor<T> backward(const Tensor<T>& dy) {
        const int d = cfg_.depth;
        auto ch = [&](int i) { return cfg_.c0 << i; };

        Tensor<T> g = head_.backward(out_sig_.backward(dy));
        std::vector<Tensor<T>> skip_grads(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) {
            g = dec_act2_[size_t(i)].backward(g);
            g = dec_pw_[size_t(i)].backward(g);
            g = dec_act1_[size_t(i)].backward(g);
            g = dec_dw_[size_t(i)].backward(g);
            Tensor<T> gu, gs;
            nn::split_channels(g, gu, gs, ch(i + 1), ch(i));
            skip_grads[size_t(i)] = std::move(gs);
            g = ups_[size_t(i)].backward(gu);
        }
        g = mid_act2_.backward(g);
        g = mid_pw_.backward(g);
        g = mid_act1_.backward(g);
        g = mid_dw_.backward(g);
        for (int i = d - 1; i >= 0; --i) {
            if (i + 1 < d)
                for (size_t j = 0; j < g.size(); ++j) g.v[j] += skip_grads[size_t(i + 1)].v[j];
            g = enc_act2_[size_t(i)].backward(g);
            g = enc_pw_[size_t(i)].backward(g);
            g = enc_act1_[size_t(i)].backward(g);
            g = enc_dw_[size_t(i)].backward(g);
        }
        for (size_t j = 0; j < g.size(); ++j) g.v[j] += skip_grads[0].v[j];
        g = stem_act_.backward(g);
        return stem_.backward(g);
    }

private:
    UNetConfig cfg_;
    nn::Conv2d<T> stem_, mid_dw_, mid_pw_, head_;
    nn::SiLU<T> stem_act_, mid_act1_, mid_act2_;
    std::vector<nn::Conv2d<T>> enc_dw_, enc_pw_, dec_dw_, dec_pw_;
    std::vector<nn::SiLU<T>> enc_act1_, enc_act2_, dec_act1_, dec_act2_;
    std::vector<nn::Upsample2x<T>> ups_;
    nn::SigmoidLayer<T> out_sig_;
};

} // namespace veil
