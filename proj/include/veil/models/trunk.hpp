#pragma once

#include "veil/nn/layers.hpp"

namespace veil {

// Shared stride-4 backbone for the toy task models: stem + two
// depthwise-separable stride-2 stages + one body block.
template <class T>
class Trunk {
public:
    Trunk() = default;

    Trunk(int c0, Rng& rng) : c0_(c0) {
        stem_ = nn::Conv2d<T>("trunk.stem", 3, c0, 3, 1, 1, rng);
        d1_dw_ = nn::Conv2d<T>("trunk.d1.dw", c0, c0, 3, 2, c0, rng);
        d1_pw_ = nn::Conv2d<T>("trunk.d1.pw", c0, 2 * c0, 1, 1, 1, rng);
        d2_dw_ = nn::Conv2d<T>("trunk.d2.dw", 2 * c0, 2 * c0, 3, 2, 2 * c0, rng);
        d2_pw_ = nn::Conv2d<T>("trunk.d2.pw", 2 * c0, 4 * c0, 1, 1, 1, rng);
        body_dw_ = nn::Conv2d<T>("trunk.body.dw", 4 * c0, 4 * c0, 3, 1, 4 * c0, rng);
        body_pw_ = nn::Conv2d<T>("trunk.body.pw", 4 * c0, 4 * c0, 1, 1, 1, rng);
    }

    static constexpr int stride() { return 4; }
    int out_channels() const { return 4 * c0_; }

    void params(nn::ParamRefs<T>& out) {
        stem_.params(out);
        d1_dw_.params(out);
        d1_pw_.params(out);
        d2_dw_.params(out);
        d2_pw_.params(out);
        body_dw_.params(out);
        body_pw_.params(out);
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        Tensor<T> f = a0_.forward(stem_.forward(x, train), train);
        f = a1_.forward(d1_dw_.forward(f, train), train);
        f = a2_.forward(d1_pw_.forward(f, train), train);
        f = a3_.forward(d2_dw_.forward(f, train), train);
        f = a4_.forward(d2_pw_.forward(f, train), train);
        f = a5_.forward(body_dw_.forward(f, train), train);
        f = a6_.forward(body_pw_.forward(f, train), train);
        return f;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> g = body_pw_.backward(a6_.backward(dy));
        g = body_dw_.backward(a5_.backward(g));
        g = d2_pw_.backward(a4_.backward(g));
        g = d2_dw_.backward(a3_.backward(g));
        g = d1_pw_.backward(a2_.backward(g));
        g = d1_dw_.backward(a1_.backward(g));
        return stem_.backward(a0_.backward(g));
    }

private:
    int c0_ = 0;
    nn::Conv2d<T> stem_, d1_dw_, d1_pw_, d2_dw_, d2_pw_, body_dw_, body_pw_;
    nn::SiLU<T> a0_, a1_, a2_, a3_, a4_, a5_, a6_;
};

} // namespace veil
