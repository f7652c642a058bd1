#pragma once

#include <cmath>
#include <vector>

#include "veil/nn/layers.hpp"

namespace veil::nn {

// Per-parameter adaptive moment estimation.
template <class T>
class Adam {
public:
    explicit Adam(const ParamRefs<T>& params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto* p : params_) {
            m_.push_back(zeros_like(p->w));
            v_.push_back(zeros_like(p->w));
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (size_t pi = 0; pi < params_.size(); ++pi) {
            auto& w = params_[pi]->w.v;
            auto& g = params_[pi]->g.v;
            auto& m = m_[pi].v;
            auto& v = v_[pi].v;
            for (size_t i = 0; i < w.size(); ++i) {
                const double gi = double(g[i]);
                const double mi = beta1_ * double(m[i]) + (1.0 - beta1_) * gi;
                const double vi = beta2_ * double(v[i]) + (1.0 - beta2_) * gi * gi;
                m[i] = T(mi);
                v[i] = T(vi);
                w[i] -= T(lr_ * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
            }
        }
    }

    void set_lr(double lr) { lr_ = lr; }

private:
    ParamRefs<T> params_;
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

} // namespace veil::nn
