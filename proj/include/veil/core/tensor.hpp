#pragma once

#include <cstddef>
#include <vector>

#include "veil/core/common.hpp"

namespace veil {

// Dense NCHW tensor. The batch axis is n; 2-D data (e.g. linear layers)
// uses h == w == 1.
template <class T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, T(0)) {}

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
    int plane() const { return h * w; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& at(int i, int j, int y, int x) {
        return v[((size_t(i) * c + j) * h + y) * w + x];
    }
    T at(int i, int j, int y, int x) const {
        return v[((size_t(i) * c + j) * h + y) * w + x];
    }

    T* chan(int i, int j) { return v.data() + (size_t(i) * c + j) * h * w; }
    const T* chan(int i, int j) const { return v.data() + (size_t(i) * c + j) * h * w; }

    T* sample(int i) { return v.data() + size_t(i) * c * h * w; }
    const T* sample(int i) const { return v.data() + size_t(i) * c * h * w; }

    void zero() { std::fill(v.begin(), v.end(), T(0)); }
    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(n, c, h, w);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = U(v[i]);
        return out;
    }
};

template <class T>
Tensor<T> zeros_like(const Tensor<T>& t) {
    return Tensor<T>(t.n, t.c, t.h, t.w);
}

} // namespace veil
