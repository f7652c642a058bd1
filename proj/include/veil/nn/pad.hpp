#pragma once

#include "veil/core/tensor.hpp"

namespace veil {

// Reflect padding (mirror, edge not duplicated) to the next multiple of
// `mult`, on the bottom/right; paired with crop_back below.
template <class T>
Tensor<T> pad_to_multiple(const Tensor<T>& x, int mult) {
    const int ph = (mult - x.h % mult) % mult;
    const int pw = (mult - x.w % mult) % mult;
    if (ph == 0 && pw == 0) return x;
    Tensor<T> y(x.n, x.c, x.h + ph, x.w + pw);
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    };
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* src = x.chan(n, c);
            T* dst = y.chan(n, c);
            for (int iy = 0; iy < y.h; ++iy) {
                const int sy = reflect(iy, x.h);
                for (int ix = 0; ix < y.w; ++ix)
                    dst[iy * y.w + ix] = src[sy * x.w + reflect(ix, x.w)];
            }
        }
    return y;
}

template <class T>
Tensor<T> crop_back(const Tensor<T>& y, int h, int w) {
    if (y.h == h && y.w == w) return y;
    Tensor<T> out(y.n, y.c, h, w);
    for (int n = 0; n < y.n; ++n)
        for (int c = 0; c < y.c; ++c) {
            const T* src = y.chan(n, c);
            T* dst = out.chan(n, c);
            for (int iy = 0; iy < h; ++iy)
                std::copy(src + size_t(iy) * y.w, src + size_t(iy) * y.w + w, dst + size_t(iy) * w);
        }
    return out;
}

} // namespace veil
