#pragma once

#include <string>
#include <vector>

#include "veil/core/hash.hpp"
#include "veil/nn/layers.hpp"

namespace veil::nn {

template <class T>
size_t param_count(const ParamRefs<T>& params) {
    size_t n = 0;
    for (auto* p : params) n += p->w.size();
    return n;
}

template <class T>
void zero_grads(const ParamRefs<T>& params) {
    for (auto* p : params) p->g.zero();
}

// Bitwise hash over all parameter tensors, in declaration order.
template <class T>
std::string param_hash(const ParamRefs<T>& params) {
    Hasher h;
    for (auto* p : params) {
        h.str(p->name);
        h.span(p->w.data(), p->w.size());
    }
    return h.hex();
}

template <class T>
std::vector<T> snapshot_params(const ParamRefs<T>& params) {
    std::vector<T> out;
    for (auto* p : params) out.insert(out.end(), p->w.v.begin(), p->w.v.end());
    return out;
}

template <class T>
void restore_params(const ParamRefs<T>& params, const std::vector<T>& snap) {
    size_t off = 0;
    for (auto* p : params) {
        require(off + p->w.size() <= snap.size(), "restore_params: snapshot too small");
        std::copy(snap.begin() + long(off), snap.begin() + long(off + p->w.size()),
                  p->w.v.begin());
        off += p->w.size();
    }
    require(off == snap.size(), "restore_params: snapshot size mismatch");
}

template <class T>
bool all_finite(const ParamRefs<T>& params) {
    for (auto* p : params)
        for (T v : p->w.v)
            if (!std::isfinite(double(v))) return false;
    return true;
}

} // namespace veil::nn
