#pragma once

#include "veil/core/hash.hpp"
#include "veil/core/types.hpp"

namespace veil {

// Content hash over 8-bit-quantized pixels plus annotations. Stable across
// save/load round trips (pixels are quantized the same way on disk).
inline uint64_t dataset_content_hash(const Dataset& ds) {
    Hasher h;
    h.str(ds.split).pod(ds.n_identities).pod(uint64_t(ds.frames.size()));
    for (const auto& f : ds.frames) {
        h.str(f.id).pod(f.height).pod(f.width);
        auto bytes = frame_to_u8(f);
        h.span(bytes.data(), bytes.size());
        const Annotation& a = ds.ann(f.id);
        h.pod(uint64_t(a.boxes.size()));
        for (const auto& b : a.boxes)
            h.pod(b.x0).pod(b.y0).pod(b.x1).pod(b.y1).pod(b.cls);
        h.pod(uint64_t(a.keypoints.size()));
        for (const auto& k : a.keypoints) {
            h.pod(k.area).pod(uint64_t(k.joints.size()));
            for (const auto& j : k.joints) h.pod(j.x).pod(j.y).pod(j.v);
        }
        h.pod(a.identity);
    }
    return h.value();
}

} // namespace veil
