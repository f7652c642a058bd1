#pragma once

#include <algorithm>
#include <chrono>
#include <new>
#include <vector>

#include <json.hpp>

#include "veil/models/obfuscator.hpp"

namespace veil {

struct ThroughputReport {
    int height = 0, width = 0, n_frames = 0;
    bool completed = false;
    std::string error;
    double median_ms = 0, p95_ms = 0, fps = 0;

    nlohmann::json to_json() const {
        return {{"height", height},   {"width", width}, {"n_frames", n_frames},
                {"completed", completed}, {"error", error}, {"median_ms", median_ms},
                {"p95_ms", p95_ms},   {"fps", fps}};
    }
};

// Per-frame obfuscation latency at a given resolution (informational). Sizes
// not divisible by 2^depth exercise the reflect-pad/crop path. Out-of-memory
// is reported as a structured result, not a crash.
inline ThroughputReport bench_throughput(ObfuscatorModel<float>& o, int height, int width,
                                         int n_frames, uint64_t seed = 1234) {
    ThroughputReport rep;
    rep.height = height;
    rep.width = width;
    rep.n_frames = n_frames;
    require(n_frames >= 1, "bench_throughput: need at least one frame");
    try {
        Rng rng(seed, 0xBE7C);
        Frame f("bench", height, width);
        for (auto& v : f.px) v = float(rng.uniform());

        (void)o.obfuscate(f); // warmup
        std::vector<double> lat;
        lat.reserve(size_t(n_frames));
        for (int i = 0; i < n_frames; ++i) {
            // perturb one pixel so runs cannot be trivially cached
            f.px[size_t(i) % f.px.size()] = float(rng.uniform());
            const auto t0 = std::chrono::steady_clock::now();
            Frame out = o.obfuscate(f);
            const auto t1 = std::chrono::steady_clock::now();
            require(out.height == height && out.width == width,
                    "bench_throughput: output shape mismatch");
            lat.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        std::sort(lat.begin(), lat.end());
        rep.median_ms = lat[lat.size() / 2];
        rep.p95_ms = lat[std::min(lat.size() - 1, size_t(std::ceil(lat.size() * 0.95)) - 1)];
        rep.fps = rep.median_ms > 0 ? 1000.0 / rep.median_ms : 0.0;
        rep.completed = true;
    } catch (const std::bad_alloc&) {
        rep.completed = false;
        rep.error = "out_of_memory";
    }
    return rep;
}

} // namespace veil
