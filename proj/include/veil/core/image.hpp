#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "veil/core/common.hpp"
#include "veil/core/hash.hpp"
#include "veil/core/tensor.hpp"

namespace veil {

// One RGB image with pixel values in [0,1], stored planar (3 x H x W).
struct Frame {
    std::string id;
    int height = 0;
    int width = 0;
    std::vector<float> px; // 3 * height * width

    Frame() = default;
    Frame(std::string id_, int h, int w)
        : id(std::move(id_)), height(h), width(w), px(size_t(3) * h * w, 0.f) {}

    float& at(int ch, int y, int x) { return px[(size_t(ch) * height + y) * width + x]; }
    float at(int ch, int y, int x) const { return px[(size_t(ch) * height + y) * width + x]; }

    float* chan(int ch) { return px.data() + size_t(ch) * height * width; }
    const float* chan(int ch) const { return px.data() + size_t(ch) * height * width; }

    size_t pixels() const { return size_t(height) * width; }
};

inline void validate_frame(const Frame& f) {
    require(f.height >= 16 && f.width >= 16,
            "frame '", f.id, "': size ", f.width, "x", f.height, " below 16x16 minimum");
    require(f.px.size() == size_t(3) * f.height * f.width,
            "frame '", f.id, "': pixel buffer size mismatch");
    for (float v : f.px)
        require(v >= 0.f && v <= 1.f, "frame '", f.id, "': pixel value ", v, " outside [0,1]");
}

inline void clamp_frame(Frame& f) {
    for (auto& v : f.px) v = clamp01(v);
}

inline std::vector<uint8_t> frame_to_u8(const Frame& f) {
    std::vector<uint8_t> out(f.pixels() * 3);
    const size_t plane = f.pixels();
    for (size_t i = 0; i < plane; ++i) { // interleave RGB
        out[3 * i + 0] = uint8_t(std::lround(clamp01(f.px[i]) * 255.f));
        out[3 * i + 1] = uint8_t(std::lround(clamp01(f.px[plane + i]) * 255.f));
        out[3 * i + 2] = uint8_t(std::lround(clamp01(f.px[2 * plane + i]) * 255.f));
    }
    return out;
}

inline Frame frame_from_u8(std::string id, int h, int w, const std::vector<uint8_t>& rgb) {
    Frame f(std::move(id), h, w);
    const size_t plane = f.pixels();
    require(rgb.size() == plane * 3, "frame '", f.id, "': byte buffer size mismatch");
    for (size_t i = 0; i < plane; ++i) {
        f.px[i] = float(rgb[3 * i + 0]) / 255.f;
        f.px[plane + i] = float(rgb[3 * i + 1]) / 255.f;
        f.px[2 * plane + i] = float(rgb[3 * i + 2]) / 255.f;
    }
    return f;
}

inline float bilinear(const Frame& f, int ch, double y, double x) {
    // clamped sampling in pixel-center coordinates
    x = std::min(std::max(x, 0.0), double(f.width - 1));
    y = std::min(std::max(y, 0.0), double(f.height - 1));
    const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    const int x1 = std::min(x0 + 1, f.width - 1), y1 = std::min(y0 + 1, f.height - 1);
    const double fx = x - x0, fy = y - y0;
    return float((1 - fy) * ((1 - fx) * f.at(ch, y0, x0) + fx * f.at(ch, y0, x1)) +
                 fy * ((1 - fx) * f.at(ch, y1, x0) + fx * f.at(ch, y1, x1)));
}

// Resample an axis-aligned source rectangle to a fixed-size output.
inline Frame crop_resample(const Frame& f, double x0, double y0, double x1, double y1,
                           int out_h, int out_w, std::string id = "crop") {
    require(x1 > x0 && y1 > y0, "crop_resample: empty source rectangle");
    Frame out(std::move(id), out_h, out_w);
    const double sx = (x1 - x0) / out_w;
    const double sy = (y1 - y0) / out_h;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x)
                out.at(ch, y, x) = bilinear(f, ch, y0 + (y + 0.5) * sy - 0.5,
                                            x0 + (x + 0.5) * sx - 0.5);
    return out;
}

inline uint64_t frame_pixel_hash(const Frame& f) {
    Hasher h;
    h.pod(f.height).pod(f.width);
    auto bytes = frame_to_u8(f);
    h.span(bytes.data(), bytes.size());
    return h.value();
}

// Batch <-> frame conversion used by the training loops.
template <class T>
void frame_into_tensor(const Frame& f, Tensor<T>& t, int slot) {
    for (int ch = 0; ch < 3; ++ch) {
        T* dst = t.chan(slot, ch);
        const float* src = f.chan(ch);
        for (size_t i = 0; i < f.pixels(); ++i) dst[i] = T(src[i]);
    }
}

template <class T>
Frame tensor_to_frame(const Tensor<T>& t, int slot, std::string id) {
    Frame f(std::move(id), t.h, t.w);
    for (int ch = 0; ch < 3; ++ch) {
        float* dst = f.chan(ch);
        const T* src = t.chan(slot, ch);
        for (int i = 0; i < t.plane(); ++i) dst[i] = float(src[i]);
    }
    return f;
}

} // namespace veil
