#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "veil/core/geometry.hpp"
#include "veil/core/rng.hpp"
#include "veil/core/types.hpp"

namespace veil {

inline constexpr int kGlyphJoints = 5; // head, neck, pelvis, hand, foot

struct SceneSpec {
    int height = 64, width = 64;
    int min_task_objects = 1, max_task_objects = 4;
    int min_persons = 0, max_persons = 2;
    int n_identities = 8;
    int background = 0; // texture family
    double noise_std = 0.02;
    uint64_t seed = 0;
};

inline void validate_spec(const SceneSpec& s) {
    require(s.height >= 32 && s.width >= 32, "scene spec: image must be at least 32x32");
    require(s.n_identities >= 2, "scene spec: need at least 2 identities");
    require(s.min_task_objects >= 0 && s.min_task_objects <= s.max_task_objects,
            "scene spec: bad task-object range");
    require(s.min_persons >= 0 && s.min_persons <= s.max_persons,
            "scene spec: bad person range");
    require(s.noise_std >= 0, "scene spec: negative noise");
}

namespace synth_detail {

struct Rgb {
    double r, g, b;
};

// 8-entry clothing palette; hue varies per identity but stays muted so person
// detection keys on shape rather than one loud color.
inline Rgb identity_base(int id) {
    static const Rgb palette[8] = {
        {0.65, 0.35, 0.35}, {0.60, 0.50, 0.30}, {0.45, 0.60, 0.35}, {0.32, 0.58, 0.52},
        {0.35, 0.45, 0.65}, {0.48, 0.38, 0.62}, {0.62, 0.38, 0.55}, {0.55, 0.55, 0.55}};
    return palette[id % 8];
}

// Identity texture: stripe wavelength and orientation are functions of the
// identity label; fine-grained enough that the task models do not need it.
inline Rgb identity_texture(int id, double x, double y) {
    const double wl = 2.0 + 1.0 * (id % 4);            // stripe wavelength, px
    const bool vertical = ((id / 4) % 2) == 1;
    const double phase = vertical ? x : y;
    const double s = 0.5 + 0.5 * std::sin(6.283185307179586 * phase / wl);
    const Rgb base = identity_base(id);
    const double m = 0.55 + 0.45 * s;
    return {base.r * m, base.g * m, base.b * m};
}

inline void put(Frame& f, int y, int x, const Rgb& c) {
    if (x < 0 || x >= f.width || y < 0 || y >= f.height) return;
    f.at(0, y, x) = float(clamp01(c.r));
    f.at(1, y, x) = float(clamp01(c.g));
    f.at(2, y, x) = float(clamp01(c.b));
}

struct Extent {
    double x0 = 1e30, y0 = 1e30, x1 = -1e30, y1 = -1e30;
    void grow(double x, double y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
};

// Fill every pixel within radius r of segment (ax,ay)-(bx,by).
template <class ColorFn>
void draw_capsule(Frame& f, Extent& ext, double ax, double ay, double bx, double by, double r,
                  ColorFn color) {
    const int x0 = int(std::floor(std::min(ax, bx) - r)), x1 = int(std::ceil(std::max(ax, bx) + r));
    const int y0 = int(std::floor(std::min(ay, by) - r)), y1 = int(std::ceil(std::max(ay, by) + r));
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double t = len2 > 0 ? ((x - ax) * vx + (y - ay) * vy) / len2 : 0.0;
            t = std::min(1.0, std::max(0.0, t));
            const double dx = x - (ax + t * vx), dy = y - (ay + t * vy);
            if (dx * dx + dy * dy <= r * r) {
                put(f, y, x, color(x, y));
                ext.grow(x, y);
            }
        }
}

inline void render_background(Frame& f, int family, Rng& rng) {
    const double base = rng.uniform(0.30, 0.50);
    const double tilt = rng.uniform(-0.10, 0.10);
    const double ca = rng.uniform(-0.06, 0.06), cb = rng.uniform(-0.06, 0.06);
    const double fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0);
    const double px = rng.uniform(0, 6.283), py = rng.uniform(0, 6.283);
    const double amp = rng.uniform(0.02, 0.08);
    // family 2: low-contrast value noise on a coarse grid
    const int gw = 9, gh = 9;
    std::vector<double> grid(size_t(gw) * gh);
    for (auto& v : grid) v = rng.uniform(-1.0, 1.0);

    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const double u = double(x) / f.width, v = double(y) / f.height;
            double lum = base + tilt * (u + v - 1.0);
            if (family == 1) {
                lum += amp * std::sin(6.283 * fx * u + px) * std::sin(6.283 * fy * v + py);
            } else if (family == 2) {
                const double gx = u * (gw - 1), gy = v * (gh - 1);
                const int ix = std::min(gw - 2, int(gx)), iy = std::min(gh - 2, int(gy));
                const double tx = gx - ix, ty = gy - iy;
                const double n00 = grid[size_t(iy) * gw + ix], n01 = grid[size_t(iy) * gw + ix + 1];
                const double n10 = grid[size_t(iy + 1) * gw + ix],
                             n11 = grid[size_t(iy + 1) * gw + ix + 1];
                lum += amp * ((1 - ty) * ((1 - tx) * n00 + tx * n01) +
                              ty * ((1 - tx) * n10 + tx * n11));
            } else {
                lum += amp * std::sin(6.283 * fx * u + px) * 0.5 +
                       amp * std::sin(6.283 * fy * v + py) * 0.5;
            }
            put(f, y, x, {lum + ca, lum, lum + cb});
        }
}

} // namespace synth_detail

// Size bands for task objects: areas < 8^2, 8^2..16^2, > 16^2 at 64x64,
// scaled linearly with image area.
inline std::pair<double, double> size_band_edges(const SceneSpec& spec) {
    const double scale = double(spec.height) * spec.width / (64.0 * 64.0);
    return {64.0 * scale, 256.0 * scale};
}

// Deterministic in (spec.seed, index).
inline std::pair<Frame, Annotation> generate_scene(const SceneSpec& spec, int index) {
    validate_spec(spec);
    using namespace synth_detail;
    Rng rng(spec.seed, uint64_t(index));

    std::string idx_str = cat(index);
    if (idx_str.size() < 5) idx_str.insert(0, 5 - idx_str.size(), '0');
    Frame f(cat("frame_", idx_str), spec.height, spec.width);
    render_background(f, spec.background, rng);

    Annotation ann;
    ann.frame_id = f.id;

    const auto [small_max, medium_max] = size_band_edges(spec);
    const double area_scale = double(spec.height) * spec.width / (64.0 * 64.0);
    const double len_scale = std::sqrt(area_scale);

    std::vector<BBox> placed; // overlap control across planks and persons

    auto try_place = [&](double w, double h, double margin, BBox& out) {
        if (spec.width - w - margin <= margin || spec.height - h - margin <= margin)
            return false;
        for (int attempt = 0; attempt < 60; ++attempt) {
            const double x0 = rng.uniform(margin, spec.width - w - margin);
            const double y0 = rng.uniform(margin, spec.height - h - margin);
            BBox cand{x0, y0, x0 + w, y0 + h, 0, -1.0};
            bool ok = true;
            for (const auto& p : placed)
                if (iou(cand, p) > 0.10) {
                    ok = false;
                    break;
                }
            if (ok) {
                out = cand;
                return true;
            }
        }
        return false;
    };

    // ---- task objects ("planks"): textured rectangles, grain along the long axis
    const int n_obj = rng.range(spec.min_task_objects, spec.max_task_objects);
    for (int i = 0; i < n_obj; ++i) {
        const int band = int(rng.below(3));
        double area;
        if (band == 0)
            area = rng.uniform(std::max(20.0, small_max * 0.4), small_max);
        else if (band == 1)
            area = rng.uniform(small_max, medium_max);
        else
            area = rng.uniform(medium_max, medium_max * 2.2);
        const double ratio = rng.uniform(2.0, 4.0);
        double w = std::sqrt(area * ratio), h = std::sqrt(area / ratio);
        if (rng.below(2)) std::swap(w, h);
        w = std::min(w, spec.width * 0.8);
        h = std::min(h, spec.height * 0.8);

        BBox box;
        if (!try_place(w, h, 1.0, box)) {
            // shrink once before giving up
            w = std::max(5.0, w * 0.5);
            h = std::max(4.0, h * 0.5);
            if (!try_place(w, h, 1.0, box))
                fail("generate_scene: placement failure for task object ", i, " at frame ",
                     index, " (overcrowded spec)");
        }
        const bool horizontal = box.width() >= box.height();
        const double base_r = rng.uniform(0.50, 0.68);
        const double base_g = base_r * rng.uniform(0.62, 0.75);
        const double base_b = base_g * rng.uniform(0.45, 0.62);
        const double wl = rng.uniform(2.0, 3.5);
        const double phase = rng.uniform(0, 6.283);
        const int ix0 = int(std::ceil(box.x0)), ix1 = int(std::floor(box.x1) - 1);
        const int iy0 = int(std::ceil(box.y0)), iy1 = int(std::floor(box.y1) - 1);
        for (int y = iy0; y <= iy1; ++y)
            for (int x = ix0; x <= ix1; ++x) {
                const double across = horizontal ? y : x;
                const double m =
                    0.78 + 0.22 * std::sin(6.283185307179586 * across / wl + phase);
                const bool edge = (x == ix0 || x == ix1 || y == iy0 || y == iy1);
                const double e = edge ? 0.55 : 1.0;
                put(f, y, x, {base_r * m * e, base_g * m * e, base_b * m * e});
            }
        box.cls = kTaskObjectClass;
        placed.push_back(box);
        ann.boxes.push_back(box);
    }

    // ---- person glyphs: articulated stick figure with identity texture
    const int n_persons = rng.range(spec.min_persons, spec.max_persons);
    if (n_persons > 0) ann.identity = int(rng.below(uint64_t(spec.n_identities)));

    for (int p = 0; p < n_persons; ++p) {
        const double hp = rng.uniform(18.0, 26.0) * len_scale; // glyph height
        const double head_r = 0.16 * hp;
        const double torso_r = 0.10 * hp;
        const double limb_r = 0.06 * hp;
        const double lean = rng.uniform(-0.25, 0.25);
        const double arm_a = rng.uniform(-1.2, 1.2);
        const double leg_a = rng.uniform(-0.7, 0.7);
        const double arm_len = 0.42 * hp, leg_len = 0.45 * hp, torso_len = 0.42 * hp;

        const double reach = std::max({arm_len + torso_r, leg_len + torso_r, head_r * 2.5});
        const double margin = reach + 2.0;
        BBox place_box;
        const double pw = 0.9 * hp, ph = hp;
        if (!try_place(pw, ph, margin, place_box)) {
            fail("generate_scene: placement failure for person ", p, " at frame ", index,
                 " (overcrowded spec)");
        }
        const double cx = place_box.cx();
        const double neck_y = place_box.cy() - torso_len * 0.5;
        const double neck_x = cx;
        const double pelvis_x = neck_x + std::sin(lean) * torso_len;
        const double pelvis_y = neck_y + std::cos(lean) * torso_len;
        const double head_x = neck_x - std::sin(lean) * head_r * 1.6;
        const double head_y = neck_y - std::cos(lean) * head_r * 1.6;
        const double hand_x = neck_x + std::sin(arm_a) * arm_len;
        const double hand_y = neck_y + std::cos(arm_a) * arm_len * 0.6 + 0.1 * hp;
        const double foot_x = pelvis_x + std::sin(leg_a) * leg_len * 0.7;
        const double foot_y = pelvis_y + std::cos(leg_a) * leg_len;

        const int id = ann.identity;
        Extent ext;
        auto tex = [&](int x, int y) { return identity_texture(id, x, y); };
        draw_capsule(f, ext, neck_x, neck_y, pelvis_x, pelvis_y, torso_r, tex);
        draw_capsule(f, ext, head_x, head_y, head_x, head_y, head_r, tex);
        draw_capsule(f, ext, neck_x, neck_y, hand_x, hand_y, limb_r, tex);
        draw_capsule(f, ext, pelvis_x, pelvis_y, foot_x, foot_y, limb_r, tex);

        BBox pbox = make_bbox(ext.x0 - 0.5, ext.y0 - 0.5, ext.x1 + 1.5, ext.y1 + 1.5,
                              kPersonClass, spec.width, spec.height);
        placed.push_back(pbox);
        ann.boxes.push_back(pbox);

        KeypointSet kp;
        kp.joints = {{head_x, head_y, 1},
                     {neck_x, neck_y, 1},
                     {pelvis_x, pelvis_y, 1},
                     {hand_x, hand_y, 1},
                     {foot_x, foot_y, 1}};
        kp.area = pbox.area();
        ann.keypoints.push_back(std::move(kp));
    }

    // ---- sensor noise
    if (spec.noise_std > 0)
        for (auto& v : f.px) v = float(clamp01(double(v) + spec.noise_std * rng.gauss()));

    return {std::move(f), std::move(ann)};
}

inline Dataset generate_dataset(const SceneSpec& spec, int n_frames, const std::string& split) {
    require(n_frames >= 1, "generate_dataset: n_frames must be >= 1");
    require(split == "train" || split == "val" || split == "test",
            "generate_dataset: bad split '", split, "'");
    Dataset ds;
    ds.split = split;
    ds.n_identities = spec.n_identities;
    for (int i = 0; i < n_frames; ++i) {
        auto [frame, ann] = generate_scene(spec, i);
        frame.id = cat(split, "_", frame.id);
        ann.frame_id = frame.id;
        ds.annotations[frame.id] = std::move(ann);
        ds.frames.push_back(std::move(frame));
    }
    validate_dataset(ds);
    return ds;
}

// ---------------------------------------------------------------------------

struct PersonCrop {
    Frame crop;
    int identity;
    std::string frame_id;
    int person_index; // index among the frame's person boxes
};

inline constexpr int kCropSize = 32;

// Fixed-size resampled crops around each person box, paired with identity.
inline std::vector<PersonCrop> person_crops(const Dataset& ds, double pad_px) {
    require(ds.n_identities > 0, "person_crops: dataset carries no identity labels");
    std::vector<PersonCrop> out;
    for (const auto& f : ds.frames) {
        const Annotation& a = ds.ann(f.id);
        int idx = 0;
        for (const auto& b : a.boxes) {
            if (b.cls != kPersonClass) continue;
            require(a.has_identity(), "person_crops: frame '", f.id,
                    "' has a person box but no identity label");
            PersonCrop pc;
            pc.crop = crop_resample(f, b.x0 - pad_px, b.y0 - pad_px, b.x1 + pad_px,
                                    b.y1 + pad_px, kCropSize, kCropSize,
                                    cat(f.id, "_p", idx));
            pc.identity = a.identity;
            pc.frame_id = f.id;
            pc.person_index = idx;
            out.push_back(std::move(pc));
            ++idx;
        }
    }
    return out;
}

} // namespace veil
