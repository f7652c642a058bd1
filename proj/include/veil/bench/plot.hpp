#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "veil/bench/sweep.hpp"
#include "veil/core/png_io.hpp"

namespace veil {

namespace plot_detail {

struct Color {
    uint8_t r, g, b;
};

inline Color method_color(const std::string& m) {
    if (m == "obfuscator") return {0, 150, 70};
    if (m == "blur") return {235, 140, 25};
    if (m == "detect_blur") return {45, 90, 205};
    return {90, 90, 90};
}

// Classic 5x7 column-encoded bitmap font, ASCII 0x20..0x5F.
inline const uint8_t* glyph(char c) {
    static const uint8_t font[][5] = {
        {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5F, 0x00, 0x00},
        {0x00, 0x07, 0x00, 0x07, 0x00}, {0x14, 0x7F, 0x14, 0x7F, 0x14},
        {0x24, 0x2A, 0x7F, 0x2A, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
        {0x36, 0x49, 0x55, 0x22, 0x50}, {0x00, 0x05, 0x03, 0x00, 0x00},
        {0x00, 0x1C, 0x22, 0x41, 0x00}, {0x00, 0x41, 0x22, 0x1C, 0x00},
        {0x08, 0x2A, 0x1C, 0x2A, 0x08}, {0x08, 0x08, 0x3E, 0x08, 0x08},
        {0x00, 0x50, 0x30, 0x00, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08},
        {0x00, 0x60, 0x60, 0x00, 0x00}, {0x20, 0x10, 0x08, 0x04, 0x02},
        {0x3E, 0x51, 0x49, 0x45, 0x3E}, {0x00, 0x42, 0x7F, 0x40, 0x00},
        {0x42, 0x61, 0x51, 0x49, 0x46}, {0x21, 0x41, 0x45, 0x4B, 0x31},
        {0x18, 0x14, 0x12, 0x7F, 0x10}, {0x27, 0x45, 0x45, 0x45, 0x39},
        {0x3C, 0x4A, 0x49, 0x49, 0x30}, {0x01, 0x71, 0x09, 0x05, 0x03},
        {0x36, 0x49, 0x49, 0x49, 0x36}, {0x06, 0x49, 0x49, 0x29, 0x1E},
        {0x00, 0x36, 0x36, 0x00, 0x00}, {0x00, 0x56, 0x36, 0x00, 0x00},
        {0x00, 0x08, 0x14, 0x22, 0x41}, {0x14, 0x14, 0x14, 0x14, 0x14},
        {0x41, 0x22, 0x14, 0x08, 0x00}, {0x02, 0x01, 0x51, 0x09, 0x06},
        {0x32, 0x49, 0x79, 0x41, 0x3E}, {0x7E, 0x11, 0x11, 0x11, 0x7E},
        {0x7F, 0x49, 0x49, 0x49, 0x36}, {0x3E, 0x41, 0x41, 0x41, 0x22},
        {0x7F, 0x41, 0x41, 0x22, 0x1C}, {0x7F, 0x49, 0x49, 0x49, 0x41},
        {0x7F, 0x09, 0x09, 0x01, 0x01}, {0x3E, 0x41, 0x41, 0x51, 0x32},
        {0x7F, 0x08, 0x08, 0x08, 0x7F}, {0x00, 0x41, 0x7F, 0x41, 0x00},
        {0x20, 0x40, 0x41, 0x3F, 0x01}, {0x7F, 0x08, 0x14, 0x22, 0x41},
        {0x7F, 0x40, 0x40, 0x40, 0x40}, {0x7F, 0x02, 0x0C, 0x02, 0x7F},
        {0x7F, 0x04, 0x08, 0x10, 0x7F}, {0x3E, 0x41, 0x41, 0x41, 0x3E},
        {0x7F, 0x09, 0x09, 0x09, 0x06}, {0x3E, 0x41, 0x51, 0x21, 0x5E},
        {0x7F, 0x09, 0x19, 0x29, 0x46}, {0x46, 0x49, 0x49, 0x49, 0x31},
        {0x01, 0x01, 0x7F, 0x01, 0x01}, {0x3F, 0x40, 0x40, 0x40, 0x3F},
        {0x1F, 0x20, 0x40, 0x20, 0x1F}, {0x3F, 0x40, 0x38, 0x40, 0x3F},
        {0x63, 0x14, 0x08, 0x14, 0x63}, {0x07, 0x08, 0x70, 0x08, 0x07},
        {0x61, 0x51, 0x49, 0x45, 0x43}, {0x00, 0x7F, 0x41, 0x41, 0x00},
        {0x02, 0x04, 0x08, 0x10, 0x20}, {0x00, 0x41, 0x41, 0x7F, 0x00},
        {0x04, 0x02, 0x01, 0x02, 0x04}, {0x40, 0x40, 0x40, 0x40, 0x40}};
    if (c >= 'a' && c <= 'z') c = char(c - 'a' + 'A');
    if (c < 0x20 || c > 0x5F) c = '?';
    return font[c - 0x20];
}

class Canvas {
public:
    Canvas(int w, int h) : w_(w), h_(h), px_(size_t(w) * h * 3, 255) {}

    int width() const { return w_; }
    int height() const { return h_; }

    void set(int x, int y, Color c) {
        if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
        uint8_t* p = &px_[(size_t(y) * w_ + x) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    void fill_rect(int x0, int y0, int x1, int y1, Color c) {
        for (int y = std::max(0, y0); y < std::min(h_, y1); ++y)
            for (int x = std::max(0, x0); x < std::min(w_, x1); ++x) set(x, y, c);
    }

    void line(int x0, int y0, int x1, int y1, Color c) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void thick_line(int x0, int y0, int x1, int y1, Color c) {
        line(x0, y0, x1, y1, c);
        line(x0 + 1, y0, x1 + 1, y1, c);
        line(x0, y0 + 1, x1, y1 + 1, c);
    }

    void marker(int x, int y, int kind, Color c) {
        const int r = 4;
        if (kind == 0) { // diamond
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (std::abs(dx) + std::abs(dy) <= r) set(x + dx, y + dy, c);
        } else if (kind == 1) { // disc
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dx * dx + dy * dy <= r * r) set(x + dx, y + dy, c);
        } else { // square
            fill_rect(x - r + 1, y - r + 1, x + r, y + r, c);
        }
    }

    void text(int x, int y, const std::string& s, Color c, int scale = 1) {
        int cx = x;
        for (char ch : s) {
            const uint8_t* g = glyph(ch);
            for (int col = 0; col < 5; ++col)
                for (int row = 0; row < 7; ++row)
                    if (g[col] & (1 << row))
                        for (int sy = 0; sy < scale; ++sy)
                            for (int sx = 0; sx < scale; ++sx)
                                set(cx + col * scale + sx, y + row * scale + sy, c);
            cx += 6 * scale;
        }
    }

    void save_png(const std::string& path) const { write_png_rgb8(path, w_, h_, px_); }

private:
    int w_, h_;
    std::vector<uint8_t> px_;
};

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace plot_detail

// Privacy-utility curve: attack SSIM on x (higher = weaker privacy), mAP on
// y, one series per method. Writes <prefix>.png and <prefix>.svg.
inline void emit_curve_plot(const std::vector<TradeoffPoint>& points,
                            const std::string& path_prefix) {
    using namespace plot_detail;
    require(!points.empty(), "emit_curve_plot: no points");

    std::map<std::string, std::vector<const TradeoffPoint*>> series;
    for (const auto& p : points) series[p.method].push_back(&p);
    for (auto& [m, v] : series)
        std::stable_sort(v.begin(), v.end(), [](const TradeoffPoint* a, const TradeoffPoint* b) {
            return a->attack_ssim < b->attack_ssim;
        });

    double xmin = 1e30, xmax = -1e30;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.attack_ssim);
        xmax = std::max(xmax, p.attack_ssim);
    }
    xmin = std::max(0.0, xmin - 0.04);
    xmax = std::min(1.05, xmax + 0.04);
    if (xmax - xmin < 0.1) {
        xmin = std::max(0.0, xmin - 0.05);
        xmax = xmin + 0.1;
    }
    const double ymin = 0.0, ymax = 1.0;

    const int W = 640, H = 440, ml = 58, mr = 16, mt = 24, mb = 46;
    Canvas cv(W, H);
    const Color black{20, 20, 20}, grey{210, 210, 210};

    auto px = [&](double x) {
        return ml + int(std::lround((x - xmin) / (xmax - xmin) * (W - ml - mr)));
    };
    auto py = [&](double y) {
        return H - mb - int(std::lround((y - ymin) / (ymax - ymin) * (H - mt - mb)));
    };

    for (int i = 0; i <= 5; ++i) { // grid + ticks
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        cv.line(px(xv), py(ymin), px(xv), py(ymax), grey);
        cv.line(px(xmin), py(yv), px(xmax), py(yv), grey);
        cv.text(px(xv) - 12, H - mb + 8, fmt_tick(xv), black);
        cv.text(6, py(yv) - 3, fmt_tick(yv), black);
    }
    cv.line(px(xmin), py(ymin), px(xmax), py(ymin), black);
    cv.line(px(xmin), py(ymin), px(xmin), py(ymax), black);
    cv.text(ml + (W - ml - mr) / 2 - 60, H - 16, "ATTACK SSIM (TEST)", black);
    cv.text(6, 8, "MAP@0.5", black);

    int mk = 0, legend_y = mt + 6;
    for (const auto& [method, pts] : series) {
        const Color c = method_color(method);
        for (size_t i = 1; i < pts.size(); ++i)
            cv.thick_line(px(pts[i - 1]->attack_ssim), py(pts[i - 1]->map50),
                          px(pts[i]->attack_ssim), py(pts[i]->map50), c);
        for (const auto* p : pts) cv.marker(px(p->attack_ssim), py(p->map50), mk, c);
        cv.marker(W - mr - 150, legend_y + 3, mk, c);
        cv.text(W - mr - 138, legend_y, method, black);
        legend_y += 14;
        mk = (mk + 1) % 3;
    }
    cv.save_png(path_prefix + ".png");

    // ---- SVG twin
    std::ofstream svg(path_prefix + ".svg");
    require(svg.good(), "emit_curve_plot: cannot write '", path_prefix, ".svg'");
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        svg << "<line x1=\"" << px(xv) << "\" y1=\"" << py(ymin) << "\" x2=\"" << px(xv)
            << "\" y2=\"" << py(ymax) << "\" stroke=\"#d2d2d2\"/>\n";
        svg << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(yv) << "\" x2=\"" << px(xmax)
            << "\" y2=\"" << py(yv) << "\" stroke=\"#d2d2d2\"/>\n";
        svg << "<text x=\"" << px(xv) - 12 << "\" y=\"" << H - mb + 16
            << "\" font-family=\"monospace\" font-size=\"11\">" << fmt_tick(xv) << "</text>\n";
        svg << "<text x=\"4\" y=\"" << py(yv) + 4
            << "\" font-family=\"monospace\" font-size=\"11\">" << fmt_tick(yv) << "</text>\n";
    }
    svg << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(ymin) << "\" x2=\"" << px(xmax)
        << "\" y2=\"" << py(ymin) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(ymin) << "\" x2=\"" << px(xmin)
        << "\" y2=\"" << py(ymax) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml + (W - ml - mr) / 2 - 70 << "\" y=\"" << H - 8
        << "\" font-family=\"monospace\" font-size=\"12\">attack SSIM (test)</text>\n";
    svg << "<text x=\"4\" y=\"14\" font-family=\"monospace\" font-size=\"12\">mAP@0.5</text>\n";
    legend_y = mt + 10;
    for (const auto& [method, pts] : series) {
        const Color c = method_color(method);
        char color[16];
        std::snprintf(color, sizeof color, "#%02x%02x%02x", c.r, c.g, c.b);
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto* p : pts) svg << px(p->attack_ssim) << "," << py(p->map50) << " ";
        svg << "\"/>\n";
        for (const auto* p : pts)
            svg << "<circle cx=\"" << px(p->attack_ssim) << "\" cy=\"" << py(p->map50)
                << "\" r=\"4\" fill=\"" << color << "\"/>\n";
        svg << "<circle cx=\"" << W - mr - 150 << "\" cy=\"" << legend_y << "\" r=\"4\" fill=\""
            << color << "\"/>\n";
        svg << "<text x=\"" << W - mr - 140 << "\" y=\"" << legend_y + 4
            << "\" font-family=\"monospace\" font-size=\"12\">" << method << "</text>\n";
        legend_y += 16;
    }
    svg << "</svg>\n";
    require(svg.good(), "emit_curve_plot: write failure");
}

// Grouped bars, clean vs transformed mAP per size bin.
inline void emit_size_plot(const metrics::SizeStratifiedMap& clean,
                           const metrics::SizeStratifiedMap& transformed,
                           const std::string& path_prefix) {
    using namespace plot_detail;
    const bool any = clean.small || clean.medium || clean.large || transformed.small ||
                     transformed.medium || transformed.large;
    require(any, "emit_size_plot: no populated size bins");

    const int W = 560, H = 400, ml = 56, mr = 16, mt = 26, mb = 44;
    Canvas cv(W, H);
    const Color black{20, 20, 20}, grey{210, 210, 210};
    const Color c_clean{120, 160, 215}, c_obf{0, 150, 70};

    auto py = [&](double y) { return H - mb - int(std::lround(y * (H - mt - mb))); };
    for (int i = 0; i <= 5; ++i) {
        const double yv = i / 5.0;
        cv.line(ml, py(yv), W - mr, py(yv), grey);
        cv.text(6, py(yv) - 3, fmt_tick(yv), black);
    }
    cv.line(ml, py(0), W - mr, py(0), black);
    cv.line(ml, py(0), ml, py(1), black);
    cv.text(6, 8, "MAP@0.5", black);

    const char* names[3] = {"SMALL", "MEDIUM", "LARGE"};
    const int group_w = (W - ml - mr) / 3;
    for (int b = 0; b < 3; ++b) {
        const auto cv_clean = clean.by_name(b == 0 ? "small" : b == 1 ? "medium" : "large");
        const auto cv_obf = transformed.by_name(b == 0 ? "small" : b == 1 ? "medium" : "large");
        const int gx = ml + b * group_w;
        cv.text(gx + group_w / 2 - 18, H - mb + 10, names[b], black);
        const int bar_w = group_w / 4;
        if (cv_clean) {
            cv.fill_rect(gx + group_w / 2 - bar_w - 3, py(*cv_clean), gx + group_w / 2 - 3,
                         py(0), c_clean);
            cv.text(gx + group_w / 2 - bar_w - 3, py(*cv_clean) - 10, fmt_tick(*cv_clean), black);
        }
        if (cv_obf) {
            cv.fill_rect(gx + group_w / 2 + 3, py(*cv_obf), gx + group_w / 2 + bar_w + 3, py(0),
                         c_obf);
            cv.text(gx + group_w / 2 + 3, py(*cv_obf) - 10, fmt_tick(*cv_obf), black);
        }
        if (!cv_clean && !cv_obf) cv.text(gx + group_w / 2 - 12, py(0.5), "N/A", black);
    }
    cv.fill_rect(ml + 8, mt, ml + 20, mt + 10, c_clean);
    cv.text(ml + 24, mt, "CLEAN", black);
    cv.fill_rect(ml + 88, mt, ml + 100, mt + 10, c_obf);
    cv.text(ml + 104, mt, "OBFUSCATED", black);
    cv.save_png(path_prefix + ".png");

    std::ofstream svg(path_prefix + ".svg");
    require(svg.good(), "emit_size_plot: cannot write '", path_prefix, ".svg'");
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int b = 0; b < 3; ++b) {
        const auto v_clean = clean.by_name(b == 0 ? "small" : b == 1 ? "medium" : "large");
        const auto v_obf = transformed.by_name(b == 0 ? "small" : b == 1 ? "medium" : "large");
        const int gx = ml + b * group_w;
        const int bar_w = group_w / 4;
        if (v_clean)
            svg << "<rect x=\"" << gx + group_w / 2 - bar_w - 3 << "\" y=\"" << py(*v_clean)
                << "\" width=\"" << bar_w << "\" height=\"" << py(0) - py(*v_clean)
                << "\" fill=\"#78a0d7\"/>\n";
        if (v_obf)
            svg << "<rect x=\"" << gx + group_w / 2 + 3 << "\" y=\"" << py(*v_obf)
                << "\" width=\"" << bar_w << "\" height=\"" << py(0) - py(*v_obf)
                << "\" fill=\"#009646\"/>\n";
        svg << "<text x=\"" << gx + group_w / 2 - 22 << "\" y=\"" << H - mb + 18
            << "\" font-family=\"monospace\" font-size=\"12\">" << names[b] << "</text>\n";
    }
    svg << "<line x1=\"" << ml << "\" y1=\"" << py(0) << "\" x2=\"" << W - mr << "\" y2=\""
        << py(0) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << py(0) << "\" x2=\"" << ml << "\" y2=\"" << py(1)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"4\" y=\"14\" font-family=\"monospace\" font-size=\"12\">mAP@0.5 clean "
           "(blue) vs obfuscated (green)</text>\n"
        << "</svg>\n";
    require(svg.good(), "emit_size_plot: write failure");
}

} // namespace veil
