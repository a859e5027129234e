#pragma once

// Line and bar charts rendered either to SVG text or to an RGB raster
// written as PNG. Both backends draw through the same Canvas interface so
// the two outputs share layout.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "replay_bench/detail/font_data.hpp"
#include "replay_bench/errors.hpp"

namespace replay_bench::plot {

struct Color {
    std::uint8_t r = 0, g = 0, b = 0;

    std::string hex() const {
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        return buf;
    }
};

inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kGrey{150, 150, 150};
inline constexpr Color kLightGrey{225, 225, 225};
inline constexpr Color kWhite{255, 255, 255};

/// Fixed categorical palette.
inline Color palette(std::size_t i) {
    static constexpr Color colors[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
                                       {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127},
                                       {188, 189, 34},  {23, 190, 207}};
    return colors[i % std::size(colors)];
}

struct Point {
    double x = 0.0, y = 0.0;
};

enum class Anchor { start, middle, end };

class Canvas {
public:
    virtual ~Canvas() = default;
    virtual void line(Point a, Point b, Color c, double width, bool dashed, const char* css_class = nullptr) = 0;
    virtual void polyline(const std::vector<Point>& pts, Color c, double width) = 0;
    virtual void fill_polygon(const std::vector<Point>& pts, Color c, double opacity) = 0;
    virtual void fill_rect(Point top_left, double w, double h, Color c) = 0;
    /// Baseline-anchored text; `vertical` rotates it 90 degrees counter-clockwise.
    virtual void text(Point at, const std::string& s, Anchor anchor, Color c, bool vertical = false) = 0;
};

// ---------------------------------------------------------------------------
// SVG

class SvgCanvas : public Canvas {
public:
    SvgCanvas(int width, int height) : width_(width), height_(height) {}

    void line(Point a, Point b, Color c, double width, bool dashed, const char* css_class) override {
        body_ << "<line";
        if (css_class) body_ << " class=\"" << css_class << "\"";
        body_ << " x1=\"" << num(a.x) << "\" y1=\"" << num(a.y) << "\" x2=\"" << num(b.x) << "\" y2=\"" << num(b.y)
              << "\" stroke=\"" << c.hex() << "\" stroke-width=\"" << num(width) << "\"";
        if (dashed) body_ << " stroke-dasharray=\"2,3\"";
        body_ << "/>\n";
    }

    void polyline(const std::vector<Point>& pts, Color c, double width) override {
        if (pts.empty()) return;
        body_ << "<polyline fill=\"none\" stroke=\"" << c.hex() << "\" stroke-width=\"" << num(width)
              << "\" points=\"" << points(pts) << "\"/>\n";
    }

    void fill_polygon(const std::vector<Point>& pts, Color c, double opacity) override {
        if (pts.size() < 3) return;
        body_ << "<polygon fill=\"" << c.hex() << "\" fill-opacity=\"" << num(opacity) << "\" stroke=\"none\" points=\""
              << points(pts) << "\"/>\n";
    }

    void fill_rect(Point tl, double w, double h, Color c) override {
        body_ << "<rect x=\"" << num(tl.x) << "\" y=\"" << num(tl.y) << "\" width=\"" << num(w) << "\" height=\""
              << num(h) << "\" fill=\"" << c.hex() << "\"/>\n";
    }

    void text(Point at, const std::string& s, Anchor anchor, Color c, bool vertical) override {
        static const char* anchors[] = {"start", "middle", "end"};
        body_ << "<text x=\"" << num(at.x) << "\" y=\"" << num(at.y) << "\" fill=\"" << c.hex()
              << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"" << anchors[static_cast<int>(anchor)]
              << "\"";
        if (vertical) body_ << " transform=\"rotate(-90 " << num(at.x) << " " << num(at.y) << ")\"";
        body_ << ">" << escape(s) << "</text>\n";
    }

    std::string str() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
            << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

private:
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }

    static std::string points(const std::vector<Point>& pts) {
        std::string out;
        for (const auto& p : pts) out += (out.empty() ? "" : " ") + num(p.x) + "," + num(p.y);
        return out;
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char ch : s) {
            switch (ch) {
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                case '&': out += "&amp;"; break;
                case '"': out += "&quot;"; break;
                default: out += ch;
            }
        }
        return out;
    }

    int width_, height_;
    std::ostringstream body_;
};

// ---------------------------------------------------------------------------
// Raster

class RasterCanvas : public Canvas {
public:
    RasterCanvas(int width, int height)
        : width_(width), height_(height), pixels_(static_cast<std::size_t>(width * height * 3), 255) {}

    void line(Point a, Point b, Color c, double width, bool dashed, const char*) override {
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
        const int r = std::max(0, static_cast<int>(std::lround(width / 2 - 0.25)));
        for (int i = 0; i <= steps; ++i) {
            const double f = static_cast<double>(i) / steps;
            if (dashed && std::fmod(f * len, 5.0) >= 2.0) continue;
            stamp(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), r, c);
        }
    }

    void polyline(const std::vector<Point>& pts, Color c, double width) override {
        for (std::size_t i = 1; i < pts.size(); ++i) line(pts[i - 1], pts[i], c, width, false, nullptr);
        if (pts.size() == 1) line(pts[0], pts[0], c, width, false, nullptr);
    }

    /// Even-odd scanline fill with alpha blending.
    void fill_polygon(const std::vector<Point>& pts, Color c, double opacity) override {
        if (pts.size() < 3) return;
        double ymin = pts[0].y, ymax = pts[0].y;
        for (const auto& p : pts) {
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        std::vector<double> xs;
        for (int y = std::max(0, static_cast<int>(std::floor(ymin))); y <= std::min(height_ - 1, static_cast<int>(std::ceil(ymax))); ++y) {
            const double sy = y + 0.5;
            xs.clear();
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const Point& p = pts[i];
                const Point& q = pts[(i + 1) % pts.size()];
                if ((p.y <= sy && q.y > sy) || (q.y <= sy && p.y > sy))
                    xs.push_back(p.x + (sy - p.y) / (q.y - p.y) * (q.x - p.x));
            }
            std::sort(xs.begin(), xs.end());
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2)
                for (int x = static_cast<int>(std::ceil(xs[k] - 0.5)); x <= static_cast<int>(std::floor(xs[k + 1] - 0.5)); ++x)
                    blend(x, y, c, opacity);
        }
    }

    void fill_rect(Point tl, double w, double h, Color c) override {
        const int x0 = static_cast<int>(std::lround(tl.x)), y0 = static_cast<int>(std::lround(tl.y));
        const int x1 = static_cast<int>(std::lround(tl.x + w)), y1 = static_cast<int>(std::lround(tl.y + h));
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) blend(x, y, c, 1.0);
    }

    void text(Point at, const std::string& s, Anchor anchor, Color c, bool vertical) override {
        using detail::kGlyphHeight;
        using detail::kGlyphWidth;
        const int advance = kGlyphWidth;
        const int total = advance * static_cast<int>(s.size());
        const int shift = anchor == Anchor::start ? 0 : anchor == Anchor::middle ? total / 2 : total;
        const int ox = static_cast<int>(std::lround(at.x));
        const int oy = static_cast<int>(std::lround(at.y));
        for (std::size_t i = 0; i < s.size(); ++i) {
            const int code = static_cast<unsigned char>(s[i]);
            if (code < 32 || code > 126) continue;
            const auto& glyph = detail::kGlyphs[code - 32];
            for (int gy = 0; gy < kGlyphHeight; ++gy)
                for (int gx = 0; gx < kGlyphWidth; ++gx) {
                    if (!((glyph[gy] >> (kGlyphWidth - 1 - gx)) & 1)) continue;
                    // glyph row kGlyphHeight - 3 sits on the baseline
                    const int u = static_cast<int>(i) * advance + gx - shift;
                    const int v = gy - (kGlyphHeight - 3);
                    if (vertical)
                        blend(ox + v, oy - u, c, 1.0);
                    else
                        blend(ox + u, oy + v, c, 1.0);
                }
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<std::uint8_t>& pixels() const { return pixels_; }

    void write_png(const std::filesystem::path& path) const {
        png_image image{};
        image.version = PNG_IMAGE_VERSION;
        image.width = static_cast<png_uint_32>(width_);
        image.height = static_cast<png_uint_32>(height_);
        image.format = PNG_FORMAT_RGB;
        if (!png_image_write_to_file(&image, path.c_str(), 0, pixels_.data(), 0, nullptr)) {
            const std::string msg = image.message;
            png_image_free(&image);
            throw IoError("cannot write " + path.string() + ": " + msg);
        }
    }

private:
    void blend(int x, int y, Color c, double alpha) {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
        auto* p = &pixels_[static_cast<std::size_t>((y * width_ + x) * 3)];
        const std::uint8_t src[3] = {c.r, c.g, c.b};
        for (int k = 0; k < 3; ++k)
            p[k] = static_cast<std::uint8_t>(std::lround(p[k] * (1.0 - alpha) + src[k] * alpha));
    }

    void stamp(double cx, double cy, int r, Color c) {
        const int x = static_cast<int>(std::lround(cx)), y = static_cast<int>(std::lround(cy));
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) blend(x + dx, y + dy, c, 1.0);
    }

    int width_, height_;
    std::vector<std::uint8_t> pixels_;
};

// ---------------------------------------------------------------------------
// Charts

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::vector<double> lo, hi;  // optional band, same length as x
    Color color;
};

struct LineChart {
    std::string title, xlabel, ylabel;
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    std::vector<Series> series;
    std::vector<double> boundaries;  // dotted vertical lines at these x values
};

struct BarSeries {
    std::string name;
    std::vector<double> values;  // one per category
    Color color;
};

struct BarChart {
    std::string title, xlabel, ylabel;
    std::vector<std::string> categories;
    std::vector<BarSeries> series;
    double ymax = 1.0;
};

inline constexpr int kWidth = 800;
inline constexpr int kHeight = 500;

namespace detail {

struct Frame {
    double left = 70, right = 200, top = 40, bottom = 60;
    double x0() const { return left; }
    double x1() const { return kWidth - right; }
    double y0() const { return kHeight - bottom; }  // bottom edge in pixels
    double y1() const { return top; }
};

inline std::string tick_label(double v) {
    char buf[32];
    if (std::abs(v - std::round(v)) < 1e-9)
        std::snprintf(buf, sizeof buf, "%.0f", v);
    else
        std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

inline void draw_frame(Canvas& c, const Frame& f, const std::string& title, const std::string& xlabel,
                       const std::string& ylabel) {
    c.text({(f.x0() + f.x1()) / 2, 24}, title, Anchor::middle, kBlack);
    c.text({(f.x0() + f.x1()) / 2, kHeight - 18.0}, xlabel, Anchor::middle, kBlack);
    c.text({20, (f.y0() + f.y1()) / 2}, ylabel, Anchor::middle, kBlack, true);
    c.line({f.x0(), f.y0()}, {f.x1(), f.y0()}, kBlack, 1, false);
    c.line({f.x0(), f.y0()}, {f.x0(), f.y1()}, kBlack, 1, false);
}

inline void draw_legend(Canvas& c, const Frame& f, const std::vector<std::pair<std::string, Color>>& entries) {
    double y = f.y1() + 10;
    for (const auto& [name, color] : entries) {
        c.fill_rect({f.x1() + 15, y - 8}, 18, 8, color);
        c.text({f.x1() + 40, y}, name, Anchor::start, kBlack);
        y += 18;
    }
}

}  // namespace detail

inline void render(Canvas& c, const LineChart& chart) {
    detail::Frame f;
    const double xspan = chart.xmax > chart.xmin ? chart.xmax - chart.xmin : 1.0;
    const double yspan = chart.ymax > chart.ymin ? chart.ymax - chart.ymin : 1.0;
    auto px = [&](double x) { return f.x0() + (x - chart.xmin) / xspan * (f.x1() - f.x0()); };
    auto py = [&](double y) { return f.y0() - (y - chart.ymin) / yspan * (f.y0() - f.y1()); };

    for (int i = 0; i <= 5; ++i) {
        const double v = chart.ymin + yspan * i / 5.0;
        c.line({f.x0(), py(v)}, {f.x1(), py(v)}, kLightGrey, 1, false);
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        c.text({f.x0() - 6, py(v) + 4}, buf, Anchor::end, kBlack);
    }
    for (int i = 0; i <= 5; ++i) {
        const double v = chart.xmin + xspan * i / 5.0;
        c.text({px(v), f.y0() + 18}, detail::tick_label(v), Anchor::middle, kBlack);
    }
    for (double b : chart.boundaries) c.line({px(b), f.y0()}, {px(b), f.y1()}, kGrey, 1, true, "boundary");
    detail::draw_frame(c, f, chart.title, chart.xlabel, chart.ylabel);

    std::vector<std::pair<std::string, Color>> legend;
    for (const auto& s : chart.series) {
        if (s.lo.size() == s.x.size() && s.hi.size() == s.x.size() && !s.x.empty()) {
            std::vector<Point> band;
            for (std::size_t i = 0; i < s.x.size(); ++i) band.push_back({px(s.x[i]), py(s.hi[i])});
            for (std::size_t i = s.x.size(); i-- > 0;) band.push_back({px(s.x[i]), py(s.lo[i])});
            c.fill_polygon(band, s.color, 0.2);
        }
        std::vector<Point> pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) pts.push_back({px(s.x[i]), py(s.y[i])});
        c.polyline(pts, s.color, 2);
        legend.emplace_back(s.name, s.color);
    }
    detail::draw_legend(c, f, legend);
}

inline void render(Canvas& c, const BarChart& chart) {
    detail::Frame f;
    const double ymax = chart.ymax > 0 ? chart.ymax : 1.0;
    auto py = [&](double y) { return f.y0() - y / ymax * (f.y0() - f.y1()); };
    for (int i = 0; i <= 5; ++i) {
        const double v = ymax * i / 5.0;
        c.line({f.x0(), py(v)}, {f.x1(), py(v)}, kLightGrey, 1, false);
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        c.text({f.x0() - 6, py(v) + 4}, buf, Anchor::end, kBlack);
    }
    const std::size_t k = std::max<std::size_t>(1, chart.categories.size());
    const double group = (f.x1() - f.x0()) / static_cast<double>(k);
    const double bar = group * 0.8 / static_cast<double>(std::max<std::size_t>(1, chart.series.size()));
    for (std::size_t j = 0; j < chart.categories.size(); ++j)
        c.text({f.x0() + group * (static_cast<double>(j) + 0.5), f.y0() + 18}, chart.categories[j], Anchor::middle,
               kBlack);
    std::vector<std::pair<std::string, Color>> legend;
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
        const auto& series = chart.series[s];
        for (std::size_t j = 0; j < series.values.size() && j < k; ++j) {
            const double v = std::clamp(series.values[j], 0.0, ymax);
            const double x = f.x0() + group * static_cast<double>(j) + group * 0.1 + bar * static_cast<double>(s);
            if (v > 0) c.fill_rect({x, py(v)}, bar, f.y0() - py(v), series.color);
        }
        legend.emplace_back(series.name, series.color);
    }
    detail::draw_frame(c, f, chart.title, chart.xlabel, chart.ylabel);
    detail::draw_legend(c, f, legend);
}

enum class Format { svg, png, both };

inline Format parse_format(std::string_view s) {
    if (s == "svg") return Format::svg;
    if (s == "png") return Format::png;
    if (s == "both") return Format::both;
    throw ArgumentError("unknown plot format '" + std::string(s) + "' (svg, png, both)");
}

/// Writes `<stem>.svg` and/or `<stem>.png`; returns the paths written.
template <typename Chart>
std::vector<std::filesystem::path> save(const Chart& chart, const std::filesystem::path& stem, Format format) {
    std::vector<std::filesystem::path> written;
    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    if (format != Format::png) {
        SvgCanvas svg(kWidth, kHeight);
        render(svg, chart);
        auto path = stem;
        path += ".svg";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << svg.str();
        if (!out) throw IoError("short write to " + path.string());
        written.push_back(path);
    }
    if (format != Format::svg) {
        RasterCanvas raster(kWidth, kHeight);
        render(raster, chart);
        auto path = stem;
        path += ".png";
        raster.write_png(path);
        written.push_back(path);
    }
    return written;
}

}  // namespace replay_bench::plot
