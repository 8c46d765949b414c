#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace icedist::svg {

namespace {

constexpr double kPanelW = 480.0;
constexpr double kPanelH = 320.0;
constexpr double kLeft = 62.0, kRight = 16.0, kTop = 30.0, kBottom = 46.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::vector<double> nice_ticks(double lo, double hi) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

void draw_panel(std::ostringstream& o, const Panel& p, double ox, double oy) {
    Range xr, yr;
    for (const auto& s : p.shades) {
        for (double v : s.x) xr.add(v);
        for (double v : s.lo) yr.add(v);
        for (double v : s.hi) yr.add(v);
    }
    for (const auto& l : p.lines) {
        for (double v : l.x) xr.add(v);
        for (double v : l.y) yr.add(v);
    }
    xr.pad();
    yr.add(0.0);
    yr.pad();
    const double pw = kPanelW - kLeft - kRight, ph = kPanelH - kTop - kBottom;
    auto sx = [&](double v) { return ox + kLeft + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto sy = [&](double v) { return oy + kTop + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

    o << "<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(oy + kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double t : nice_ticks(xr.lo, xr.hi)) {
        o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(oy + kTop + ph) << "\" x2=\"" << num(sx(t))
          << "\" y2=\"" << num(oy + kTop + ph + 4) << "\" stroke=\"#333\"/>"
          << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(oy + kTop + ph + 16)
          << "\" font-size=\"10\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t : nice_ticks(yr.lo, yr.hi)) {
        o << "<line x1=\"" << num(ox + kLeft - 4) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(ox + kLeft)
          << "\" y2=\"" << num(sy(t)) << "\" stroke=\"#333\"/>"
          << "<text x=\"" << num(ox + kLeft - 6) << "\" y=\"" << num(sy(t) + 3)
          << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    o << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(oy + 18)
      << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(p.title) << "</text>\n";
    o << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(oy + kPanelH - 8)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(p.x_label) << "</text>\n";
    o << "<text transform=\"translate(" << num(ox + 14) << "," << num(oy + kTop + ph / 2)
      << ") rotate(-90)\" font-size=\"11\" text-anchor=\"middle\">" << escape(p.y_label) << "</text>\n";

    for (const auto& s : p.shades) {
        o << "<polygon fill=\"" << s.color << "\" fill-opacity=\"" << num(s.opacity) << "\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << num(sx(s.x[i])) << "," << num(sy(s.hi[i])) << " ";
        for (std::size_t i = s.x.size(); i-- > 0;) o << num(sx(s.x[i])) << "," << num(sy(s.lo[i])) << " ";
        o << "\"/>\n";
    }
    for (double v : p.vlines) {
        if (v < xr.lo || v > xr.hi) continue;
        o << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(oy + kTop) << "\" x2=\"" << num(sx(v)) << "\" y2=\""
          << num(oy + kTop + ph) << "\" stroke=\"#aa3333\" stroke-dasharray=\"4,3\"/>\n";
    }
    for (const auto& l : p.lines) {
        o << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"" << num(l.width) << "\"";
        if (l.dashed) o << " stroke-dasharray=\"6,3\"";
        o << " points=\"";
        for (std::size_t i = 0; i < l.x.size(); ++i) o << num(sx(l.x[i])) << "," << num(sy(l.y[i])) << " ";
        o << "\"/>\n";
    }
}

std::string header(double w, double h) {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << " " << num(h) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return o.str();
}

// Sequential palette from pale yellow to dark blue.
std::string colour(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255 - t * (255 - 8)));
    const int g = static_cast<int>(std::lround(247 - t * (247 - 48)));
    const int b = static_cast<int>(std::lround(185 - t * (185 - 107)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string render_panels(const std::vector<Panel>& panels, std::size_t columns) {
    columns = std::max<std::size_t>(1, std::min(columns, std::max<std::size_t>(panels.size(), 1)));
    const std::size_t rows = (panels.size() + columns - 1) / columns;
    std::ostringstream o;
    o << header(kPanelW * static_cast<double>(columns), kPanelH * static_cast<double>(std::max<std::size_t>(rows, 1)));
    for (std::size_t k = 0; k < panels.size(); ++k) {
        draw_panel(o, panels[k], kPanelW * static_cast<double>(k % columns), kPanelH * static_cast<double>(k / columns));
    }
    o << "</svg>\n";
    return o.str();
}

std::string render_heatmap(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<std::vector<double>>& values, const std::string& title,
                           const std::string& x_label, const std::string& y_label) {
    Range vr;
    for (const auto& row : values) {
        for (double v : row) vr.add(v);
    }
    vr.pad();
    const double w = kPanelW + 90.0, h = kPanelH + 40.0;
    const double pw = kPanelW - kLeft - kRight, ph = kPanelH + 40.0 - kTop - kBottom;
    std::ostringstream o;
    o << header(w, h);
    const double cw = pw / static_cast<double>(x.size());
    const double ch = ph / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            o << "<rect x=\"" << num(kLeft + static_cast<double>(j) * cw) << "\" y=\""
              << num(kTop + ph - static_cast<double>(i + 1) * ch) << "\" width=\"" << num(cw + 0.3) << "\" height=\""
              << num(ch + 0.3) << "\" fill=\"" << colour((values[i][j] - vr.lo) / (vr.hi - vr.lo)) << "\"/>\n";
        }
    }
    o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
    auto axis_ticks = [&](const std::vector<double>& v, bool horizontal) {
        const double lo = v.front(), hi = v.back();
        for (double t : nice_ticks(lo, hi)) {
            const double f = hi > lo ? (t - lo) / (hi - lo) : 0.0;
            if (horizontal) {
                const double px = kLeft + f * pw;
                o << "<text x=\"" << num(px) << "\" y=\"" << num(kTop + ph + 16)
                  << "\" font-size=\"10\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
            } else {
                const double py = kTop + ph - f * ph;
                o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py + 3)
                  << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
            }
        }
    };
    axis_ticks(x, true);
    axis_ticks(y, false);
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" << escape(title)
      << "</text>\n";
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(h - 8)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    o << "<text transform=\"translate(14," << num(kTop + ph / 2)
      << ") rotate(-90)\" font-size=\"11\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
    const double bx = kLeft + pw + 20.0;
    for (int k = 0; k < 50; ++k) {
        o << "<rect x=\"" << num(bx) << "\" y=\"" << num(kTop + ph - (k + 1) * ph / 50.0) << "\" width=\"14\" height=\""
          << num(ph / 50.0 + 0.3) << "\" fill=\"" << colour(k / 49.0) << "\"/>\n";
    }
    for (double t : nice_ticks(vr.lo, vr.hi)) {
        const double py = kTop + ph - (t - vr.lo) / (vr.hi - vr.lo) * ph;
        o << "<text x=\"" << num(bx + 18) << "\" y=\"" << num(py + 3) << "\" font-size=\"10\">" << tick_label(t)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace icedist::svg
