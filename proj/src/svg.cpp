#include "dirtensor/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dirtensor/io.hpp"

namespace dirtensor {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else if (c == '"') out += "&quot;";
        else out += c;
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Axis {
    bool log = false;
    double lo = 0, hi = 1;

    double t(double v) const { return log ? std::log10(v) : v; }
    void fit(const std::vector<double>& vals) {
        double a = std::numeric_limits<double>::infinity(), b = -a;
        for (double v : vals) {
            if (!std::isfinite(v) || (log && v <= 0)) continue;
            a = std::min(a, t(v));
            b = std::max(b, t(v));
        }
        if (!std::isfinite(a)) a = 0, b = 1;
        if (b - a < 1e-12) a -= 0.5, b += 0.5;
        const double pad = 0.05 * (b - a);
        lo = a - pad;
        hi = b + pad;
    }
    double frac(double v) const { return (t(v) - lo) / (hi - lo); }
    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            for (double e = std::ceil(lo); e <= hi; e += 1) out.push_back(std::pow(10.0, e));
            if (out.size() < 2) out = {std::pow(10.0, lo + 0.05 * (hi - lo)), std::pow(10.0, hi - 0.05 * (hi - lo))};
            return out;
        }
        const double step = std::pow(10.0, std::floor(std::log10((hi - lo) / 4)));
        const double s = (hi - lo) / step > 10 ? 2 * step : step;
        for (double v = std::ceil(lo / s) * s; v <= hi; v += s) out.push_back(std::abs(v) < 1e-12 * s ? 0.0 : v);
        return out;
    }
};

bool usable(const Axis& ax, double v) { return std::isfinite(v) && (!ax.log || v > 0); }

}  // namespace

PlotLine power_law_line(std::string label, double slope, double intercept, double x0, double x1) {
    return {std::move(label), x0, std::exp(intercept) * std::pow(x0, slope), x1,
            std::exp(intercept) * std::pow(x1, slope)};
}

std::string render_svg(const Plot& plot) {
    Axis ax{plot.log_x}, ay{plot.log_y};
    std::vector<double> xs, ys;
    for (const auto& s : plot.series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
        ys.insert(ys.end(), s.y_lo.begin(), s.y_lo.end());
        ys.insert(ys.end(), s.y_hi.begin(), s.y_hi.end());
    }
    for (const auto& l : plot.lines) {
        xs.insert(xs.end(), {l.x0, l.x1});
        ys.insert(ys.end(), {l.y0, l.y1});
    }
    ax.fit(xs);
    ay.fit(ys);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
    auto py = [&](double v) { return kTop + (1 - ay.frac(v)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << esc(plot.title) << "</text>\n";
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : ax.ticks()) {
        const double x = px(v);
        o << "<line x1=\"" << num(x) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(x) << "\" y2=\""
          << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(x) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
          << tick_label(v) << "</text>\n";
    }
    for (double v : ay.ticks()) {
        const double y = py(v);
        o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft << "\" y2=\"" << num(y)
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << tick_label(v)
          << "</text>\n";
    }
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
      << esc(plot.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << esc(plot.y_label) << "</text>\n";

    std::size_t legend = 0;
    auto legend_entry = [&](const std::string& label, const char* color) {
        const double y = kTop + 12 + 18 * static_cast<double>(legend++);
        o << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << num(y - 8) << "\" width=\"10\" height=\"10\" fill=\""
          << color << "\"/>\n";
        o << "<text x=\"" << kWidth - kRight + 28 << "\" y=\"" << num(y + 1) << "\">" << esc(label) << "</text>\n";
    };

    std::size_t ci = 0;
    for (const auto& s : plot.series) {
        const char* color = kColors[ci++ % std::size(kColors)];
        const bool bars = !s.y_lo.empty();
        if (s.connect) {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (usable(ax, s.x[i]) && usable(ay, s.y[i])) o << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
            o << "\"/>\n";
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(ax, s.x[i]) || !usable(ay, s.y[i])) continue;
            const double x = px(s.x[i]);
            if (bars && usable(ay, s.y_lo[i]) && usable(ay, s.y_hi[i]))
                o << "<line x1=\"" << num(x) << "\" y1=\"" << num(py(s.y_lo[i])) << "\" x2=\"" << num(x)
                  << "\" y2=\"" << num(py(s.y_hi[i])) << "\" stroke=\"" << color << "\"/>\n";
            o << "<circle cx=\"" << num(x) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << color
              << "\"/>\n";
        }
        if (!s.label.empty()) legend_entry(s.label, color);
    }
    for (const auto& l : plot.lines) {
        const char* color = kColors[ci++ % std::size(kColors)];
        if (!usable(ax, l.x0) || !usable(ax, l.x1) || !usable(ay, l.y0) || !usable(ay, l.y1)) continue;
        o << "<line x1=\"" << num(px(l.x0)) << "\" y1=\"" << num(py(l.y0)) << "\" x2=\"" << num(px(l.x1))
          << "\" y2=\"" << num(py(l.y1)) << "\" stroke=\"" << color << "\" stroke-dasharray=\"6,4\"/>\n";
        if (!l.label.empty()) legend_entry(l.label, color);
    }
    o << "</svg>\n";
    return o.str();
}

void write_plot(const Plot& plot, const std::string& stem) { write_plot(plot, stem + ".svg", stem + ".csv"); }

void write_plot(const Plot& plot, const std::string& svg_path, const std::string& csv_path) {
    for (const auto& s : plot.series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("series x and y differ in length");
        if (!s.y_lo.empty() && (s.y_lo.size() != s.y.size() || s.y_hi.size() != s.y.size()))
            throw std::invalid_argument("error bars must match the series length");
    }
    {
        std::ofstream svg(svg_path, std::ios::binary);
        if (!svg) throw std::runtime_error("cannot open " + svg_path);
        svg << render_svg(plot);
    }
    CsvWriter csv(csv_path, {"series", "kind", "x", "y", "y_lo", "y_hi"});
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            csv.field(s.label).field(std::string("point")).field(s.x[i]).field(s.y[i]);
            if (s.y_lo.empty()) csv.field(std::string()).field(std::string());
            else csv.field(s.y_lo[i]).field(s.y_hi[i]);
            csv.end_row();
        }
    for (const auto& l : plot.lines) {
        csv.field(l.label).field(std::string("line")).field(l.x0).field(l.y0).field(std::string()).field(std::string());
        csv.end_row();
        csv.field(l.label).field(std::string("line")).field(l.x1).field(l.y1).field(std::string()).field(std::string());
        csv.end_row();
    }
    csv.close();
}

}  // namespace dirtensor
