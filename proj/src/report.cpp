#include "dnsxray/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace dnsxray {

namespace {

const std::string kBenign = "#1e88e5";
const std::string kMalicious = "#e53935";
const std::string kAxis = "#333333";
const std::string kGrid = "#dddddd";
const std::vector<std::string> kPalette = {"#e53935", "#1e88e5", "#43a047", "#fb8c00", "#8e24aa", "#00897b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

/// Draws a frame with five ticks per axis.
void axes(Svg& svg, const Axis& x, const Axis& y, const std::string& x_label, const std::string& y_label) {
    for (int i = 0; i <= 4; ++i) {
        const double xv = x.lo + (x.hi - x.lo) * i / 4.0;
        const double yv = y.lo + (y.hi - y.lo) * i / 4.0;
        svg.line(x(xv), y.p0, x(xv), y.p1, kGrid, 0.5);
        svg.line(x.p0, y(yv), x.p1, y(yv), kGrid, 0.5);
        svg.text(x(xv), y.p0 + 14, tick_label(xv), "middle", 10);
        svg.text(x.p0 - 4, y(yv) + 3, tick_label(yv), "end", 10);
    }
    svg.line(x.p0, y.p0, x.p1, y.p0, kAxis);
    svg.line(x.p0, y.p0, x.p0, y.p1, kAxis);
    svg.text((x.p0 + x.p1) / 2, y.p0 + 30, x_label, "middle", 12);
    svg.text(x.p0 - 42, (y.p0 + y.p1) / 2, y_label, "middle", 12);
}

std::vector<std::size_t> histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        auto b = hi > lo ? static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins)) : bins / 2;
        counts[std::min(b, bins - 1)]++;
    }
    return counts;
}

} // namespace

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

Svg::Svg(double width, double height) : width_(width), height_(height) {}

void Svg::line(double x1, double y1, double x2, double y2, const std::string& stroke, double width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"/>\n";
}

void Svg::rect(double x, double y, double w, double h, const std::string& fill, double opacity) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(std::max(0.0, w)) + "\" height=\"" +
             num(std::max(0.0, h)) + "\" fill=\"" + fill + "\" fill-opacity=\"" + num(opacity) + "\"/>\n";
}

void Svg::circle(double cx, double cy, double r, const std::string& fill, double opacity) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + fill +
             "\" fill-opacity=\"" + num(opacity) + "\"/>\n";
}

void Svg::polyline(std::span<const std::pair<double, double>> points, const std::string& stroke, double width) {
    std::string pts;
    for (const auto& [x, y] : points) {
        if (!pts.empty()) pts += ' ';
        pts += num(x) + ',' + num(y);
    }
    body_ += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
             "\"/>\n";
}

void Svg::text(double x, double y, const std::string& s, const std::string& anchor, double size) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\">" + xml_escape(s) + "</text>\n";
}

std::string Svg::str() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) +
           "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + ' ' + num(height_) + "\">\n" +
           "<rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" + num(height_) + "\" fill=\"white\"/>\n" +
           body_ + "</svg>\n";
}

double Axis::operator()(double v) const {
    if (!(hi > lo)) return (p0 + p1) / 2;
    return p0 + (v - lo) / (hi - lo) * (p1 - p0);
}

std::pair<double, double> nice_range(std::span<const double> values) {
    if (values.empty()) return {0.0, 1.0};
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

std::string render_roc_svg(std::span<const std::pair<std::string, RocCurve>> curves) {
    Svg svg(480, 440);
    const Axis x{0, 1, 70, 450};
    const Axis y{0, 1, 390, 20};
    axes(svg, x, y, "false positive rate", "true positive rate");
    svg.line(x(0), y(0), x(1), y(1), "#999999", 0.8);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& [name, curve] = curves[i];
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : curve.points) pts.emplace_back(x(p.fpr), y(p.tpr));
        const auto& color = kPalette[i % kPalette.size()];
        svg.polyline(pts, color, 2.0);
        const double ly = y(0) - 20 - 16 * static_cast<double>(curves.size() - 1 - i);
        svg.rect(x(0.45), ly - 9, 12, 10, color);
        svg.text(x(0.45) + 16, ly, name + " (AUC " + num(curve.auc) + ")");
    }
    return svg.str();
}

std::string render_summary_svg(const SummaryTable& table, std::size_t top) {
    const std::size_t n = std::min(top, table.entries.size());
    const double row_h = 20, left = 190, right = 620, top_y = 30;
    Svg svg(680, top_y + row_h * static_cast<double>(n) + 60);
    double max_v = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_v = std::max(max_v, table.entries[i].mean_abs_phi);
    const Axis x{0, max_v > 0 ? max_v : 1.0, left, right};
    svg.text(left, 18, "mean |phi| (contribution to malicious score)");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = table.entries[i];
        const double yy = top_y + row_h * static_cast<double>(i);
        svg.text(left - 6, yy + 13, e.feature, "end");
        svg.rect(left, yy + 3, x(e.mean_abs_phi) - left, row_h - 6, kMalicious, 0.85);
        svg.text(x(e.mean_abs_phi) + 4, yy + 13, tick_label(e.mean_abs_phi), "start", 10);
    }
    const double base_y = top_y + row_h * static_cast<double>(n) + 4;
    svg.line(left, base_y, right, base_y, kAxis);
    for (int i = 0; i <= 4; ++i) {
        const double v = x.lo + (x.hi - x.lo) * i / 4.0;
        svg.line(x(v), base_y, x(v), base_y + 4, kAxis);
        svg.text(x(v), base_y + 16, tick_label(v), "middle", 10);
    }
    return svg.str();
}

std::string render_pdp_svg(const PdpCurve& curve, std::span<const double> grid, std::span<const double> values) {
    Svg svg(520, 420);
    std::vector<double> xs(grid.begin(), grid.end());
    xs.insert(xs.end(), values.begin(), values.end());
    const auto [x_lo, x_hi] = nice_range(xs);
    std::vector<double> ys(curve.mean_output);
    ys.push_back(curve.expected_output);
    auto [y_lo, y_hi] = nice_range(ys);
    const Axis x{x_lo, x_hi, 70, 490};
    const Axis y{y_lo, y_hi, 370, 30};
    axes(svg, x, y, curve.feature, "mean model output");

    constexpr std::size_t kBins = 30;
    const auto counts = histogram(values, x_lo, x_hi, kBins);
    const auto peak = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    const double bin_w = (x.p1 - x.p0) / kBins;
    for (std::size_t b = 0; b < kBins && peak > 0; ++b) {
        const double h = 80.0 * static_cast<double>(counts[b]) / static_cast<double>(peak);
        svg.rect(x.p0 + bin_w * static_cast<double>(b), y.p0 - h, bin_w - 1, h, "#9e9e9e", 0.35);
    }
    svg.line(x.p0, y(curve.expected_output), x.p1, y(curve.expected_output), "#757575", 0.8);
    svg.text(x.p1, y(curve.expected_output) - 4, "E[f(x)] = " + num(curve.expected_output), "end", 10);

    std::vector<std::pair<double, double>> pts;
    for (std::size_t g = 0; g < grid.size(); ++g) pts.emplace_back(x(grid[g]), y(curve.mean_output[g]));
    svg.polyline(pts, kMalicious, 2.0);
    for (const auto& [px, py] : pts) svg.circle(px, py, 2.5, kMalicious);
    svg.text(70, 18, "partial dependence of " + curve.feature);
    return svg.str();
}

std::string render_force_svg(const ForceRecord& record, std::size_t top) {
    struct Row {
        const ForceEntry* entry;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < std::min(top, record.malicious.size()); ++i) rows.push_back({&record.malicious[i]});
    for (std::size_t i = 0; i < std::min(top, record.benign.size()); ++i) rows.push_back({&record.benign[i]});

    const double row_h = 20, top_y = 50;
    Svg svg(720, top_y + row_h * static_cast<double>(rows.size()) + 40);
    double max_v = 0.0;
    for (const auto& r : rows) max_v = std::max(max_v, std::abs(r.entry->phi));
    if (max_v <= 0.0) max_v = 1.0;
    const Axis x{-max_v, max_v, 200, 680};
    svg.text(20, 18, record.domain + ": base " + num(record.base_value) + ", output " + num(record.model_output));
    svg.text(x(-max_v), 38, "toward benign", "start", 10);
    svg.text(x(max_v), 38, "toward malicious", "end", 10);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& e = *rows[i].entry;
        const double yy = top_y + row_h * static_cast<double>(i);
        svg.text(x(-max_v) - 8, yy + 13, e.feature + " = " + tick_label(e.value), "end", 10);
        const double x0 = x(std::min(0.0, e.phi)), x1 = x(std::max(0.0, e.phi));
        svg.rect(x0, yy + 3, x1 - x0, row_h - 6, e.phi < 0 ? kBenign : kMalicious, 0.9);
        svg.text(e.phi < 0 ? x0 - 3 : x1 + 3, yy + 13, tick_label(e.phi), e.phi < 0 ? "end" : "start", 9);
    }
    const double end_y = top_y + row_h * static_cast<double>(rows.size());
    svg.line(x(0), top_y - 4, x(0), end_y + 4, kAxis);
    svg.line(x.p0, end_y + 4, x.p1, end_y + 4, kAxis);
    return svg.str();
}

std::string render_pairs_svg(const std::string& x_name, const std::string& y_name, std::span<const double> xs,
                             std::span<const double> ys, std::span<const std::uint8_t> labels) {
    Svg svg(600, 600);
    const auto [x_lo, x_hi] = nice_range(xs);
    const auto [y_lo, y_hi] = nice_range(ys);
    const Axis x{x_lo, x_hi, 70, 460};
    const Axis y{y_lo, y_hi, 560, 170};
    axes(svg, x, y, x_name, y_name);

    for (std::size_t i = 0; i < xs.size(); ++i)
        svg.circle(x(xs[i]), y(ys[i]), 2.2, labels[i] ? kMalicious : kBenign, 0.5);

    constexpr std::size_t kBins = 25;
    for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::vector<double> cx, cy;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (labels[i] == cls) {
                cx.push_back(xs[i]);
                cy.push_back(ys[i]);
            }
        const auto& color = cls ? kMalicious : kBenign;
        const auto hx = histogram(cx, x_lo, x_hi, kBins);
        const auto hy = histogram(cy, y_lo, y_hi, kBins);
        const double total = std::max<double>(1.0, static_cast<double>(cx.size()));
        const double bw = (x.p1 - x.p0) / kBins, bh = (y.p0 - y.p1) / kBins;
        for (std::size_t b = 0; b < kBins; ++b) {
            const double hxv = 120.0 * static_cast<double>(hx[b]) / total;
            svg.rect(x.p0 + bw * static_cast<double>(b), 150 - hxv, bw - 1, hxv, color, 0.4);
            const double hyv = 120.0 * static_cast<double>(hy[b]) / total;
            svg.rect(x.p1 + 10, y.p0 - bh * static_cast<double>(b + 1), hyv, bh - 1, color, 0.4);
        }
    }
    svg.line(x.p0, 150, x.p1, 150, kAxis, 0.8);
    svg.line(x.p1 + 10, y.p0, x.p1 + 10, y.p1, kAxis, 0.8);
    svg.rect(480, 20, 12, 10, kBenign);
    svg.text(496, 29, "benign");
    svg.rect(480, 36, 12, 10, kMalicious);
    svg.text(496, 45, "malicious");
    return svg.str();
}

} // namespace dnsxray
