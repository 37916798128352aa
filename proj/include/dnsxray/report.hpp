#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnsxray/explain.hpp"
#include "dnsxray/metrics.hpp"

namespace dnsxray {

/// Minimal SVG document builder. Numbers are printed with two decimals so
/// output is byte-stable.
class Svg {
public:
    Svg(double width, double height);

    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0);
    void rect(double x, double y, double w, double h, const std::string& fill, double opacity = 1.0);
    void circle(double cx, double cy, double r, const std::string& fill, double opacity = 1.0);
    void polyline(std::span<const std::pair<double, double>> points, const std::string& stroke, double width = 1.5);
    /// anchor is start, middle or end
    void text(double x, double y, const std::string& s, const std::string& anchor = "start", double size = 11.0);
    std::string str() const;

private:
    double width_;
    double height_;
    std::string body_;
};

std::string xml_escape(const std::string& s);

/// Linear map of [lo, hi] onto pixel range [p0, p1]; degenerate ranges map to
/// the middle.
struct Axis {
    double lo, hi, p0, p1;
    double operator()(double v) const;
};

/// Rounded, padded data range covering the values (or [0, 1] when empty).
std::pair<double, double> nice_range(std::span<const double> values);

std::string render_roc_svg(std::span<const std::pair<std::string, RocCurve>> curves);
std::string render_summary_svg(const SummaryTable& table, std::size_t top);
/// `values` are the background feature values in plot units for the histogram.
std::string render_pdp_svg(const PdpCurve& curve, std::span<const double> grid, std::span<const double> values);
std::string render_force_svg(const ForceRecord& record, std::size_t top);
/// Class-colored scatter with per-class marginal histograms.
std::string render_pairs_svg(const std::string& x_name, const std::string& y_name, std::span<const double> xs,
                             std::span<const double> ys, std::span<const std::uint8_t> labels);

} // namespace dnsxray
