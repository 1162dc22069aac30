#pragma once

#include "netdecode/metrics.hpp"
#include "netdecode/significance.hpp"
#include "netdecode/svg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace netdecode {

namespace plot {

inline constexpr const char* full_color = "#1f77b4";     // blue: full model
inline constexpr const char* nuisance_color = "#d62728"; // red: nuisance-only model

inline std::string num(double v, int digits = 3) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// 2x2 confusion grid: actual on rows, predicted on columns; correct cells
/// green, errors red, counts with percentages underneath.
inline void confusion_plot(const ConfusionMatrix& cm, const std::filesystem::path& path) {
    SvgDocument svg(420, 360);
    const double n = static_cast<double>(cm.total());
    const double cell = 130, x0 = 110, y0 = 70;
    struct Cell {
        std::size_t count;
        int row, col;
        bool good;
        const char* label;
    };
    const Cell cells[4] = {{cm.tp, 0, 0, true, "TP"},
                           {cm.fn, 0, 1, false, "FN"},
                           {cm.fp, 1, 0, false, "FP"},
                           {cm.tn, 1, 1, true, "TN"}};
    svg.text(x0 + cell, 30, "predicted", 13, "#222", "middle");
    svg.text(x0 + cell / 2, 55, "+1", 12, "#222", "middle");
    svg.text(x0 + 1.5 * cell, 55, "-1", 12, "#222", "middle");
    svg.text(20, y0 + cell / 2, "actual +1", 12);
    svg.text(20, y0 + 1.5 * cell, "actual -1", 12);
    for (const auto& c : cells) {
        const double x = x0 + c.col * cell, y = y0 + c.row * cell;
        svg.rect(x, y, cell - 4, cell - 4, c.good ? "#2ca02c" : "#d62728", "#333", 0.75);
        svg.text(x + cell / 2 - 2, y + cell / 2 - 12, c.label + std::string(" ") +
                 std::to_string(c.count), 15, "white", "middle");
        svg.text(x + cell / 2 - 2, y + cell / 2 + 12,
                 num(100.0 * static_cast<double>(c.count) / n, 1) + "%", 13, "white", "middle");
    }
    svg.write(path);
}

inline void axes_with_labels(SvgDocument& svg, const AxisMapper& ax, const std::string& x_label,
                             const std::string& y_label) {
    svg.line(ax.left, ax.top, ax.left, ax.top + ax.plot_h, "#333");
    svg.line(ax.left, ax.top + ax.plot_h, ax.left + ax.plot_w, ax.top + ax.plot_h, "#333");
    svg.text(ax.left + ax.plot_w / 2, ax.top + ax.plot_h + 34, x_label, 12, "#222", "middle");
    svg.text(14, ax.top + ax.plot_h / 2, y_label, 12);
    svg.text(ax.left - 6, ax.top + ax.plot_h + 14, num(ax.x_min, 2), 10, "#222", "end");
    svg.text(ax.left + ax.plot_w, ax.top + ax.plot_h + 14, num(ax.x_max, 2), 10, "#222", "end");
    svg.text(ax.left - 6, ax.top + ax.plot_h, num(ax.y_min, 2), 10, "#222", "end");
    svg.text(ax.left - 6, ax.top + 10, num(ax.y_max, 2), 10, "#222", "end");
}

/// ROC (with the 0.5 diagonal) or PR curve.
inline void curve_plot(const Curve& curve, const std::filesystem::path& path) {
    const bool roc = curve.kind == Curve::Kind::roc;
    SvgDocument svg(500, 400);
    AxisMapper ax;
    ax.plot_w = 400;
    ax.plot_h = 320;
    axes_with_labels(svg, ax, roc ? "false positive rate" : "recall",
                     roc ? "true positive rate" : "precision");
    if (roc)
        svg.line(ax.x(0), ax.y(0), ax.x(1), ax.y(1), "#999", 1.0, true);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < curve.x.size(); ++i)
        pts.emplace_back(ax.x(curve.x[i]), ax.y(curve.y[i]));
    svg.polyline(pts, full_color, 2.0);
    for (std::size_t i = 0; i < curve.x.size(); ++i)
        svg.circle(ax.x(curve.x[i]), ax.y(curve.y[i]), 2.5, full_color, curve.x[i], curve.y[i]);
    svg.text(ax.left + 10, ax.top + 16, "AUC = " + num(curve.auc, 4), 13);
    svg.write(path);
}

/// Horizontal bar chart of feature weights, most positive at the top.
inline void weights_plot(const std::vector<FeatureWeight>& weights,
                         const std::filesystem::path& path) {
    std::vector<const FeatureWeight*> defined;
    for (const auto& w : weights)
        if (w.weight) defined.push_back(&w);
    std::stable_sort(defined.begin(), defined.end(),
                     [](const FeatureWeight* a, const FeatureWeight* b) {
                         return *a->weight > *b->weight;
                     });
    const double row_h = 18;
    const double height = 60 + row_h * static_cast<double>(defined.size());
    SvgDocument svg(560, height);
    double wmax = 1e-12;
    for (const auto* w : defined) wmax = std::max(wmax, std::fabs(*w->weight));
    const double x_mid = 330, half = 180;
    svg.line(x_mid, 30, x_mid, height - 20, "#999");
    for (std::size_t i = 0; i < defined.size(); ++i) {
        const double v = *defined[i]->weight;
        const double y = 40 + row_h * static_cast<double>(i);
        const double bar = v / wmax * half;
        svg.text(x_mid - half - 140, y + 4, defined[i]->name, 10, "#222");
        if (bar >= 0) svg.rect(x_mid, y - 6, bar, 12, full_color);
        else svg.rect(x_mid + bar, y - 6, -bar, 12, nuisance_color);
        if (defined[i]->significant)
            svg.text(x_mid + half + 8, y + 4, "*", 14, "#000");
    }
    svg.text(x_mid, 20, "feature weight (feature/prediction correlation)", 12, "#222", "middle");
    svg.write(path);
}

/// Null-distribution histogram with the observed value marked; bin count
/// follows the Sturges rule ceil(log2 P) + 1. A nuisance-model null, when
/// present, overlays in red.
inline void null_histogram_plot(const NullDistribution& null_full,
                                const NullDistribution* null_nuisance,
                                const std::filesystem::path& path) {
    const std::size_t P = null_full.samples.size();
    const std::size_t bins =
        static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(P)))) + 1;
    double lo = null_full.observed, hi = null_full.observed;
    const auto widen = [&](const std::vector<double>& v) {
        for (double x : v)
            if (std::isfinite(x)) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
    };
    widen(null_full.samples);
    if (null_nuisance) {
        widen(null_nuisance->samples);
        lo = std::min(lo, null_nuisance->observed);
        hi = std::max(hi, null_nuisance->observed);
    }
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const auto histogram = [&](const std::vector<double>& v) {
        std::vector<std::size_t> h(bins, 0);
        for (double x : v) {
            if (!std::isfinite(x)) continue;
            auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
            if (b >= bins) b = bins - 1;
            ++h[b];
        }
        return h;
    };
    const auto h_full = histogram(null_full.samples);
    std::vector<std::size_t> h_nui;
    if (null_nuisance) h_nui = histogram(null_nuisance->samples);
    std::size_t max_count = 1;
    for (auto c : h_full) max_count = std::max(max_count, c);
    for (auto c : h_nui) max_count = std::max(max_count, c);

    SvgDocument svg(520, 400);
    AxisMapper ax;
    ax.x_min = lo;
    ax.x_max = hi;
    ax.y_max = static_cast<double>(max_count);
    ax.plot_w = 420;
    ax.plot_h = 300;
    axes_with_labels(svg, ax, null_full.metric + " under permuted outcomes", "count");
    const double bw = ax.plot_w / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const double x = ax.left + bw * static_cast<double>(b);
        if (h_full[b]) {
            const double y = ax.y(static_cast<double>(h_full[b]));
            svg.rect(x, y, bw - 1, ax.top + ax.plot_h - y, full_color, "none", 0.6);
        }
        if (!h_nui.empty() && h_nui[b]) {
            const double y = ax.y(static_cast<double>(h_nui[b]));
            svg.rect(x, y, bw - 1, ax.top + ax.plot_h - y, nuisance_color, "none", 0.45);
        }
    }
    svg.line(ax.x(null_full.observed), ax.top, ax.x(null_full.observed), ax.top + ax.plot_h,
             full_color, 2.0, true);
    if (null_nuisance)
        svg.line(ax.x(null_nuisance->observed), ax.top, ax.x(null_nuisance->observed),
                 ax.top + ax.plot_h, nuisance_color, 2.0, true);
    svg.text(ax.left + 8, ax.top + 14, "observed " + null_full.metric + " = " +
             num(null_full.observed, 4), 12);
    svg.write(path);
}

/// Actual-vs-predicted scatter with least-squares fit line and R^2; a
/// nuisance-only series, when present, overlays in red.
inline void scatter_plot(std::span<const double> actual, std::span<const double> predicted_full,
                         std::span<const double> predicted_nuisance, // may be empty
                         std::optional<double> r_squared, const std::filesystem::path& path) {
    double lo = actual[0], hi = actual[0];
    const auto widen = [&](std::span<const double> v) {
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    };
    widen(actual);
    widen(predicted_full);
    if (!predicted_nuisance.empty()) widen(predicted_nuisance);
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.06 * (hi - lo);

    SvgDocument svg(520, 440);
    AxisMapper ax;
    ax.x_min = lo - pad;
    ax.x_max = hi + pad;
    ax.y_min = lo - pad;
    ax.y_max = hi + pad;
    ax.plot_w = 400;
    ax.plot_h = 340;
    axes_with_labels(svg, ax, "actual", "predicted");

    // least-squares fit of predicted on actual for the full model
    const double mx = mean(actual), my = mean(predicted_full);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sxy += (actual[i] - mx) * (predicted_full[i] - my);
        sxx += (actual[i] - mx) * (actual[i] - mx);
    }
    const double slope = sxx != 0 ? sxy / sxx : 0.0;
    const double icpt = my - slope * mx;
    svg.line(ax.x(ax.x_min), ax.y(icpt + slope * ax.x_min), ax.x(ax.x_max),
             ax.y(icpt + slope * ax.x_max), full_color, 1.5);

    for (std::size_t i = 0; i < actual.size(); ++i)
        svg.circle(ax.x(actual[i]), ax.y(predicted_full[i]), 3.2, full_color, actual[i],
                   predicted_full[i]);
    for (std::size_t i = 0; i < predicted_nuisance.size(); ++i)
        svg.circle(ax.x(actual[i]), ax.y(predicted_nuisance[i]), 3.2, nuisance_color, actual[i],
                   predicted_nuisance[i]);
    if (r_squared) svg.text(ax.left + 10, ax.top + 16, "R2 = " + num(*r_squared, 4), 13);
    svg.write(path);
}

/// Standardized residuals against predicted values, zero line dashed.
inline void residuals_plot(std::span<const double> predicted,
                           std::span<const double> std_residuals,
                           const std::filesystem::path& path) {
    double xlo = predicted[0], xhi = predicted[0], ylo = -1, yhi = 1;
    for (double v : predicted) {
        xlo = std::min(xlo, v);
        xhi = std::max(xhi, v);
    }
    for (double v : std_residuals) {
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
    }
    if (xhi <= xlo) xhi = xlo + 1.0;
    SvgDocument svg(520, 400);
    AxisMapper ax;
    ax.x_min = xlo;
    ax.x_max = xhi;
    ax.y_min = ylo - 0.3;
    ax.y_max = yhi + 0.3;
    ax.plot_w = 400;
    ax.plot_h = 300;
    axes_with_labels(svg, ax, "predicted", "standardized residual");
    svg.line(ax.x(ax.x_min), ax.y(0), ax.x(ax.x_max), ax.y(0), "#999", 1.0, true);
    for (std::size_t i = 0; i < predicted.size(); ++i)
        svg.circle(ax.x(predicted[i]), ax.y(std_residuals[i]), 3.0, full_color, predicted[i],
                   std_residuals[i]);
    svg.write(path);
}

} // namespace plot

} // namespace netdecode
