#pragma once

#include "netdecode/core.hpp"
#include "netdecode/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace netdecode {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t total() const { return tp + fp + fn + tn; }
};

/// Curve-free classification metrics. Ratios with a 0/0 denominator are
/// reported as "undefined" (nullopt), never as silent zeros; MCC with a
/// zero denominator factor is 0 by the usual convention.
struct ClassificationMetrics {
    double accuracy = 0.0;
    double error = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> specificity;
    std::optional<double> f1;
    double mcc = 0.0;
};

struct RegressionMetrics {
    std::optional<double> r_squared; // undefined when y is constant
    std::optional<double> rae;
    std::optional<double> rse;
    double rmse = 0.0;
    double nrmse = 0.0; // normalized by the observed range of y
    double mae = 0.0;
};

/// ROC or PR curve over pooled out-of-fold predictions; one threshold per
/// distinct score, tied scores collapsed into a single step.
struct Curve {
    enum class Kind { roc, pr } kind = Kind::roc;
    std::vector<double> thresholds;
    std::vector<double> x; // FPR or recall, non-decreasing
    std::vector<double> y; // TPR or precision
    double auc = 0.0;
};

/// Counts with +1 as the positive class.
inline ConfusionMatrix confusion_matrix(std::span<const double> actual,
                                        std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw Error("confusion_matrix: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const bool pos = actual[i] > 0;
        const bool pred_pos = predicted[i] > 0;
        if (pos && pred_pos) ++cm.tp;
        else if (pos && !pred_pos) ++cm.fn;
        else if (!pos && pred_pos) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

inline ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
    const double n = static_cast<double>(cm.total());
    if (n == 0) throw Error("classification_metrics: empty input");
    ClassificationMetrics m;
    const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
    m.accuracy = (tp + tn) / n;
    m.error = 1.0 - m.accuracy;
    if (tp + fp > 0) m.precision = tp / (tp + fp);
    if (tp + fn > 0) m.recall = tp / (tp + fn);
    if (tn + fp > 0) m.specificity = tn / (tn + fp);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0)
        m.f1 = 2.0 * (*m.precision) * (*m.recall) / (*m.precision + *m.recall);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    m.mcc = denom > 0 ? (tp * tn - fp * fn) / std::sqrt(denom) : 0.0;
    return m;
}

namespace detail {

// Indices sorted by score descending, grouped into tie blocks.
inline std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

inline void require_both_classes_present(std::span<const double> actual) {
    bool pos = false, neg = false;
    for (double a : actual) (a > 0 ? pos : neg) = true;
    if (!pos || !neg) throw Error("curve needs both classes present");
}

} // namespace detail

/// Pooled-fold ROC curve: one threshold per distinct score, descending,
/// points from (0,0) to (1,1), trapezoidal AUC. Ties become a single
/// diagonal segment.
inline Curve roc_curve(std::span<const double> actual, std::span<const double> scores) {
    if (actual.size() != scores.size()) throw Error("roc_curve: length mismatch");
    detail::require_both_classes_present(actual);
    const auto order = detail::descending_order(scores);
    double n_pos = 0, n_neg = 0;
    for (double a : actual) (a > 0 ? n_pos : n_neg) += 1.0;

    Curve c;
    c.kind = Curve::Kind::roc;
    c.x.push_back(0.0);
    c.y.push_back(0.0);
    double tp = 0, fp = 0, auc = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (actual[order[i]] > 0 ? tp : fp) += 1.0;
            ++i;
        }
        const double x = fp / n_neg, y = tp / n_pos;
        auc += (x - c.x.back()) * (y + c.y.back()) / 2.0;
        c.thresholds.push_back(s);
        c.x.push_back(x);
        c.y.push_back(y);
    }
    c.auc = auc;
    return c;
}

/// Precision-recall curve over the same thresholds; trapezoidal AUC over
/// recall. Precision at zero predicted positives is 1 by convention.
inline Curve pr_curve(std::span<const double> actual, std::span<const double> scores) {
    if (actual.size() != scores.size()) throw Error("pr_curve: length mismatch");
    detail::require_both_classes_present(actual);
    const auto order = detail::descending_order(scores);
    double n_pos = 0;
    for (double a : actual)
        if (a > 0) n_pos += 1.0;

    Curve c;
    c.kind = Curve::Kind::pr;
    c.x.push_back(0.0);
    c.y.push_back(1.0);
    double tp = 0, fp = 0, auc = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (actual[order[i]] > 0 ? tp : fp) += 1.0;
            ++i;
        }
        const double recall = tp / n_pos;
        const double precision = tp / (tp + fp);
        auc += (recall - c.x.back()) * (precision + c.y.back()) / 2.0;
        c.thresholds.push_back(s);
        c.x.push_back(recall);
        c.y.push_back(precision);
    }
    c.auc = auc;
    return c;
}

inline RegressionMetrics regression_metrics(std::span<const double> y,
                                            std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw Error("regression_metrics: length mismatch");
    if (y.size() < 2) throw Error("regression_metrics: need at least two points");
    RegressionMetrics m;
    const std::size_t n = y.size();
    const double ybar = mean(y);
    double sq = 0.0, absum = 0.0, ref_sq = 0.0, ref_abs = 0.0;
    double ymin = y[0], ymax = y[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - yhat[i];
        sq += e * e;
        absum += std::fabs(e);
        ref_sq += (y[i] - ybar) * (y[i] - ybar);
        ref_abs += std::fabs(y[i] - ybar);
        ymin = std::min(ymin, y[i]);
        ymax = std::max(ymax, y[i]);
    }
    m.rmse = std::sqrt(sq / static_cast<double>(n));
    m.mae = absum / static_cast<double>(n);
    m.nrmse = ymax > ymin ? m.rmse / (ymax - ymin) : 0.0;
    if (ref_sq > 0.0) {
        m.rse = sq / ref_sq;
        m.r_squared = 1.0 - *m.rse;
    }
    if (ref_abs > 0.0) m.rae = absum / ref_abs;
    return m;
}

/// (residual - mean residual) / sample std of residuals.
inline std::vector<double> standardized_residuals(std::span<const double> y,
                                                  std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw Error("standardized_residuals: length mismatch");
    if (y.size() < 2) throw Error("standardized_residuals: need at least two points");
    std::vector<double> res(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) res[i] = y[i] - yhat[i];
    const double m = mean(res);
    const double sd = sample_std(res);
    if (sd == 0.0) throw Error("standardized_residuals: zero residual variance");
    for (auto& r : res) r = (r - m) / sd;
    return res;
}

} // namespace netdecode
