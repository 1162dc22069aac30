#pragma once

#include "netdecode/metrics.hpp"
#include "netdecode/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace netdecode {

enum class Correction { none, fdr, bonferroni };
enum class NullMetric { auc, accuracy, error, r_squared };

inline std::string null_metric_name(NullMetric m) {
    switch (m) {
        case NullMetric::auc: return "auc";
        case NullMetric::accuracy: return "accuracy";
        case NullMetric::error: return "error";
        case NullMetric::r_squared: return "r_squared";
    }
    return "";
}

/// Permutation and correction settings. P = 0 disables every permutation
/// output; `fast_permutation` refits permuted runs with the observed
/// per-fold winners instead of redoing the nested search (approximate, and
/// labeled as such in the run metadata).
struct SignificanceConfig {
    std::size_t n_permutations = 0;
    double alpha = 0.05;
    Correction correction = Correction::fdr;
    std::uint64_t permute_seed = 0;
    NullMetric null_metric = NullMetric::accuracy;
    bool fast_permutation = false;
};

struct NullDistribution {
    std::string metric;
    std::vector<double> samples; // one per permutation
    double observed = 0.0;
};

struct FeatureWeight {
    std::string name;
    std::optional<double> weight; // mean fold-wise feature/prediction correlation
    std::size_t undefined_folds = 0;
    std::optional<double> parametric_p;
    std::optional<double> permutation_p;
    std::optional<double> corrected_p;
    bool significant = false;
};

struct FeatureWeightReport {
    std::vector<FeatureWeight> weights;
    Correction correction = Correction::none;
    double alpha = 0.05;
    std::string corrected_source; // which p-value column the correction ran on
};

/// Haufe-style weights: for each outer fold, the Pearson correlation between
/// the raw (unscaled) feature column and the model's decision values over
/// that fold's test subjects; the reported weight is the mean across folds.
/// Folds where either side is constant (or with fewer than 3 test subjects)
/// contribute "undefined" and are excluded from the mean.
inline std::vector<FeatureWeight> haufe_feature_weights(const CVResult& cv, const Matrix& X,
                                                        const std::vector<std::string>& names) {
    if (X.cols() != names.size()) throw Error("haufe_feature_weights: name count mismatch");
    bool any_fold_usable = false;
    for (const auto& f : cv.folds)
        if (f.test_subjects.size() >= 3) any_fold_usable = true;
    if (!any_fold_usable)
        throw Error("haufe_feature_weights: fewer than 3 test subjects in every fold");

    std::vector<FeatureWeight> out(X.cols());
    for (std::size_t j = 0; j < X.cols(); ++j) {
        out[j].name = names[j];
        double sum = 0.0;
        std::size_t defined = 0, undefined = 0;
        for (const auto& fold : cv.folds) {
            if (fold.test_subjects.size() < 3) {
                ++undefined;
                continue;
            }
            std::vector<double> feat(fold.test_subjects.size()), dec(fold.test_subjects.size());
            for (std::size_t i = 0; i < fold.test_subjects.size(); ++i) {
                feat[i] = X(fold.test_subjects[i], j);
                dec[i] = cv.decision_values[fold.test_subjects[i]];
            }
            const auto r = pearson(feat, dec);
            if (r) {
                sum += *r;
                ++defined;
            } else ++undefined;
        }
        out[j].undefined_folds = undefined;
        if (defined > 0) out[j].weight = sum / static_cast<double>(defined);
    }
    return out;
}

/// Parametric weight p-values: correlation over all pooled out-of-fold
/// (feature, decision value) pairs, t-tested with n-2 degrees of freedom.
/// |r| = 1 is clamped to 1e-300 rather than underflowing to zero.
inline void parametric_weight_p(std::vector<FeatureWeight>& weights, const CVResult& cv,
                                const Matrix& X) {
    const std::size_t n = X.rows();
    if (n < 4) throw Error("parametric_weight_p: need at least 4 subjects");
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const auto col = X.col(j);
        const auto r = pearson(col, cv.decision_values);
        if (!r) continue; // undefined correlation -> p stays undefined
        if (std::fabs(*r) >= 1.0) {
            weights[j].parametric_p = 1e-300;
            continue;
        }
        const double df = static_cast<double>(n - 2);
        const double t = *r * std::sqrt(df / (1.0 - *r * *r));
        weights[j].parametric_p = std::max(student_t_two_sided_p(t, df), 1e-300);
    }
}

/// One-sided parametric p for AUC > 0.5: normal approximation to the
/// Mann-Whitney U statistic with tie correction.
inline double parametric_auc_p(std::span<const double> actual, std::span<const double> scores) {
    detail::require_both_classes_present(actual);
    const std::size_t n = actual.size();
    // midranks
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t k = i;
        while (k < n && scores[order[k]] == scores[order[i]]) ++k;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(k)) / 2.0;
        for (std::size_t t = i; t < k; ++t) rank[order[t]] = mid;
        const double ties = static_cast<double>(k - i);
        tie_term += ties * ties * ties - ties;
        i = k;
    }
    double n_pos = 0, n_neg = 0, rank_sum_pos = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (actual[t] > 0) {
            n_pos += 1.0;
            rank_sum_pos += rank[t];
        } else n_neg += 1.0;
    }
    const double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    const double mu = n_pos * n_neg / 2.0;
    const double nn = static_cast<double>(n);
    const double var =
        n_pos * n_neg / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var <= 0.0) return 0.5; // all scores tied
    const double z = (u - mu) / std::sqrt(var);
    return 1.0 - normal_cdf(z);
}

enum class Tail { greater, less, two_sided };

/// Add-one permutation p-value: (1 + #{null at least as extreme}) / (P + 1).
/// Never exactly zero. NaN null samples count as extreme (conservative).
inline double permutation_p(double observed, std::span<const double> null_samples, Tail tail) {
    if (null_samples.empty()) throw Error("permutation_p: empty null distribution");
    const double P = static_cast<double>(null_samples.size());
    std::size_t ge = 0, le = 0;
    for (double v : null_samples) {
        if (std::isnan(v)) {
            ++ge;
            ++le;
            continue;
        }
        if (v >= observed) ++ge;
        if (v <= observed) ++le;
    }
    const double p_greater = (1.0 + static_cast<double>(ge)) / (P + 1.0);
    const double p_less = (1.0 + static_cast<double>(le)) / (P + 1.0);
    switch (tail) {
        case Tail::greater: return p_greater;
        case Tail::less: return p_less;
        case Tail::two_sided: return std::min(1.0, 2.0 * std::min(p_greater, p_less));
    }
    return 1.0;
}

/// Lower-is-better metrics (error) test with tail=less by default.
inline Tail default_tail(NullMetric m) {
    return m == NullMetric::error ? Tail::less : Tail::greater;
}

struct CorrectionResult {
    std::vector<double> adjusted;
    std::vector<bool> reject;
};

/// Bonferroni: p_adj = min(1, m p). FDR: Benjamini-Hochberg step-up with the
/// monotone cumulative-minimum adjusted p.
inline CorrectionResult correct_pvalues(std::span<const double> p, Correction method,
                                        double alpha) {
    if (p.empty()) throw Error("correct_pvalues: empty p-value list");
    const std::size_t m = p.size();
    CorrectionResult out;
    out.adjusted.resize(m);
    out.reject.assign(m, false);
    if (method == Correction::bonferroni) {
        for (std::size_t i = 0; i < m; ++i) {
            out.adjusted[i] = std::min(1.0, static_cast<double>(m) * p[i]);
            out.reject[i] = out.adjusted[i] <= alpha;
        }
        return out;
    }
    if (method == Correction::none) {
        for (std::size_t i = 0; i < m; ++i) {
            out.adjusted[i] = p[i];
            out.reject[i] = p[i] <= alpha;
        }
        return out;
    }
    // Benjamini-Hochberg
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::size_t last_reject = 0; // 1-based rank of the largest passing p
    for (std::size_t r = 1; r <= m; ++r) {
        if (p[order[r - 1]] <=
            static_cast<double>(r) / static_cast<double>(m) * alpha)
            last_reject = r;
    }
    for (std::size_t r = 1; r <= last_reject; ++r) out.reject[order[r - 1]] = true;
    double running = 1.0;
    for (std::size_t r = m; r >= 1; --r) {
        const double adj = std::min(
            1.0, static_cast<double>(m) * p[order[r - 1]] / static_cast<double>(r));
        running = std::min(running, adj);
        out.adjusted[order[r - 1]] = running;
    }
    return out;
}

/// Output of the permutation run: the model-metric null plus per-feature
/// weight nulls (row b = permutation b), and the redraw log.
struct PermutationOutput {
    NullDistribution metric_null;
    Matrix weight_nulls; // P x p, NaN where undefined
    std::size_t redraws = 0;
};

namespace detail {

inline double null_metric_value(NullMetric metric, const CVResult& cv,
                                std::span<const double> y) {
    switch (metric) {
        case NullMetric::auc:
            return roc_curve(y, cv.decision_values).auc;
        case NullMetric::accuracy:
        case NullMetric::error: {
            const auto cm = confusion_matrix(y, cv.predicted);
            const auto m = classification_metrics(cm);
            return metric == NullMetric::accuracy ? m.accuracy : m.error;
        }
        case NullMetric::r_squared: {
            const auto m = regression_metrics(y, cv.predicted);
            return m.r_squared ? *m.r_squared : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace detail

/// One model entering a shared permutation run.
struct PermutationJob {
    const Matrix* X = nullptr;
    const std::vector<std::string>* feature_names = nullptr;
    const CVResult* observed = nullptr;
};

/// Permutation test over the full pipeline for one or more models sharing
/// the same permuted outcomes (full and nuisance-only models stay
/// comparable). For each permutation the outcome vector is reshuffled
/// (features untouched) and run_cross_validation reruns with the same CV
/// seed, including the nested loops — unless fast_permutation pins each
/// job's observed per-fold winners. A permutation degenerate for any job is
/// redrawn for all of them (counted). Deterministic given permute_seed.
inline std::vector<PermutationOutput> permutation_test_multi(
    std::span<const PermutationJob> jobs, std::span<const double> y, const ModelSpec& spec,
    const SignificanceConfig& sig, std::size_t n_threads = 1) {
    if (sig.n_permutations == 0) throw Error("permutation_test: P must be >= 1");
    if (jobs.empty()) throw Error("permutation_test: no jobs");
    const std::size_t P = sig.n_permutations;

    std::vector<std::vector<HyperParams>> fixed(jobs.size());
    if (sig.fast_permutation)
        for (std::size_t k = 0; k < jobs.size(); ++k)
            for (const auto& f : jobs[k].observed->folds) fixed[k].push_back(f.params);

    std::vector<PermutationOutput> out(jobs.size());
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        out[k].metric_null.metric = null_metric_name(sig.null_metric);
        out[k].metric_null.samples.assign(P, 0.0);
        out[k].metric_null.observed =
            detail::null_metric_value(sig.null_metric, *jobs[k].observed, y);
        out[k].weight_nulls =
            Matrix(P, jobs[k].X->cols(), std::numeric_limits<double>::quiet_NaN());
    }

    std::vector<std::size_t> redraw_counts(P, 0);
    parallel_for(P, n_threads, [&](std::size_t b) {
        constexpr std::size_t max_attempts = 100;
        for (std::size_t attempt = 0;; ++attempt) {
            std::vector<double> y_perm(y.begin(), y.end());
            SplitMix64 rng(derive_seed(sig.permute_seed, b * max_attempts + attempt + 1));
            shuffle(y_perm, rng);
            try {
                for (std::size_t k = 0; k < jobs.size(); ++k) {
                    const CVResult cv =
                        run_cross_validation(*jobs[k].X, y_perm, spec, 1, fixed[k]);
                    out[k].metric_null.samples[b] =
                        detail::null_metric_value(sig.null_metric, cv, y_perm);
                    const auto weights =
                        haufe_feature_weights(cv, *jobs[k].X, *jobs[k].feature_names);
                    for (std::size_t j = 0; j < weights.size(); ++j)
                        if (weights[j].weight) out[k].weight_nulls(b, j) = *weights[j].weight;
                }
                redraw_counts[b] = attempt;
                return;
            } catch (const Error& e) {
                if (attempt + 1 >= max_attempts)
                    throw Error("permutation " + std::to_string(b + 1) +
                                " failed after redraws: " + e.what());
            }
        }
    });
    for (auto& o : out)
        for (std::size_t b = 0; b < P; ++b) o.redraws += redraw_counts[b];
    return out;
}

/// Single-model convenience wrapper.
inline PermutationOutput permutation_test(const Matrix& X,
                                          const std::vector<std::string>& feature_names,
                                          std::span<const double> y, const ModelSpec& spec,
                                          const SignificanceConfig& sig,
                                          const CVResult& observed, std::size_t n_threads = 1) {
    const PermutationJob job{&X, &feature_names, &observed};
    return permutation_test_multi({&job, 1}, y, spec, sig, n_threads).front();
}

/// Assembles the feature-weight report: Haufe weights, parametric p, and
/// (when a permutation run is supplied) two-sided permutation p per weight.
/// Correction runs on the permutation p-values when available, else on the
/// parametric ones; undefined entries are excluded from the family.
inline FeatureWeightReport build_weight_report(const CVResult& cv, const Matrix& X,
                                               const std::vector<std::string>& names,
                                               const SignificanceConfig& sig,
                                               const PermutationOutput* permutation = nullptr) {
    FeatureWeightReport report;
    report.correction = sig.correction;
    report.alpha = sig.alpha;
    report.weights = haufe_feature_weights(cv, X, names);
    parametric_weight_p(report.weights, cv, X);

    if (permutation) {
        for (std::size_t j = 0; j < report.weights.size(); ++j) {
            auto& fw = report.weights[j];
            if (!fw.weight) continue;
            const auto nulls = permutation->weight_nulls.col(j);
            fw.permutation_p = permutation_p(*fw.weight, nulls, Tail::two_sided);
        }
        report.corrected_source = "permutation";
    } else {
        report.corrected_source = "parametric";
    }

    std::vector<double> ps;
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < report.weights.size(); ++j) {
        const auto& src = permutation ? report.weights[j].permutation_p
                                      : report.weights[j].parametric_p;
        if (src) {
            ps.push_back(*src);
            idx.push_back(j);
        }
    }
    if (!ps.empty()) {
        const auto corr = correct_pvalues(ps, sig.correction, sig.alpha);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            report.weights[idx[k]].corrected_p = corr.adjusted[k];
            report.weights[idx[k]].significant = corr.reject[k];
        }
    }
    return report;
}

} // namespace netdecode
