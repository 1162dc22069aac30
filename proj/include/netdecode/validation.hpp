#pragma once

#include "netdecode/features.hpp"
#include "netdecode/metrics.hpp"
#include "netdecode/parallel.hpp"
#include "netdecode/rng.hpp"
#include "netdecode/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace netdecode {

/// Cross-validation configuration. With `nested` the middle loop grid-
/// searches hyperparameters (grid_steps = N); `manual_params` bypasses the
/// middle loop entirely. `feature_fraction`, when set, turns on the inner
/// feature-selection step with relative threshold t.
struct CVConfig {
    std::size_t k_folds = 5;
    bool nested = false;
    std::size_t grid_steps = 3;
    std::optional<double> feature_fraction;
    std::uint64_t seed = 0;
    std::optional<HyperParams> manual_params;
};

struct ModelSpec {
    Learner learner = Learner::elastic_net_regression;
    CVConfig cv;
};

struct FoldAssignment {
    std::vector<std::size_t> fold_of; // 0-based fold per subject
    std::size_t k = 0;
};

/// Everything the outer loop produced for one fold; kept for audit exports
/// and the feature-weight estimates.
struct FoldResult {
    HyperParams params;
    std::vector<std::size_t> selected; // ascending column indices into the design matrix
    LinearModel model;                 // over the selected columns
    Scaler scaler;                     // fit on this fold's training rows only
    std::vector<std::size_t> test_subjects;
    std::vector<std::string> warnings;
};

/// Pooled out-of-fold predictions (exactly one per subject) plus per-fold
/// winners, selections and models.
struct CVResult {
    Task task = Task::regression;
    std::vector<double> decision_values;
    std::vector<double> predicted; // sign(value) for classification, value otherwise
    std::vector<std::size_t> fold_of;
    std::vector<FoldResult> folds;
};

/// Deterministic fold assignment: subjects are shuffled by a SplitMix64
/// sequence seeded with `seed`, then dealt round-robin; for classification
/// the deal runs class by class with a continuing fold pointer, so both the
/// total fold sizes and the per-class counts differ by at most one.
inline FoldAssignment make_folds(std::span<const double> y, std::size_t k, Task task,
                                 std::uint64_t seed) {
    const std::size_t n = y.size();
    if (k < 2) throw Error("k_folds must be >= 2");
    if (k > n) throw Error("k_folds " + std::to_string(k) + " exceeds sample count " +
                           std::to_string(n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SplitMix64 rng(seed);
    shuffle(idx, rng);

    if (task == Task::classification) {
        std::size_t n_neg = 0, n_pos = 0;
        for (double v : y) (v > 0 ? n_pos : n_neg) += 1;
        if (n_neg < k || n_pos < k)
            throw Error("each class needs at least k_folds members (have " +
                        std::to_string(n_neg) + " / " + std::to_string(n_pos) + ", k=" +
                        std::to_string(k) + ")");
        std::stable_partition(idx.begin(), idx.end(), [&](std::size_t s) { return y[s] <= 0; });
    }

    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.resize(n);
    for (std::size_t t = 0; t < n; ++t) fa.fold_of[idx[t]] = t % k;
    return fa;
}

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.front() = lo;
    v.back() = hi;
    return v;
}

} // namespace detail

/// Grid of N even steps per learner: C over log10 [1e-2, 1e3]; nu over the
/// linear grid {1/N, ..., 1} (zero excluded as degenerate); elastic net is
/// the Cartesian product of alpha (linear [0,1]) and lambda (log10
/// [1e-2, 1e3]). Points are ordered from strongest penalty to weakest so
/// that score ties resolve toward stronger regularization.
inline std::vector<HyperParams> hyperparameter_grid(Learner learner, std::size_t n_steps) {
    if (n_steps < 2) throw Error("grid steps N must be >= 2");
    std::vector<HyperParams> grid;
    switch (learner) {
        case Learner::linear_svc: {
            for (double e : detail::linspace(-2.0, 3.0, n_steps)) {
                HyperParams hp;
                hp.C = std::pow(10.0, e);
                grid.push_back(hp);
            }
            break;
        }
        case Learner::nu_svr: {
            for (std::size_t i = 1; i <= n_steps; ++i) {
                HyperParams hp;
                hp.nu = static_cast<double>(i) / static_cast<double>(n_steps);
                grid.push_back(hp);
            }
            break;
        }
        case Learner::elastic_net_regression:
        case Learner::elastic_net_classifier: {
            const auto alphas = detail::linspace(0.0, 1.0, n_steps);
            auto lambda_exp = detail::linspace(-2.0, 3.0, n_steps);
            std::reverse(lambda_exp.begin(), lambda_exp.end()); // strongest penalty first
            for (double le : lambda_exp) {
                for (double a : alphas) {
                    HyperParams hp;
                    hp.alpha = a;
                    hp.lambda = std::pow(10.0, le);
                    grid.push_back(hp);
                }
            }
            break;
        }
    }
    return grid;
}

namespace detail {

inline std::vector<std::size_t> fold_members(const FoldAssignment& fa, std::size_t fold,
                                             bool invert) {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < fa.fold_of.size(); ++s)
        if ((fa.fold_of[s] == fold) != invert) out.push_back(s);
    return out;
}

inline std::vector<double> take(std::span<const double> v, std::span<const std::size_t> idx) {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

/// Middle-loop score: pooled accuracy for classification, pooled R^2 for
/// regression. Returns -inf when nothing was pooled.
inline double pooled_score(Task task, std::span<const double> actual,
                           std::span<const double> predicted) {
    if (actual.empty()) return -std::numeric_limits<double>::infinity();
    if (task == Task::classification) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < actual.size(); ++i)
            if ((actual[i] > 0) == (predicted[i] > 0)) ++hits;
        return static_cast<double>(hits) / static_cast<double>(actual.size());
    }
    if (actual.size() < 2) return -std::numeric_limits<double>::infinity();
    const auto rm = regression_metrics(actual, predicted);
    return rm.r_squared ? *rm.r_squared : -std::numeric_limits<double>::infinity();
}

/// Grid search by K-fold CV inside one outer training split. The middle K
/// reuses the outer K, clamped so folds stay valid on the smaller split.
/// Degenerate middle folds (e.g. a single-class training split) are skipped
/// with a warning; ties go to the smallest grid index.
inline HyperParams middle_loop(const Matrix& Xtr, std::span<const double> ytr,
                               Learner learner, const CVConfig& cv, std::uint64_t mid_seed,
                               std::vector<std::string>& warnings) {
    const Task task = task_of(learner);
    std::size_t k_mid = std::min(cv.k_folds, Xtr.rows());
    if (task == Task::classification) {
        std::size_t n_neg = 0, n_pos = 0;
        for (double v : ytr) (v > 0 ? n_pos : n_neg) += 1;
        k_mid = std::min({k_mid, n_neg, n_pos});
    }
    if (k_mid < 2) throw Error("middle loop: cannot form at least two folds");

    const FoldAssignment mid_folds = make_folds(ytr, k_mid, task, mid_seed);
    const auto grid = hyperparameter_grid(learner, cv.grid_steps);

    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    bool any = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> pooled_actual, pooled_pred;
        for (std::size_t m = 0; m < k_mid; ++m) {
            const auto mtr = fold_members(mid_folds, m, true);
            const auto mte = fold_members(mid_folds, m, false);
            try {
                const Matrix Xmtr = Xtr.take_rows(mtr);
                const auto ymtr = take(ytr, mtr);
                std::vector<std::size_t> sel(Xtr.cols());
                std::iota(sel.begin(), sel.end(), std::size_t{0});
                if (cv.feature_fraction) {
                    const auto ranking = rank_features(Xmtr, ymtr);
                    sel = select_top_fraction(ranking, *cv.feature_fraction);
                }
                const LinearModel model = train(learner, Xmtr.take_cols(sel), ymtr, grid[g]);
                const Matrix Xmte = Xtr.take_rows(mte).take_cols(sel);
                const auto decisions = predict(model, Xmte);
                for (std::size_t i = 0; i < mte.size(); ++i) {
                    pooled_actual.push_back(ytr[mte[i]]);
                    pooled_pred.push_back(task == Task::classification
                                              ? predicted_label(decisions[i])
                                              : decisions[i]);
                }
            } catch (const Error& e) {
                warnings.push_back("grid point " + std::to_string(g + 1) + ", middle fold " +
                                   std::to_string(m + 1) + " skipped: " + e.what());
            }
        }
        const double score = pooled_score(task, pooled_actual, pooled_pred);
        if (std::isfinite(score) && score > best_score) {
            best_score = score;
            best = g;
            any = true;
        }
    }
    if (!any) throw Error("middle loop: every grid point failed");
    return grid[best];
}

} // namespace detail

/// Outer K-fold cross-validation with optional nested hyperparameter search
/// and inner feature selection. Per fold: fit the scaler on the training
/// rows only, resolve hyperparameters (manual > middle loop > presets),
/// re-rank features on the full training split, train, and predict the held
/// out rows. Outer folds run in parallel; results merge by fold index so
/// output is identical for any worker count. `fixed_params`, when given,
/// pins fold f to fixed_params[f] (used by the approximate permutation
/// mode).
inline CVResult run_cross_validation(const Matrix& X, std::span<const double> y,
                                     const ModelSpec& spec, std::size_t n_threads = 1,
                                     std::span<const HyperParams> fixed_params = {}) {
    const std::size_t n = X.rows();
    if (y.size() != n) throw Error("run_cross_validation: outcome length mismatch");
    const Task task = task_of(spec.learner);
    const CVConfig& cv = spec.cv;
    if (cv.feature_fraction && !(*cv.feature_fraction > 0.0 && *cv.feature_fraction <= 1.0))
        throw Error("feature fraction must be in (0,1]");
    if (!fixed_params.empty() && fixed_params.size() != cv.k_folds)
        throw Error("fixed_params must supply one entry per fold");

    const FoldAssignment folds = make_folds(y, cv.k_folds, task, cv.seed);

    CVResult result;
    result.task = task;
    result.decision_values.assign(n, 0.0);
    result.predicted.assign(n, 0.0);
    result.fold_of = folds.fold_of;
    result.folds.resize(cv.k_folds);

    parallel_for(cv.k_folds, n_threads, [&](std::size_t f) {
        FoldResult& fr = result.folds[f];
        try {
            const auto train_idx = detail::fold_members(folds, f, true);
            const auto test_idx = detail::fold_members(folds, f, false);
            fr.test_subjects = test_idx;

            const Matrix Xtr_raw = X.take_rows(train_idx);
            fr.scaler = fit_scaler(Xtr_raw);
            const Matrix Xtr = apply_scaler(fr.scaler, Xtr_raw);
            const Matrix Xte = apply_scaler(fr.scaler, X.take_rows(test_idx));
            const auto ytr = detail::take(y, train_idx);

            if (!fixed_params.empty()) fr.params = fixed_params[f];
            else if (cv.manual_params) fr.params = *cv.manual_params;
            else if (cv.nested)
                fr.params = detail::middle_loop(Xtr, ytr, spec.learner, cv,
                                                derive_seed(cv.seed, f + 1), fr.warnings);
            else fr.params = HyperParams{}; // fixed presets

            fr.selected.resize(X.cols());
            std::iota(fr.selected.begin(), fr.selected.end(), std::size_t{0});
            if (cv.feature_fraction) {
                const auto ranking = rank_features(Xtr, ytr);
                fr.selected = select_top_fraction(ranking, *cv.feature_fraction);
            }

            fr.model = train(spec.learner, Xtr.take_cols(fr.selected), ytr, fr.params);
            const auto decisions = predict(fr.model, Xte.take_cols(fr.selected));
            for (std::size_t i = 0; i < test_idx.size(); ++i) {
                result.decision_values[test_idx[i]] = decisions[i];
                result.predicted[test_idx[i]] = task == Task::classification
                                                    ? predicted_label(decisions[i])
                                                    : decisions[i];
            }
        } catch (const Error& e) {
            throw Error("outer fold " + std::to_string(f + 1) + ": " + e.what());
        }
    });
    return result;
}

inline CVResult run_cross_validation(const DesignMatrix& dm, std::span<const double> y,
                                     const ModelSpec& spec, std::size_t n_threads = 1) {
    return run_cross_validation(dm.X, y, spec, n_threads);
}

/// Full model (all columns, nuisance included) and nuisance-only model run
/// with identical fold assignments and seeds so the pair is comparable.
struct NuisancePair {
    CVResult full;
    CVResult nuisance_only;
};

inline NuisancePair run_with_nuisance(const DesignMatrix& dm, std::span<const double> y,
                                      const ModelSpec& spec, std::size_t n_threads = 1) {
    const auto nuisance_cols = dm.nuisance_indices();
    if (nuisance_cols.empty()) throw Error("run_with_nuisance: no nuisance columns in design");
    NuisancePair pair;
    pair.full = run_cross_validation(dm.X, y, spec, n_threads);
    pair.nuisance_only = run_cross_validation(dm.X.take_cols(nuisance_cols), y, spec, n_threads);
    return pair;
}

} // namespace netdecode
