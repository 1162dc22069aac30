#pragma once

#include "netdecode/core.hpp"
#include "netdecode/graph.hpp"
#include "netdecode/ingest.hpp"
#include "netdecode/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace netdecode {

enum class FeatureKind { graph_measure, edge, additional, nuisance };

inline std::string feature_kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::graph_measure: return "graph_measure";
        case FeatureKind::edge: return "edge";
        case FeatureKind::additional: return "additional";
        case FeatureKind::nuisance: return "nuisance";
    }
    return "";
}

/// Subjects x features table. Nuisance columns, when present, are contiguous
/// at the end. `dropped` lists subjects removed for missing selected values.
struct DesignMatrix {
    Matrix X;
    std::vector<std::string> feature_names;
    std::vector<FeatureKind> feature_kinds;
    std::vector<std::string> subjects;
    std::vector<std::pair<std::string, std::string>> dropped;
    std::vector<std::string> notes; // label encodings, edge-loss records

    std::size_t n_nuisance() const {
        return static_cast<std::size_t>(
            std::count(feature_kinds.begin(), feature_kinds.end(), FeatureKind::nuisance));
    }
    std::vector<std::size_t> nuisance_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < feature_kinds.size(); ++j)
            if (feature_kinds[j] == FeatureKind::nuisance) idx.push_back(j);
        return idx;
    }
};

/// Which feature sources populate the design matrix (any combination of the
/// three, plus nuisance columns appended last).
struct FeatureSpec {
    bool use_graph_measures = false;
    std::vector<GraphMeasure> measures;
    bool use_edges = false;
    std::vector<std::string> additional;
    std::vector<std::string> nuisance;
};

/// Per-column Z-score statistics fit on training rows only.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds; // sample std, divisor n-1
    std::vector<bool> constant_mask;
};

/// Univariate association ranking: absolute Pearson correlation with the
/// outcome, descending, ties by ascending feature index.
struct FeatureRanking {
    std::vector<double> scores;
    std::vector<std::size_t> order;
};

namespace detail {

inline double encode_binary(const VariableColumn& col, std::size_t row) {
    // first-seen label in file order -> -1, second -> +1
    return col.labels[row] == col.levels[0] ? -1.0 : 1.0;
}

} // namespace detail

/// Extracts the outcome vector from an aligned cohort. Binary categorical
/// outcomes are encoded -1/+1 by first-seen label order; the mapping is
/// appended to `notes` when provided.
inline std::vector<double> extract_outcome(const AlignedCohort& cohort,
                                           std::vector<std::string>* notes = nullptr) {
    const VariableColumn* col = cohort.sheet.find(cohort.outcome_column);
    if (!col) throw Error("outcome column '" + cohort.outcome_column + "' missing from cohort");
    std::vector<double> y(cohort.subjects.size());
    if (col->type == VariableColumn::Type::categorical) {
        if (col->levels.size() != 2)
            throw Error("categorical outcome '" + col->name + "' must have exactly two levels");
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = detail::encode_binary(*col, i);
        if (notes)
            notes->push_back("outcome encoding: '" + col->levels[0] + "' -> -1, '" +
                             col->levels[1] + "' -> +1");
    } else {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = col->numbers[i];
    }
    return y;
}

inline bool outcome_is_binary(const AlignedCohort& cohort) {
    const VariableColumn* col = cohort.sheet.find(cohort.outcome_column);
    return col && col->type == VariableColumn::Type::categorical;
}

/// Assembles the design matrix from the selected sources. Edge features are
/// the strict upper triangle of the raw connectivity matrix (row-major);
/// graph measures are computed on the thresholded graph; additional and
/// nuisance columns come from the variable sheet, nuisance appended last.
/// Subjects with a missing value in any selected column are dropped and
/// reported.
inline DesignMatrix assemble_design_matrix(const AlignedCohort& cohort, const FeatureSpec& spec,
                                           const std::optional<ThresholdSpec>& threshold) {
    if (!spec.use_graph_measures && !spec.use_edges && spec.additional.empty())
        throw Error("feature selection names no source");
    if (spec.use_graph_measures && spec.measures.empty())
        throw Error("graph-measure source selected but no measures named");
    if (spec.use_graph_measures && !threshold)
        throw Error("graph-measure source requires a threshold");
    if (cohort.connectivity.empty() && (spec.use_graph_measures || spec.use_edges))
        throw Error("cohort has no connectivity payload");

    const std::size_t n_subj = cohort.subjects.size();
    const std::size_t n_nodes = cohort.node_labels.size();

    // resolve sheet columns once, validating types
    struct SheetCol {
        const VariableColumn* col;
        FeatureKind kind;
    };
    std::vector<SheetCol> sheet_cols;
    const auto add_sheet_col = [&](const std::string& name, FeatureKind kind) {
        if (name == cohort.outcome_column)
            throw Error("outcome column '" + name + "' cannot be used as a feature");
        const VariableColumn* col = cohort.sheet.find(name);
        if (!col) throw Error("selected column '" + name + "' not found in variable sheet");
        if (col->type == VariableColumn::Type::categorical && col->levels.size() > 2)
            throw Error("column '" + name + "' is categorical with more than two levels");
        sheet_cols.push_back({col, kind});
    };
    for (const auto& name : spec.additional) add_sheet_col(name, FeatureKind::additional);
    for (const auto& name : spec.nuisance) add_sheet_col(name, FeatureKind::nuisance);

    DesignMatrix dm;

    // subjects with a missing selected value are dropped up front
    std::vector<std::size_t> rows;
    for (std::size_t s = 0; s < n_subj; ++s) {
        bool ok = true;
        for (const auto& sc : sheet_cols) {
            if (sc.col->missing[s]) {
                dm.dropped.emplace_back(cohort.subjects[s],
                                        "missing value in column '" + sc.col->name + "'");
                ok = false;
                break;
            }
        }
        if (ok) rows.push_back(s);
    }
    if (rows.empty()) throw Error("all subjects dropped for missing selected values");

    std::vector<std::vector<double>> columns; // one vector per feature, cohort-row order
    const auto push_column = [&](const std::string& name, FeatureKind kind,
                                 std::vector<double>&& values) {
        dm.feature_names.push_back(name);
        dm.feature_kinds.push_back(kind);
        columns.push_back(std::move(values));
    };

    if (spec.use_graph_measures) {
        std::vector<GraphMeasures> per_subject(rows.size());
        std::size_t negative_removed = 0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const Graph g = threshold_matrix(cohort.connectivity[rows[r]], threshold->rule,
                                             threshold->value, threshold->binarize);
            negative_removed += g.negative_edges_removed;
            per_subject[r] = graph_measures(g, spec.measures);
        }
        if (negative_removed)
            dm.notes.push_back("negative edges removed before thresholding: " +
                               std::to_string(negative_removed));
        const auto& first = per_subject.front();
        for (std::size_t m = 0; m < first.per_node.size(); ++m) {
            for (std::size_t node = 0; node < n_nodes; ++node) {
                std::vector<double> vals(rows.size());
                for (std::size_t r = 0; r < rows.size(); ++r)
                    vals[r] = per_subject[r].per_node[m].second[node];
                push_column(first.per_node[m].first + "_" + cohort.node_labels[node],
                            FeatureKind::graph_measure, std::move(vals));
            }
        }
        for (std::size_t m = 0; m < first.global.size(); ++m) {
            std::vector<double> vals(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r)
                vals[r] = per_subject[r].global[m].second;
            push_column(first.global[m].first, FeatureKind::graph_measure, std::move(vals));
        }
    }

    if (spec.use_edges) {
        for (std::size_t i = 0; i < n_nodes; ++i) {
            for (std::size_t j = i + 1; j < n_nodes; ++j) {
                std::vector<double> vals(rows.size());
                for (std::size_t r = 0; r < rows.size(); ++r)
                    vals[r] = cohort.connectivity[rows[r]](i, j);
                push_column("edge_" + cohort.node_labels[i] + "_" + cohort.node_labels[j],
                            FeatureKind::edge, std::move(vals));
            }
        }
    }

    for (const auto& sc : sheet_cols) {
        std::vector<double> vals(rows.size());
        const bool categorical = sc.col->type == VariableColumn::Type::categorical;
        for (std::size_t r = 0; r < rows.size(); ++r)
            vals[r] = categorical ? detail::encode_binary(*sc.col, rows[r])
                                  : sc.col->numbers[rows[r]];
        if (categorical)
            dm.notes.push_back("column '" + sc.col->name + "' encoded: '" + sc.col->levels[0] +
                               "' -> -1" +
                               (sc.col->levels.size() > 1
                                    ? ", '" + sc.col->levels[1] + "' -> +1"
                                    : ""));
        push_column(sc.col->name, sc.kind, std::move(vals));
    }

    dm.X = Matrix(rows.size(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j)
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!std::isfinite(columns[j][r]))
                throw Error("non-finite value in feature '" + dm.feature_names[j] + "'");
            dm.X(r, j) = columns[j][r];
        }
    for (const std::size_t s : rows) dm.subjects.push_back(cohort.subjects[s]);
    return dm;
}

/// Fits per-column Z-score statistics on training rows. Zero-variance
/// columns are flagged rather than fatal.
inline Scaler fit_scaler(const Matrix& X_train) {
    if (X_train.rows() < 2) throw Error("fit_scaler: need at least two training rows");
    Scaler s;
    const std::size_t p = X_train.cols();
    s.means.resize(p);
    s.stds.resize(p);
    s.constant_mask.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = X_train.col(j);
        s.means[j] = mean(col);
        const double sd = sample_std(col);
        s.constant_mask[j] = sd == 0.0;
        s.stds[j] = s.constant_mask[j] ? 1.0 : sd;
    }
    return s;
}

/// Applies training-set statistics: x' = (x - mean)/std per column.
/// Constant-flagged columns map to zero.
inline Matrix apply_scaler(const Scaler& s, const Matrix& X) {
    if (X.cols() != s.means.size())
        throw Error("apply_scaler: column count mismatch (" + std::to_string(X.cols()) + " vs " +
                    std::to_string(s.means.size()) + ")");
    Matrix out(X.rows(), X.cols());
    for (std::size_t j = 0; j < X.cols(); ++j) {
        for (std::size_t r = 0; r < X.rows(); ++r)
            out(r, j) = s.constant_mask[j] ? 0.0 : (X(r, j) - s.means[j]) / s.stds[j];
    }
    return out;
}

/// Ranks features by absolute Pearson correlation with the outcome
/// (point-biserial for -1/+1 labels). Zero-variance columns score 0.
inline FeatureRanking rank_features(const Matrix& X, std::span<const double> y) {
    if (sample_variance(y) == 0.0) throw Error("rank_features: constant outcome");
    const std::size_t p = X.cols();
    FeatureRanking r;
    r.scores.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = X.col(j);
        const auto c = pearson(col, y);
        r.scores[j] = c ? std::fabs(*c) : 0.0;
    }
    r.order.resize(p);
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
        if (r.scores[a] != r.scores[b]) return r.scores[a] > r.scores[b];
        return a < b;
    });
    return r;
}

/// Keeps the top ceil(t*p) ranked features; returned indices are ascending.
inline std::vector<std::size_t> select_top_fraction(const FeatureRanking& r, double t) {
    if (!(t > 0.0 && t <= 1.0))
        throw Error("feature fraction must be in (0,1], got " + format_double(t));
    const std::size_t p = r.order.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(t * static_cast<double>(p)));
    k = std::clamp<std::size_t>(k, 1, p);
    std::vector<std::size_t> keep(r.order.begin(), r.order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(keep.begin(), keep.end());
    return keep;
}

} // namespace netdecode
