#pragma once

#include "netdecode/runner.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace netdecode {

namespace detail {

inline std::string opt_str(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("undefined");
}

inline std::string hp_field(const HyperParams& hp, Learner l, int which) {
    switch (which) {
        case 0: return l == Learner::linear_svc || l == Learner::nu_svr ? format_double(hp.C) : "";
        case 1: return l == Learner::nu_svr ? format_double(hp.nu) : "";
        case 2:
            return l == Learner::elastic_net_regression || l == Learner::elastic_net_classifier
                       ? format_double(hp.alpha)
                       : "";
        default:
            return l == Learner::elastic_net_regression || l == Learner::elastic_net_classifier
                       ? format_double(hp.lambda)
                       : "";
    }
}

inline void export_metrics_csv(const BundleEntry& e, const RunConfig& cfg,
                               const std::filesystem::path& dir) {
    CsvWriter w(dir / "metrics.csv");
    w.row({"model", "metric", "value"});
    for (const auto& m : e.models) {
        w.row({m.name, "n", std::to_string(e.y.size())});
        if (m.cm) {
            w.row({m.name, "tp", std::to_string(m.cm->tp)});
            w.row({m.name, "fp", std::to_string(m.cm->fp)});
            w.row({m.name, "fn", std::to_string(m.cm->fn)});
            w.row({m.name, "tn", std::to_string(m.cm->tn)});
            w.row({m.name, "accuracy", format_double(m.cls->accuracy)});
            w.row({m.name, "error", format_double(m.cls->error)});
            w.row({m.name, "precision", opt_str(m.cls->precision)});
            w.row({m.name, "recall", opt_str(m.cls->recall)});
            w.row({m.name, "specificity", opt_str(m.cls->specificity)});
            w.row({m.name, "f1", opt_str(m.cls->f1)});
            w.row({m.name, "mcc", format_double(m.cls->mcc)});
            w.row({m.name, "roc_auc", format_double(m.roc->auc)});
            w.row({m.name, "pr_auc", format_double(m.pr->auc)});
            w.row({m.name, "auc_parametric_p", opt_str(m.auc_parametric_p)});
        }
        if (m.reg) {
            w.row({m.name, "r_squared", opt_str(m.reg->r_squared)});
            w.row({m.name, "rae", opt_str(m.reg->rae)});
            w.row({m.name, "rmse", format_double(m.reg->rmse)});
            w.row({m.name, "nrmse", format_double(m.reg->nrmse)});
            w.row({m.name, "rse", opt_str(m.reg->rse)});
            w.row({m.name, "mae", format_double(m.reg->mae)});
        }
        if (m.metric_permutation_p)
            w.row({m.name, null_metric_name(cfg.significance.null_metric) + "_permutation_p",
                   format_double(*m.metric_permutation_p)});
    }
}

inline void export_predictions_csv(const BundleEntry& e, const std::filesystem::path& dir) {
    CsvWriter w(dir / "predictions.csv");
    w.row({"model", "subject_id", "fold", "actual", "decision_value", "predicted"});
    for (const auto& m : e.models) {
        for (std::size_t s = 0; s < e.design.subjects.size(); ++s) {
            w.row({m.name, e.design.subjects[s], std::to_string(m.cv.fold_of[s] + 1),
                   format_double(e.y[s]), format_double(m.cv.decision_values[s]),
                   format_double(m.cv.predicted[s])});
        }
    }
}

inline void export_weights_csv(const BundleEntry& e, const std::filesystem::path& dir) {
    CsvWriter w(dir / "weights.csv");
    w.row({"model", "feature", "kind", "weight", "undefined_folds", "parametric_p",
           "permutation_p", "corrected_p", "significant"});
    for (const auto& m : e.models) {
        for (std::size_t j = 0; j < m.weights.weights.size(); ++j) {
            const auto& fw = m.weights.weights[j];
            w.row({m.name, fw.name, feature_kind_name(m.feature_kinds[j]),
                   opt_str(fw.weight), std::to_string(fw.undefined_folds),
                   opt_str(fw.parametric_p), opt_str(fw.permutation_p), opt_str(fw.corrected_p),
                   fw.significant ? "true" : "false"});
        }
    }
}

inline void export_fold_csvs(const BundleEntry& e, const RunConfig& cfg,
                             const std::filesystem::path& dir) {
    {
        CsvWriter w(dir / "cv_folds.csv");
        w.row({"model", "fold", "C", "nu", "alpha", "lambda", "n_selected_features",
               "iterations", "converged"});
        for (const auto& m : e.models) {
            for (std::size_t f = 0; f < m.cv.folds.size(); ++f) {
                const auto& fr = m.cv.folds[f];
                w.row({m.name, std::to_string(f + 1), hp_field(fr.params, cfg.learner, 0),
                       hp_field(fr.params, cfg.learner, 1), hp_field(fr.params, cfg.learner, 2),
                       hp_field(fr.params, cfg.learner, 3), std::to_string(fr.selected.size()),
                       std::to_string(fr.model.iterations),
                       fr.model.converged ? "true" : "false"});
            }
        }
    }
    {
        CsvWriter w(dir / "fold_features.csv");
        w.row({"model", "fold", "feature"});
        for (const auto& m : e.models)
            for (std::size_t f = 0; f < m.cv.folds.size(); ++f)
                for (const auto c : m.cv.folds[f].selected)
                    w.row({m.name, std::to_string(f + 1), m.feature_names[c]});
    }
    {
        CsvWriter w(dir / "fold_models.csv");
        w.row({"model", "fold", "term", "value"});
        for (const auto& m : e.models) {
            for (std::size_t f = 0; f < m.cv.folds.size(); ++f) {
                const auto& fr = m.cv.folds[f];
                w.row({m.name, std::to_string(f + 1), "(intercept)",
                       format_double(fr.model.b)});
                for (std::size_t k = 0; k < fr.selected.size(); ++k)
                    w.row({m.name, std::to_string(f + 1), m.feature_names[fr.selected[k]],
                           format_double(fr.model.w[k])});
            }
        }
    }
}

inline void export_curve_csv(const BundleEntry& e, bool roc, const std::filesystem::path& dir) {
    CsvWriter w(dir / (roc ? "roc.csv" : "pr.csv"));
    w.row({"model", "threshold", "x", "y"});
    for (const auto& m : e.models) {
        const auto& curve = roc ? m.roc : m.pr;
        if (!curve) continue;
        // the first point sits above every score: no finite threshold
        w.row({m.name, "inf", format_double(curve->x[0]), format_double(curve->y[0])});
        for (std::size_t i = 0; i < curve->thresholds.size(); ++i)
            w.row({m.name, format_double(curve->thresholds[i]), format_double(curve->x[i + 1]),
                   format_double(curve->y[i + 1])});
    }
}

inline void export_residuals_csv(const BundleEntry& e, const std::filesystem::path& dir) {
    CsvWriter w(dir / "residuals.csv");
    w.row({"model", "subject_id", "actual", "predicted", "standardized_residual"});
    for (const auto& m : e.models) {
        if (m.std_residuals.empty()) continue;
        for (std::size_t s = 0; s < e.design.subjects.size(); ++s)
            w.row({m.name, e.design.subjects[s], format_double(e.y[s]),
                   format_double(m.cv.predicted[s]), format_double(m.std_residuals[s])});
    }
}

inline void export_null_csv(const ModelReport& m, const std::filesystem::path& path) {
    CsvWriter w(path);
    std::vector<std::string> header{"permutation", m.permutation->metric_null.metric};
    for (const auto& name : m.feature_names) header.push_back("w_" + name);
    w.row(header);
    const auto& nulls = *m.permutation;
    for (std::size_t b = 0; b < nulls.metric_null.samples.size(); ++b) {
        std::vector<std::string> row{std::to_string(b + 1),
                                     format_double(nulls.metric_null.samples[b])};
        for (std::size_t j = 0; j < nulls.weight_nulls.cols(); ++j) {
            const double v = nulls.weight_nulls(b, j);
            row.push_back(std::isnan(v) ? "undefined" : format_double(v));
        }
        w.row(row);
    }
}

} // namespace detail

/// Writes every per-entry CSV plus the loadable config snapshot. Numeric
/// cells use the shortest round-trip decimal form, so identical runs yield
/// byte-identical files.
inline void export_results(const ResultBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream snap(dir / "config_snapshot.json");
        if (!snap) throw Error("cannot write config snapshot in " + dir.string());
        snap << config_to_json(bundle.config).dump(2) << '\n';
    }
    for (const auto& e : bundle.entries) {
        if (e.failed) continue;
        const auto edir = dir / e.dir_name();
        std::filesystem::create_directories(edir);
        detail::export_metrics_csv(e, bundle.config, edir);
        detail::export_predictions_csv(e, edir);
        detail::export_weights_csv(e, edir);
        detail::export_fold_csvs(e, bundle.config, edir);
        const bool classification = task_of(bundle.config.learner) == Task::classification;
        if (classification) {
            detail::export_curve_csv(e, true, edir);
            detail::export_curve_csv(e, false, edir);
        } else {
            detail::export_residuals_csv(e, edir);
        }
        for (const auto& m : e.models) {
            if (!m.permutation) continue;
            detail::export_null_csv(m, edir / (m.name == "full"
                                                   ? "null_distribution.csv"
                                                   : "null_distribution_nuisance.csv"));
        }
    }
}

/// Renders the per-entry SVG figures; returns log lines for skipped plots.
inline std::vector<std::string> render_plots(const ResultBundle& bundle,
                                             const std::filesystem::path& dir) {
    std::vector<std::string> log;
    for (const auto& e : bundle.entries) {
        if (e.failed) continue;
        const auto edir = dir / e.dir_name();
        std::filesystem::create_directories(edir);
        const ModelReport& full = e.models.front();
        const ModelReport* nuisance = e.models.size() > 1 ? &e.models[1] : nullptr;

        if (full.cm) plot::confusion_plot(*full.cm, edir / "confusion.svg");
        if (full.roc) plot::curve_plot(*full.roc, edir / "roc.svg");
        if (full.pr) plot::curve_plot(*full.pr, edir / "pr.svg");
        plot::weights_plot(full.weights.weights, edir / "weights.svg");

        if (full.reg) {
            plot::scatter_plot(e.y, full.cv.predicted,
                               nuisance ? std::span<const double>(nuisance->cv.predicted)
                                        : std::span<const double>(),
                               full.reg->r_squared, edir / "scatter.svg");
            if (!full.std_residuals.empty())
                plot::residuals_plot(full.cv.predicted, full.std_residuals,
                                     edir / "residuals.svg");
            else
                log.push_back(e.dir_name() + ": residuals plot skipped (zero residual variance)");
        }
        if (full.permutation) {
            plot::null_histogram_plot(full.permutation->metric_null,
                                      nuisance && nuisance->permutation
                                          ? &nuisance->permutation->metric_null
                                          : nullptr,
                                      edir / "null_histogram.svg");
        } else if (bundle.config.significance.n_permutations > 0) {
            log.push_back(e.dir_name() + ": null histogram skipped (no permutation output)");
        }
    }
    return log;
}

/// Run-level metadata: config snapshot, seeds, version, per-entry status,
/// timings and notes. Timings live here (and only here) so the CSV outputs
/// stay byte-stable across reruns.
inline void write_run_metadata(const ResultBundle& bundle, const std::filesystem::path& dir,
                               const std::vector<std::string>& extra_notes = {}) {
    nlohmann::json j;
    j["version"] = version;
    j["config"] = config_to_json(bundle.config);
    j["seeds"]["run"] = bundle.config.seed;
    j["seeds"]["cv"] = bundle.config.cv.seed;
    j["seeds"]["permute"] = bundle.config.significance.permute_seed;
    if (bundle.config.significance.fast_permutation)
        j["permutation_mode"] = "fast (approximate: observed per-fold winners reused)";
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& e : bundle.entries) {
        nlohmann::json je;
        je["outcome"] = e.outcome;
        je["threshold"] = e.threshold ? e.threshold->tag() : "none";
        je["directory"] = e.dir_name();
        je["status"] = e.failed ? "failed" : "ok";
        if (e.failed) je["error"] = e.error;
        je["seconds"] = e.seconds;
        if (!e.notes.empty()) je["notes"] = e.notes;
        if (!e.failed) {
            for (const auto& m : e.models)
                if (m.permutation && m.permutation->redraws > 0)
                    je["permutation_redraws_" + m.name] = m.permutation->redraws;
        }
        entries.push_back(je);
    }
    if (!bundle.notes.empty()) j["notes"] = bundle.notes;
    if (!extra_notes.empty()) j["plot_log"] = extra_notes;
    std::ofstream out(dir / "run_metadata.json");
    if (!out) throw Error("cannot write run metadata in " + dir.string());
    out << j.dump(2) << '\n';
}

} // namespace netdecode
