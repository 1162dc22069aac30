#pragma once

#include "netdecode/features.hpp"
#include "netdecode/ingest.hpp"
#include "netdecode/metrics.hpp"
#include "netdecode/plots.hpp"
#include "netdecode/significance.hpp"
#include "netdecode/synth.hpp"
#include "netdecode/validation.hpp"
#include "netdecode/version.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace netdecode {

/// Configuration problems (unknown keys, bad ranges, incompatible
/// outcome/learner pairings) — distinct from entry-level runtime failures
/// so the CLI can map them to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

struct DataPaths {
    std::filesystem::path manifest;
    std::filesystem::path variable_sheet;
    std::optional<std::filesystem::path> node_labels;
};

struct ModeConfig {
    bool dynamic = false;
    DynamicConfig dynamic_cfg;
};

/// Whole-run configuration: data, feature sources, the outcome queue, the
/// threshold sweep, the model (learner + CV + significance), outputs and
/// seeds. Parsed from a JSON file; unknown keys are hard errors.
struct RunConfig {
    DataPaths data;
    ModeConfig mode;
    FeatureSpec features;
    std::vector<std::string> outcomes;
    std::vector<ThresholdSpec> thresholds; // empty = single no-threshold entry
    Learner learner = Learner::elastic_net_regression;
    CVConfig cv;
    SignificanceConfig significance;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
    if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

inline GraphMeasure parse_measure(const std::string& s) {
    if (s == "degree") return GraphMeasure::degree;
    if (s == "strength") return GraphMeasure::strength;
    if (s == "clustering") return GraphMeasure::clustering;
    if (s == "char_path_length") return GraphMeasure::char_path_length;
    if (s == "global_efficiency") return GraphMeasure::global_efficiency;
    throw ConfigError("unknown graph measure '" + s + "'");
}

inline Learner parse_learner(const std::string& s) {
    if (s == "linear_svc") return Learner::linear_svc;
    if (s == "nu_svr") return Learner::nu_svr;
    if (s == "elastic_net_regression") return Learner::elastic_net_regression;
    if (s == "elastic_net_classifier") return Learner::elastic_net_classifier;
    throw ConfigError("unknown learner '" + s + "'");
}

inline ThresholdSpec parse_threshold(const nlohmann::json& j) {
    check_keys(j, {"rule", "value", "binarize"}, "thresholds[]");
    if (!j.contains("rule") || !j.contains("value"))
        throw ConfigError("threshold entries need 'rule' and 'value'");
    ThresholdSpec t;
    const auto rule = j.at("rule").get<std::string>();
    if (rule == "absolute") t.rule = ThresholdRule::absolute;
    else if (rule == "proportional") t.rule = ThresholdRule::proportional;
    else throw ConfigError("unknown threshold rule '" + rule + "'");
    t.value = j.at("value").get<double>();
    t.binarize = j.value("binarize", false);
    return t;
}

} // namespace detail

/// Parses and validates a run configuration. Relative paths resolve against
/// `base_dir` (the config file's directory). Seeds omitted from cv /
/// significance are derived deterministically from the run seed.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    detail::check_keys(j,
                       {"data", "mode", "features", "outcomes", "thresholds", "model",
                        "output_dir", "seed", "threads"},
                       "config root");
    RunConfig cfg;

    if (!j.contains("data")) throw ConfigError("config needs a 'data' section");
    const auto& jd = j.at("data");
    detail::check_keys(jd, {"manifest", "variable_sheet", "node_labels"}, "data");
    if (!jd.contains("manifest") || !jd.contains("variable_sheet"))
        throw ConfigError("data section needs 'manifest' and 'variable_sheet'");
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path path = p;
        return path.is_relative() ? base_dir / path : path;
    };
    cfg.data.manifest = resolve(jd.at("manifest").get<std::string>());
    cfg.data.variable_sheet = resolve(jd.at("variable_sheet").get<std::string>());
    if (jd.contains("node_labels"))
        cfg.data.node_labels = resolve(jd.at("node_labels").get<std::string>());

    if (j.contains("mode")) {
        const auto& jm = j.at("mode");
        detail::check_keys(jm, {"type", "width", "step", "summary"}, "mode");
        const auto type = jm.value("type", std::string("static"));
        if (type == "dynamic") {
            cfg.mode.dynamic = true;
            if (!jm.contains("width")) throw ConfigError("dynamic mode needs 'width'");
            cfg.mode.dynamic_cfg.width = jm.at("width").get<std::size_t>();
            cfg.mode.dynamic_cfg.step = jm.value("step", std::size_t{1});
            const auto summary = jm.value("summary", std::string("mean"));
            if (summary == "mean") cfg.mode.dynamic_cfg.summary = DynamicConfig::Summary::mean;
            else if (summary == "std") cfg.mode.dynamic_cfg.summary = DynamicConfig::Summary::std;
            else throw ConfigError("unknown dynamic summary '" + summary + "'");
            if (cfg.mode.dynamic_cfg.width < 2) throw ConfigError("window width must be >= 2");
            if (cfg.mode.dynamic_cfg.step < 1) throw ConfigError("window step must be >= 1");
        } else if (type != "static") {
            throw ConfigError("unknown mode type '" + type + "'");
        }
    }

    if (!j.contains("features")) throw ConfigError("config needs a 'features' section");
    const auto& jf = j.at("features");
    detail::check_keys(jf, {"sources", "graph_measures", "additional", "nuisance"}, "features");
    if (!jf.contains("sources")) throw ConfigError("features section needs 'sources'");
    for (const auto& s : jf.at("sources")) {
        const auto name = s.get<std::string>();
        if (name == "graph_measures") cfg.features.use_graph_measures = true;
        else if (name == "edges") cfg.features.use_edges = true;
        else if (name == "additional") {
            if (!jf.contains("additional") || jf.at("additional").empty())
                throw ConfigError("source 'additional' selected but no columns named");
        } else throw ConfigError("unknown feature source '" + name + "'");
    }
    if (jf.contains("graph_measures"))
        for (const auto& m : jf.at("graph_measures"))
            cfg.features.measures.push_back(detail::parse_measure(m.get<std::string>()));
    if (jf.contains("additional"))
        for (const auto& c : jf.at("additional"))
            cfg.features.additional.push_back(c.get<std::string>());
    if (jf.contains("nuisance"))
        for (const auto& c : jf.at("nuisance"))
            cfg.features.nuisance.push_back(c.get<std::string>());
    bool wants_additional = false;
    for (const auto& s : jf.at("sources"))
        if (s.get<std::string>() == "additional") wants_additional = true;
    if (!wants_additional) cfg.features.additional.clear();
    if (cfg.features.use_graph_measures && cfg.features.measures.empty())
        throw ConfigError("source 'graph_measures' selected but no measures named");
    if (!cfg.features.use_graph_measures && !cfg.features.use_edges &&
        cfg.features.additional.empty())
        throw ConfigError("features.sources must name at least one source");

    if (!j.contains("outcomes") || j.at("outcomes").empty())
        throw ConfigError("config needs a non-empty 'outcomes' queue");
    for (const auto& o : j.at("outcomes")) cfg.outcomes.push_back(o.get<std::string>());

    if (j.contains("thresholds"))
        for (const auto& t : j.at("thresholds")) cfg.thresholds.push_back(detail::parse_threshold(t));
    if (cfg.features.use_graph_measures && cfg.thresholds.empty())
        throw ConfigError("graph measures selected: 'thresholds' must list at least one entry");
    if (!cfg.features.use_graph_measures && !cfg.thresholds.empty())
        throw ConfigError("'thresholds' given but graph_measures is not a selected source");

    if (!j.contains("model")) throw ConfigError("config needs a 'model' section");
    const auto& jmod = j.at("model");
    detail::check_keys(jmod, {"learner", "cv", "significance"}, "model");
    if (!jmod.contains("learner")) throw ConfigError("model section needs 'learner'");
    cfg.learner = detail::parse_learner(jmod.at("learner").get<std::string>());

    if (!j.contains("seed")) throw ConfigError("config needs a 'seed'");
    cfg.seed = j.at("seed").get<std::uint64_t>();

    if (!jmod.contains("cv")) throw ConfigError("model section needs 'cv'");
    const auto& jcv = jmod.at("cv");
    detail::check_keys(jcv, {"k_folds", "nested", "grid_steps", "feature_fraction", "seed",
                             "manual"},
                       "model.cv");
    if (!jcv.contains("k_folds")) throw ConfigError("model.cv needs 'k_folds'");
    cfg.cv.k_folds = jcv.at("k_folds").get<std::size_t>();
    if (cfg.cv.k_folds < 2) throw ConfigError("k_folds must be >= 2");
    cfg.cv.nested = jcv.value("nested", false);
    cfg.cv.grid_steps = jcv.value("grid_steps", std::size_t{3});
    if (cfg.cv.nested && cfg.cv.grid_steps < 2)
        throw ConfigError("grid_steps must be >= 2 when nested");
    if (jcv.contains("feature_fraction")) {
        cfg.cv.feature_fraction = jcv.at("feature_fraction").get<double>();
        if (!(*cfg.cv.feature_fraction > 0.0 && *cfg.cv.feature_fraction <= 1.0))
            throw ConfigError("feature_fraction must be in (0,1]");
    }
    cfg.cv.seed = jcv.contains("seed") ? jcv.at("seed").get<std::uint64_t>()
                                       : derive_seed(cfg.seed, 1);
    if (jcv.contains("manual")) {
        const auto& jman = jcv.at("manual");
        detail::check_keys(jman, {"C", "nu", "alpha", "lambda"}, "model.cv.manual");
        HyperParams hp;
        if (jman.contains("C")) hp.C = jman.at("C").get<double>();
        if (jman.contains("nu")) hp.nu = jman.at("nu").get<double>();
        if (jman.contains("alpha")) hp.alpha = jman.at("alpha").get<double>();
        if (jman.contains("lambda")) hp.lambda = jman.at("lambda").get<double>();
        cfg.cv.manual_params = hp;
        if (cfg.cv.nested)
            throw ConfigError("manual hyperparameters and nested optimization are exclusive");
    }

    cfg.significance.null_metric = task_of(cfg.learner) == Task::classification
                                       ? NullMetric::auc
                                       : NullMetric::r_squared;
    if (jmod.contains("significance")) {
        const auto& js = jmod.at("significance");
        detail::check_keys(js, {"permutations", "alpha", "correction", "permute_seed",
                                "null_metric", "fast_permutation"},
                           "model.significance");
        cfg.significance.n_permutations = js.value("permutations", std::size_t{0});
        cfg.significance.alpha = js.value("alpha", 0.05);
        if (!(cfg.significance.alpha > 0.0 && cfg.significance.alpha < 1.0))
            throw ConfigError("alpha must be in (0,1)");
        const auto corr = js.value("correction", std::string("fdr"));
        if (corr == "none") cfg.significance.correction = Correction::none;
        else if (corr == "fdr") cfg.significance.correction = Correction::fdr;
        else if (corr == "bonferroni") cfg.significance.correction = Correction::bonferroni;
        else throw ConfigError("unknown correction '" + corr + "'");
        if (js.contains("null_metric")) {
            const auto nm = js.at("null_metric").get<std::string>();
            if (nm == "auc") cfg.significance.null_metric = NullMetric::auc;
            else if (nm == "accuracy") cfg.significance.null_metric = NullMetric::accuracy;
            else if (nm == "error") cfg.significance.null_metric = NullMetric::error;
            else if (nm == "r_squared") cfg.significance.null_metric = NullMetric::r_squared;
            else throw ConfigError("unknown null_metric '" + nm + "'");
            const bool classif = task_of(cfg.learner) == Task::classification;
            if (classif && cfg.significance.null_metric == NullMetric::r_squared)
                throw ConfigError("null_metric r_squared needs a regression learner");
            if (!classif && cfg.significance.null_metric != NullMetric::r_squared)
                throw ConfigError("classification null metrics need a classification learner");
        }
        cfg.significance.permute_seed = js.contains("permute_seed")
                                            ? js.at("permute_seed").get<std::uint64_t>()
                                            : derive_seed(cfg.seed, 2);
        cfg.significance.fast_permutation = js.value("fast_permutation", false);
    } else {
        cfg.significance.permute_seed = derive_seed(cfg.seed, 2);
    }

    if (!j.contains("output_dir")) throw ConfigError("config needs 'output_dir'");
    cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    cfg.threads = j.value("threads", std::size_t{1});
    if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, std::filesystem::absolute(path).parent_path());
}

/// Canonical JSON form of the parsed config; loading and rerunning this
/// snapshot reproduces the run byte for byte (all derived seeds are
/// materialized).
inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["data"]["manifest"] = cfg.data.manifest.string();
    j["data"]["variable_sheet"] = cfg.data.variable_sheet.string();
    if (cfg.data.node_labels) j["data"]["node_labels"] = cfg.data.node_labels->string();
    if (cfg.mode.dynamic) {
        j["mode"]["type"] = "dynamic";
        j["mode"]["width"] = cfg.mode.dynamic_cfg.width;
        j["mode"]["step"] = cfg.mode.dynamic_cfg.step;
        j["mode"]["summary"] =
            cfg.mode.dynamic_cfg.summary == DynamicConfig::Summary::mean ? "mean" : "std";
    } else {
        j["mode"]["type"] = "static";
    }
    auto& sources = j["features"]["sources"] = nlohmann::json::array();
    if (cfg.features.use_graph_measures) sources.push_back("graph_measures");
    if (cfg.features.use_edges) sources.push_back("edges");
    if (!cfg.features.additional.empty()) sources.push_back("additional");
    if (!cfg.features.measures.empty()) {
        auto& ms = j["features"]["graph_measures"] = nlohmann::json::array();
        for (const auto m : cfg.features.measures) ms.push_back(measure_name(m));
    }
    if (!cfg.features.additional.empty()) j["features"]["additional"] = cfg.features.additional;
    if (!cfg.features.nuisance.empty()) j["features"]["nuisance"] = cfg.features.nuisance;
    j["outcomes"] = cfg.outcomes;
    if (!cfg.thresholds.empty()) {
        auto& ts = j["thresholds"] = nlohmann::json::array();
        for (const auto& t : cfg.thresholds) {
            nlohmann::json jt;
            jt["rule"] = t.rule == ThresholdRule::absolute ? "absolute" : "proportional";
            jt["value"] = t.value;
            jt["binarize"] = t.binarize;
            ts.push_back(jt);
        }
    }
    j["model"]["learner"] = learner_name(cfg.learner);
    j["model"]["cv"]["k_folds"] = cfg.cv.k_folds;
    j["model"]["cv"]["nested"] = cfg.cv.nested;
    j["model"]["cv"]["grid_steps"] = cfg.cv.grid_steps;
    if (cfg.cv.feature_fraction) j["model"]["cv"]["feature_fraction"] = *cfg.cv.feature_fraction;
    j["model"]["cv"]["seed"] = cfg.cv.seed;
    if (cfg.cv.manual_params) {
        j["model"]["cv"]["manual"]["C"] = cfg.cv.manual_params->C;
        j["model"]["cv"]["manual"]["nu"] = cfg.cv.manual_params->nu;
        j["model"]["cv"]["manual"]["alpha"] = cfg.cv.manual_params->alpha;
        j["model"]["cv"]["manual"]["lambda"] = cfg.cv.manual_params->lambda;
    }
    j["model"]["significance"]["permutations"] = cfg.significance.n_permutations;
    j["model"]["significance"]["alpha"] = cfg.significance.alpha;
    j["model"]["significance"]["correction"] =
        cfg.significance.correction == Correction::none
            ? "none"
            : (cfg.significance.correction == Correction::fdr ? "fdr" : "bonferroni");
    j["model"]["significance"]["permute_seed"] = cfg.significance.permute_seed;
    j["model"]["significance"]["null_metric"] = null_metric_name(cfg.significance.null_metric);
    j["model"]["significance"]["fast_permutation"] = cfg.significance.fast_permutation;
    j["output_dir"] = cfg.output_dir.string();
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    return j;
}

/// Everything computed for one model (full or nuisance-only) of one entry.
struct ModelReport {
    std::string name; // "full" or "nuisance_only"
    std::vector<std::string> feature_names;
    std::vector<FeatureKind> feature_kinds;
    CVResult cv;
    std::optional<ConfusionMatrix> cm;
    std::optional<ClassificationMetrics> cls;
    std::optional<Curve> roc;
    std::optional<Curve> pr;
    std::optional<double> auc_parametric_p;
    std::optional<RegressionMetrics> reg;
    std::vector<double> std_residuals; // empty when undefined
    std::optional<PermutationOutput> permutation;
    std::optional<double> metric_permutation_p;
    FeatureWeightReport weights;
};

struct BundleEntry {
    std::string outcome;
    std::optional<ThresholdSpec> threshold;
    bool failed = false;
    std::string error;
    DesignMatrix design;
    std::vector<double> y;
    std::vector<ModelReport> models;
    std::vector<std::string> notes;
    double seconds = 0.0;

    std::string dir_name() const {
        return outcome + "__" + (threshold ? threshold->tag() : std::string("none"));
    }
};

struct ResultBundle {
    RunConfig config;
    std::vector<BundleEntry> entries;
    std::vector<std::string> notes;

    bool any_failed() const {
        for (const auto& e : entries)
            if (e.failed) return true;
        return false;
    }
};

namespace detail {

inline void compute_model_report(ModelReport& mr, const Matrix& X, std::span<const double> y,
                                 Task task, const SignificanceConfig& sig) {
    if (task == Task::classification) {
        mr.cm = confusion_matrix(y, mr.cv.predicted);
        mr.cls = classification_metrics(*mr.cm);
        mr.roc = roc_curve(y, mr.cv.decision_values);
        mr.pr = pr_curve(y, mr.cv.decision_values);
        mr.auc_parametric_p = parametric_auc_p(y, mr.cv.decision_values);
    } else {
        mr.reg = regression_metrics(y, mr.cv.predicted);
        bool constant_res = true;
        for (std::size_t i = 1; i < y.size(); ++i)
            if (y[i] - mr.cv.predicted[i] != y[0] - mr.cv.predicted[0]) constant_res = false;
        if (!constant_res) mr.std_residuals = standardized_residuals(y, mr.cv.predicted);
    }
    mr.weights = build_weight_report(mr.cv, X, mr.feature_names, sig, nullptr);
}

inline void attach_permutation(ModelReport& mr, const Matrix& X,
                               const SignificanceConfig& sig, PermutationOutput&& perm) {
    mr.permutation = std::move(perm);
    const auto& nd = mr.permutation->metric_null;
    if (!std::isnan(nd.observed))
        mr.metric_permutation_p =
            permutation_p(nd.observed, nd.samples, default_tail(sig.null_metric));
    mr.weights = build_weight_report(mr.cv, X, mr.feature_names, sig, &*mr.permutation);
}

inline std::vector<double> outcome_for_subjects(const AlignedCohort& cohort,
                                                std::span<const double> y_cohort,
                                                const std::vector<std::string>& subjects) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < cohort.subjects.size(); ++i) pos[cohort.subjects[i]] = i;
    std::vector<double> y(subjects.size());
    for (std::size_t i = 0; i < subjects.size(); ++i) y[i] = y_cohort[pos.at(subjects[i])];
    return y;
}

} // namespace detail

/// Executes the whole queue: ingest -> (network) -> features -> validation
/// -> metrics -> significance for every (outcome, threshold) pair, in queue
/// order. A failing entry is recorded and does not abort the rest.
inline ResultBundle run_config(const RunConfig& cfg) {
    ResultBundle bundle;
    bundle.config = cfg;

    // load data once; dynamic series are converted to per-subject summary
    // connectivity up front so everything downstream is static
    ConnectivityDataset dataset;
    if (cfg.mode.dynamic) {
        const TimeSeriesSet ts = load_time_series_set(cfg.data.manifest, cfg.data.node_labels);
        dataset.subjects = ts.subjects;
        dataset.node_labels = ts.node_labels;
        dataset.diagonal = cfg.mode.dynamic_cfg.summary == DynamicConfig::Summary::mean
                               ? ConnectivityDataset::Diagonal::unit
                               : ConnectivityDataset::Diagonal::zero;
        for (std::size_t s = 0; s < ts.subjects.size(); ++s) {
            const auto windows = sliding_windows(ts.series[s], cfg.mode.dynamic_cfg,
                                                 ts.subjects[s]);
            dataset.matrices.push_back(
                summarize_dynamic(windows, cfg.mode.dynamic_cfg.summary));
        }
        bundle.notes.push_back("dynamic mode: " + std::to_string(dataset.matrices.size()) +
                               " subjects summarized over sliding windows");
    } else {
        dataset = load_connectivity_set(cfg.data.manifest, cfg.data.node_labels);
    }
    const VariableSheet sheet = load_variable_sheet(cfg.data.variable_sheet);

    // validate the whole queue before any computation
    const Task task = task_of(cfg.learner);
    for (const auto& outcome : cfg.outcomes) {
        const VariableColumn* col = sheet.find(outcome);
        if (!col) throw ConfigError("outcome column '" + outcome + "' not in variable sheet");
        const bool binary = col->type == VariableColumn::Type::categorical;
        if (binary && task == Task::regression)
            throw ConfigError("outcome '" + outcome + "' is categorical but learner '" +
                              learner_name(cfg.learner) + "' is a regressor");
        if (!binary && task == Task::classification)
            throw ConfigError("outcome '" + outcome + "' is continuous but learner '" +
                              learner_name(cfg.learner) + "' is a classifier");
    }
    for (const auto& name : cfg.features.additional)
        if (!sheet.find(name)) throw ConfigError("additional column '" + name + "' not in sheet");
    for (const auto& name : cfg.features.nuisance)
        if (!sheet.find(name)) throw ConfigError("nuisance column '" + name + "' not in sheet");

    std::vector<std::optional<ThresholdSpec>> sweep;
    if (cfg.thresholds.empty()) sweep.push_back(std::nullopt);
    else
        for (const auto& t : cfg.thresholds) sweep.push_back(t);

    const ModelSpec spec{cfg.learner, cfg.cv};
    for (const auto& outcome : cfg.outcomes) {
        for (const auto& threshold : sweep) {
            BundleEntry entry;
            entry.outcome = outcome;
            entry.threshold = threshold;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                AlignedCohort cohort = align_subjects(dataset, sheet, outcome);
                for (const auto& [id, reason] : cohort.dropped)
                    entry.notes.push_back("dropped " + id + ": " + reason);

                entry.design = assemble_design_matrix(cohort, cfg.features, threshold);
                for (const auto& [id, reason] : entry.design.dropped)
                    entry.notes.push_back("dropped " + id + ": " + reason);
                for (const auto& n : entry.design.notes) entry.notes.push_back(n);

                const auto y_cohort = extract_outcome(cohort, &entry.notes);
                entry.y = detail::outcome_for_subjects(cohort, y_cohort, entry.design.subjects);

                const bool with_nuisance = !cfg.features.nuisance.empty();
                ModelReport full;
                full.name = "full";
                full.feature_names = entry.design.feature_names;
                full.feature_kinds = entry.design.feature_kinds;

                ModelReport nuisance;
                Matrix X_nuisance;
                std::vector<std::size_t> nui_cols;
                if (with_nuisance) {
                    const auto pair = run_with_nuisance(entry.design, entry.y, spec, cfg.threads);
                    full.cv = pair.full;
                    nuisance.cv = pair.nuisance_only;
                    nuisance.name = "nuisance_only";
                    nui_cols = entry.design.nuisance_indices();
                    X_nuisance = entry.design.X.take_cols(nui_cols);
                    for (const auto c : nui_cols) {
                        nuisance.feature_names.push_back(entry.design.feature_names[c]);
                        nuisance.feature_kinds.push_back(entry.design.feature_kinds[c]);
                    }
                } else {
                    full.cv = run_cross_validation(entry.design.X, entry.y, spec, cfg.threads);
                }

                detail::compute_model_report(full, entry.design.X, entry.y, task,
                                             cfg.significance);
                if (with_nuisance)
                    detail::compute_model_report(nuisance, X_nuisance, entry.y, task,
                                                 cfg.significance);

                if (cfg.significance.n_permutations > 0) {
                    std::vector<PermutationJob> jobs;
                    jobs.push_back({&entry.design.X, &full.feature_names, &full.cv});
                    if (with_nuisance)
                        jobs.push_back({&X_nuisance, &nuisance.feature_names, &nuisance.cv});
                    auto outs = permutation_test_multi(jobs, entry.y, spec, cfg.significance,
                                                       cfg.threads);
                    detail::attach_permutation(full, entry.design.X, cfg.significance,
                                               std::move(outs[0]));
                    if (with_nuisance)
                        detail::attach_permutation(nuisance, X_nuisance, cfg.significance,
                                                   std::move(outs[1]));
                }

                entry.models.push_back(std::move(full));
                if (with_nuisance) entry.models.push_back(std::move(nuisance));
                for (const auto& mr : entry.models)
                    for (const auto& fold : mr.cv.folds)
                        for (const auto& w : fold.warnings)
                            entry.notes.push_back(mr.name + ": " + w);
            } catch (const Error& e) {
                entry.failed = true;
                entry.error = e.what();
            }
            entry.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            bundle.entries.push_back(std::move(entry));
        }
    }
    return bundle;
}

} // namespace netdecode
