// Acceptance suite: every criterion prints one PASS/FAIL line and the
// binary exits nonzero if any fail. Thresholds are pinned in code.

#include "netdecode/export.hpp"
#include "netdecode/runner.hpp"
#include "netdecode/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace netdecode;
namespace fs = std::filesystem;

namespace {

fs::path g_work;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("missing file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double metric_from_csv(const fs::path& metrics_csv, const std::string& model,
                       const std::string& metric) {
    for (const auto& row : read_csv(metrics_csv)) {
        if (row.size() == 3 && row[0] == model && row[1] == metric) {
            const auto v = parse_double(row[2]);
            if (!v) throw Error("non-numeric metric " + metric);
            return *v;
        }
    }
    throw Error("metric not found: " + metric);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NETDECODE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

// ---------------------------------------------------------------- criteria

bool grid_reproduction(std::string& detail) {
    const auto svc = hyperparameter_grid(Learner::linear_svc, 6);
    const std::vector<double> expect{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    if (svc.size() != 6) return false;
    for (std::size_t i = 0; i < 6; ++i)
        if (svc[i].C != expect[i]) {
            detail = "SVC C[" + std::to_string(i) + "] = " + format_double(svc[i].C);
            return false;
        }
    const auto en = hyperparameter_grid(Learner::elastic_net_regression, 3);
    if (en.size() != 9) return false;
    const std::vector<double> alphas{0.0, 0.5, 1.0};
    const std::vector<double> lambdas{0.01, std::pow(10.0, 0.5), 1000.0};
    for (const double a : alphas)
        for (const double l : lambdas) {
            bool found = false;
            for (const auto& hp : en)
                if (hp.alpha == a && hp.lambda == l) found = true;
            if (!found) {
                detail = "missing elastic-net point";
                return false;
            }
        }
    const auto svr = hyperparameter_grid(Learner::nu_svr, 4);
    return svr.size() == 4 && svr[0].nu == 0.25 && svr[3].nu == 1.0;
}

bool ridge_oracle_match(std::string& detail) {
    SplitMix64 rng(101);
    const std::size_t n = 30, p = 8;
    Matrix X(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.normal();
        y[i] = X(i, 0) - 0.6 * X(i, 4) + 0.5 * rng.normal();
    }
    for (const double lambda : {0.01, 1.0, 100.0}) {
        // closed-form ridge on centered data via Gaussian elimination
        std::vector<double> xbar(p, 0.0);
        double ybar = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ybar += y[i] / double(n);
            for (std::size_t j = 0; j < p; ++j) xbar[j] += X(i, j) / double(n);
        }
        std::vector<std::vector<double>> A(p, std::vector<double>(p, 0.0));
        std::vector<double> rhs(p, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                rhs[j] += (X(i, j) - xbar[j]) * (y[i] - ybar) / double(n);
                for (std::size_t k = 0; k < p; ++k)
                    A[j][k] += (X(i, j) - xbar[j]) * (X(i, k) - xbar[k]) / double(n);
            }
        for (std::size_t j = 0; j < p; ++j) A[j][j] += lambda;
        for (std::size_t col = 0; col < p; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < p; ++r)
                if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
            std::swap(A[col], A[piv]);
            std::swap(rhs[col], rhs[piv]);
            for (std::size_t r = col + 1; r < p; ++r) {
                const double f = A[r][col] / A[col][col];
                for (std::size_t c = col; c < p; ++c) A[r][c] -= f * A[col][c];
                rhs[r] -= f * rhs[col];
            }
        }
        std::vector<double> w_ref(p);
        for (std::size_t i = p; i-- > 0;) {
            double s = rhs[i];
            for (std::size_t c = i + 1; c < p; ++c) s -= A[i][c] * w_ref[c];
            w_ref[i] = s / A[i][i];
        }
        const auto m = train_elastic_net_regression(X, y, 0.0, lambda);
        for (std::size_t j = 0; j < p; ++j)
            if (std::fabs(m.w[j] - w_ref[j]) > 1e-6) {
                detail = "lambda " + format_double(lambda) + " coef " + std::to_string(j) +
                         " off by " + format_double(m.w[j] - w_ref[j]);
                return false;
            }
    }
    return true;
}

bool lasso_kkt(std::string& detail) {
    SplitMix64 rng(102);
    const std::size_t n = 25, p = 6;
    Matrix X(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.normal();
        y[i] = 1.2 * X(i, 2) + 0.4 * rng.normal();
    }
    const double ybar = mean(y);
    double lambda_max = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += X(i, j) * (y[i] - ybar);
        lambda_max = std::max(lambda_max, std::fabs(d) / double(n));
    }
    const auto zero = train_elastic_net_regression(X, y, 1.0, lambda_max * (1.0 + 1e-9));
    for (const double w : zero.w)
        if (w != 0.0) {
            detail = "nonzero coefficient above the threshold";
            return false;
        }
    const auto active = train_elastic_net_regression(X, y, 1.0, lambda_max * 0.995);
    for (const double w : active.w)
        if (w != 0.0) return true;
    detail = "no coefficient activated just below the threshold";
    return false;
}

bool svm_oracle(std::string& detail) {
    Matrix X2(2, 2);
    X2(0, 0) = -1; X2(0, 1) = 0;
    X2(1, 0) = 1;  X2(1, 1) = 0;
    const auto two = train_linear_svc(X2, std::vector<double>{-1, 1}, 1.0);
    if (std::fabs(two.w[0] - 1.0) > 1e-6 || std::fabs(two.w[1]) > 1e-6 ||
        std::fabs(two.b) > 1e-6) {
        detail = "two-point solution off";
        return false;
    }
    SplitMix64 rng(103);
    const std::size_t n = 40;
    Matrix X(n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2 == 0 ? 1.0 : -1.0;
        X(i, 0) = 2.5 * y[i] + 0.5 * rng.normal();
        X(i, 1) = rng.normal();
    }
    const auto m = train_linear_svc(X, y, 10.0);
    if (!m.converged || m.final_violation > 1e-6) {
        detail = "KKT residual " + format_double(m.final_violation);
        return false;
    }
    const auto f = predict(m, X);
    for (std::size_t i = 0; i < n; ++i)
        if (y[i] * f[i] <= 0) {
            detail = "training accuracy below 1";
            return false;
        }
    return true;
}

bool auc_equivalence(std::string& detail) {
    SplitMix64 rng(104);
    std::size_t done = 0;
    while (done < 1000) {
        const std::size_t n = 4 + rng.below(47);
        std::vector<double> y(n), s(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform01() < 0.5 ? 1.0 : -1.0;
            (y[i] > 0 ? pos : neg) = true;
            s[i] = std::round(rng.normal() * 8.0) / 8.0; // deliberate ties
        }
        if (!pos || !neg) continue;
        ++done;
        double wins = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] <= 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (y[j] > 0) continue;
                pairs += 1.0;
                if (s[i] > s[j]) wins += 1.0;
                else if (s[i] == s[j]) wins += 0.5;
            }
        }
        const double auc = roc_curve(y, s).auc;
        if (std::fabs(auc - wins / pairs) > 1e-12) {
            detail = "mismatch " + format_double(auc - wins / pairs) + " at instance " +
                     std::to_string(done);
            return false;
        }
    }
    return true;
}

nlohmann::json planted_config(const fs::path& data_dir, const fs::path& out_dir,
                              std::size_t threads) {
    nlohmann::json j;
    j["data"]["manifest"] = (data_dir / "manifest.csv").string();
    j["data"]["variable_sheet"] = (data_dir / "variables.csv").string();
    j["features"]["sources"] = {"edges"};
    j["outcomes"] = {"y"};
    j["model"]["learner"] = "elastic_net_regression";
    j["model"]["cv"]["k_folds"] = 5;
    j["model"]["cv"]["nested"] = true;
    j["model"]["cv"]["grid_steps"] = 3;
    j["model"]["cv"]["seed"] = 404;
    j["model"]["significance"]["permutations"] = 99;
    j["model"]["significance"]["permute_seed"] = 405;
    j["output_dir"] = out_dir.string();
    j["seed"] = 406;
    j["threads"] = threads;
    return j;
}

void make_planted_dataset(const fs::path& dir) {
    SynthSpec spec;
    spec.n_subjects = 80;
    spec.n_nodes = 7; // 21 edge features
    spec.seed = 407;
    spec.task = Task::regression;
    spec.n_signal_edges = 3;
    spec.beta_scale = 1.0;
    spec.snr = 3.0;
    generate_synthetic(spec, dir);
}

bool planted_signal_recovery(std::string& detail) {
    const auto data_dir = g_work / "planted_data";
    const auto out_dir = g_work / "planted_out";
    make_planted_dataset(data_dir);
    std::ofstream(g_work / "planted_config.json")
        << planted_config(data_dir, out_dir, 8).dump(2);
    if (run_cli("run " + (g_work / "planted_config.json").string()) != 0) {
        detail = "CLI run failed";
        return false;
    }
    const auto metrics = out_dir / "y__none" / "metrics.csv";
    const double r2 = metric_from_csv(metrics, "full", "r_squared");
    const double p = metric_from_csv(metrics, "full", "r_squared_permutation_p");
    detail = "R2 = " + format_double(r2) + ", permutation p = " + format_double(p);
    return r2 > 0.5 && p <= 0.05;
}

bool null_calibration(std::string& detail) {
    const std::size_t repeats = 100;
    std::vector<double> pvals(repeats), accs(repeats);
    parallel_for(repeats, 8, [&](std::size_t rep) {
        SplitMix64 rng(derive_seed(500, rep));
        const std::size_t n = 40, p = 30;
        Matrix X(n, p);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < n / 2 ? 1.0 : -1.0;
            for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.normal();
        }
        shuffle(y, rng);
        ModelSpec spec;
        spec.learner = Learner::linear_svc;
        spec.cv.k_folds = 5;
        spec.cv.seed = derive_seed(501, rep);
        HyperParams manual;
        manual.C = 1.0;
        spec.cv.manual_params = manual;
        const auto observed = run_cross_validation(X, y, spec);
        const auto cm = confusion_matrix(y, observed.predicted);
        accs[rep] = classification_metrics(cm).accuracy;
        SignificanceConfig sig;
        sig.n_permutations = 49;
        sig.permute_seed = derive_seed(502, rep);
        sig.null_metric = NullMetric::auc;
        std::vector<std::string> names(p);
        for (std::size_t j = 0; j < p; ++j) names[j] = "f" + std::to_string(j);
        const auto perm = permutation_test(X, names, y, spec, sig, observed);
        pvals[rep] = permutation_p(perm.metric_null.observed, perm.metric_null.samples,
                                   Tail::greater);
    });
    double frac = 0.0, acc_mean = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
        if (pvals[r] <= 0.1) frac += 1.0 / double(repeats);
        acc_mean += accs[r] / double(repeats);
    }
    detail = "P(p<=0.1) = " + format_double(frac) + ", mean accuracy = " +
             format_double(acc_mean);
    return frac >= 0.01 && frac <= 0.19 && acc_mean >= 0.45 && acc_mean <= 0.55;
}

bool leakage_guard(std::string& detail) {
    SplitMix64 rng(106);
    const std::size_t n = 30, p = 6;
    Matrix X(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.normal();
        y[i] = X(i, 0) + 0.5 * rng.normal();
    }
    ModelSpec spec;
    spec.learner = Learner::elastic_net_regression;
    spec.cv.k_folds = 3;
    spec.cv.nested = true;
    spec.cv.grid_steps = 2;
    spec.cv.seed = 55;
    spec.cv.feature_fraction = 0.5;
    const auto base = run_cross_validation(X, y, spec);
    for (std::size_t f = 0; f < 3; ++f) {
        for (const std::size_t victim : base.folds[f].test_subjects) {
            Matrix mutated = X;
            for (std::size_t j = 0; j < p; ++j) mutated(victim, j) = 1e9 + double(j);
            const auto rerun = run_cross_validation(mutated, y, spec);
            if (rerun.folds[f].scaler.means != base.folds[f].scaler.means ||
                rerun.folds[f].scaler.stds != base.folds[f].scaler.stds ||
                rerun.folds[f].model.w != base.folds[f].model.w ||
                rerun.folds[f].model.b != base.folds[f].model.b) {
                detail = "fold " + std::to_string(f + 1) + " changed after test-row mutation";
                return false;
            }
        }
    }
    return true;
}

bool haufe_sign_recovery(std::string& detail) {
    SplitMix64 rng(107);
    const std::size_t n = 100, p = 6;
    Matrix X(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.normal();
        y[i] = X(i, 0) - X(i, 1) + 0.5 * rng.normal();
    }
    ModelSpec spec;
    spec.learner = Learner::elastic_net_regression;
    spec.cv.k_folds = 5;
    spec.cv.seed = 77;
    HyperParams manual;
    manual.alpha = 0.5;
    manual.lambda = 0.01;
    spec.cv.manual_params = manual;
    const auto cv = run_cross_validation(X, y, spec);
    std::vector<std::string> names(p);
    for (std::size_t j = 0; j < p; ++j) names[j] = "f" + std::to_string(j + 1);
    const auto weights = haufe_feature_weights(cv, X, names);
    const double w1 = *weights[0].weight, w2 = *weights[1].weight;
    detail = "w1 = " + format_double(w1) + ", w2 = " + format_double(w2);
    return w1 > 0.4 && w2 < -0.4;
}

bool graph_measure_oracle(std::string& detail) {
    SplitMix64 rng(108);
    const std::vector<GraphMeasure> sel{GraphMeasure::char_path_length,
                                        GraphMeasure::global_efficiency};
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 3 + rng.below(10); // up to 12 nodes
        Graph g;
        g.n = n;
        g.kind = Graph::Kind::binary;
        g.adjacency = Matrix(n, n, 0.0);
        const double density = 0.1 + 0.7 * rng.uniform01();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (rng.uniform01() < density) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
        // Floyd-Warshall oracle
        const double inf = std::numeric_limits<double>::infinity();
        Matrix d(n, n, inf);
        for (std::size_t i = 0; i < n; ++i) {
            d(i, i) = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (g.adjacency(i, j) != 0.0) d(i, j) = 1.0;
        }
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);
        double cpl = 0.0, eff = 0.0;
        std::size_t finite = 0, pairs = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                ++pairs;
                if (std::isinf(d(i, j))) continue;
                cpl += d(i, j);
                ++finite;
                eff += 1.0 / d(i, j);
            }
        cpl = finite ? cpl / double(finite) : 0.0;
        eff = pairs ? eff / double(pairs) : 0.0;
        const auto m = graph_measures(g, sel);
        if (std::fabs(m.global[0].second - cpl) > 1e-12 ||
            std::fabs(m.global[1].second - eff) > 1e-12) {
            detail = "oracle mismatch at repeat " + std::to_string(rep);
            return false;
        }
    }
    // hand values: triangle and 3-node path
    Graph tri;
    tri.n = 3;
    tri.kind = Graph::Kind::binary;
    tri.adjacency = Matrix(3, 3, 0.0);
    tri.adjacency(0, 1) = tri.adjacency(1, 0) = 1.0;
    tri.adjacency(1, 2) = tri.adjacency(2, 1) = 1.0;
    tri.adjacency(0, 2) = tri.adjacency(2, 0) = 1.0;
    const auto mt = graph_measures(tri, {GraphMeasure::clustering,
                                         GraphMeasure::char_path_length,
                                         GraphMeasure::global_efficiency});
    if (mt.per_node[0].second[0] != 1.0 || mt.global[0].second != 1.0 ||
        mt.global[1].second != 1.0) {
        detail = "triangle hand values";
        return false;
    }
    Graph path = tri;
    path.adjacency(0, 2) = path.adjacency(2, 0) = 0.0;
    const auto mp = graph_measures(path, {GraphMeasure::char_path_length,
                                          GraphMeasure::global_efficiency});
    if (std::fabs(mp.global[0].second - 4.0 / 3.0) > 1e-15 ||
        std::fabs(mp.global[1].second - 5.0 / 6.0) > 1e-15) {
        detail = "path hand values";
        return false;
    }
    return true;
}

bool correction_oracles(std::string& detail) {
    const std::vector<double> p4{0.01, 0.02, 0.03, 0.04};
    const auto bh4 = correct_pvalues(p4, Correction::fdr, 0.05);
    for (const auto r : bh4.reject)
        if (!r) {
            detail = "BH failed to reject all four";
            return false;
        }
    SplitMix64 rng(109);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t m = 1 + rng.below(25);
        std::vector<double> p(m);
        for (auto& v : p)
            v = std::max(1e-12, rng.uniform01() * (rng.uniform01() < 0.4 ? 0.08 : 1.0));
        const auto bonf = correct_pvalues(p, Correction::bonferroni, 0.05);
        const auto bh = correct_pvalues(p, Correction::fdr, 0.05);
        for (std::size_t i = 0; i < m; ++i) {
            if (bonf.adjusted[i] != std::min(1.0, double(m) * p[i])) {
                detail = "Bonferroni formula mismatch";
                return false;
            }
            if (bonf.reject[i] && !bh.reject[i]) {
                detail = "BH rejections not a superset";
                return false;
            }
        }
    }
    return true;
}

bool determinism(std::string& detail) {
    const auto data_dir = g_work / "planted_data"; // reuses criterion 6's dataset
    if (!fs::exists(data_dir / "manifest.csv")) make_planted_dataset(data_dir);
    const std::vector<std::pair<std::string, std::size_t>> runs{
        {"det_a", 1}, {"det_b", 1}, {"det_c", 8}};
    for (const auto& [name, threads] : runs) {
        const auto cfg_path = g_work / (name + ".json");
        std::ofstream(cfg_path) << planted_config(data_dir, g_work / name, threads).dump(2);
        if (run_cli("run " + cfg_path.string()) != 0) {
            detail = "CLI run failed (" + name + ")";
            return false;
        }
    }
    for (const auto& f : {"metrics.csv", "predictions.csv", "weights.csv",
                          "null_distribution.csv", "residuals.csv", "cv_folds.csv",
                          "fold_features.csv", "fold_models.csv"}) {
        const auto a = slurp(g_work / "det_a" / "y__none" / f);
        if (a != slurp(g_work / "det_b" / "y__none" / f)) {
            detail = std::string(f) + " differs across reruns";
            return false;
        }
        if (a != slurp(g_work / "det_c" / "y__none" / f)) {
            detail = std::string(f) + " differs across worker-pool sizes";
            return false;
        }
    }
    return true;
}

} // namespace

int main() {
    g_work = fs::temp_directory_path() /
             ("netdecode_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(g_work);

    struct Criterion {
        int id;
        const char* name;
        std::function<bool(std::string&)> fn;
    };
    const std::vector<Criterion> criteria{
        {1, "grid reproduction", grid_reproduction},
        {2, "ridge oracle", ridge_oracle_match},
        {3, "lasso KKT threshold", lasso_kkt},
        {4, "SVM oracle", svm_oracle},
        {5, "AUC equivalence", auc_equivalence},
        {6, "planted-signal recovery", planted_signal_recovery},
        {7, "null calibration", null_calibration},
        {8, "leakage guard", leakage_guard},
        {9, "Haufe sign recovery", haufe_sign_recovery},
        {10, "graph-measure oracle", graph_measure_oracle},
        {11, "correction oracles", correction_oracles},
        {12, "determinism", determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        std::string detail;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %2d: %-26s %s(%.2fs)\n", ok ? "PASS" : "FAIL", c.id, c.name,
                    detail.empty() ? "" : ("[" + detail + "] ").c_str(), secs);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    fs::remove_all(g_work);
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all criteria passed\n");
    return failures == 0 ? 0 : 1;
}
