#include "netdecode/export.hpp"
#include "netdecode/runner.hpp"
#include "netdecode/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace netdecode;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("netdecode_runner_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

// 12 subjects, 4 nodes, two continuous outcomes plus a binary group and a
// nuisance column
void write_small_dataset(const fs::path& dir) {
    fs::create_directories(dir / "matrices");
    SplitMix64 rng(314);
    std::ofstream manifest(dir / "manifest.csv");
    manifest << "subject_id,path\n";
    std::ofstream sheet(dir / "variables.csv");
    sheet << "subject_id,y1,y2,grp,nv\n";
    for (int s = 1; s <= 12; ++s) {
        const std::string id = "s" + std::to_string(s);
        manifest << id << ",matrices/" << id << ".txt\n";
        std::ofstream m(dir / "matrices" / (id + ".txt"));
        double e01 = 0.0;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                double v = i == j ? 1.0 : 0.3 + 0.1 * std::sin(double(s + i + j));
                if (i == 0 && j == 1) e01 = v;
                if (j) m << ' ';
                m << format_double(v);
            }
            m << '\n';
        }
        const double y1 = 2.0 * e01 + 0.01 * rng.normal();
        const double y2 = rng.normal();
        sheet << id << ',' << format_double(y1) << ',' << format_double(y2) << ','
              << (s % 2 ? "pat" : "ctl") << ',' << format_double(rng.normal()) << "\n";
    }
}

nlohmann::json base_config(const fs::path& data_dir, const fs::path& out_dir) {
    nlohmann::json j;
    j["data"]["manifest"] = (data_dir / "manifest.csv").string();
    j["data"]["variable_sheet"] = (data_dir / "variables.csv").string();
    j["features"]["sources"] = {"edges"};
    j["outcomes"] = {"y1"};
    j["model"]["learner"] = "elastic_net_regression";
    j["model"]["cv"]["k_folds"] = 3;
    j["model"]["cv"]["manual"]["alpha"] = 0.5;
    j["model"]["cv"]["manual"]["lambda"] = 0.01;
    j["output_dir"] = out_dir.string();
    j["seed"] = 42;
    return j;
}

} // namespace

TEST_CASE("config parsing rejects unknown keys and bad combinations") {
    TempDir tmp;
    auto j = base_config(tmp.path, tmp.path / "out");
    j["surprise"] = 1;
    REQUIRE_THROWS_AS(parse_run_config(j, tmp.path), ConfigError);

    j = base_config(tmp.path, tmp.path / "out");
    j["model"]["cv"]["typo_key"] = true;
    REQUIRE_THROWS_AS(parse_run_config(j, tmp.path), ConfigError);

    j = base_config(tmp.path, tmp.path / "out");
    j["model"]["cv"]["nested"] = true; // manual + nested are exclusive
    REQUIRE_THROWS_AS(parse_run_config(j, tmp.path), ConfigError);

    j = base_config(tmp.path, tmp.path / "out");
    j["outcomes"] = nlohmann::json::array();
    REQUIRE_THROWS_AS(parse_run_config(j, tmp.path), ConfigError);

    j = base_config(tmp.path, tmp.path / "out");
    j["thresholds"] = {{{"rule", "proportional"}, {"value", 0.2}}};
    REQUIRE_THROWS_AS(parse_run_config(j, tmp.path), ConfigError); // no graph measures

    j = base_config(tmp.path, tmp.path / "out");
    REQUIRE_NOTHROW(parse_run_config(j, tmp.path));
}

TEST_CASE("config snapshot round-trips through the parser") {
    TempDir tmp;
    const auto j = base_config(tmp.path, tmp.path / "out");
    const auto cfg = parse_run_config(j, tmp.path);
    const auto snapshot = config_to_json(cfg);
    const auto cfg2 = parse_run_config(snapshot, tmp.path);
    REQUIRE(config_to_json(cfg2) == snapshot);
    REQUIRE(cfg2.cv.seed == cfg.cv.seed); // derived seeds materialize
}

TEST_CASE("incompatible outcome and learner fail before any computation") {
    TempDir tmp;
    write_small_dataset(tmp.path);
    auto j = base_config(tmp.path, tmp.path / "out");
    j["outcomes"] = {"grp"}; // categorical with a regression learner
    const auto cfg = parse_run_config(j, tmp.path);
    REQUIRE_THROWS_AS(run_config(cfg), ConfigError);

    auto j2 = base_config(tmp.path, tmp.path / "out");
    j2["model"]["learner"] = "linear_svc"; // classifier with continuous outcome
    j2["model"]["cv"].erase("manual");
    const auto cfg2 = parse_run_config(j2, tmp.path);
    REQUIRE_THROWS_AS(run_config(cfg2), ConfigError);
}

TEST_CASE("queue produces one entry per outcome and threshold") {
    TempDir tmp;
    write_small_dataset(tmp.path);
    auto j = base_config(tmp.path, tmp.path / "out");
    j["outcomes"] = {"y1", "y2"};
    j["features"]["sources"] = {"graph_measures", "edges"};
    j["features"]["graph_measures"] = {"degree", "strength"};
    j["thresholds"] = {{{"rule", "proportional"}, {"value", 0.5}, {"binarize", true}},
                       {{"rule", "proportional"}, {"value", 0.8}, {"binarize", true}},
                       {{"rule", "absolute"}, {"value", 0.25}, {"binarize", true}}};
    const auto cfg = parse_run_config(j, tmp.path);
    const auto bundle = run_config(cfg);
    REQUIRE(bundle.entries.size() == 6);
    for (const auto& e : bundle.entries) REQUIRE_FALSE(e.failed);
    REQUIRE(bundle.entries[0].outcome == "y1");
    REQUIRE(bundle.entries[3].outcome == "y2");
}

TEST_CASE("synthetic generator is deterministic and self-consistent") {
    TempDir a, b;
    SynthSpec spec;
    spec.n_subjects = 16;
    spec.n_nodes = 5;
    spec.seed = 99;
    spec.n_signal_edges = 2;
    spec.noise_sd = 0.0;
    generate_synthetic(spec, a.path);
    generate_synthetic(spec, b.path);
    for (const auto& name : {"manifest.csv", "variables.csv", "ground_truth.json"})
        REQUIRE(slurp(a.path / name) == slurp(b.path / name));
    REQUIRE(slurp(a.path / "matrices" / "s1.txt") == slurp(b.path / "matrices" / "s1.txt"));

    // noiseless planted signal: the pipeline recovers it almost perfectly
    const auto ds = load_connectivity_set(a.path / "manifest.csv");
    const auto sheet = load_variable_sheet(a.path / "variables.csv");
    const auto cohort = align_subjects(ds, sheet, "y");
    FeatureSpec features;
    features.use_edges = true;
    const auto dm = assemble_design_matrix(cohort, features, std::nullopt);
    const auto y = extract_outcome(cohort);
    ModelSpec mspec;
    mspec.learner = Learner::elastic_net_regression;
    mspec.cv.k_folds = 4;
    mspec.cv.seed = 1;
    HyperParams manual;
    manual.alpha = 0.5;
    manual.lambda = 0.001;
    mspec.cv.manual_params = manual;
    const auto cv = run_cross_validation(dm, y, mspec);
    const auto rm = regression_metrics(y, cv.predicted);
    REQUIRE(*rm.r_squared > 0.9);
}

TEST_CASE("classification run exports the full file inventory") {
    TempDir tmp;
    write_small_dataset(tmp.path);
    auto j = base_config(tmp.path, tmp.path / "out");
    j["outcomes"] = {"grp"};
    j["model"]["learner"] = "linear_svc";
    j["model"]["cv"].erase("manual");
    j["model"]["cv"]["k_folds"] = 3;
    j["features"]["nuisance"] = {"nv"};
    j["model"]["significance"]["permutations"] = 9;
    j["model"]["significance"]["null_metric"] = "accuracy";
    const auto cfg = parse_run_config(j, tmp.path);
    const auto bundle = run_config(cfg);
    REQUIRE_FALSE(bundle.any_failed());
    export_results(bundle, cfg.output_dir);
    const auto logs = render_plots(bundle, cfg.output_dir);
    write_run_metadata(bundle, cfg.output_dir, logs);

    const auto edir = cfg.output_dir / "grp__none";
    for (const auto& f :
         {"metrics.csv", "predictions.csv", "weights.csv", "cv_folds.csv", "fold_features.csv",
          "fold_models.csv", "roc.csv", "pr.csv", "null_distribution.csv",
          "null_distribution_nuisance.csv", "confusion.svg", "roc.svg", "pr.svg", "weights.svg",
          "null_histogram.svg"})
        REQUIRE(fs::exists(edir / f));
    REQUIRE(fs::exists(cfg.output_dir / "run_metadata.json"));
    REQUIRE(fs::exists(cfg.output_dir / "config_snapshot.json"));

    // confusion counts present in metrics.csv; two models exported
    const auto metrics = slurp(edir / "metrics.csv");
    REQUIRE(metrics.find("full,tp,") != std::string::npos);
    REQUIRE(metrics.find("nuisance_only,tp,") != std::string::npos);
    REQUIRE(metrics.find("accuracy_permutation_p") != std::string::npos);

    // one prediction row per subject per model, plus the header
    REQUIRE(line_count(edir / "predictions.csv") == 1 + 2 * 12);
    // null distribution: one row per permutation
    REQUIRE(line_count(edir / "null_distribution.csv") == 1 + 9);
}

TEST_CASE("P=0 omits permutation outputs") {
    TempDir tmp;
    write_small_dataset(tmp.path);
    auto j = base_config(tmp.path, tmp.path / "out");
    const auto cfg = parse_run_config(j, tmp.path);
    const auto bundle = run_config(cfg);
    export_results(bundle, cfg.output_dir);
    const auto edir = cfg.output_dir / "y1__none";
    REQUIRE_FALSE(fs::exists(edir / "null_distribution.csv"));
    REQUIRE(fs::exists(edir / "residuals.csv"));
    REQUIRE(fs::exists(edir / "metrics.csv"));
}

TEST_CASE("reruns and queue subsets produce byte-identical entry outputs") {
    TempDir tmp;
    write_small_dataset(tmp.path);

    auto j1 = base_config(tmp.path, tmp.path / "out1");
    j1["outcomes"] = {"y1", "y2"};
    j1["model"]["significance"]["permutations"] = 5;
    auto j2 = j1;
    j2["output_dir"] = (tmp.path / "out2").string();
    j2["threads"] = 4;
    auto j3 = base_config(tmp.path, tmp.path / "out3");
    j3["outcomes"] = {"y2"}; // queue subset
    j3["model"]["significance"]["permutations"] = 5;

    for (const auto& j : {j1, j2, j3}) {
        const auto cfg = parse_run_config(j, tmp.path);
        const auto bundle = run_config(cfg);
        REQUIRE_FALSE(bundle.any_failed());
        export_results(bundle, cfg.output_dir);
    }
    for (const auto& f : {"metrics.csv", "predictions.csv", "weights.csv",
                          "null_distribution.csv", "residuals.csv"}) {
        REQUIRE(slurp(tmp.path / "out1" / "y1__none" / f) ==
                slurp(tmp.path / "out2" / "y1__none" / f));
        REQUIRE(slurp(tmp.path / "out1" / "y2__none" / f) ==
                slurp(tmp.path / "out3" / "y2__none" / f));
    }
}

TEST_CASE("CLI verbs and exit codes") {
    TempDir tmp;
    write_small_dataset(tmp.path);
    const auto j = base_config(tmp.path, tmp.path / "cli_out");
    std::ofstream(tmp.path / "config.json") << j.dump(2);
    const std::string cli = NETDECODE_CLI_PATH;

    const auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        return WEXITSTATUS(rc);
    };

    REQUIRE(run("validate " + (tmp.path / "config.json").string()) == 0);
    REQUIRE(run("run " + (tmp.path / "config.json").string()) == 0);
    REQUIRE(fs::exists(tmp.path / "cli_out" / "y1__none" / "metrics.csv"));

    // invalid config: unknown key
    auto bad = j;
    bad["bogus"] = true;
    std::ofstream(tmp.path / "bad.json") << bad.dump(2);
    REQUIRE(run("run " + (tmp.path / "bad.json").string()) == 2);
    REQUIRE(run("validate " + (tmp.path / "bad.json").string()) == 2);

    // synth verb
    nlohmann::json gen;
    gen["n_subjects"] = 10;
    gen["n_nodes"] = 4;
    gen["seed"] = 3;
    gen["n_signal_edges"] = 1;
    std::ofstream(tmp.path / "gen.json") << gen.dump(2);
    REQUIRE(run("synth " + (tmp.path / "gen.json").string() + " " +
                (tmp.path / "synth_out").string()) == 0);
    REQUIRE(fs::exists(tmp.path / "synth_out" / "manifest.csv"));
    REQUIRE(fs::exists(tmp.path / "synth_out" / "ground_truth.json"));
}
