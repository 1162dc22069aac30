#pragma once

#include "netdecode/csv.hpp"
#include "netdecode/ingest.hpp"
#include "netdecode/learners.hpp"
#include "netdecode/rng.hpp"
#include "netdecode/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace netdecode {

/// Synthetic cohort description: the outcome is a known linear function of
/// chosen connectivity edges (and optionally a nuisance column) plus noise,
/// so downstream recovery is checkable against ground truth.
struct SynthSpec {
    std::size_t n_subjects = 80;
    std::size_t n_nodes = 7;
    std::uint64_t seed = 1;
    Task task = Task::regression;
    std::string outcome_name = "y";
    std::size_t n_signal_edges = 3;
    double beta_scale = 1.0;
    std::optional<double> snr; // sd(signal)/sd(noise); overrides noise_sd
    double noise_sd = 0.5;
    std::optional<double> nuisance_beta; // adds column "nv" with this effect
};

struct SynthGroundTruth {
    std::vector<std::array<std::size_t, 2>> signal_edges; // 0-based (i, j)
    std::vector<double> betas;
    double noise_sd = 0.0;
    std::optional<double> nuisance_beta;
};

/// Generates the cohort in memory: correlation-like matrices (tanh-squashed
/// Gaussian edge values around per-edge baselines, unit diagonal), outcome
/// from the planted edges, binary labels by median split for classification.
struct SynthData {
    ConnectivityDataset dataset;
    std::vector<double> nuisance; // values for column "nv" (empty if unused)
    std::vector<double> outcome_numeric;
    std::vector<std::string> outcome_labels; // classification only
    SynthGroundTruth truth;
};

inline SynthData generate_synthetic_data(const SynthSpec& spec) {
    if (spec.n_subjects < 4) throw Error("synthetic spec: need at least 4 subjects");
    if (spec.n_nodes < 3) throw Error("synthetic spec: need at least 3 nodes");
    const std::size_t n_edges = spec.n_nodes * (spec.n_nodes - 1) / 2;
    if (spec.n_signal_edges == 0 || spec.n_signal_edges > n_edges)
        throw Error("synthetic spec: signal edge count out of range");

    SplitMix64 rng(spec.seed);
    SynthData out;
    auto& ds = out.dataset;
    ds.diagonal = ConnectivityDataset::Diagonal::unit;
    for (std::size_t i = 0; i < spec.n_nodes; ++i)
        ds.node_labels.push_back("n" + std::to_string(i + 1));

    // per-edge baseline connectivity plus per-subject variation
    std::vector<double> base(n_edges);
    for (auto& b : base) b = -0.2 + 0.8 * rng.uniform01();
    std::vector<std::vector<double>> edge_vals(spec.n_subjects, std::vector<double>(n_edges));
    for (std::size_t s = 0; s < spec.n_subjects; ++s) {
        std::string id = "s" + std::to_string(s + 1);
        ds.subjects.push_back(id);
        Matrix m(spec.n_nodes, spec.n_nodes, 0.0);
        std::size_t e = 0;
        for (std::size_t i = 0; i < spec.n_nodes; ++i) {
            m(i, i) = 1.0;
            for (std::size_t j = i + 1; j < spec.n_nodes; ++j, ++e) {
                const double v = std::tanh(base[e] + 0.35 * rng.normal());
                m(i, j) = m(j, i) = v;
                edge_vals[s][e] = v;
            }
        }
        ds.matrices.push_back(std::move(m));
    }

    // choose planted edges and alternating-sign betas
    std::vector<std::size_t> edge_order(n_edges);
    std::iota(edge_order.begin(), edge_order.end(), std::size_t{0});
    shuffle(edge_order, rng);
    for (std::size_t k = 0; k < spec.n_signal_edges; ++k) {
        const std::size_t e = edge_order[k];
        // recover (i, j) from the row-major upper-triangle index
        std::size_t i = 0, rem = e;
        while (rem >= spec.n_nodes - 1 - i) {
            rem -= spec.n_nodes - 1 - i;
            ++i;
        }
        out.truth.signal_edges.push_back({i, i + 1 + rem});
        out.truth.betas.push_back((k % 2 == 0 ? 1.0 : -1.0) * spec.beta_scale);
    }

    if (spec.nuisance_beta) {
        out.nuisance.resize(spec.n_subjects);
        for (auto& v : out.nuisance) v = rng.normal();
        out.truth.nuisance_beta = spec.nuisance_beta;
    }

    std::vector<double> signal(spec.n_subjects, 0.0);
    for (std::size_t s = 0; s < spec.n_subjects; ++s) {
        for (std::size_t k = 0; k < spec.n_signal_edges; ++k)
            signal[s] += out.truth.betas[k] * edge_vals[s][edge_order[k]];
        if (spec.nuisance_beta) signal[s] += *spec.nuisance_beta * out.nuisance[s];
    }

    double noise_sd = spec.noise_sd;
    if (spec.snr) {
        const double sig_sd = sample_std(signal);
        noise_sd = *spec.snr > 0 ? sig_sd / *spec.snr : 0.0;
    }
    out.truth.noise_sd = noise_sd;

    out.outcome_numeric.resize(spec.n_subjects);
    for (std::size_t s = 0; s < spec.n_subjects; ++s)
        out.outcome_numeric[s] = signal[s] + noise_sd * rng.normal();

    if (spec.task == Task::classification) {
        std::vector<double> sorted(out.outcome_numeric);
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        out.outcome_labels.resize(spec.n_subjects);
        for (std::size_t s = 0; s < spec.n_subjects; ++s)
            out.outcome_labels[s] = out.outcome_numeric[s] >= median ? "high" : "low";
    }
    return out;
}

/// Writes manifest + matrices + variable sheet + ground truth under `dir`.
inline void generate_synthetic(const SynthSpec& spec, const std::filesystem::path& dir) {
    const SynthData data = generate_synthetic_data(spec);
    std::filesystem::create_directories(dir);
    write_connectivity_set(data.dataset, dir);

    CsvWriter sheet(dir / "variables.csv");
    std::vector<std::string> header{"subject_id", spec.outcome_name};
    if (!data.nuisance.empty()) header.push_back("nv");
    sheet.row(header);
    for (std::size_t s = 0; s < spec.n_subjects; ++s) {
        std::vector<std::string> row{data.dataset.subjects[s],
                                     spec.task == Task::classification
                                         ? data.outcome_labels[s]
                                         : format_double(data.outcome_numeric[s])};
        if (!data.nuisance.empty()) row.push_back(format_double(data.nuisance[s]));
        sheet.row(row);
    }

    nlohmann::json truth;
    truth["seed"] = spec.seed;
    truth["noise_sd"] = data.truth.noise_sd;
    truth["betas"] = data.truth.betas;
    auto& edges = truth["signal_edges"] = nlohmann::json::array();
    for (const auto& e : data.truth.signal_edges)
        edges.push_back({{"i", e[0]}, {"j", e[1]}});
    if (data.truth.nuisance_beta) truth["nuisance_beta"] = *data.truth.nuisance_beta;
    std::ofstream f(dir / "ground_truth.json");
    if (!f) throw Error("cannot write ground truth: " + (dir / "ground_truth.json").string());
    f << truth.dump(2) << '\n';
}

/// Parses a generator spec from JSON (unknown keys rejected).
inline SynthSpec parse_synth_spec(const nlohmann::json& j) {
    SynthSpec spec;
    for (const auto& [key, value] : j.items()) {
        if (key == "n_subjects") spec.n_subjects = value.get<std::size_t>();
        else if (key == "n_nodes") spec.n_nodes = value.get<std::size_t>();
        else if (key == "seed") spec.seed = value.get<std::uint64_t>();
        else if (key == "task") {
            const auto s = value.get<std::string>();
            if (s == "regression") spec.task = Task::regression;
            else if (s == "classification") spec.task = Task::classification;
            else throw Error("synthetic spec: unknown task '" + s + "'");
        } else if (key == "outcome_name") spec.outcome_name = value.get<std::string>();
        else if (key == "n_signal_edges") spec.n_signal_edges = value.get<std::size_t>();
        else if (key == "beta_scale") spec.beta_scale = value.get<double>();
        else if (key == "snr") spec.snr = value.get<double>();
        else if (key == "noise_sd") spec.noise_sd = value.get<double>();
        else if (key == "nuisance_beta") spec.nuisance_beta = value.get<double>();
        else throw Error("synthetic spec: unknown key '" + key + "'");
    }
    return spec;
}

} // namespace netdecode
