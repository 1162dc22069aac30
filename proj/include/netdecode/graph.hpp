#pragma once

#include "netdecode/core.hpp"
#include "netdecode/csv.hpp"
#include "netdecode/stats.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace netdecode {

enum class ThresholdRule { absolute, proportional };

struct ThresholdSpec {
    ThresholdRule rule = ThresholdRule::absolute;
    double value = 0.0;
    bool binarize = false;

    std::string tag() const {
        return (rule == ThresholdRule::absolute ? "abs" : "prop") + std::string("_") +
               format_double(value) + (binarize ? "_bin" : "");
    }
};

/// Thresholded graph. Negative edges have already been discarded; binary
/// graphs hold only {0,1}.
struct Graph {
    std::size_t n = 0;
    Matrix adjacency;
    enum class Kind { binary, weighted } kind = Kind::weighted;
    ThresholdSpec threshold_record;
    std::size_t negative_edges_removed = 0;
    std::size_t edges_kept = 0;
};

/// Sliding-window settings for dynamic connectivity.
struct DynamicConfig {
    std::size_t width = 0; // window length in samples, >= 2
    std::size_t step = 1;  // stride in samples, >= 1
    enum class Summary { mean, std } summary = Summary::mean;
};

/// Applies an absolute or proportional threshold to a connectivity matrix.
/// Negative edges are removed first. The proportional rule keeps
/// round(value * N(N-1)/2) strongest off-diagonal edges; ties at the cutoff
/// are resolved deterministically (larger row-major index dropped first).
inline Graph threshold_matrix(const Matrix& m, ThresholdRule rule, double value, bool binarize) {
    if (m.rows() != m.cols()) throw Error("threshold_matrix: matrix must be square");
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::isnan(m(i, j))) throw Error("threshold_matrix: NaN in matrix");
    if (rule == ThresholdRule::proportional && (value <= 0.0 || value > 1.0))
        throw Error("proportional threshold value must be in (0,1], got " + format_double(value));

    Graph g;
    g.n = n;
    g.kind = binarize ? Graph::Kind::binary : Graph::Kind::weighted;
    g.threshold_record = {rule, value, binarize};
    g.adjacency = Matrix(n, n, 0.0);

    struct Edge {
        std::size_t i, j;
        double w;
    };
    std::vector<Edge> candidates;
    candidates.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = m(i, j);
            if (w < 0.0) {
                ++g.negative_edges_removed;
                continue;
            }
            if (w > 0.0) candidates.push_back({i, j, w});
        }
    }

    std::vector<Edge> kept;
    if (rule == ThresholdRule::absolute) {
        for (const auto& e : candidates)
            if (e.w >= value) kept.push_back(e);
    } else {
        const double pairs = static_cast<double>(n * (n - 1) / 2);
        std::size_t target = static_cast<std::size_t>(std::llround(value * pairs));
        target = std::min(target, candidates.size());
        // stable order: weight descending, then row-major index ascending
        std::stable_sort(candidates.begin(), candidates.end(), [](const Edge& a, const Edge& b) {
            if (a.w != b.w) return a.w > b.w;
            if (a.i != b.i) return a.i < b.i;
            return a.j < b.j;
        });
        kept.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(target));
    }

    for (const auto& e : kept) {
        const double v = binarize ? 1.0 : e.w;
        g.adjacency(e.i, e.j) = v;
        g.adjacency(e.j, e.i) = v;
    }
    g.edges_kept = kept.size();
    return g;
}

/// Pearson-correlation matrices over sliding windows. Window w covers
/// samples [w*step, w*step + width); W = floor((T - width)/step) + 1.
/// A node that is constant inside any window is an error (the correlation
/// would be undefined), reported with window and node indices.
inline std::vector<Matrix> sliding_windows(const Matrix& ts, const DynamicConfig& cfg,
                                           const std::string& subject = "") {
    const std::size_t T = ts.rows(), n = ts.cols();
    if (cfg.width < 2) throw Error("window width must be >= 2");
    if (cfg.step < 1) throw Error("window step must be >= 1");
    if (cfg.width > T)
        throw Error("window width " + std::to_string(cfg.width) + " exceeds series length " +
                    std::to_string(T));
    const std::size_t W = (T - cfg.width) / cfg.step + 1;
    std::vector<Matrix> out;
    out.reserve(W);
    for (std::size_t w = 0; w < W; ++w) {
        const std::size_t lo = w * cfg.step;
        Matrix corr(n, n, 0.0);
        std::vector<std::vector<double>> cols(n);
        for (std::size_t j = 0; j < n; ++j) {
            cols[j].resize(cfg.width);
            for (std::size_t t = 0; t < cfg.width; ++t) cols[j][t] = ts(lo + t, j);
        }
        for (std::size_t a = 0; a < n; ++a) {
            corr(a, a) = 1.0;
            for (std::size_t b = a + 1; b < n; ++b) {
                const auto r = pearson(cols[a], cols[b]);
                if (!r) {
                    // identify which node went flat for the error message
                    const bool a_flat = sample_variance(cols[a]) == 0.0;
                    const std::size_t node = a_flat ? a : b;
                    throw Error("constant node within window" +
                                (subject.empty() ? std::string() : " (subject '" + subject + "')") +
                                ": window " + std::to_string(w + 1) + ", node " +
                                std::to_string(node + 1));
                }
                corr(a, b) = corr(b, a) = *r;
            }
        }
        out.push_back(std::move(corr));
    }
    return out;
}

/// Element-wise mean or sample standard deviation across window matrices.
inline Matrix summarize_dynamic(const std::vector<Matrix>& mats, DynamicConfig::Summary summary) {
    if (mats.empty()) throw Error("summarize_dynamic: no windows");
    if (summary == DynamicConfig::Summary::std && mats.size() < 2)
        throw Error("std summary needs at least two windows");
    const std::size_t n = mats.front().rows();
    Matrix out(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> vals(mats.size());
            bool all_equal = true;
            for (std::size_t w = 0; w < mats.size(); ++w) {
                vals[w] = mats[w](i, j);
                if (vals[w] != vals[0]) all_equal = false;
            }
            if (all_equal) {
                // identical windows summarize without rounding
                out(i, j) = summary == DynamicConfig::Summary::mean ? vals[0] : 0.0;
            } else {
                out(i, j) =
                    summary == DynamicConfig::Summary::mean ? mean(vals) : sample_std(vals);
            }
        }
    }
    return out;
}

/// BFS hop counts between all node pairs of a binary graph; disconnected
/// pairs are +infinity.
inline Matrix shortest_path_lengths(const Graph& g) {
    if (g.kind != Graph::Kind::binary)
        throw Error("shortest_path_lengths: binary graph required");
    const std::size_t n = g.n;
    const double inf = std::numeric_limits<double>::infinity();
    Matrix d(n, n, inf);
    for (std::size_t s = 0; s < n; ++s) {
        d(s, s) = 0.0;
        std::deque<std::size_t> queue{s};
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t v = 0; v < n; ++v) {
                if (g.adjacency(u, v) != 0.0 && d(s, v) == inf) {
                    d(s, v) = d(s, u) + 1.0;
                    queue.push_back(v);
                }
            }
        }
    }
    return d;
}

enum class GraphMeasure { degree, strength, clustering, char_path_length, global_efficiency };

inline std::string measure_name(GraphMeasure m) {
    switch (m) {
        case GraphMeasure::degree: return "degree";
        case GraphMeasure::strength: return "strength";
        case GraphMeasure::clustering: return "clustering";
        case GraphMeasure::char_path_length: return "char_path_length";
        case GraphMeasure::global_efficiency: return "global_efficiency";
    }
    return "";
}

/// Computed measures: per-node vectors and global scalars, in selection
/// order. `disconnected_pairs` counts ordered pairs excluded from the
/// characteristic path length.
struct GraphMeasures {
    std::vector<std::pair<std::string, std::vector<double>>> per_node;
    std::vector<std::pair<std::string, double>> global;
    std::size_t disconnected_pairs = 0;
};

inline GraphMeasures graph_measures(const Graph& g, const std::vector<GraphMeasure>& selection) {
    if (selection.empty()) throw Error("graph_measures: empty selection");
    const std::size_t n = g.n;
    const bool needs_binary =
        std::any_of(selection.begin(), selection.end(), [](GraphMeasure m) {
            return m == GraphMeasure::clustering || m == GraphMeasure::char_path_length ||
                   m == GraphMeasure::global_efficiency;
        });
    if (needs_binary && g.kind != Graph::Kind::binary)
        throw Error("clustering and path measures require a binary graph");

    GraphMeasures out;
    Matrix dist;
    const auto distances = [&]() -> const Matrix& {
        if (dist.empty()) dist = shortest_path_lengths(g);
        return dist;
    };

    for (const GraphMeasure m : selection) {
        switch (m) {
            case GraphMeasure::degree: {
                std::vector<double> deg(n, 0.0);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        if (g.adjacency(i, j) != 0.0) deg[i] += 1.0;
                out.per_node.emplace_back("degree", std::move(deg));
                break;
            }
            case GraphMeasure::strength: {
                std::vector<double> str(n, 0.0);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) str[i] += g.adjacency(i, j);
                out.per_node.emplace_back("strength", std::move(str));
                break;
            }
            case GraphMeasure::clustering: {
                // c_i = 2 * triangles_i / (k_i (k_i - 1)), zero when k_i < 2
                std::vector<double> clust(n, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    std::vector<std::size_t> nbrs;
                    for (std::size_t j = 0; j < n; ++j)
                        if (g.adjacency(i, j) != 0.0) nbrs.push_back(j);
                    const std::size_t k = nbrs.size();
                    if (k < 2) continue;
                    std::size_t links = 0;
                    for (std::size_t a = 0; a < k; ++a)
                        for (std::size_t b = a + 1; b < k; ++b)
                            if (g.adjacency(nbrs[a], nbrs[b]) != 0.0) ++links;
                    clust[i] = 2.0 * static_cast<double>(links) /
                               (static_cast<double>(k) * static_cast<double>(k - 1));
                }
                out.per_node.emplace_back("clustering", std::move(clust));
                break;
            }
            case GraphMeasure::char_path_length: {
                const Matrix& d = distances();
                double sum = 0.0;
                std::size_t finite = 0, disconnected = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        if (i == j) continue;
                        if (std::isinf(d(i, j))) ++disconnected;
                        else { sum += d(i, j); ++finite; }
                    }
                }
                out.disconnected_pairs = disconnected;
                out.global.emplace_back("char_path_length",
                                        finite ? sum / static_cast<double>(finite) : 0.0);
                break;
            }
            case GraphMeasure::global_efficiency: {
                const Matrix& d = distances();
                double sum = 0.0;
                std::size_t pairs = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        if (i == j) continue;
                        sum += std::isinf(d(i, j)) ? 0.0 : 1.0 / d(i, j);
                        ++pairs;
                    }
                }
                out.global.emplace_back("global_efficiency",
                                        pairs ? sum / static_cast<double>(pairs) : 0.0);
                break;
            }
        }
    }
    return out;
}

} // namespace netdecode
