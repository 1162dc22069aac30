#pragma once

#include "netdecode/core.hpp"
#include "netdecode/csv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace netdecode {

/// Per-subject square symmetric connectivity matrices plus identifiers.
struct ConnectivityDataset {
    std::vector<std::string> subjects;
    std::vector<std::string> node_labels;
    std::vector<Matrix> matrices;

    enum class Diagonal { unit, zero };
    Diagonal diagonal = Diagonal::unit;
    std::size_t symmetrized_entries = 0; // entries repaired by averaging at load
};

/// Per-subject node time series (samples x nodes), unit-free sample index.
struct TimeSeriesSet {
    std::vector<std::string> subjects;
    std::vector<std::string> node_labels;
    std::vector<Matrix> series;
};

/// Tabular per-subject variables. Columns are continuous or binary
/// categorical; missing cells are explicit.
struct VariableColumn {
    enum class Type { continuous, categorical };
    std::string name;
    Type type = Type::continuous;
    std::vector<bool> missing;
    std::vector<double> numbers;      // valid where !missing, continuous columns
    std::vector<std::string> labels;  // valid where !missing, categorical columns
    std::vector<std::string> levels;  // distinct labels in file order (size <= 2)
};

struct VariableSheet {
    std::vector<std::string> subjects;
    std::vector<VariableColumn> columns;

    const VariableColumn* find(const std::string& name) const {
        for (const auto& c : columns)
            if (c.name == name) return &c;
        return nullptr;
    }
    std::optional<std::size_t> subject_row(const std::string& id) const {
        for (std::size_t i = 0; i < subjects.size(); ++i)
            if (subjects[i] == id) return i;
        return std::nullopt;
    }
};

/// Dataset and sheet restricted to their common subjects, in dataset order,
/// with missing-outcome subjects removed. `dropped` lists id -> reason.
struct AlignedCohort {
    std::vector<std::string> subjects;
    std::vector<std::string> node_labels;
    std::vector<Matrix> connectivity;   // one per subject (empty in time-series mode)
    std::vector<Matrix> series;         // one per subject (empty in static mode)
    VariableSheet sheet;                // restricted and reordered to `subjects`
    std::string outcome_column;
    std::vector<std::pair<std::string, std::string>> dropped;
};

namespace detail {

struct ManifestEntry {
    std::string subject;
    std::filesystem::path path;
};

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
    const auto rows = read_csv(manifest_path);
    if (rows.empty()) throw Error("empty manifest: " + manifest_path.string());
    std::size_t start = 0;
    // tolerate a `subject_id,path` header row
    if (!rows[0].empty() && rows[0][0] == "subject_id") start = 1;
    const auto base = manifest_path.parent_path();
    std::vector<ManifestEntry> entries;
    std::unordered_set<std::string> seen;
    for (std::size_t r = start; r < rows.size(); ++r) {
        if (rows[r].size() != 2)
            throw Error("manifest row " + std::to_string(r + 1) + " needs `subject_id,path`: " +
                        manifest_path.string());
        const auto& id = rows[r][0];
        if (!seen.insert(id).second)
            throw Error("duplicate subject ID '" + id + "' in manifest " + manifest_path.string());
        std::filesystem::path p = rows[r][1];
        if (p.is_relative()) p = base / p;
        entries.push_back({id, p});
    }
    if (entries.empty()) throw Error("manifest lists no subjects: " + manifest_path.string());
    return entries;
}

inline std::vector<std::string> default_node_labels(std::size_t n) {
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = "n" + std::to_string(i + 1);
    return labels;
}

inline std::vector<std::string> read_node_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open node labels file: " + path.string());
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (!t.empty()) labels.push_back(t);
    }
    if (labels.empty()) throw Error("node labels file is empty: " + path.string());
    return labels;
}

} // namespace detail

/// Loads per-subject connectivity matrices listed in a manifest CSV
/// (`subject_id,path`; relative paths resolve against the manifest).
/// Asymmetries up to 1e-6 are repaired by averaging; larger ones are errors.
/// The diagonal must be uniformly ~1 or ~0 across the whole set.
inline ConnectivityDataset load_connectivity_set(
    const std::filesystem::path& manifest_path,
    const std::optional<std::filesystem::path>& node_labels_path = std::nullopt) {
    ConnectivityDataset ds;
    const auto entries = detail::read_manifest(manifest_path);
    std::optional<bool> unit_diag;
    for (const auto& e : entries) {
        Matrix m = read_numeric_matrix(e.path);
        if (m.rows() != m.cols())
            throw Error("non-square matrix (" + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ") for subject '" + e.subject + "': " +
                        e.path.string());
        if (!ds.matrices.empty() && m.rows() != ds.matrices.front().rows())
            throw Error("node count mismatch for subject '" + e.subject + "': expected " +
                        std::to_string(ds.matrices.front().rows()) + ", got " +
                        std::to_string(m.rows()));
        const std::size_t n = m.rows();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double a = m(i, j), b = m(j, i);
                if (!std::isfinite(a) || !std::isfinite(b))
                    throw Error("non-finite entry for subject '" + e.subject + "': " + e.path.string());
                const double asym = std::fabs(a - b);
                if (asym > 1e-6)
                    throw Error("asymmetry " + format_double(asym) + " > 1e-6 at (" +
                                std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                ") for subject '" + e.subject + "'");
                if (a != b) {
                    const double avg = 0.5 * (a + b);
                    m(i, j) = m(j, i) = avg;
                    ++ds.symmetrized_entries;
                }
            }
        }
        // classify the diagonal; unit and zero diagonals are both accepted
        bool all_unit = true, all_zero = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::fabs(m(i, i) - 1.0) > 1e-9) all_unit = false;
            if (std::fabs(m(i, i)) > 1e-9) all_zero = false;
        }
        if (!all_unit && !all_zero)
            throw Error("diagonal is neither unit nor zero for subject '" + e.subject + "'");
        if (!unit_diag) unit_diag = all_unit;
        else if (*unit_diag != all_unit)
            throw Error("mixed diagonal conventions across subjects (subject '" + e.subject + "')");
        ds.subjects.push_back(e.subject);
        ds.matrices.push_back(std::move(m));
    }
    ds.diagonal = *unit_diag ? ConnectivityDataset::Diagonal::unit
                             : ConnectivityDataset::Diagonal::zero;
    const std::size_t n = ds.matrices.front().rows();
    ds.node_labels = node_labels_path ? detail::read_node_labels(*node_labels_path)
                                      : detail::default_node_labels(n);
    if (ds.node_labels.size() != n)
        throw Error("node labels count " + std::to_string(ds.node_labels.size()) +
                    " does not match matrix size " + std::to_string(n));
    return ds;
}

/// Loads per-subject node time series (samples x nodes) via the same
/// manifest format. Node count must be consistent; every subject needs at
/// least two samples.
inline TimeSeriesSet load_time_series_set(
    const std::filesystem::path& manifest_path,
    const std::optional<std::filesystem::path>& node_labels_path = std::nullopt) {
    TimeSeriesSet ts;
    const auto entries = detail::read_manifest(manifest_path);
    for (const auto& e : entries) {
        Matrix m = read_numeric_matrix(e.path);
        if (m.rows() < 2)
            throw Error("time series needs >= 2 samples for subject '" + e.subject + "'");
        if (!ts.series.empty() && m.cols() != ts.series.front().cols())
            throw Error("node count mismatch for subject '" + e.subject + "'");
        ts.subjects.push_back(e.subject);
        ts.series.push_back(std::move(m));
    }
    const std::size_t n = ts.series.front().cols();
    ts.node_labels = node_labels_path ? detail::read_node_labels(*node_labels_path)
                                      : detail::default_node_labels(n);
    if (ts.node_labels.size() != n)
        throw Error("node labels count does not match series width " + std::to_string(n));
    return ts;
}

/// Writes a dataset back to disk: `manifest.csv` plus one matrix file per
/// subject under `dir`, with shortest round-trip formatting so a reload is
/// bit-exact.
inline void write_connectivity_set(const ConnectivityDataset& ds,
                                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "matrices");
    CsvWriter manifest(dir / "manifest.csv");
    manifest.row({"subject_id", "path"});
    for (std::size_t s = 0; s < ds.subjects.size(); ++s) {
        const std::string rel = "matrices/" + ds.subjects[s] + ".txt";
        manifest.row({ds.subjects[s], rel});
        std::ofstream out(dir / rel);
        if (!out) throw Error("cannot write matrix file: " + (dir / rel).string());
        const Matrix& m = ds.matrices[s];
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                if (j) out << ' ';
                out << format_double(m(i, j));
            }
            out << '\n';
        }
    }
    std::ofstream labels(dir / "node_labels.txt");
    for (const auto& l : ds.node_labels) labels << l << '\n';
}

/// Loads a variable sheet CSV (header row, first column `subject_id`).
/// Column types are inferred: all cells numeric -> continuous; otherwise the
/// column must contain exactly two distinct labels (binary categorical).
/// Empty cells become explicit missing values.
inline VariableSheet load_variable_sheet(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    if (rows.size() < 2) throw Error("variable sheet needs a header and data rows: " + path.string());
    const auto& header = rows[0];
    if (header.empty() || header[0] != "subject_id")
        throw Error("variable sheet first column must be `subject_id`: " + path.string());
    const std::size_t ncols = header.size();

    VariableSheet sheet;
    std::unordered_set<std::string> seen;
    std::vector<std::vector<std::string>> cells(ncols - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != ncols)
            throw Error("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                        " fields, expected " + std::to_string(ncols) + ": " + path.string());
        const auto& id = rows[r][0];
        if (id.empty()) throw Error("empty subject ID at row " + std::to_string(r + 1));
        if (!seen.insert(id).second)
            throw Error("duplicate subject ID '" + id + "' in sheet " + path.string());
        sheet.subjects.push_back(id);
        for (std::size_t c = 1; c < ncols; ++c) cells[c - 1].push_back(rows[r][c]);
    }

    for (std::size_t c = 0; c < ncols - 1; ++c) {
        VariableColumn col;
        col.name = header[c + 1];
        const std::size_t n = cells[c].size();
        col.missing.assign(n, false);
        bool all_numeric = true;
        for (std::size_t r = 0; r < n; ++r) {
            if (cells[c][r].empty()) { col.missing[r] = true; continue; }
            if (!parse_double(cells[c][r])) all_numeric = false;
        }
        if (all_numeric) {
            col.type = VariableColumn::Type::continuous;
            col.numbers.assign(n, 0.0);
            for (std::size_t r = 0; r < n; ++r)
                if (!col.missing[r]) col.numbers[r] = *parse_double(cells[c][r]);
        } else {
            col.type = VariableColumn::Type::categorical;
            col.labels.assign(n, "");
            for (std::size_t r = 0; r < n; ++r) {
                if (col.missing[r]) continue;
                const auto& label = cells[c][r];
                col.labels[r] = label;
                if (std::find(col.levels.begin(), col.levels.end(), label) == col.levels.end())
                    col.levels.push_back(label);
            }
            if (col.levels.size() > 2)
                throw Error("column '" + col.name + "' has more than two classes (" +
                            std::to_string(col.levels.size()) + " labels); multi-class is unsupported");
        }
        sheet.columns.push_back(std::move(col));
    }
    return sheet;
}

namespace detail {

template <typename Data>
AlignedCohort align_impl(const std::vector<std::string>& data_subjects,
                         const std::vector<std::string>& node_labels,
                         const std::vector<Matrix>& payload, bool payload_is_series,
                         const VariableSheet& sheet, const std::string& outcome) {
    const VariableColumn* col = sheet.find(outcome);
    if (!col) throw Error("outcome column '" + outcome + "' not found in variable sheet");
    bool any_outcome = false;
    for (std::size_t r = 0; r < sheet.subjects.size(); ++r)
        if (!col->missing[r]) any_outcome = true;
    if (!any_outcome) throw Error("outcome column '" + outcome + "' is entirely missing");

    AlignedCohort cohort;
    cohort.node_labels = node_labels;
    cohort.outcome_column = outcome;
    std::unordered_map<std::string, std::size_t> sheet_row;
    for (std::size_t r = 0; r < sheet.subjects.size(); ++r) sheet_row[sheet.subjects[r]] = r;

    std::vector<std::size_t> kept_sheet_rows;
    for (std::size_t s = 0; s < data_subjects.size(); ++s) {
        const auto& id = data_subjects[s];
        const auto it = sheet_row.find(id);
        if (it == sheet_row.end()) {
            cohort.dropped.emplace_back(id, "no sheet row");
            continue;
        }
        if (col->missing[it->second]) {
            cohort.dropped.emplace_back(id, "missing outcome");
            continue;
        }
        cohort.subjects.push_back(id);
        if (payload_is_series) cohort.series.push_back(payload[s]);
        else cohort.connectivity.push_back(payload[s]);
        kept_sheet_rows.push_back(it->second);
    }
    std::unordered_set<std::string> in_data(data_subjects.begin(), data_subjects.end());
    for (const auto& id : sheet.subjects)
        if (!in_data.count(id)) cohort.dropped.emplace_back(id, "no matrix");

    if (cohort.subjects.empty())
        throw Error("no subjects shared between dataset and variable sheet with a non-missing outcome");

    // restrict and reorder the sheet to the cohort
    cohort.sheet.subjects = cohort.subjects;
    for (const auto& c : sheet.columns) {
        VariableColumn rc;
        rc.name = c.name;
        rc.type = c.type;
        rc.levels = c.levels;
        for (const std::size_t r : kept_sheet_rows) {
            rc.missing.push_back(c.missing[r]);
            if (c.type == VariableColumn::Type::continuous)
                rc.numbers.push_back(c.missing[r] ? 0.0 : c.numbers[r]);
            else
                rc.labels.push_back(c.missing[r] ? std::string() : c.labels[r]);
        }
        cohort.sheet.columns.push_back(std::move(rc));
    }
    return cohort;
}

} // namespace detail

/// Intersects a connectivity dataset with a variable sheet on subject ID,
/// keeping dataset order and dropping subjects with a missing outcome.
inline AlignedCohort align_subjects(const ConnectivityDataset& data, const VariableSheet& sheet,
                                    const std::string& outcome) {
    return detail::align_impl<ConnectivityDataset>(data.subjects, data.node_labels, data.matrices,
                                                   false, sheet, outcome);
}

inline AlignedCohort align_subjects(const TimeSeriesSet& data, const VariableSheet& sheet,
                                    const std::string& outcome) {
    return detail::align_impl<TimeSeriesSet>(data.subjects, data.node_labels, data.series, true,
                                             sheet, outcome);
}

} // namespace netdecode
