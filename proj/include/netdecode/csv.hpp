#pragma once

#include "netdecode/core.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace netdecode {

/// Shortest round-trip decimal representation of a double. Integral values
/// still print a digit after reparse ("2" not "2.0"); reload is bit-exact.
inline std::string format_double(double v) {
    char buf[48];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    // trim ASCII whitespace
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

/// Splits one CSV line. Supports double-quoted fields with "" escapes;
/// unquoted fields are trimmed.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') { field += '"'; ++i; }
                else quoted = false;
            } else field += c;
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(field));
            field.clear();
        } else field += c;
    }
    out.push_back(trim(field));
    return out;
}

/// Reads a CSV file into rows of fields. Blank lines are skipped.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

/// Reads a delimited numeric text file (commas and/or whitespace) into a
/// matrix. Every row must have the same number of fields.
inline Matrix read_numeric_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open matrix file: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (auto& c : line)
            if (c == ',' || c == '\t' || c == '\r') c = ' ';
        std::istringstream ss(line);
        std::vector<double> row;
        std::string tok;
        while (ss >> tok) {
            const auto v = parse_double(tok);
            if (!v)
                throw Error("non-numeric cell '" + tok + "' at " + path.string() + ":" +
                            std::to_string(lineno));
            row.push_back(*v);
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error("ragged row at " + path.string() + ":" + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("empty matrix file: " + path.string());
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows.front().size(); ++c) m(r, c) = rows[r][c];
    return m;
}

/// Row-by-row CSV writer; callers format numeric cells with format_double
/// so exported files are byte-stable across reruns.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw Error("cannot write file: " + path.string());
        path_ = path.string();
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(fields[i]);
        }
        out_ << '\n';
        if (!out_) throw Error("write failure: " + path_);
    }

private:
    static std::string quote(const std::string& f) {
        if (f.find_first_of(",\"\n") == std::string::npos) return f;
        std::string q = "\"";
        for (char c : f) {
            if (c == '"') q += "\"\"";
            else q += c;
        }
        q += '"';
        return q;
    }

    std::ofstream out_;
    std::string path_;
};

} // namespace netdecode
