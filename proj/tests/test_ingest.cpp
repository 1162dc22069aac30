#include "netdecode/ingest.hpp"
#include "netdecode/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace netdecode;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("netdecode_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

// well-formed 5x5 symmetric matrix text with unit diagonal
std::string symmetric5(double off = 0.2) {
    std::string s;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            if (j) s += " ";
            s += i == j ? "1" : format_double(off + 0.01 * (i + j));
        }
        s += "\n";
    }
    return s;
}

} // namespace

TEST_CASE("load_connectivity_set accepts well-formed input") {
    TempDir tmp;
    for (int s = 1; s <= 3; ++s)
        write_file(tmp.path / ("s" + std::to_string(s) + ".txt"), symmetric5(0.1 * s));
    write_file(tmp.path / "manifest.csv",
               "subject_id,path\ns1,s1.txt\ns2,s2.txt\ns3,s3.txt\n");
    const auto ds = load_connectivity_set(tmp.path / "manifest.csv");
    REQUIRE(ds.subjects.size() == 3);
    REQUIRE(ds.node_labels.size() == 5);
    REQUIRE(ds.matrices[0].rows() == 5);
    REQUIRE(ds.diagonal == ConnectivityDataset::Diagonal::unit);
    REQUIRE(ds.symmetrized_entries == 0);
}

TEST_CASE("tiny asymmetry is repaired by averaging") {
    TempDir tmp;
    write_file(tmp.path / "m.txt",
               "1 0.30 0.1\n0.3000004 1 0.1\n0.1 0.1 1\n");
    write_file(tmp.path / "manifest.csv", "subject_id,path\ns1,m.txt\n");
    const auto ds = load_connectivity_set(tmp.path / "manifest.csv");
    REQUIRE(ds.symmetrized_entries == 1);
    REQUIRE(ds.matrices[0](0, 1) == Catch::Approx(0.3000002).epsilon(1e-12));
    REQUIRE(ds.matrices[0](0, 1) == ds.matrices[0](1, 0));
}

TEST_CASE("gross asymmetry and non-square matrices are errors") {
    TempDir tmp;
    write_file(tmp.path / "asym.txt", "1 0.3 0.1\n0.5 1 0.1\n0.1 0.1 1\n");
    write_file(tmp.path / "manifest_a.csv", "subject_id,path\ns1,asym.txt\n");
    REQUIRE_THROWS_WITH(load_connectivity_set(tmp.path / "manifest_a.csv"),
                        Catch::Matchers::ContainsSubstring("asymmetry"));

    write_file(tmp.path / "rect.txt", "1 2 3 4 5\n1 2 3 4 5\n1 2 3 4 5\n1 2 3 4 5\n");
    write_file(tmp.path / "manifest_r.csv", "subject_id,path\ns1,rect.txt\n");
    REQUIRE_THROWS_WITH(load_connectivity_set(tmp.path / "manifest_r.csv"),
                        Catch::Matchers::ContainsSubstring("non-square"));
}

TEST_CASE("duplicate subject IDs and bad cells are errors") {
    TempDir tmp;
    write_file(tmp.path / "m.txt", symmetric5());
    write_file(tmp.path / "manifest.csv", "subject_id,path\ns1,m.txt\ns1,m.txt\n");
    REQUIRE_THROWS_WITH(load_connectivity_set(tmp.path / "manifest.csv"),
                        Catch::Matchers::ContainsSubstring("duplicate"));

    write_file(tmp.path / "bad.txt", "1 x\nx 1\n");
    write_file(tmp.path / "manifest_b.csv", "subject_id,path\ns1,bad.txt\n");
    REQUIRE_THROWS_WITH(load_connectivity_set(tmp.path / "manifest_b.csv"),
                        Catch::Matchers::ContainsSubstring("non-numeric"));

    REQUIRE_THROWS(load_connectivity_set(tmp.path / "missing_manifest.csv"));
}

TEST_CASE("write/reload round trip is exact") {
    TempDir tmp;
    ConnectivityDataset ds;
    ds.node_labels = {"a", "b", "c"};
    SplitMix64 rng(11);
    for (int s = 0; s < 3; ++s) {
        ds.subjects.push_back("s" + std::to_string(s + 1));
        Matrix m(3, 3, 0.0);
        for (int i = 0; i < 3; ++i) {
            m(i, i) = 1.0;
            for (int j = i + 1; j < 3; ++j) m(i, j) = m(j, i) = rng.normal() * 0.3;
        }
        ds.matrices.push_back(m);
    }
    write_connectivity_set(ds, tmp.path);
    const auto back = load_connectivity_set(tmp.path / "manifest.csv",
                                            tmp.path / "node_labels.txt");
    REQUIRE(back.subjects == ds.subjects);
    REQUIRE(back.node_labels == ds.node_labels);
    for (std::size_t s = 0; s < 3; ++s)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                REQUIRE(back.matrices[s](i, j) == ds.matrices[s](i, j));
}

TEST_CASE("variable sheet type inference") {
    TempDir tmp;
    write_file(tmp.path / "vars.csv",
               "subject_id,group,age,score\n"
               "s1,patient,18,\n"
               "s2,control,25,1.5\n"
               "s3,patient,31,2.5\n");
    const auto sheet = load_variable_sheet(tmp.path / "vars.csv");
    const auto* group = sheet.find("group");
    REQUIRE(group->type == VariableColumn::Type::categorical);
    REQUIRE(group->levels == std::vector<std::string>{"patient", "control"});
    const auto* age = sheet.find("age");
    REQUIRE(age->type == VariableColumn::Type::continuous);
    REQUIRE(age->numbers == std::vector<double>{18, 25, 31});
    const auto* score = sheet.find("score");
    REQUIRE(score->missing[0]);
    REQUIRE_FALSE(score->missing[1]);
}

TEST_CASE("variable sheet rejects multi-class, duplicates, empty") {
    TempDir tmp;
    write_file(tmp.path / "multi.csv", "subject_id,g\ns1,a\ns2,b\ns3,c\n");
    REQUIRE_THROWS_WITH(load_variable_sheet(tmp.path / "multi.csv"),
                        Catch::Matchers::ContainsSubstring("more than two classes"));
    write_file(tmp.path / "dup.csv", "subject_id,g\ns1,a\ns1,b\n");
    REQUIRE_THROWS_WITH(load_variable_sheet(tmp.path / "dup.csv"),
                        Catch::Matchers::ContainsSubstring("duplicate"));
    write_file(tmp.path / "empty.csv", "subject_id,g\n");
    REQUIRE_THROWS(load_variable_sheet(tmp.path / "empty.csv"));
}

namespace {

ConnectivityDataset tiny_dataset(const std::vector<std::string>& subjects) {
    ConnectivityDataset ds;
    ds.node_labels = {"a", "b"};
    for (const auto& s : subjects) {
        ds.subjects.push_back(s);
        Matrix m(2, 2, 0.0);
        m(0, 0) = m(1, 1) = 1.0;
        m(0, 1) = m(1, 0) = 0.5;
        ds.matrices.push_back(m);
    }
    return ds;
}

VariableSheet sheet_from(const std::vector<std::pair<std::string, std::string>>& rows) {
    VariableSheet sheet;
    VariableColumn col;
    col.name = "y";
    col.type = VariableColumn::Type::continuous;
    for (const auto& [id, v] : rows) {
        sheet.subjects.push_back(id);
        col.missing.push_back(v.empty());
        col.numbers.push_back(v.empty() ? 0.0 : *parse_double(v));
    }
    sheet.columns.push_back(col);
    return sheet;
}

} // namespace

TEST_CASE("align_subjects intersects in dataset order and reports drops") {
    const auto ds = tiny_dataset({"s1", "s2", "s3"});
    const auto sheet = sheet_from({{"s2", "1"}, {"s3", "2"}, {"s4", "3"}});
    const auto cohort = align_subjects(ds, sheet, "y");
    REQUIRE(cohort.subjects == std::vector<std::string>{"s2", "s3"});
    REQUIRE(cohort.dropped.size() == 2);
    bool saw_s1 = false, saw_s4 = false;
    for (const auto& [id, reason] : cohort.dropped) {
        if (id == "s1") { saw_s1 = true; REQUIRE(reason == "no sheet row"); }
        if (id == "s4") { saw_s4 = true; REQUIRE(reason == "no matrix"); }
    }
    REQUIRE((saw_s1 && saw_s4));
}

TEST_CASE("align_subjects drops missing outcomes and rejects disjoint sets") {
    const auto ds = tiny_dataset({"s1", "s2", "s3"});
    const auto sheet = sheet_from({{"s2", ""}, {"s3", "2"}});
    const auto cohort = align_subjects(ds, sheet, "y");
    REQUIRE(cohort.subjects == std::vector<std::string>{"s3"});

    const auto disjoint = sheet_from({{"t1", "1"}, {"t2", "2"}});
    REQUIRE_THROWS(align_subjects(ds, disjoint, "y"));
    REQUIRE_THROWS_WITH(align_subjects(ds, sheet, "zzz"),
                        Catch::Matchers::ContainsSubstring("not found"));
}

TEST_CASE("align_subjects is idempotent") {
    const auto ds = tiny_dataset({"s1", "s2", "s3"});
    const auto sheet = sheet_from({{"s1", "1"}, {"s2", ""}, {"s3", "2"}});
    const auto cohort = align_subjects(ds, sheet, "y");

    ConnectivityDataset again;
    again.subjects = cohort.subjects;
    again.node_labels = cohort.node_labels;
    again.matrices = cohort.connectivity;
    const auto cohort2 = align_subjects(again, cohort.sheet, "y");
    REQUIRE(cohort2.subjects == cohort.subjects);
    REQUIRE(cohort2.dropped.empty());
    for (std::size_t s = 0; s < cohort.subjects.size(); ++s)
        REQUIRE(cohort2.connectivity[s] == cohort.connectivity[s]);
}
