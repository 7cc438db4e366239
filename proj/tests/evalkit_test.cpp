#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "stallkit/evalkit.hpp"

using namespace stallkit;

namespace {

// classic dynamic-programming Levenshtein, kept deliberately separate from the
// implementation under test
std::size_t dp_levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

std::string random_string(std::mt19937_64& rng) {
    const std::string alphabet = "abcxyz ();.";
    std::string s;
    std::size_t len = rng() % 14;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
}

}  // namespace

TEST_CASE("line_em: trim rule") {
    CHECK(line_em("return x;", "return x;") == 1);
    CHECK(line_em("  return x;", "return x;") == 1);
    CHECK(line_em("return y;", "return x;") == 0);
    CHECK(line_em("return  x;", "return x;") == 0);  // interior whitespace preserved
}

TEST_CASE("line_es: definition and edge cases") {
    CHECK(line_es("abc", "abc") == doctest::Approx(1.0));
    CHECK(line_es("kitten", "sitting") == doctest::Approx(1.0 - 3.0 / 7.0));
    CHECK(line_es("abc", "") == doctest::Approx(0.0));
    CHECK(line_es("", "") == doctest::Approx(1.0));
    CHECK(line_es("  padded  ", "padded") == doctest::Approx(1.0));
}

TEST_CASE("line_es: 1000 random pairs match the DP oracle") {
    std::mt19937_64 rng(13);
    for (int round = 0; round < 1000; ++round) {
        std::string a = random_string(rng), b = random_string(rng);
        std::string ta = trim_copy(a), tb = trim_copy(b);
        double want = std::max(ta.size(), tb.size()) == 0
                          ? 1.0
                          : 1.0 - static_cast<double>(dp_levenshtein(ta, tb)) /
                                      static_cast<double>(std::max(ta.size(), tb.size()));
        CHECK(line_es(a, b) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("levenshtein: symmetry and triangle inequality on random pairs") {
    std::mt19937_64 rng(29);
    for (int round = 0; round < 300; ++round) {
        std::string a = random_string(rng), b = random_string(rng), c = random_string(rng);
        CHECK(levenshtein(a, b) == levenshtein(b, a));
        CHECK(levenshtein(a, b) == dp_levenshtein(a, b));
        CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    }
}

TEST_CASE("extract_identifiers: lexer read-off") {
    CHECK(extract_identifiers("s.trim(x)") == std::vector<std::string>{"s", "trim", "x"});
    CHECK(extract_identifiers("return 42;").empty());
    CHECK(extract_identifiers("int n = a + a;") == std::vector<std::string>{"n", "a", "a"});
    // unknown punctuation separates; an unterminated string ends extraction
    CHECK(extract_identifiers("ok @ ghost") == std::vector<std::string>{"ok", "ghost"});
    CHECK(extract_identifiers("ok \"broken ghost") == std::vector<std::string>{"ok"});
    CHECK(extract_identifiers("a // trailing note b") == std::vector<std::string>{"a"});
    CHECK(extract_identifiers("s.trim(\"lit\")") == std::vector<std::string>{"s", "trim"});
}

TEST_CASE("id_em and id_f1") {
    CHECK(id_em("a.b()", "b(c)") == 0);
    CHECK(id_f1("a(b)", "b(c)") == doctest::Approx(0.5));  // P = R = 0.5
    CHECK(id_em("x.go(y)", "x.go(y)") == 1);
    CHECK(id_f1("x.go(y)", "x.go(y)") == doctest::Approx(1.0));
    CHECK(id_em("", "x") == 0);
    CHECK(id_f1("", "x") == doctest::Approx(0.0));
    CHECK(id_em("42", "7") == 1);  // both empty identifier sequences
    CHECK(id_f1("42", "7") == doctest::Approx(1.0));
    // duplicates are multiset-counted
    CHECK(id_f1("a a b", "a b b") == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("line_em=1 implies line_es=1, id_em=1, id_f1=1") {
    std::mt19937_64 rng(41);
    for (int round = 0; round < 300; ++round) {
        std::string s = random_string(rng);
        std::string padded = "  " + s + " ";
        if (line_em(padded, s) == 1) {
            CHECK(line_es(padded, s) == doctest::Approx(1.0));
            CHECK(id_em(padded, s) == 1);
            CHECK(id_f1(padded, s) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("MetricsReport: aggregation means and percentages") {
    std::vector<TaskRecord> records(2);
    records[0].task_id = "a";
    records[0].line_em = 1;
    records[0].line_es = 1.0;
    records[0].id_em = 1;
    records[0].id_f1 = 1.0;
    records[0].total_s = 0.2;
    records[0].analysis_s = 0.05;
    records[1].task_id = "b";
    records[1].line_em = 0;
    records[1].line_es = 0.5;
    records[1].id_em = 0;
    records[1].id_f1 = 0.25;
    records[1].total_s = 0.4;
    records[1].analysis_s = 0.15;

    MetricsReport r = MetricsReport::aggregate("in-file", records);
    CHECK(r.n_tasks == 2);
    CHECK(r.line_em_pct == doctest::Approx(50.0));
    CHECK(r.line_es_pct == doctest::Approx(75.0));
    CHECK(r.id_em_pct == doctest::Approx(50.0));
    CHECK(r.id_f1_pct == doctest::Approx(62.5));
    CHECK(r.mean_latency_s == doctest::Approx(0.3));
    CHECK(r.mean_analysis_s == doctest::Approx(0.1));
}

TEST_CASE("report fixture: hand-computed oracle table") {
    // 10 precomputed predictions against references, recomputed by hand
    struct Row {
        const char* pred;
        const char* ref;
        int em;
    };
    std::vector<Row> rows{
        {"fetchValue();", "fetchValue();", 1},   {"grabValue();", "fetchValue();", 0},
        {"return 1;", "return 1;", 1},           {"  return 1;", "return 1;", 1},
        {"x.go()", "x.go()", 1},                 {"x.stop()", "x.go()", 0},
        {"", "", 1},                             {"a", "", 0},
        {"int n = 2;", "int n = 3;", 0},         {"done();", "done();", 1},
    };
    std::vector<TaskRecord> records;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        TaskRecord rec;
        rec.task_id = std::to_string(i);
        rec.prediction = rows[i].pred;
        rec.line_em = line_em(rows[i].pred, rows[i].ref);
        CHECK(rec.line_em == rows[i].em);
        rec.line_es = line_es(rows[i].pred, rows[i].ref);
        rec.id_em = id_em(rows[i].pred, rows[i].ref);
        rec.id_f1 = id_f1(rows[i].pred, rows[i].ref);
        records.push_back(rec);
    }
    MetricsReport r = MetricsReport::aggregate("fixture", records);
    CHECK(r.line_em_pct == doctest::Approx(60.0));  // 6 of 10 exact
    CHECK(r.n_tasks == 10);

    nlohmann::json j = report_to_json(r);
    CHECK(j["metrics"]["line_em"].get<double>() == doctest::Approx(60.0));
    CHECK(j["per_task"].size() == 10);
}

TEST_CASE("strip_timing_fields removes latency keys recursively") {
    nlohmann::json j = {{"label", "x"},
                        {"latency", {{"mean_total_s", 1.0}}},
                        {"per_task", {{{"task_id", "a"}, {"timing", {{"total_s", 0.5}}}}}},
                        {"build_time_s", 0.2}};
    strip_timing_fields(j);
    CHECK_FALSE(j.contains("latency"));
    CHECK_FALSE(j.contains("build_time_s"));
    CHECK_FALSE(j["per_task"][0].contains("timing"));
    CHECK(j["per_task"][0]["task_id"] == "a");
}

TEST_CASE("tables render aligned columns in Line EM, Line ES, ID EM, F1 order") {
    MetricsReport r;
    r.label = "in-file";
    r.n_tasks = 1;
    r.line_em_pct = 10.0;
    r.line_es_pct = 20.0;
    r.id_em_pct = 30.0;
    r.id_f1_pct = 40.0;
    std::string table = render_metrics_table({r});
    std::size_t em = table.find("Line EM");
    std::size_t es = table.find("Line ES");
    std::size_t idem = table.find("ID EM");
    std::size_t f1 = table.find("F1");
    REQUIRE(em != std::string::npos);
    CHECK(em < es);
    CHECK(es < idem);
    CHECK(idem < f1);
    CHECK(table.find("10.00") != std::string::npos);

    std::string lat = render_latency_table({r});
    CHECK(lat.find("analysis") != std::string::npos);
    CHECK(lat.find("inference") != std::string::npos);
}
