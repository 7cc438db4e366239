#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stallkit/common.hpp"
#include "stallkit/lexer.hpp"

#include <json.hpp>

namespace stallkit {

// ---------------------------------------------------------------------------
// Line and identifier metrics (Line EM, Line ES, ID EM, ID F1).
// ---------------------------------------------------------------------------

inline int line_em(const std::string& pred, const std::string& ref) {
    return trim_copy(pred) == trim_copy(ref) ? 1 : 0;
}

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
    const std::size_t m = a.size(), n = b.size();
    std::vector<std::size_t> prev(n + 1), cur(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

// 1 - lev / max(len); both inputs trimmed first, two empty strings score 1.
inline double line_es(const std::string& pred, const std::string& ref) {
    std::string p = trim_copy(pred), r = trim_copy(ref);
    std::size_t mx = std::max(p.size(), r.size());
    if (mx == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(p, r)) / static_cast<double>(mx);
}

// Identifiers in order of appearance; keywords and type names are excluded,
// duplicates preserved. Unknown punctuation separates tokens (model output is
// arbitrary text), but an unterminated string swallows the rest of the line.
inline std::vector<std::string> extract_identifiers(const std::string& line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (i < n) {
        char c = line[i];
        if (is_ident_start(c)) {
            std::size_t b = i;
            while (i < n && is_ident_char(line[i])) ++i;
            std::string word = line.substr(b, i - b);
            if (!is_keyword(word)) out.push_back(std::move(word));
        } else if (c == '"') {
            ++i;
            while (i < n && line[i] != '"') ++i;
            if (i >= n) break;  // unterminated: nothing past the error point
            ++i;
        } else if (c == '/' && i + 1 < n && line[i + 1] == '/') {
            break;
        } else {
            ++i;
        }
    }
    return out;
}

inline int id_em(const std::string& pred, const std::string& ref) {
    return extract_identifiers(pred) == extract_identifiers(ref) ? 1 : 0;
}

// F1 over identifier multisets; both-empty scores 1.
inline double id_f1(const std::string& pred, const std::string& ref) {
    std::vector<std::string> p = extract_identifiers(pred);
    std::vector<std::string> r = extract_identifiers(ref);
    if (p.empty() && r.empty()) return 1.0;
    if (p.empty() || r.empty()) return 0.0;
    std::map<std::string, std::size_t> pc, rc;
    for (const auto& s : p) pc[s]++;
    for (const auto& s : r) rc[s]++;
    std::size_t inter = 0;
    for (const auto& [s, c] : pc) {
        auto it = rc.find(s);
        if (it != rc.end()) inter += std::min(c, it->second);
    }
    if (inter == 0) return 0.0;
    double precision = static_cast<double>(inter) / static_cast<double>(p.size());
    double recall = static_cast<double>(inter) / static_cast<double>(r.size());
    return 2.0 * precision * recall / (precision + recall);
}

// ---------------------------------------------------------------------------
// Per-run report: metric percentages plus the latency breakdown.
// ---------------------------------------------------------------------------

struct TaskRecord {
    std::string task_id;
    std::string prediction;
    int line_em = 0;
    double line_es = 0.0;
    int id_em = 0;
    double id_f1 = 0.0;
    double total_s = 0.0;
    double analysis_s = 0.0;
    double inference_s = 0.0;
    double retrieval_s = 0.0;
    std::string error;  // non-empty when the task failed and scored zero
};

struct MetricsReport {
    std::string label;
    std::size_t n_tasks = 0;
    double line_em_pct = 0.0;
    double line_es_pct = 0.0;
    double id_em_pct = 0.0;
    double id_f1_pct = 0.0;
    double mean_latency_s = 0.0;
    double mean_analysis_s = 0.0;
    double mean_inference_s = 0.0;
    double mean_retrieval_s = 0.0;
    std::vector<TaskRecord> per_task;

    static MetricsReport aggregate(const std::string& label, std::vector<TaskRecord> records) {
        MetricsReport r;
        r.label = label;
        r.n_tasks = records.size();
        for (const auto& t : records) {
            r.line_em_pct += t.line_em;
            r.line_es_pct += t.line_es;
            r.id_em_pct += t.id_em;
            r.id_f1_pct += t.id_f1;
            r.mean_latency_s += t.total_s;
            r.mean_analysis_s += t.analysis_s;
            r.mean_inference_s += t.inference_s;
            r.mean_retrieval_s += t.retrieval_s;
        }
        if (!records.empty()) {
            double n = static_cast<double>(records.size());
            r.line_em_pct = 100.0 * r.line_em_pct / n;
            r.line_es_pct = 100.0 * r.line_es_pct / n;
            r.id_em_pct = 100.0 * r.id_em_pct / n;
            r.id_f1_pct = 100.0 * r.id_f1_pct / n;
            r.mean_latency_s /= n;
            r.mean_analysis_s /= n;
            r.mean_inference_s /= n;
            r.mean_retrieval_s /= n;
        }
        r.per_task = std::move(records);
        return r;
    }
};

// Timing fields live under fixed keys so deterministic comparisons can strip
// them (see strip_timing_fields).
inline nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["label"] = r.label;
    j["n_tasks"] = r.n_tasks;
    j["metrics"] = {{"line_em", r.line_em_pct},
                    {"line_es", r.line_es_pct},
                    {"id_em", r.id_em_pct},
                    {"id_f1", r.id_f1_pct}};
    j["latency"] = {{"mean_total_s", r.mean_latency_s},
                    {"mean_analysis_s", r.mean_analysis_s},
                    {"mean_inference_s", r.mean_inference_s},
                    {"mean_retrieval_s", r.mean_retrieval_s}};
    j["per_task"] = nlohmann::json::array();
    for (const auto& t : r.per_task) {
        nlohmann::json jt;
        jt["task_id"] = t.task_id;
        jt["prediction"] = t.prediction;
        jt["line_em"] = t.line_em;
        jt["line_es"] = t.line_es;
        jt["id_em"] = t.id_em;
        jt["id_f1"] = t.id_f1;
        jt["timing"] = {{"total_s", t.total_s},
                        {"analysis_s", t.analysis_s},
                        {"inference_s", t.inference_s},
                        {"retrieval_s", t.retrieval_s}};
        if (!t.error.empty()) jt["error"] = t.error;
        j["per_task"].push_back(jt);
    }
    return j;
}

inline void strip_timing_fields(nlohmann::json& j) {
    if (j.is_object()) {
        j.erase("latency");
        j.erase("timing");
        j.erase("build_time_s");
        for (auto& [k, v] : j.items()) strip_timing_fields(v);
    } else if (j.is_array()) {
        for (auto& v : j) strip_timing_fields(v);
    }
}

// Aligned-column table, one row per report (Line EM, Line ES, ID EM, F1).
inline std::string render_metrics_table(const std::vector<MetricsReport>& reports) {
    std::size_t label_w = 8;
    for (const auto& r : reports) label_w = std::max(label_w, r.label.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(label_w + 2)) << "strategy" << std::right
        << std::setw(9) << "Line EM" << std::setw(9) << "Line ES" << std::setw(9) << "ID EM"
        << std::setw(9) << "F1" << "\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& r : reports) {
        out << std::left << std::setw(static_cast<int>(label_w + 2)) << r.label << std::right
            << std::setw(9) << r.line_em_pct << std::setw(9) << r.line_es_pct << std::setw(9)
            << r.id_em_pct << std::setw(9) << r.id_f1_pct << "\n";
    }
    return out.str();
}

// Per-strategy online cost table (unit: s/item).
inline std::string render_latency_table(const std::vector<MetricsReport>& reports) {
    std::size_t label_w = 8;
    for (const auto& r : reports) label_w = std::max(label_w, r.label.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(label_w + 2)) << "strategy" << std::right
        << std::setw(12) << "total" << std::setw(12) << "analysis" << std::setw(12) << "inference"
        << std::setw(12) << "retrieval" << "\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& r : reports) {
        out << std::left << std::setw(static_cast<int>(label_w + 2)) << r.label << std::right
            << std::setw(12) << r.mean_latency_s << std::setw(12) << r.mean_analysis_s
            << std::setw(12) << r.mean_inference_s << std::setw(12) << r.mean_retrieval_s << "\n";
    }
    return out.str();
}

}  // namespace stallkit
