#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "stallkit/common.hpp"

#include <json.hpp>

namespace stallkit {

// One line-completion instance. Field names in the JSONL form follow
// CrossCodeEval conventions (prompt / groundtruth / metadata) so externally
// produced task files load unchanged; unknown fields ride along in `extra`.
struct CompletionTask {
    std::string task_id;
    std::string repo;
    std::string file;
    std::string prefix;       // text before the cursor ("prompt" on the wire)
    std::string groundtruth;  // reference completion for the unfinished line
    int cursor_line = 0;
    int cursor_col = 0;
    bool unique_valid = false;
    bool unseen = false;
    nlohmann::json extra = nlohmann::json::object();
};

inline nlohmann::json task_to_json(const CompletionTask& t) {
    nlohmann::json j = t.extra;
    j["task_id"] = t.task_id;
    j["repo"] = t.repo;
    j["file"] = t.file;
    j["prompt"] = t.prefix;
    j["groundtruth"] = t.groundtruth;
    j["cursor"] = {{"line", t.cursor_line}, {"col", t.cursor_col}};
    nlohmann::json meta = t.extra.contains("meta") ? t.extra["meta"] : nlohmann::json::object();
    meta["unique_valid"] = t.unique_valid;
    meta["unseen"] = t.unseen;
    j["meta"] = meta;
    return j;
}

inline CompletionTask task_from_json(const nlohmann::json& j, std::size_t line_no) {
    for (const char* req : {"task_id", "prompt", "groundtruth"})
        if (!j.contains(req)) throw MalformedRecord(line_no, std::string("missing field ") + req);
    CompletionTask t;
    t.task_id = j.at("task_id").get<std::string>();
    t.repo = j.value("repo", std::string{});
    t.file = j.value("file", std::string{});
    t.prefix = j.at("prompt").get<std::string>();
    t.groundtruth = j.at("groundtruth").get<std::string>();
    if (j.contains("cursor")) {
        t.cursor_line = j["cursor"].value("line", 0);
        t.cursor_col = j["cursor"].value("col", 0);
    }
    if (j.contains("meta")) {
        t.unique_valid = j["meta"].value("unique_valid", false);
        t.unseen = j["meta"].value("unseen", false);
    }
    t.extra = j;
    for (const char* known : {"task_id", "repo", "file", "prompt", "groundtruth", "cursor"})
        t.extra.erase(known);
    return t;
}

inline void save_tasks(const std::vector<CompletionTask>& tasks, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& t : tasks) out << task_to_json(t).dump() << '\n';
}

inline std::vector<CompletionTask> load_tasks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<CompletionTask> tasks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedRecord(line_no, "invalid JSON");
        tasks.push_back(task_from_json(j, line_no));
    }
    return tasks;
}

}  // namespace stallkit
