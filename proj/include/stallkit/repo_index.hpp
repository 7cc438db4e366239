#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stallkit/analyzer.hpp"
#include "stallkit/common.hpp"

#include <json.hpp>

namespace stallkit {

struct RepoSnapshot {
    std::string root;
    std::string name;
    std::vector<SourceFile> files;  // unique paths, lexicographic order

    const SourceFile* find(const std::string& path) const {
        for (const auto& f : files)
            if (f.path == path) return &f;
        return nullptr;
    }
};

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Loads a directory tree of ".sub" files; reads the optional repo.json manifest.
inline RepoSnapshot load_repo(const std::string& root) {
    namespace fs = std::filesystem;
    RepoSnapshot repo;
    repo.root = root;
    repo.name = fs::path(root).filename().string();
    if (!fs::exists(root)) throw EmptyRepository(root);

    fs::path manifest = fs::path(root) / "repo.json";
    if (fs::exists(manifest)) {
        auto j = nlohmann::json::parse(read_text_file(manifest), nullptr, false);
        if (!j.is_discarded() && j.contains("name")) repo.name = j["name"].get<std::string>();
    }

    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".sub") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        std::string rel = fs::relative(p, root).generic_string();
        repo.files.emplace_back(rel, read_text_file(p));
    }
    if (repo.files.empty()) throw EmptyRepository(root);
    return repo;
}

// Precomputes the cross-file symbol index. Files whose header parses
// contribute their recoverable class declarations even when the body has
// errors; files with broken headers are recorded as skipped.
inline SymbolIndex build_index(const RepoSnapshot& repo) {
    if (repo.files.empty()) throw EmptyRepository(repo.root);
    auto t0 = std::chrono::steady_clock::now();
    SymbolIndex index;
    for (const auto& f : repo.files) {
        ParsedFile pf = parse_tolerant(f.text);
        if (!pf.header_ok) {
            std::string why = pf.header_diagnostic ? pf.header_diagnostic->second : "bad header";
            index.skipped.push_back({f.path, why});
            continue;
        }
        if (!pf.diagnostics.empty()) {
            std::ostringstream ss;
            ss << pf.diagnostics.size() << " body diagnostic(s), first: offset "
               << pf.diagnostics.front().first << " " << pf.diagnostics.front().second;
            index.skipped.push_back({f.path, ss.str()});
        }
        for (const auto& cls : pf.classes) {
            std::string qname = pf.package.empty() ? cls.name : pf.package + "." + cls.name;
            auto it = index.file_of.find(qname);
            if (it != index.file_of.end()) throw DuplicateSymbol(qname, it->second, f.path);
            index.modules.emplace(qname, cls.summary());
            index.file_of.emplace(qname, f.path);
        }
    }
    index.build_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return index;
}

// Summary for a qualified name; throws UnknownImport (with any recorded skip
// diagnostic for that package) when absent. Callers degrade, not abort.
inline const ClassSummary& resolve_import(const SymbolIndex& index, const std::string& qname) {
    if (const ClassSummary* c = index.find_qualified(qname)) return *c;
    std::string diag;
    for (const auto& sk : index.skipped) {
        if (!diag.empty()) break;
        diag = sk.path + ": " + sk.diagnostic;
    }
    throw UnknownImport(qname, diag);
}

// ---------------------------------------------------------------------------
// Index (de)serialization. build_time is intentionally not persisted so that
// re-running the indexer over an unchanged repository writes an identical file.
// ---------------------------------------------------------------------------

inline nlohmann::json index_to_json(const SymbolIndex& index) {
    nlohmann::json j;
    j["modules"] = nlohmann::json::object();
    for (const auto& [qname, cls] : index.modules) {
        nlohmann::json jc;
        jc["name"] = cls.name;
        jc["signature"] = cls.signature;
        jc["fields"] = nlohmann::json::array();
        for (std::size_t i = 0; i < cls.field_names.size(); ++i)
            jc["fields"].push_back({{"name", cls.field_names[i]}, {"type", cls.field_types[i]}});
        jc["methods"] = nlohmann::json::array();
        for (const auto& m : cls.methods) {
            nlohmann::json jm;
            jm["name"] = m.name;
            jm["return_type"] = m.return_type;
            jm["params"] = nlohmann::json::array();
            for (const auto& [pn, pt] : m.params) jm["params"].push_back({{"name", pn}, {"type", pt}});
            jm["rendered"] = m.rendered;
            jc["methods"].push_back(jm);
        }
        jc["file"] = index.file_of.at(qname);
        j["modules"][qname] = jc;
    }
    j["skipped"] = nlohmann::json::array();
    for (const auto& sk : index.skipped)
        j["skipped"].push_back({{"path", sk.path}, {"diagnostic", sk.diagnostic}});
    return j;
}

inline SymbolIndex index_from_json(const nlohmann::json& j) {
    SymbolIndex index;
    for (const auto& [qname, jc] : j.at("modules").items()) {
        ClassSummary cls;
        cls.name = jc.at("name").get<std::string>();
        cls.signature = jc.at("signature").get<std::string>();
        for (const auto& jf : jc.at("fields")) {
            cls.field_names.push_back(jf.at("name").get<std::string>());
            cls.field_types.push_back(jf.at("type").get<std::string>());
        }
        for (const auto& jm : jc.at("methods")) {
            MethodSignature m;
            m.name = jm.at("name").get<std::string>();
            m.return_type = jm.at("return_type").get<std::string>();
            for (const auto& jp : jm.at("params"))
                m.params.emplace_back(jp.at("name").get<std::string>(), jp.at("type").get<std::string>());
            m.rendered = jm.at("rendered").get<std::string>();
            cls.methods.push_back(std::move(m));
        }
        index.modules.emplace(qname, std::move(cls));
        index.file_of.emplace(qname, jc.at("file").get<std::string>());
    }
    for (const auto& js : j.at("skipped"))
        index.skipped.push_back({js.at("path").get<std::string>(), js.at("diagnostic").get<std::string>()});
    return index;
}

inline bool index_equal(const SymbolIndex& a, const SymbolIndex& b) {
    return index_to_json(a) == index_to_json(b);
}

}  // namespace stallkit
