#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "stallkit/analyzer.hpp"
#include "stallkit/repo_index.hpp"
#include "stallkit/tasks.hpp"

namespace stallkit {

// Deterministic generator of desk-scale synthetic repositories and cross-file
// completion tasks. Every task's ground-truth line invokes a member declared
// in another file of the same repository; the member is used (with different
// receivers) in dedicated usage files, never in the target file's prefix.
// Distractor methods with look-alike names are planted in the in-file context.

struct GenConfig {
    std::uint64_t seed = 1;
    int n_repos = 4;
    int tasks_per_repo = 4;
    int distractors = 3;
    double unique_frac = 0.7;  // fraction of tasks whose receiver class has a single member
    double unseen_frac = 1.0;  // fraction of tasks whose ground-truth line is held out of training
    int usage_files = 3;
    int gt_usage_lines = 6;      // cross-file call sites per ground-truth member
    int filler_usage_lines = 2;  // call sites per additional member
};

struct GeneratedRepo {
    std::string name;
    std::vector<SourceFile> files;

    RepoSnapshot snapshot() const { return RepoSnapshot{name, name, files}; }
};

struct GeneratedCorpus {
    std::vector<GeneratedRepo> repos;
    std::vector<CompletionTask> tasks;
};

namespace detail {

// Draws deterministic, globally unique names: a seeded shuffle of the base
// list, then numbered rounds ("fetch", ..., "fetch2", ...) once exhausted.
class NamePool {
public:
    NamePool(std::vector<std::string> base, std::mt19937_64& rng) : base_(std::move(base)) {
        for (std::size_t i = base_.size(); i > 1; --i)
            std::swap(base_[i - 1], base_[static_cast<std::size_t>(rng() % i)]);
    }

    std::string draw() {
        std::string name = base_[next_];
        if (round_ > 1) name += std::to_string(round_);
        if (++next_ == base_.size()) {
            next_ = 0;
            ++round_;
        }
        return name;
    }

private:
    std::vector<std::string> base_;
    std::size_t next_ = 0;
    int round_ = 1;
};

inline std::vector<std::string> gt_verb_words() {
    return {"fetch", "scan",  "merge", "emit",  "parse", "patch", "probe", "rank",
            "seal",  "shift", "sort",  "split", "stash", "sum",   "sync",  "tally",
            "trace", "trim",  "tune",  "wrap",  "yield", "zip",   "bind",  "blend",
            "boost", "carve", "chart", "clamp", "clone", "craft", "crop",  "curb",
            "dice",  "drain", "dump",  "etch",  "fold",  "forge", "fuse",  "glean",
            "graft", "grind", "hoist", "knead", "lace",  "lift",  "mold",  "notch",
            "pick",  "pluck", "prune", "quilt", "raise", "rinse", "rivet", "scrub",
            "shear", "sift",  "skim",  "slice", "snap",  "spool", "stamp", "steer",
            "stow",  "swap",  "sweep", "tilt",  "toast", "weld"};
}

inline std::vector<std::string> filler_verb_words() {
    return {"grab",  "load",  "poke",  "push",  "pull",  "read",  "send",  "show",
            "take",  "walk",  "wash",  "watch", "weigh", "whisk", "wind",  "age",
            "bake",  "bale",  "bolt",  "brew",  "brush", "buff",  "cast",  "chop",
            "coat",  "comb",  "cook",  "cool",  "dab",   "daub",  "dip",   "drape",
            "dress", "dry",   "dust",  "fan",   "file",  "fill",  "fit",   "fix"};
}

inline std::vector<std::string> member_noun_words() {
    return {"Value", "Token", "Queue", "Depth", "Gauge", "Ledge", "Batch", "Chunk",
            "Crumb", "Digit", "Ember", "Fiber", "Flake", "Gleam", "Hinge", "Ingot",
            "Joint", "Kernel", "Lumen", "Motif", "Nugget", "Orbit", "Pearl", "Quill",
            "Ridge", "Shard", "Tuft",  "Umbra", "Vault", "Wedge"};
}

inline std::vector<std::string> api_adjective_words() {
    return {"Swift", "Quiet", "Brisk", "Amber", "Bold",  "Calm",  "Crisp", "Deft",
            "Dry",   "Fond",  "Glad",  "Grand", "Keen",  "Kind",  "Lean",  "Loud",
            "Mild",  "Neat",  "Pale",  "Plain", "Prime", "Proud", "Pure",  "Rapid",
            "Rare",  "Rich",  "Ripe",  "Sage",  "Sharp", "Sleek", "Slim",  "Smug",
            "Snug",  "Solid", "Spare", "Stark", "Stern", "Stout", "Tame",  "Tart",
            "Terse", "Tidy",  "Tough", "Trim",  "Vast",  "Vivid", "Warm",  "Wise"};
}

inline std::vector<std::string> local_class_adjective_words() {
    return {"Inner", "Local", "Handy", "Plucky", "Breezy", "Chilly", "Dusty", "Early",
            "Foggy", "Gusty", "Hasty", "Jolly",  "Lanky",  "Lofty",  "Mossy", "Nifty",
            "Perky", "Rusty", "Sandy", "Shiny",  "Sunny",  "Tangy",  "Windy", "Zesty"};
}

inline std::vector<std::string> class_noun_words() {
    return {"Ledger", "Parser", "Binder", "Cache", "Folio", "Basket", "Anvil", "Beacon",
            "Bureau", "Canvas", "Cellar", "Duct",  "Easel", "Funnel", "Garret", "Hamper",
            "Jetty",  "Kiln",   "Lathe",  "Mantel", "Niche", "Paddock", "Rafter", "Satchel",
            "Trellis", "Vat",   "Wharf",  "Yoke"};
}

inline std::vector<std::string> lowercase_words() {
    return {"acorn", "basil", "cedar", "dune",  "elm",    "fern",   "gorse", "hazel",
            "iris",  "jade",  "kelp",  "larch", "maple",  "nettle", "oak",   "pine",
            "quince", "reed", "sedge", "thyme", "umber",  "vetch",  "willow", "yarrow",
            "agate", "beryl", "coral", "flint", "garnet", "jasper", "lapis", "onyx",
            "opal",  "pyrite", "quartz", "shale", "slate", "topaz",  "brook", "cliff",
            "delta", "fjord", "glen",  "heath", "inlet",  "knoll",  "marsh", "ridge",
            "shoal", "tarn",  "vale",  "wold"};
}

struct MemberSpec {
    std::string name;  // e.g. "fetchValue"
    bool is_gt = false;
};

struct ApiClassSpec {
    std::string name;
    std::vector<MemberSpec> members;
    std::string gt_member;
    std::string gt_noun;  // distractors reuse this noun
};

inline std::string method_decl(const std::string& name, int ret) {
    return "    int " + name + "() {\n        return " + std::to_string(ret) + ";\n    }\n";
}

}  // namespace detail

inline GeneratedCorpus generate_corpus(const GenConfig& cfg) {
    if (cfg.n_repos < 1) throw std::invalid_argument("generate_corpus: n_repos must be >= 1");
    std::mt19937_64 rng(cfg.seed);
    GeneratedCorpus out;

    detail::NamePool gt_verbs(detail::gt_verb_words(), rng);
    detail::NamePool filler_verbs(detail::filler_verb_words(), rng);
    detail::NamePool api_adjectives(detail::api_adjective_words(), rng);
    detail::NamePool local_adjectives(detail::local_class_adjective_words(), rng);
    detail::NamePool words(detail::lowercase_words(), rng);
    std::vector<std::string> member_nouns = detail::member_noun_words();
    std::vector<std::string> class_nouns = detail::class_noun_words();
    auto pick = [&rng](const std::vector<std::string>& v) {
        return v[static_cast<std::size_t>(rng() % v.size())];
    };

    int task_counter = 0;
    for (int r = 0; r < cfg.n_repos; ++r) {
        GeneratedRepo repo;
        std::string pkg = words.draw();
        repo.name = pkg;

        // plan the API classes, one per task
        std::vector<detail::ApiClassSpec> api;
        for (int t = 0; t < cfg.tasks_per_repo; ++t) {
            detail::ApiClassSpec cls;
            cls.name = api_adjectives.draw() + pick(class_nouns);
            cls.gt_noun = pick(member_nouns);
            cls.gt_member = gt_verbs.draw() + cls.gt_noun;
            bool unique = unit_draw(rng) < cfg.unique_frac;
            cls.members.push_back({cls.gt_member, true});
            if (!unique) {
                int extra = 1 + static_cast<int>(rng() % 2);
                for (int e = 0; e < extra; ++e)
                    cls.members.push_back({filler_verbs.draw() + pick(member_nouns), false});
            }
            api.push_back(std::move(cls));
        }

        // api.sub: all member declarations
        {
            std::string text = "package " + pkg + ";\n\n";
            int ret = 7;
            for (const auto& cls : api) {
                text += "class " + cls.name + " {\n";
                for (const auto& m : cls.members) text += detail::method_decl(m.name, ret++);
                text += "}\n";
            }
            repo.files.emplace_back("api.sub", text);
        }

        // usage files: every api class imported; each class is exercised in
        // exactly one usage file (round-robin)
        for (int u = 0; u < cfg.usage_files; ++u) {
            std::string text = "package " + pkg + ";\n";
            for (const auto& cls : api) text += "import " + pkg + "." + cls.name + ";\n";
            text += "\nclass " + local_adjectives.draw() + pick(class_nouns) + " {\n";
            bool any = false;
            for (int t = 0; t < cfg.tasks_per_repo; ++t) {
                if (t % cfg.usage_files != u) continue;
                any = true;
                const auto& cls = api[static_cast<std::size_t>(t)];
                std::string recv = words.draw();
                text += "    int " + words.draw() + "() {\n";
                text += "        " + cls.name + " " + recv + " = 0;\n";
                for (const auto& m : cls.members) {
                    int calls = m.is_gt ? cfg.gt_usage_lines : cfg.filler_usage_lines;
                    for (int c = 0; c < calls; ++c)
                        text += "        " + recv + "." + m.name + "();\n";
                }
                text += "        return 1;\n    }\n";
            }
            if (!any) {
                text += "    int " + words.draw() + "() {\n        return 1;\n    }\n";
            }
            text += "}\n";
            repo.files.emplace_back("use" + std::to_string(u) + ".sub", text);
        }

        // target files: one task each, distractors planted in the prefix
        for (int t = 0; t < cfg.tasks_per_repo; ++t) {
            const auto& cls = api[static_cast<std::size_t>(t)];
            std::string path = "task" + std::to_string(t) + ".sub";
            std::string tgt_class = local_adjectives.draw() + pick(class_nouns);
            std::string field = words.draw();
            std::string recv = words.draw();
            std::string tmp = words.draw();

            std::vector<std::string> distractor_names;
            for (int d = 0; d < cfg.distractors; ++d)
                distractor_names.push_back(filler_verbs.draw() + cls.gt_noun);

            std::string text = "package " + pkg + ";\n";
            text += "import " + pkg + "." + cls.name + ";\n\n";
            text += "class " + tgt_class + " {\n";
            text += "    int " + field + ";\n";
            int ret = 3;
            for (const auto& d : distractor_names) text += detail::method_decl(d, ret++);
            text += "    int " + words.draw() + "() {\n";
            text += "        " + cls.name + " " + recv + " = 0;\n";
            for (const auto& d : distractor_names) text += "        " + d + "();\n";
            text += "        int " + tmp + " = 8;\n";
            std::string gt_line_head = "        " + recv + ".";
            std::string gt_completion = cls.gt_member + "();";
            std::size_t cursor_offset = text.size() + gt_line_head.size();
            int cursor_line = 0;
            for (char c : text)
                if (c == '\n') ++cursor_line;
            int cursor_col = static_cast<int>(gt_line_head.size());
            text += gt_line_head + gt_completion + "\n";
            text += "        return " + tmp + ";\n    }\n}\n";

            CompletionTask task;
            task.task_id = pkg + "-" + std::to_string(task_counter++);
            task.repo = repo.name;
            task.file = path;
            task.prefix = text.substr(0, cursor_offset);
            task.groundtruth = gt_completion;
            task.cursor_line = cursor_line;
            task.cursor_col = cursor_col;
            task.unique_valid = cls.members.size() == 1;
            task.unseen = unit_draw(rng) < cfg.unseen_frac;
            out.tasks.push_back(std::move(task));

            repo.files.emplace_back(path, text);
        }

        std::sort(repo.files.begin(), repo.files.end(),
                  [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
        out.repos.push_back(std::move(repo));
    }
    return out;
}

inline void write_corpus(const GeneratedCorpus& corpus, const std::string& out_dir) {
    namespace fs = std::filesystem;
    for (const auto& repo : corpus.repos) {
        fs::path root = fs::path(out_dir) / "repos" / repo.name;
        fs::create_directories(root);
        for (const auto& f : repo.files) {
            std::ofstream out(root / f.path, std::ios::binary);
            out << f.text;
        }
        std::ofstream manifest(root / "repo.json", std::ios::binary);
        manifest << nlohmann::json{{"name", repo.name}, {"language", "subjectlang"}}.dump(2) << "\n";
    }
    save_tasks(corpus.tasks, (fs::path(out_dir) / "tasks.jsonl").string());
}

}  // namespace stallkit
