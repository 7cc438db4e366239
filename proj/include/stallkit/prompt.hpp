#pragma once

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stallkit/analyzer.hpp"
#include "stallkit/lm.hpp"
#include "stallkit/repo_index.hpp"
#include "stallkit/retriever.hpp"
#include "stallkit/tasks.hpp"

namespace stallkit {

// Strategy switches plus the binding constants: 2,000-token in-file window,
// 3,000 tokens per cross-file context, 3 retrieved snippets, 64 new tokens,
// beam width 3.
struct StrategyConfig {
    bool prompt_f = false;
    bool prompt_t = false;
    bool decode = false;
    bool post = false;
    bool rag = false;

    int in_file_tokens = 2000;
    int per_crossfile_tokens = 3000;
    int retrieved_k = 3;
    int max_new_tokens = 64;
    int beam_width = 3;

    // decode+post is disproportionately expensive (masked beam search); it
    // must be requested explicitly.
    bool allow_slow = false;

    bool needs_slow_gate() const { return decode && post && !allow_slow; }

    std::string label() const {
        std::vector<std::string> parts;
        if (rag) parts.push_back("rag");
        if (prompt_f) parts.push_back("prompt-f");
        if (prompt_t) parts.push_back("prompt-t");
        if (decode) parts.push_back("decode");
        if (post) parts.push_back("post");
        if (parts.empty()) return "in-file";
        std::string out = parts[0];
        for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
        return out;
    }
};

enum class SegmentKind { FileDeps, TokenDeps, Retrieved, InFile };

inline const char* segment_kind_name(SegmentKind k) {
    switch (k) {
        case SegmentKind::FileDeps: return "file-deps";
        case SegmentKind::TokenDeps: return "token-deps";
        case SegmentKind::Retrieved: return "retrieved";
        case SegmentKind::InFile: return "in-file";
    }
    return "?";
}

struct PromptSegment {
    SegmentKind kind;
    std::string text;
    int token_count = 0;
};

struct PromptBundle {
    std::vector<PromptSegment> segments;  // InFile is always present and last
    int total_tokens = 0;

    std::string text() const {
        std::string out;
        for (const auto& s : segments) out += s.text;
        return out;
    }
    const PromptSegment* find(SegmentKind k) const {
        for (const auto& s : segments)
            if (s.kind == k) return &s;
        return nullptr;
    }
};

// Hierarchical rendering of the imported classes, one comment block per
// resolvable import, in import order: module line, class signature, one line
// per field, one line per method signature.
inline std::string render_file_deps(const std::vector<std::string>& imports,
                                    const SymbolIndex& index) {
    std::string out;
    for (const auto& imp : imports) {
        const ClassSummary* cls = index.find_qualified(imp);
        if (!cls) continue;  // unresolvable imports are skipped, not fatal
        std::size_t dot = imp.find_last_of('.');
        std::string module = dot == std::string::npos ? imp : imp.substr(0, dot);
        out += "// module " + module + "\n";
        out += "// " + cls->signature + "\n";
        for (const auto& f : cls->field_names) out += "//   field " + f + "\n";
        for (const auto& m : cls->methods) out += "//   " + m.rendered + "\n";
    }
    return out;
}

// Tokens the prompt renderers emit beyond repository text (segment markers,
// digits, punctuation, file paths). Training corpora include this primer so
// assembled prompts stay in-vocabulary for the reference tokenizer.
inline std::string prompt_vocabulary_primer(const std::vector<std::string>& file_paths = {}) {
    std::string text =
        "// module m\n"
        "// class C\n"
        "//   field f\n"
        "// valid identifiers here: a, b\n"
        "// retrieved from x.sub:0-9\n"
        "0 1 2 3 4 5 6 7 8 9\n";
    for (const auto& p : file_paths) text += "// retrieved from " + p + ":0-0\n";
    return text;
}

// One comment line listing the identifiers valid at the cursor, sorted
// ascending. When a backend and budget are given, trailing identifiers that
// would push the line over the budget are dropped.
inline std::string render_token_deps(const ValidTokenSet& valid, const LmBackend* backend = nullptr,
                                     int budget_tokens = 0) {
    std::vector<std::string> names = valid.names();
    auto render = [](const std::vector<std::string>& ns) {
        std::string line = "// valid identifiers here:";
        for (std::size_t i = 0; i < ns.size(); ++i)
            line += (i == 0 ? " " : ", ") + ns[i];
        line += "\n";
        return line;
    };
    std::string line = render(names);
    if (backend && budget_tokens > 0) {
        while (!names.empty() &&
               static_cast<int>(backend->encode(line).size()) > budget_tokens) {
            names.pop_back();
            line = render(names);
        }
    }
    return line;
}

struct PhaseTimers {
    double analysis_s = 0.0;
    double inference_s = 0.0;
    double retrieval_s = 0.0;
};

namespace detail {

class ScopedTimer {
public:
    explicit ScopedTimer(double* sink) : sink_(sink), t0_(std::chrono::steady_clock::now()) {}
    ~ScopedTimer() {
        if (sink_)
            *sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    double* sink_;
    std::chrono::steady_clock::time_point t0_;
};

inline std::string truncate_tokens(const LmBackend& backend, const std::string& text, int budget,
                                   bool keep_tail, int* count_out) {
    std::vector<int> ids = backend.encode(text);
    if (static_cast<int>(ids.size()) <= budget) {
        *count_out = static_cast<int>(ids.size());
        return text;
    }
    std::vector<int> kept;
    if (keep_tail)
        kept.assign(ids.end() - budget, ids.end());
    else
        kept.assign(ids.begin(), ids.begin() + budget);
    *count_out = budget;
    return backend.decode(kept);
}

}  // namespace detail

// Callback supplying the valid-identifier set at the task cursor; the bench
// pipeline routes this through the perturbation knob.
using ValidSetProvider = std::function<ValidTokenSet()>;

// Assembles the model input: FileDeps, TokenDeps, Retrieved, InFile — each
// present iff enabled, InFile always last. The in-file prefix keeps its
// rightmost tokens (cursor-adjacent text is never cut); cross-file segments
// keep their beginning.
inline PromptBundle assemble(const CompletionTask& task, const StrategyConfig& config,
                             const SymbolIndex& index, const std::vector<Window>* windows,
                             const LmBackend& backend,
                             const ValidSetProvider& valid_provider = nullptr,
                             PhaseTimers* timers = nullptr) {
    PromptBundle bundle;
    SourceFile prefix_file(task.file, task.prefix);

    // phase timers wrap the static-analysis and retrieval work only; token
    // counting and truncation are backend (inference) work
    if (config.prompt_f) {
        std::string text;
        {
            detail::ScopedTimer t(timers ? &timers->analysis_s : nullptr);
            std::vector<std::string> imports;
            try {
                imports = extract_imports(prefix_file);
            } catch (const SyntaxError&) {
                // no usable header: skip the segment
            }
            text = render_file_deps(imports, index);
        }
        if (!text.empty()) {
            int count = 0;
            text = detail::truncate_tokens(backend, text, config.per_crossfile_tokens,
                                           /*keep_tail=*/false, &count);
            bundle.segments.push_back({SegmentKind::FileDeps, text, count});
        }
    }

    if (config.prompt_t) {
        ValidTokenSet valid;
        {
            detail::ScopedTimer t(timers ? &timers->analysis_s : nullptr);
            valid = valid_provider ? valid_provider()
                                   : valid_identifiers_at(prefix_file, task.prefix.size(), index);
        }
        std::string text = render_token_deps(valid, &backend, config.per_crossfile_tokens);
        int count = 0;
        text = detail::truncate_tokens(backend, text, config.per_crossfile_tokens,
                                       /*keep_tail=*/false, &count);
        bundle.segments.push_back({SegmentKind::TokenDeps, text, count});
    }

    if (config.rag && windows) {
        std::vector<Window> hits;
        {
            detail::ScopedTimer t(timers ? &timers->retrieval_s : nullptr);
            std::vector<std::string> lines = split_lines(task.prefix);
            int tail_begin = std::max(0, static_cast<int>(lines.size()) - kWindowLines);
            std::string query_text;
            for (std::size_t i = static_cast<std::size_t>(tail_begin); i < lines.size(); ++i)
                query_text += lines[i] + "\n";
            ExcludeRange exclude{task.file, tail_begin, static_cast<int>(lines.size()) - 1};
            hits = retrieve(*windows, normalize_tokens(query_text),
                            static_cast<std::size_t>(config.retrieved_k), exclude);
        }
        std::string text;
        for (const auto& w : hits) {
            text += "// retrieved from " + w.path + ":" + std::to_string(w.start_line) + "-" +
                    std::to_string(w.end_line) + "\n";
            for (const auto& line : split_lines(w.text)) text += "// " + line + "\n";
        }
        if (!text.empty()) {
            int count = 0;
            text = detail::truncate_tokens(backend, text, config.per_crossfile_tokens,
                                           /*keep_tail=*/false, &count);
            bundle.segments.push_back({SegmentKind::Retrieved, text, count});
        }
    }

    {
        int count = 0;
        std::string text = detail::truncate_tokens(backend, task.prefix, config.in_file_tokens,
                                                   /*keep_tail=*/true, &count);
        bundle.segments.push_back({SegmentKind::InFile, text, count});
    }

    for (const auto& s : bundle.segments) bundle.total_tokens += s.token_count;
    return bundle;
}

}  // namespace stallkit
