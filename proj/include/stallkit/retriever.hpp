#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "stallkit/lexer.hpp"
#include "stallkit/repo_index.hpp"

namespace stallkit {

// RAG baseline: sliding-window snippet store (20-line windows, stride 10) and
// lexical top-k retrieval by Jaccard similarity.

inline constexpr int kWindowLines = 20;
inline constexpr int kWindowStride = 10;

struct Window {
    std::string path;
    int start_line = 0;  // 0-based, inclusive
    int end_line = 0;
    std::string text;
    std::set<std::string> token_set;
};

// Lowercased lexical tokens; punctuation dropped. Lenient: an unlexable tail
// contributes nothing past the error point.
inline std::set<std::string> normalize_tokens(const std::string& text) {
    std::set<std::string> out;
    LexResult lr = lex_subject(text, /*lenient=*/true);
    for (const auto& t : lr.tokens) {
        if (t.kind == TokKind::Punct || t.kind == TokKind::End) continue;
        std::string low = t.text;
        std::transform(low.begin(), low.end(), low.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.insert(std::move(low));
    }
    return out;
}

inline std::vector<Window> build_windows(const RepoSnapshot& repo) {
    std::vector<Window> out;
    for (const auto& f : repo.files) {
        std::vector<std::string> lines = split_lines(f.text);
        const int n = static_cast<int>(lines.size());
        for (int start = 0; start < n; start += kWindowStride) {
            Window w;
            w.path = f.path;
            w.start_line = start;
            w.end_line = std::min(start + kWindowLines, n) - 1;
            for (int i = start; i <= w.end_line; ++i) {
                w.text += lines[static_cast<std::size_t>(i)];
                w.text += '\n';
            }
            w.token_set = normalize_tokens(w.text);
            out.push_back(std::move(w));
        }
    }
    return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct ExcludeRange {
    std::string path;
    int start_line = 0;
    int end_line = -1;  // inclusive; empty range when end < start
};

// Top-k windows by descending Jaccard to the query; ties broken by
// (path, start_line) ascending. Windows overlapping the excluded cursor
// region are removed before ranking.
inline std::vector<Window> retrieve(const std::vector<Window>& windows,
                                    const std::set<std::string>& query, std::size_t k,
                                    const ExcludeRange& exclude) {
    std::vector<const Window*> pool;
    for (const auto& w : windows) {
        bool overlaps = w.path == exclude.path && w.start_line <= exclude.end_line &&
                        exclude.start_line <= w.end_line;
        if (!overlaps) pool.push_back(&w);
    }
    std::stable_sort(pool.begin(), pool.end(), [&](const Window* x, const Window* y) {
        double jx = jaccard(x->token_set, query);
        double jy = jaccard(y->token_set, query);
        if (jx != jy) return jx > jy;
        if (x->path != y->path) return x->path < y->path;
        return x->start_line < y->start_line;
    });
    std::vector<Window> out;
    for (std::size_t i = 0; i < pool.size() && i < k; ++i) out.push_back(*pool[i]);
    return out;
}

}  // namespace stallkit
