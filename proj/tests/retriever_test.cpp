#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "stallkit/retriever.hpp"

using namespace stallkit;

namespace {

RepoSnapshot repo_of_lines(std::vector<std::pair<std::string, int>> specs) {
    RepoSnapshot repo;
    repo.name = "fixture";
    std::mt19937_64 rng(5);
    const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "epsilon",
                                         "zeta",  "eta",  "theta", "iota",  "kappa"};
    for (auto& [path, nlines] : specs) {
        std::string text;
        for (int i = 0; i < nlines; ++i) {
            text += words[rng() % words.size()] + " " + words[rng() % words.size()];
            text += "\n";
        }
        repo.files.emplace_back(path, text);
    }
    return repo;
}

// exhaustive-scoring oracle
std::vector<Window> brute_force_retrieve(const std::vector<Window>& windows,
                                         const std::set<std::string>& query, std::size_t k,
                                         const ExcludeRange& exclude) {
    std::vector<Window> pool;
    for (const auto& w : windows) {
        bool overlaps = w.path == exclude.path && w.start_line <= exclude.end_line &&
                        exclude.start_line <= w.end_line;
        if (!overlaps) pool.push_back(w);
    }
    std::sort(pool.begin(), pool.end(), [&](const Window& x, const Window& y) {
        double jx = jaccard(x.token_set, query), jy = jaccard(y.token_set, query);
        if (jx != jy) return jx > jy;
        if (x.path != y.path) return x.path < y.path;
        return x.start_line < y.start_line;
    });
    if (pool.size() > k) pool.resize(k);
    return pool;
}

}  // namespace

TEST_CASE("build_windows: stride arithmetic") {
    RepoSnapshot repo = repo_of_lines({{"f.sub", 25}});
    std::vector<Window> w = build_windows(repo);
    REQUIRE(w.size() == 3);
    CHECK(w[0].start_line == 0);
    CHECK(w[0].end_line == 19);
    CHECK(w[1].start_line == 10);
    CHECK(w[1].end_line == 24);
    CHECK(w[2].start_line == 20);
    CHECK(w[2].end_line == 24);

    RepoSnapshot small = repo_of_lines({{"s.sub", 5}});
    std::vector<Window> ws = build_windows(small);
    REQUIRE(ws.size() == 1);
    CHECK(ws[0].start_line == 0);
    CHECK(ws[0].end_line == 4);

    RepoSnapshot empty;
    empty.files.emplace_back("e.sub", "");
    CHECK(build_windows(empty).empty());
}

TEST_CASE("build_windows: boundaries match the stride rule for lengths 1..45") {
    for (int len = 1; len <= 45; ++len) {
        RepoSnapshot repo = repo_of_lines({{"f.sub", len}});
        std::vector<Window> w = build_windows(repo);
        // oracle: starts at 0,10,20,... spanning min(20, remaining)
        std::vector<std::pair<int, int>> expect;
        for (int start = 0; start < len; start += kWindowStride)
            expect.emplace_back(start, std::min(start + kWindowLines, len) - 1);
        REQUIRE(w.size() == expect.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK(w[i].start_line == expect[i].first);
            CHECK(w[i].end_line == expect[i].second);
            CHECK(w[i].end_line - w[i].start_line + 1 <= kWindowLines);
        }
    }
}

TEST_CASE("jaccard: definition and edge cases") {
    std::set<std::string> a{"a", "b", "c"}, b{"b", "c", "d"};
    CHECK(jaccard(a, b) == doctest::Approx(0.5));
    CHECK(jaccard(a, a) == doctest::Approx(1.0));
    CHECK(jaccard(a, {"x", "y"}) == doctest::Approx(0.0));
    CHECK(jaccard({}, {}) == doctest::Approx(0.0));
}

TEST_CASE("normalize_tokens: lowercased, punctuation dropped") {
    std::set<std::string> toks = normalize_tokens("FooBar.baz(QUX); // Note");
    CHECK(toks.count("foobar") == 1);
    CHECK(toks.count("baz") == 1);
    CHECK(toks.count("qux") == 1);
    CHECK(toks.count(".") == 0);
    CHECK(toks.count(";") == 0);
}

TEST_CASE("retrieve: ordering, ties, and fewer than k") {
    std::vector<Window> windows;
    auto mk = [](std::string path, int start, std::set<std::string> toks) {
        Window w;
        w.path = std::move(path);
        w.start_line = start;
        w.end_line = start + 19;
        w.token_set = std::move(toks);
        return w;
    };
    std::set<std::string> query{"a", "b", "c", "d"};
    windows.push_back(mk("m.sub", 0, {"a", "b", "c", "d"}));        // 1.0
    windows.push_back(mk("z.sub", 0, {"a", "b", "x", "y"}));        // 2/6
    windows.push_back(mk("q.sub", 0, {"p", "q"}));                  // 0.0
    std::vector<Window> top = retrieve(windows, query, 2, {});
    REQUIRE(top.size() == 2);
    CHECK(top[0].path == "m.sub");
    CHECK(top[1].path == "z.sub");

    // tie on similarity: lexicographically earlier path first
    std::vector<Window> tied{mk("b.sub", 0, {"a", "b"}), mk("a.sub", 0, {"a", "b"})};
    std::vector<Window> t = retrieve(tied, {"a", "b"}, 2, {});
    CHECK(t[0].path == "a.sub");
    CHECK(t[1].path == "b.sub");

    std::vector<Window> few = retrieve(tied, {"a"}, 5, {});
    CHECK(few.size() == 2);
}

TEST_CASE("retrieve: equals the brute-force oracle on randomized fixtures") {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 50; ++round) {
        std::vector<std::pair<std::string, int>> specs;
        int nfiles = 2 + static_cast<int>(rng() % 4);
        for (int f = 0; f < nfiles; ++f)
            specs.emplace_back("f" + std::to_string(f) + ".sub", 5 + static_cast<int>(rng() % 40));
        RepoSnapshot repo = repo_of_lines(specs);
        std::vector<Window> windows = build_windows(repo);

        std::set<std::string> query;
        const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "epsilon"};
        for (const auto& w : words)
            if (rng() % 2) query.insert(w);

        ExcludeRange exclude{"f0.sub", static_cast<int>(rng() % 20), 0};
        exclude.end_line = exclude.start_line + static_cast<int>(rng() % 20);

        std::vector<Window> got = retrieve(windows, query, 3, exclude);
        std::vector<Window> want = brute_force_retrieve(windows, query, 3, exclude);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].path == want[i].path);
            CHECK(got[i].start_line == want[i].start_line);
        }
        // no retrieved window overlaps the excluded cursor region
        for (const auto& w : got) {
            bool overlaps = w.path == exclude.path && w.start_line <= exclude.end_line &&
                            exclude.start_line <= w.end_line;
            CHECK_FALSE(overlaps);
        }
    }
}
