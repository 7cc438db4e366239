#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <thread>

#include "stallkit/analyzer.hpp"

using namespace stallkit;

namespace {

SymbolIndex make_index(std::vector<std::pair<std::string, ClassSummary>> entries) {
    SymbolIndex index;
    for (auto& [qname, cls] : entries) {
        index.modules.emplace(qname, std::move(cls));
        index.file_of.emplace(qname, qname + ".sub");
    }
    return index;
}

ClassSummary cls_with(const std::string& name, std::vector<std::pair<std::string, std::string>> fields,
                      std::vector<std::string> method_names) {
    ClassSummary c;
    c.name = name;
    c.signature = "class " + name;
    for (auto& [fn, ft] : fields) {
        c.field_names.push_back(fn);
        c.field_types.push_back(ft);
    }
    for (auto& m : method_names)
        c.methods.push_back({m, "int", {}, render_method_signature("int", m, {})});
    return c;
}

}  // namespace

TEST_CASE("lexer: identifiers, keywords, comments, punctuation") {
    LexResult lr = lex_subject("package a; // note\nclass B { int n; }");
    REQUIRE(lr.clean);
    CHECK(lr.tokens[0].kind == TokKind::Keyword);
    CHECK(lr.tokens[0].text == "package");
    CHECK(lr.tokens[1].kind == TokKind::Ident);
    CHECK(lr.tokens[1].text == "a");
    // the comment is skipped entirely
    CHECK(lr.tokens[3].text == "class");
    CHECK_THROWS_AS(lex_subject("a @ b"), UnknownCharacter);
    LexResult lenient = lex_subject("a @ b", true);
    CHECK_FALSE(lenient.clean);
    CHECK(lenient.tokens.size() == 2);  // "a" + End
}

TEST_CASE("parse_file: golden summary") {
    SourceFile file("S-file.sub",
                    "package util;\nclass S {\n    int n;\n    str trim(str x) {\n        return x;\n"
                    "    }\n}\n");
    ModuleSummary ms = parse_file(file);
    CHECK(ms.module_id == "util.S-file");
    REQUIRE(ms.classes.size() == 1);
    const ClassSummary& s = ms.classes[0];
    CHECK(s.name == "S");
    CHECK(s.signature == "class S");
    REQUIRE(s.field_names.size() == 1);
    CHECK(s.field_names[0] == "n");
    CHECK(s.field_types[0] == "int");
    REQUIRE(s.methods.size() == 1);
    CHECK(s.methods[0].name == "trim");
    CHECK(s.methods[0].return_type == "str");
    REQUIRE(s.methods[0].params.size() == 1);
    CHECK(s.methods[0].params[0] == std::pair<std::string, std::string>{"x", "str"});
    CHECK(s.methods[0].rendered == "str trim(str x)");
}

TEST_CASE("parse_file: empty class body") {
    ModuleSummary ms = parse_file(SourceFile("a.sub", "package p;\nclass A { }\n"));
    REQUIRE(ms.classes.size() == 1);
    CHECK(ms.classes[0].name == "A");
    CHECK(ms.classes[0].field_names.empty());
    CHECK(ms.classes[0].methods.empty());
}

TEST_CASE("parse_file: unbalanced brace is a syntax error") {
    SourceFile file("a.sub", "package p;\nclass A { int n;\n");
    CHECK_THROWS_AS(parse_file(file), SyntaxError);
    SourceFile file2("b.sub", "package p;\nclass A { int n; } }\n");
    CHECK_THROWS_AS(parse_file(file2), SyntaxError);
}

TEST_CASE("extract_imports: order and duplicates") {
    SourceFile file("f.sub", "package p;\nimport util.StringOps;\nimport net.Client;\nclass A { }\n");
    CHECK(extract_imports(file) ==
          std::vector<std::string>{"util.StringOps", "net.Client"});

    SourceFile none("f.sub", "package p;\nclass A { }\n");
    CHECK(extract_imports(none).empty());

    SourceFile dup("f.sub", "package p;\nimport a.B;\nimport a.B;\nclass A { }\n");
    CHECK(extract_imports(dup) == std::vector<std::string>{"a.B", "a.B"});

    SourceFile bad("f.sub", "package p;\nimport ;\nclass A { }\n");
    CHECK_THROWS_AS(extract_imports(bad), SyntaxError);

    // incomplete body is fine as long as the header parses
    SourceFile unfinished("f.sub", "package p;\nimport a.B;\nclass A {\n    int run() {\n        x.");
    CHECK(extract_imports(unfinished) == std::vector<std::string>{"a.B"});
}

TEST_CASE("valid_identifiers_at: member access on a typed receiver") {
    SymbolIndex index = make_index({{"str", cls_with("str", {}, {"trim", "len"})}});
    std::string text = "package p;\nclass A {\n    int go() {\n        str s = \"x\";\n        s.";
    SourceFile file("a.sub", text);
    ValidTokenSet valid = valid_identifiers_at(file, text.size(), index);
    CHECK(valid.at_member_position);
    CHECK(valid.receiver_resolved);
    REQUIRE(valid.size() == 2);
    CHECK(valid.entries.at("trim") == Provenance::MemberOfReceiver);
    CHECK(valid.entries.at("len") == Provenance::MemberOfReceiver);

    // brute-force oracle: receiver class summary members
    const ClassSummary& cls = *index.find_qualified("str");
    for (const auto& m : cls.methods) CHECK(valid.contains(m.name));
}

TEST_CASE("valid_identifiers_at: scope enumeration at statement start") {
    SymbolIndex index = make_index({{"util.C", cls_with("C", {}, {"ping"})}});
    std::string text =
        "package p;\nimport util.C;\nclass A {\n    int b;\n    int go(int a) {\n        ";
    SourceFile file("a.sub", text);
    ValidTokenSet valid = valid_identifiers_at(file, text.size(), index);
    CHECK_FALSE(valid.at_member_position);
    REQUIRE(valid.size() == 3);
    CHECK(valid.entries.at("a") == Provenance::Param);
    CHECK(valid.entries.at("b") == Provenance::Field);
    CHECK(valid.entries.at("C") == Provenance::ImportedClass);

    // brute-force scope oracle over the same file
    std::vector<std::string> expected{"a", "b", "C"};
    for (const auto& name : expected) CHECK(valid.contains(name));
}

TEST_CASE("valid_identifiers_at: empty scope keeps only params") {
    SymbolIndex index;
    std::string text = "package p;\nclass A {\n    int go(int a) {\n        ";
    SourceFile file("a.sub", text);
    ValidTokenSet valid = valid_identifiers_at(file, text.size(), index);
    REQUIRE(valid.size() == 1);
    CHECK(valid.entries.at("a") == Provenance::Param);

    std::string noparams = "package p;\nclass A {\n    int go() {\n        ";
    ValidTokenSet empty = valid_identifiers_at(SourceFile("a.sub", noparams), noparams.size(), index);
    CHECK(empty.size() == 0);
}

TEST_CASE("valid_identifiers_at: locals visible only after their declaration") {
    SymbolIndex index;
    std::string pre = "package p;\nclass A {\n    int go() {\n        ";
    std::string text = pre + "int u = 1;\n        int v = 2;\n        ";
    SourceFile file("a.sub", text);
    ValidTokenSet valid = valid_identifiers_at(file, text.size(), index);
    CHECK(valid.contains("u"));
    CHECK(valid.contains("v"));

    ValidTokenSet before = valid_identifiers_at(file, pre.size() + 11, index);  // right after "int u = 1;"
    CHECK(before.contains("u"));
    CHECK_FALSE(before.contains("v"));
}

TEST_CASE("valid_identifiers_at: unresolvable receiver falls back to the member union") {
    SymbolIndex index = make_index({{"p.A", cls_with("A", {}, {"alpha"})},
                                    {"p.B", cls_with("B", {{"beta", "int"}}, {"gamma"})}});
    std::string text = "package p;\nclass T {\n    int go() {\n        mystery().";
    SourceFile file("t.sub", text);
    ValidTokenSet valid = valid_identifiers_at(file, text.size(), index);
    CHECK(valid.at_member_position);
    CHECK_FALSE(valid.receiver_resolved);
    CHECK(valid.contains("alpha"));
    CHECK(valid.contains("beta"));
    CHECK(valid.contains("gamma"));
    CHECK(valid.size() == 3);
}

TEST_CASE("valid_identifiers_at: chained receiver typing through return types") {
    ClassSummary maker = cls_with("Maker", {}, {});
    maker.methods.push_back({"build", "Box", {}, "Box build()"});
    ClassSummary box = cls_with("Box", {{"lid", "int"}}, {"open"});
    SymbolIndex index = make_index({{"p.Maker", std::move(maker)}, {"p.Box", std::move(box)}});
    std::string text =
        "package q;\nimport p.Maker;\nimport p.Box;\nclass T {\n    int go() {\n"
        "        Maker m = 0;\n        m.build().";
    SourceFile file("t.sub", text);
    ValidTokenSet valid = valid_identifiers_at(file, text.size(), index);
    CHECK(valid.receiver_resolved);
    CHECK(valid.contains("open"));
    CHECK(valid.contains("lid"));
    CHECK(valid.size() == 2);
}

TEST_CASE("check_line: resolvable member passes") {
    SymbolIndex index = make_index({{"str", cls_with("str", {}, {"trim", "len"})}});
    std::string text = "package p;\nclass A {\n    int go() {\n        str s = \"x\";\n        ";
    SourceFile file("a.sub", text);
    StaticCheckReport ok = check_line(file, text.size(), "s.trim();", index);
    CHECK(ok.passed);
    CHECK(ok.diagnostics.empty());
}

TEST_CASE("check_line: unknown member fails with a diagnostic") {
    SymbolIndex index = make_index({{"str", cls_with("str", {}, {"trim", "len"})}});
    std::string text = "package p;\nclass A {\n    int go() {\n        str s = \"x\";\n        ";
    SourceFile file("a.sub", text);
    StaticCheckReport bad = check_line(file, text.size(), "s.normalize();", index);
    CHECK_FALSE(bad.passed);
    REQUIRE_FALSE(bad.diagnostics.empty());
    CHECK(bad.diagnostics[0].second == "unknown member normalize");
}

TEST_CASE("check_line: malformed candidate fails with a syntax diagnostic") {
    SymbolIndex index;
    std::string text = "package p;\nclass A {\n    int go() {\n        ";
    SourceFile file("a.sub", text);
    StaticCheckReport bad = check_line(file, text.size(), "return ((", index);
    CHECK_FALSE(bad.passed);
    CHECK_FALSE(bad.diagnostics.empty());

    // a syntactically complete but dangling statement also fails
    StaticCheckReport mid = check_line(file, text.size(), "return 1", index);
    CHECK_FALSE(mid.passed);
}

TEST_CASE("check_line: passed iff diagnostics empty, locals declared in candidate are usable") {
    SymbolIndex index;
    std::string text = "package p;\nclass A {\n    int go() {\n        ";
    SourceFile file("a.sub", text);
    StaticCheckReport two = check_line(file, text.size(), "int n = 4; return n;", index);
    CHECK(two.passed);

    StaticCheckReport self = check_line(file, text.size(), "int n = n;", index);
    CHECK_FALSE(self.passed);

    StaticCheckReport unknown = check_line(file, text.size(), "return ghost;", index);
    CHECK_FALSE(unknown.passed);
    CHECK(unknown.diagnostics[0].second == "unknown identifier ghost");

    StaticCheckReport badtype = check_line(file, text.size(), "Gadget g = 0;", index);
    CHECK_FALSE(badtype.passed);
    CHECK(badtype.diagnostics[0].second == "unknown type Gadget");
}

TEST_CASE("soundness: dot-member check passes iff the member is in the valid set") {
    std::mt19937_64 rng(7);
    const std::vector<std::string> member_pool{"alpha", "beta",  "gamma", "delta",
                                               "omega", "sigma", "kappa", "theta"};
    for (int round = 0; round < 60; ++round) {
        // random receiver class with a random member subset
        ClassSummary recv = cls_with("Recv", {}, {});
        std::vector<std::string> members;
        for (const auto& m : member_pool)
            if (rng() % 2) {
                members.push_back(m);
                recv.methods.push_back({m, "int", {}, render_method_signature("int", m, {})});
            }
        SymbolIndex index = make_index({{"p.Recv", recv}});
        std::string text =
            "package q;\nimport p.Recv;\nclass T {\n    int go() {\n        Recv r = 0;\n        r.";
        SourceFile file("t.sub", text);
        ValidTokenSet valid = valid_identifiers_at(file, text.size(), index);

        const std::string& probe = member_pool[rng() % member_pool.size()];
        StaticCheckReport report = check_line(file, text.size(), probe + "();", index);
        CHECK(report.passed == valid.contains(probe));
    }
}

TEST_CASE("signature render/parse round trip") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> types{"int", "str", "bool", "void", "Widget"};
    const std::vector<std::string> names{"alpha", "fetchValue", "x", "doThing", "k9"};
    for (int round = 0; round < 100; ++round) {
        MethodSignature sig;
        sig.return_type = types[rng() % types.size()];
        sig.name = names[rng() % names.size()];
        std::size_t nparams = rng() % 4;
        for (std::size_t i = 0; i < nparams; ++i)
            sig.params.emplace_back(names[rng() % names.size()] + std::to_string(i),
                                    types[rng() % types.size()]);
        sig.rendered = render_method_signature(sig.return_type, sig.name, sig.params);
        MethodSignature back = parse_method_signature(sig.rendered);
        CHECK(back == sig);
        CHECK(back.rendered == sig.rendered);
    }
}

TEST_CASE("parse/render round trip through a full module") {
    SourceFile file("m.sub",
                    "package p;\nclass W {\n    int count;\n    str name;\n"
                    "    bool check(int a, str b) {\n        return 1;\n    }\n"
                    "    void reset() {\n        count.x;\n    }\n}\n");
    ModuleSummary ms = parse_file(file);
    for (const auto& cls : ms.classes)
        for (const auto& m : cls.methods) CHECK(parse_method_signature(m.rendered) == m);
}

TEST_CASE("determinism: identical inputs give identical results across threads") {
    SymbolIndex index = make_index({{"str", cls_with("str", {}, {"trim", "len"})}});
    std::string text = "package p;\nclass A {\n    int go() {\n        str s = \"x\";\n        s.";
    SourceFile file("a.sub", text);
    ValidTokenSet reference = valid_identifiers_at(file, text.size(), index);
    StaticCheckReport ref_report = check_line(file, text.size(), "s.trim();", index);

    std::vector<std::thread> threads;
    std::vector<int> ok(8, 0);
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t]() {
            for (int i = 0; i < 50; ++i) {
                ValidTokenSet v = valid_identifiers_at(file, text.size(), index);
                StaticCheckReport r = check_line(file, text.size(), "s.trim();", index);
                if (v.entries == reference.entries && r.passed == ref_report.passed) ok[t]++;
            }
        });
    }
    for (auto& th : threads) th.join();
    for (int t = 0; t < 8; ++t) CHECK(ok[t] == 50);
}

TEST_CASE("prefix parsing recovers declarations before the cursor") {
    std::string text =
        "package p;\nimport a.B;\nclass T {\n    int field;\n    int helper() {\n        return 1;\n"
        "    }\n    int go() {\n        int local = 2;\n        local.";
    ParsedFile pf = parse_tolerant(text);
    CHECK(pf.header_ok);
    CHECK(pf.incomplete_tail);
    CHECK(pf.after_dot);
    REQUIRE(pf.classes.size() == 1);
    CHECK(pf.classes[0].fields.size() == 1);
    REQUIRE(pf.classes[0].methods.size() == 2);
    CHECK(pf.classes[0].methods[0].name == "helper");
    CHECK(pf.classes[0].methods[1].name == "go");
    REQUIRE(pf.pending_chain.has_value());
    CHECK(pf.pending_chain->base_name == "local");
}

TEST_CASE("parser fuzz: arbitrary token soup always terminates without crashing") {
    std::mt19937_64 rng(1234);
    const std::vector<std::string> pieces{
        "package", "import",  "class", "return", "int",  "str",  "bool", "void",
        "alpha",   "BetaGam", "x9",    "_u",     "42",   "\"s\"", ".",   ";",
        ",",       "(",       ")",     "{",      "}",    "=",     " ",   "\n",
        "// note\n"};
    for (int round = 0; round < 500; ++round) {
        std::string text;
        std::size_t len = rng() % 60;
        for (std::size_t i = 0; i < len; ++i) {
            text += pieces[rng() % pieces.size()];
            if (rng() % 3 == 0) text += ' ';
        }
        ParsedFile pf = parse_tolerant(text);  // must not hang or throw
        for (const auto& [off, msg] : pf.diagnostics) CHECK(off <= text.size());
    }
}

TEST_CASE("statement-level recovery keeps later members") {
    std::string text =
        "package p;\nclass T {\n    int bad bad bad;\n    int good() {\n        return 1;\n    }\n}\n";
    ParsedFile pf = parse_tolerant(text);
    CHECK(pf.header_ok);
    CHECK_FALSE(pf.diagnostics.empty());
    REQUIRE(pf.classes.size() == 1);
    REQUIRE(pf.classes[0].methods.size() == 1);
    CHECK(pf.classes[0].methods[0].name == "good");
}
