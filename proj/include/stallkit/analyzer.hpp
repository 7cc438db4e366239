#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stallkit/common.hpp"
#include "stallkit/lexer.hpp"

namespace stallkit {

// ---------------------------------------------------------------------------
// Summaries: what the index stores per class, and what prompt rendering uses.
// ---------------------------------------------------------------------------

struct MethodSignature {
    std::string name;
    std::string return_type;
    std::vector<std::pair<std::string, std::string>> params;  // (name, type)
    std::string rendered;

    bool operator==(const MethodSignature& o) const {
        return name == o.name && return_type == o.return_type && params == o.params;
    }
};

inline std::string render_method_signature(const std::string& return_type, const std::string& name,
                                           const std::vector<std::pair<std::string, std::string>>& params) {
    std::string out = return_type + " " + name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) out += ", ";
        out += params[i].second + " " + params[i].first;
    }
    out += ")";
    return out;
}

struct ClassSummary {
    std::string name;
    std::string signature;  // "class <name>"
    std::vector<std::string> field_names;
    std::vector<std::string> field_types;  // parallel to field_names
    std::vector<MethodSignature> methods;

    bool has_member(const std::string& m) const {
        if (std::find(field_names.begin(), field_names.end(), m) != field_names.end()) return true;
        for (const auto& mm : methods)
            if (mm.name == m) return true;
        return false;
    }
};

struct ModuleSummary {
    std::string module_id;
    std::vector<ClassSummary> classes;
};

// ---------------------------------------------------------------------------
// SourceFile and the cross-file SymbolIndex data type. The index is built by
// the repo scanner (repo_index.hpp); the analyzer only reads it.
// ---------------------------------------------------------------------------

struct SourceFile {
    std::string path;
    std::string text;
    std::vector<std::size_t> line_starts;

    SourceFile() = default;
    SourceFile(std::string p, std::string t)
        : path(std::move(p)), text(std::move(t)), line_starts(compute_line_starts(text)) {}

    std::size_t offset_of(std::size_t line, std::size_t col) const {
        if (line >= line_starts.size()) return text.size();
        return std::min(line_starts[line] + col, text.size());
    }
};

struct SkippedFile {
    std::string path;
    std::string diagnostic;
};

struct SymbolIndex {
    std::map<std::string, ClassSummary> modules;  // qualified class name -> summary
    std::map<std::string, std::string> file_of;   // qualified class name -> path
    std::vector<SkippedFile> skipped;
    double build_time_s = 0.0;

    const ClassSummary* find_qualified(const std::string& qname) const {
        auto it = modules.find(qname);
        return it == modules.end() ? nullptr : &it->second;
    }

    // Unique class with the given simple name, or null when absent/ambiguous.
    const ClassSummary* find_simple(const std::string& simple) const {
        const ClassSummary* hit = nullptr;
        for (const auto& [q, cls] : modules) {
            if (cls.name == simple) {
                if (hit) return nullptr;
                hit = &cls;
            }
        }
        return hit;
    }

    std::vector<std::string> all_member_names() const {
        std::vector<std::string> out;
        for (const auto& [q, cls] : modules) {
            out.insert(out.end(), cls.field_names.begin(), cls.field_names.end());
            for (const auto& m : cls.methods) out.push_back(m.name);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

// ---------------------------------------------------------------------------
// Parse tree. Bodies are kept because scope queries and static checking need
// statement offsets, not just signatures.
// ---------------------------------------------------------------------------

struct Expr {
    enum class Base { Name, IntLit, StrLit };
    Base base = Base::Name;
    std::string base_name;
    bool base_called = false;
    std::vector<Expr> base_args;
    std::size_t base_offset = 0;

    struct Member {
        std::string name;
        bool called = false;
        std::vector<Expr> args;
        std::size_t offset = 0;
    };
    std::vector<Member> members;
};

struct Stmt {
    enum class Kind { Decl, ExprStmt, Return };
    Kind kind = Kind::ExprStmt;
    std::string decl_type, decl_name;
    std::size_t decl_name_offset = 0;
    std::optional<Expr> value;
    std::size_t begin = 0, end = 0;  // [begin, end) in source text
};

struct MethodDecl {
    std::string return_type, name;
    std::vector<std::pair<std::string, std::string>> params;  // (name, type)
    std::vector<Stmt> body;
    std::size_t begin = 0, body_begin = 0, body_end = 0;

    MethodSignature signature() const {
        return {name, return_type, params, render_method_signature(return_type, name, params)};
    }
};

struct FieldDecl {
    std::string type, name;
    std::size_t offset = 0;
};

struct ClassDecl {
    std::string name;
    std::vector<FieldDecl> fields;
    std::vector<MethodDecl> methods;
    std::size_t begin = 0, body_begin = 0, end = 0;

    ClassSummary summary() const {
        ClassSummary s;
        s.name = name;
        s.signature = "class " + name;
        for (const auto& f : fields) {
            s.field_names.push_back(f.name);
            s.field_types.push_back(f.type);
        }
        for (const auto& m : methods) s.methods.push_back(m.signature());
        return s;
    }
};

struct ParsedFile {
    std::string package;
    std::vector<std::string> imports;
    std::vector<ClassDecl> classes;
    std::vector<std::pair<std::size_t, std::string>> diagnostics;
    bool header_ok = false;
    std::optional<std::pair<std::size_t, std::string>> header_diagnostic;

    // Tail state for prefix parsing (unfinished files).
    bool incomplete_tail = false;   // text ends mid-statement or mid-expression
    bool after_dot = false;         // last structural token is a member-access '.'
    std::optional<Expr> pending_chain;  // receiver chain before that '.'
    int end_class = -1, end_method = -1;  // innermost decl open at end of text
};

// ---------------------------------------------------------------------------
// Recursive-descent parser with statement-level recovery. The same machinery
// serves full files (strict callers inspect diagnostics) and prefixes of
// unfinished files (callers inspect the tail state).
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {
        LexResult lr = lex_subject(text, /*lenient=*/true);
        toks_ = std::move(lr.tokens);
        if (!lr.clean) lex_diag_ = {lr.error_offset, "unlexable character"};
    }

    ParsedFile parse() {
        if (lex_diag_) out_.diagnostics.push_back(*lex_diag_);
        parse_header();
        while (!at_end()) {
            if (peek().kind == TokKind::Keyword && peek().text == "class") {
                parse_class();
            } else {
                diag(peek().offset, "expected class declaration");
                advance();
            }
        }
        if (open_class_ >= 0) out_.end_class = open_class_;
        if (open_method_ >= 0) out_.end_method = open_method_;
        return std::move(out_);
    }

private:
    const std::string& text_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    ParsedFile out_;
    std::optional<std::pair<std::size_t, std::string>> lex_diag_;
    int open_class_ = -1, open_method_ = -1;  // set when EOF hits inside a body

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    const Token& advance() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool at_end() const { return peek().kind == TokKind::End; }

    bool accept_punct(const char* p) {
        if (peek().kind == TokKind::Punct && peek().text == p) {
            advance();
            return true;
        }
        return false;
    }
    bool accept_keyword(const char* kw) {
        if (peek().kind == TokKind::Keyword && peek().text == kw) {
            advance();
            return true;
        }
        return false;
    }

    void diag(std::size_t off, std::string msg) { out_.diagnostics.emplace_back(off, std::move(msg)); }

    void mark_incomplete() { out_.incomplete_tail = true; }

    // qname := IDENT ("." IDENT)*
    std::optional<std::string> parse_qname() {
        if (peek().kind != TokKind::Ident) return std::nullopt;
        std::string q = advance().text;
        while (peek().kind == TokKind::Punct && peek().text == ".") {
            if (peek(1).kind != TokKind::Ident) break;
            advance();
            q += "." + advance().text;
        }
        return q;
    }

    void parse_header() {
        bool ok = true;
        if (accept_keyword("package")) {
            auto q = parse_qname();
            if (!q) {
                header_fail(peek().offset, "expected package name");
                return;
            }
            out_.package = *q;
            if (!accept_punct(";")) {
                header_fail(peek().offset, "expected ';' after package declaration");
                return;
            }
        } else {
            header_fail(peek().offset, "expected 'package'");
            return;
        }
        while (peek().kind == TokKind::Keyword && peek().text == "import") {
            advance();
            auto q = parse_qname();
            if (!q) {
                header_fail(peek().offset, "expected import name");
                return;
            }
            if (!accept_punct(";")) {
                header_fail(peek().offset, "expected ';' after import");
                return;
            }
            out_.imports.push_back(*q);
        }
        out_.header_ok = ok;
    }

    void header_fail(std::size_t off, std::string msg) {
        out_.header_ok = false;
        out_.header_diagnostic = {off, msg};
        diag(off, std::move(msg));
    }

    // type := "int" | "str" | "bool" | "void" | IDENT
    std::optional<std::string> parse_type() {
        if (peek().kind == TokKind::Keyword && is_type_keyword(peek().text)) return advance().text;
        if (peek().kind == TokKind::Ident) return advance().text;
        return std::nullopt;
    }

    void parse_class() {
        std::size_t begin = peek().offset;
        advance();  // 'class'
        if (peek().kind != TokKind::Ident) {
            diag(peek().offset, "expected class name");
            return;
        }
        ClassDecl cls;
        cls.begin = begin;
        cls.name = advance().text;
        if (!accept_punct("{")) {
            if (at_end()) {
                mark_incomplete();
                open_class_ = static_cast<int>(out_.classes.size());
                out_.classes.push_back(std::move(cls));
                return;
            }
            diag(peek().offset, "expected '{' after class name");
            return;
        }
        cls.body_begin = peek().offset;
        out_.classes.push_back(std::move(cls));
        int ci = static_cast<int>(out_.classes.size()) - 1;
        while (true) {
            if (at_end()) {
                open_class_ = ci;
                return;  // unclosed class body: fine for prefixes, strict callers see it
            }
            if (accept_punct("}")) {
                out_.classes[ci].end = toks_[pos_ - 1].offset + 1;
                return;
            }
            parse_member(ci);
        }
    }

    // member := type IDENT ";" | type IDENT "(" paramList? ")" block
    void parse_member(int ci) {
        std::size_t begin = peek().offset;
        auto type = parse_type();
        if (!type) {
            diag(peek().offset, "expected member declaration");
            recover_to_member_boundary();
            return;
        }
        if (peek().kind != TokKind::Ident) {
            if (at_end()) {
                mark_incomplete();
                open_class_ = ci;
                return;
            }
            diag(peek().offset, "expected member name");
            recover_to_member_boundary();
            return;
        }
        std::size_t name_off = peek().offset;
        std::string name = advance().text;
        if (accept_punct(";")) {
            out_.classes[ci].fields.push_back({*type, name, name_off});
            return;
        }
        if (accept_punct("(")) {
            MethodDecl m;
            m.begin = begin;
            m.return_type = *type;
            m.name = name;
            if (!parse_params(m)) {
                if (at_end()) {
                    mark_incomplete();
                    open_class_ = ci;
                    out_.classes[ci].methods.push_back(std::move(m));
                    return;
                }
                recover_to_member_boundary();
                return;
            }
            out_.classes[ci].methods.push_back(std::move(m));
            int mi = static_cast<int>(out_.classes[ci].methods.size()) - 1;
            parse_block(ci, mi);
            return;
        }
        if (at_end()) {
            mark_incomplete();
            open_class_ = ci;
            return;
        }
        diag(peek().offset, "expected ';' or '(' in member declaration");
        recover_to_member_boundary();
    }

    bool parse_params(MethodDecl& m) {
        if (accept_punct(")")) return true;
        while (true) {
            auto type = parse_type();
            if (!type) {
                if (!at_end()) diag(peek().offset, "expected parameter type");
                return false;
            }
            if (peek().kind != TokKind::Ident) {
                if (!at_end()) diag(peek().offset, "expected parameter name");
                return false;
            }
            std::string pname = advance().text;
            m.params.emplace_back(pname, *type);
            if (accept_punct(")")) return true;
            if (!accept_punct(",")) {
                if (!at_end()) diag(peek().offset, "expected ',' or ')' in parameter list");
                return false;
            }
        }
    }

    void parse_block(int ci, int mi) {
        MethodDecl& m0 = out_.classes[ci].methods[mi];
        if (!accept_punct("{")) {
            if (at_end()) {
                mark_incomplete();
                open_class_ = ci;
                open_method_ = mi;
                return;
            }
            diag(peek().offset, "expected '{' to open method body");
            recover_to_member_boundary();
            return;
        }
        m0.body_begin = toks_[pos_ - 1].offset + 1;
        while (true) {
            if (at_end()) {
                open_class_ = ci;
                open_method_ = mi;
                return;  // unclosed body; statement boundary unless a stmt marked otherwise
            }
            if (accept_punct("}")) {
                out_.classes[ci].methods[mi].body_end = toks_[pos_ - 1].offset;
                return;
            }
            auto st = parse_stmt();
            if (st) {
                out_.classes[ci].methods[mi].body.push_back(std::move(*st));
            } else if (!at_end()) {
                // statement-level recovery: skip to just past the next ';',
                // or stop before '}' so the body can still close
                while (!at_end() && !(peek().kind == TokKind::Punct &&
                                      (peek().text == ";" || peek().text == "}")))
                    advance();
                accept_punct(";");
            }
        }
    }

    // stmt := type IDENT "=" expr ";" | expr ";" | "return" expr? ";"
    std::optional<Stmt> parse_stmt() {
        Stmt st;
        st.begin = peek().offset;
        if (accept_keyword("return")) {
            st.kind = Stmt::Kind::Return;
            if (!(peek().kind == TokKind::Punct && peek().text == ";")) {
                auto e = parse_expr();
                if (!e) return fail_stmt();
                st.value = std::move(*e);
            }
            return finish_stmt(st);
        }
        bool looks_decl =
            (peek().kind == TokKind::Keyword && is_type_keyword(peek().text)) ||
            (peek().kind == TokKind::Ident && peek(1).kind == TokKind::Ident);
        if (looks_decl) {
            st.kind = Stmt::Kind::Decl;
            st.decl_type = advance().text;
            if (peek().kind != TokKind::Ident) {
                if (at_end()) return unfinished_stmt();
                diag(peek().offset, "expected variable name");
                return std::nullopt;
            }
            st.decl_name_offset = peek().offset;
            st.decl_name = advance().text;
            if (!accept_punct("=")) {
                if (at_end()) return unfinished_stmt();
                diag(peek().offset, "expected '=' in declaration");
                return std::nullopt;
            }
            auto e = parse_expr();
            if (!e) return fail_stmt();
            st.value = std::move(*e);
            return finish_stmt(st);
        }
        st.kind = Stmt::Kind::ExprStmt;
        auto e = parse_expr();
        if (!e) return fail_stmt();
        st.value = std::move(*e);
        return finish_stmt(st);
    }

    std::optional<Stmt> finish_stmt(Stmt& st) {
        if (!accept_punct(";")) {
            if (at_end()) return unfinished_stmt();
            diag(peek().offset, "expected ';' after statement");
            return std::nullopt;
        }
        st.end = toks_[pos_ - 1].offset + 1;
        return std::move(st);
    }

    std::optional<Stmt> fail_stmt() {
        if (at_end()) return unfinished_stmt();
        return std::nullopt;
    }

    std::optional<Stmt> unfinished_stmt() {
        mark_incomplete();
        return std::nullopt;
    }

    // expr := primary ("." IDENT callArgs?)*
    std::optional<Expr> parse_expr() {
        auto e = parse_primary();
        if (!e) return std::nullopt;
        while (peek().kind == TokKind::Punct && peek().text == ".") {
            advance();
            if (at_end()) {
                out_.after_dot = true;
                out_.pending_chain = *e;
                mark_incomplete();
                return std::nullopt;
            }
            if (peek().kind != TokKind::Ident) {
                diag(peek().offset, "expected member name after '.'");
                return std::nullopt;
            }
            Expr::Member mem;
            mem.offset = peek().offset;
            mem.name = advance().text;
            if (peek().kind == TokKind::Punct && peek().text == "(") {
                mem.called = true;
                if (!parse_call_args(mem.args)) return std::nullopt;
            }
            e->members.push_back(std::move(mem));
        }
        return e;
    }

    std::optional<Expr> parse_primary() {
        Expr e;
        e.base_offset = peek().offset;
        if (peek().kind == TokKind::Ident) {
            e.base = Expr::Base::Name;
            e.base_name = advance().text;
            if (peek().kind == TokKind::Punct && peek().text == "(") {
                e.base_called = true;
                if (!parse_call_args(e.base_args)) return std::nullopt;
            }
            return e;
        }
        if (peek().kind == TokKind::Int) {
            e.base = Expr::Base::IntLit;
            e.base_name = advance().text;
            return e;
        }
        if (peek().kind == TokKind::String) {
            e.base = Expr::Base::StrLit;
            e.base_name = advance().text;
            return e;
        }
        if (at_end()) {
            mark_incomplete();
            return std::nullopt;
        }
        diag(peek().offset, "expected expression");
        return std::nullopt;
    }

    bool parse_call_args(std::vector<Expr>& args) {
        advance();  // '('
        if (accept_punct(")")) return true;
        while (true) {
            auto a = parse_expr();
            if (!a) {
                if (at_end()) mark_incomplete();
                return false;
            }
            args.push_back(std::move(*a));
            if (accept_punct(")")) return true;
            if (!accept_punct(",")) {
                if (at_end()) {
                    mark_incomplete();
                } else {
                    diag(peek().offset, "expected ',' or ')' in call arguments");
                }
                return false;
            }
        }
    }

    void recover_to_member_boundary() {
        int depth = 0;
        while (!at_end()) {
            const Token& t = peek();
            if (t.kind == TokKind::Punct) {
                if (t.text == "{") ++depth;
                if (t.text == "}") {
                    if (depth == 0) return;  // let the class body close
                    --depth;
                }
                if (t.text == ";" && depth == 0) {
                    advance();
                    return;
                }
            }
            advance();
        }
    }
};

}  // namespace detail

inline ParsedFile parse_tolerant(const std::string& text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Spec operations: parse_file, extract_imports.
// ---------------------------------------------------------------------------

inline std::string path_stem(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

// Strict parse of a complete file into its declaration summary.
inline ModuleSummary parse_file(const SourceFile& file) {
    ParsedFile pf = parse_tolerant(file.text);
    if (!pf.diagnostics.empty())
        throw SyntaxError(pf.diagnostics.front().first, pf.diagnostics.front().second);
    if (pf.incomplete_tail || pf.end_class >= 0)
        throw SyntaxError(file.text.size(), "unexpected end of file (unbalanced braces?)");
    if (pf.classes.empty()) throw SyntaxError(file.text.size(), "expected at least one class");
    ModuleSummary ms;
    ms.module_id = file.path.empty() ? pf.package : pf.package + "." + path_stem(file.path);
    for (const auto& c : pf.classes) ms.classes.push_back(c.summary());
    for (std::size_t i = 0; i < ms.classes.size(); ++i)
        for (std::size_t j = i + 1; j < ms.classes.size(); ++j)
            if (ms.classes[i].name == ms.classes[j].name)
                throw SyntaxError(0, "duplicate class name " + ms.classes[i].name + " within module");
    return ms;
}

// Imports in source order, duplicates preserved. Only a malformed header is an
// error; an incomplete body is expected for completion inputs.
inline std::vector<std::string> extract_imports(const SourceFile& file) {
    ParsedFile pf = parse_tolerant(file.text);
    if (pf.header_diagnostic)
        throw SyntaxError(pf.header_diagnostic->first, pf.header_diagnostic->second);
    return pf.imports;
}

// ---------------------------------------------------------------------------
// Scope queries and static checking.
// ---------------------------------------------------------------------------

enum class Provenance { Local, Param, Field, ImportedClass, MemberOfReceiver };

struct ValidTokenSet {
    std::map<std::string, Provenance> entries;  // deduplicated, deterministic order
    bool at_member_position = false;
    bool receiver_resolved = true;  // false => fallback union of all indexed members

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(entries.size());
        for (const auto& [n, p] : entries) out.push_back(n);
        return out;
    }
    bool contains(const std::string& n) const { return entries.count(n) > 0; }
    std::size_t size() const { return entries.size(); }
};

struct StaticCheckReport {
    bool passed = false;
    std::vector<std::pair<std::size_t, std::string>> diagnostics;
};

namespace detail {

inline std::string simple_name(const std::string& qname) {
    std::size_t dot = qname.find_last_of('.');
    return dot == std::string::npos ? qname : qname.substr(dot + 1);
}

// Type-name resolution order: exact index key, then the file's imports, then a
// globally unique simple name.
inline const ClassSummary* class_for_type(const std::string& type_name,
                                          const std::vector<std::string>& imports,
                                          const SymbolIndex& index) {
    if (const ClassSummary* c = index.find_qualified(type_name)) return c;
    for (const auto& imp : imports) {
        if (simple_name(imp) == type_name) {
            if (const ClassSummary* c = index.find_qualified(imp)) return c;
        }
    }
    return index.find_simple(type_name);
}

struct Scope {
    const ParsedFile* pf = nullptr;
    const SymbolIndex* index = nullptr;
    const ClassDecl* cls = nullptr;
    const MethodDecl* mth = nullptr;
    std::vector<std::pair<std::string, std::string>> locals;  // (name, type), visible ones

    std::optional<std::string> type_of_name(const std::string& name) const {
        for (auto it = locals.rbegin(); it != locals.rend(); ++it)
            if (it->first == name) return it->second;
        if (mth)
            for (const auto& [pn, pt] : mth->params)
                if (pn == name) return pt;
        if (cls)
            for (const auto& f : cls->fields)
                if (f.name == name) return f.type;
        return std::nullopt;
    }

    bool name_in_scope(const std::string& name) const {
        if (type_of_name(name)) return true;
        for (const auto& imp : pf->imports)
            if (simple_name(imp) == name && index->find_qualified(imp)) return true;
        return false;
    }

    // Declared type of an expression, or nullopt when analysis cannot tell.
    std::optional<std::string> type_of_expr(const Expr& e) const {
        std::optional<std::string> cur;
        switch (e.base) {
            case Expr::Base::IntLit: cur = "int"; break;
            case Expr::Base::StrLit: cur = "str"; break;
            case Expr::Base::Name:
                if (e.base_called) {
                    cur = std::nullopt;  // bare calls have no declared type in scope rules
                } else {
                    cur = type_of_name(e.base_name);
                    if (!cur) {
                        // a class name used as a receiver denotes the class itself
                        for (const auto& imp : pf->imports)
                            if (simple_name(imp) == e.base_name && index->find_qualified(imp))
                                cur = e.base_name;
                        if (!cur && index->find_simple(e.base_name)) cur = e.base_name;
                    }
                }
                break;
        }
        for (const auto& m : e.members) {
            if (!cur) return std::nullopt;
            const ClassSummary* c = class_for_type(*cur, pf->imports, *index);
            if (!c) return std::nullopt;
            cur = std::nullopt;
            for (std::size_t i = 0; i < c->field_names.size(); ++i)
                if (c->field_names[i] == m.name) cur = c->field_types[i];
            if (!cur)
                for (const auto& mm : c->methods)
                    if (mm.name == m.name) cur = mm.return_type;
            if (!cur) return std::nullopt;
        }
        return cur;
    }
};

inline void add_receiver_members(const ClassSummary& cls, ValidTokenSet& out) {
    for (const auto& f : cls.field_names) out.entries.emplace(f, Provenance::MemberOfReceiver);
    for (const auto& m : cls.methods) out.entries.emplace(m.name, Provenance::MemberOfReceiver);
}

inline Scope scope_at(const ParsedFile& pf, const SymbolIndex& index, std::size_t cursor) {
    Scope sc;
    sc.pf = &pf;
    sc.index = &index;
    const ClassDecl* cls = nullptr;
    for (const auto& c : pf.classes) {
        std::size_t end = c.end == 0 ? std::string::npos : c.end;
        if (c.begin <= cursor && cursor <= end) cls = &c;
    }
    if (pf.end_class >= 0 && static_cast<std::size_t>(pf.end_class) < pf.classes.size() && !cls)
        cls = &pf.classes[pf.end_class];
    sc.cls = cls;
    if (cls) {
        for (const auto& m : cls->methods) {
            std::size_t end = m.body_end == 0 ? std::string::npos : m.body_end + 1;
            if (m.body_begin != 0 && m.body_begin <= cursor && cursor <= end) sc.mth = &m;
        }
        if (!sc.mth && pf.end_method >= 0 && pf.end_class >= 0 &&
            cls == &pf.classes[pf.end_class] &&
            static_cast<std::size_t>(pf.end_method) < cls->methods.size())
            sc.mth = &cls->methods[pf.end_method];
    }
    if (sc.mth) {
        for (const auto& st : sc.mth->body)
            if (st.kind == Stmt::Kind::Decl && st.end != 0 && st.end <= cursor)
                sc.locals.emplace_back(st.decl_name, st.decl_type);
    }
    return sc;
}

}  // namespace detail

// Identifiers legal at `cursor` per static analysis. At a member-access dot the
// set is the receiver type's members; an unresolvable receiver degrades to the
// union of every indexed class's members.
inline ValidTokenSet valid_identifiers_at(const SourceFile& file, std::size_t cursor,
                                          const SymbolIndex& index) {
    std::string prefix = file.text.substr(0, std::min(cursor, file.text.size()));
    ParsedFile pf = parse_tolerant(prefix);
    detail::Scope sc = detail::scope_at(pf, index, prefix.size());

    ValidTokenSet out;
    if (pf.after_dot && pf.pending_chain) {
        out.at_member_position = true;
        auto recv_type = sc.type_of_expr(*pf.pending_chain);
        const ClassSummary* cls =
            recv_type ? detail::class_for_type(*recv_type, pf.imports, index) : nullptr;
        if (cls) {
            detail::add_receiver_members(*cls, out);
        } else {
            out.receiver_resolved = false;
            for (const auto& [q, c] : index.modules) detail::add_receiver_members(c, out);
        }
        return out;
    }

    if (sc.mth)
        for (const auto& [pn, pt] : sc.mth->params) out.entries.emplace(pn, Provenance::Param);
    for (const auto& [ln, lt] : sc.locals) out.entries.insert_or_assign(ln, Provenance::Local);
    if (sc.cls)
        for (const auto& f : sc.cls->fields) out.entries.emplace(f.name, Provenance::Field);
    for (const auto& imp : pf.imports) {
        if (index.find_qualified(imp))
            out.entries.emplace(detail::simple_name(imp), Provenance::ImportedClass);
    }
    return out;
}

namespace detail {

// Resolution walk for static checking: every identifier use at or after
// `from_offset` must resolve; member uses resolve against the receiver type.
struct CheckWalker {
    const ParsedFile& pf;
    const SymbolIndex& index;
    std::size_t from_offset;
    std::vector<std::pair<std::size_t, std::string>>& diags;

    void check_expr(const Expr& e, const Scope& sc) {
        bool base_relevant = e.base_offset >= from_offset;
        if (e.base == Expr::Base::Name && base_relevant) {
            if (!sc.name_in_scope(e.base_name))
                diags.emplace_back(e.base_offset, "unknown identifier " + e.base_name);
        }
        for (const auto& a : e.base_args) check_expr(a, sc);

        std::optional<std::string> cur;
        switch (e.base) {
            case Expr::Base::IntLit: cur = "int"; break;
            case Expr::Base::StrLit: cur = "str"; break;
            case Expr::Base::Name: {
                Expr base_only = e;
                base_only.members.clear();
                cur = sc.type_of_expr(base_only);
                break;
            }
        }
        for (const auto& m : e.members) {
            const ClassSummary* cls =
                cur ? class_for_type(*cur, pf.imports, index) : nullptr;
            if (m.offset >= from_offset) {
                if (cls) {
                    if (!cls->has_member(m.name))
                        diags.emplace_back(m.offset, "unknown member " + m.name);
                } else {
                    // unresolved receiver: accept any indexed member (imprecise-analysis fallback)
                    bool anywhere = false;
                    for (const auto& [q, c] : index.modules)
                        if (c.has_member(m.name)) anywhere = true;
                    if (!anywhere) diags.emplace_back(m.offset, "unknown member " + m.name);
                }
            }
            for (const auto& a : m.args) check_expr(a, sc);
            // advance the chain type
            if (cls) {
                std::optional<std::string> next;
                for (std::size_t i = 0; i < cls->field_names.size(); ++i)
                    if (cls->field_names[i] == m.name) next = cls->field_types[i];
                if (!next)
                    for (const auto& mm : cls->methods)
                        if (mm.name == m.name) next = mm.return_type;
                cur = next;
            } else {
                cur = std::nullopt;
            }
        }
    }

    void run() {
        for (const auto& cls : pf.classes) {
            for (const auto& mth : cls.methods) {
                Scope sc;
                sc.pf = &pf;
                sc.index = &index;
                sc.cls = &cls;
                sc.mth = &mth;
                for (const auto& st : mth.body) {
                    if (st.end > from_offset) {
                        if (st.kind == Stmt::Kind::Decl) {
                            if (st.decl_name_offset >= from_offset && !is_type_keyword(st.decl_type) &&
                                !class_for_type(st.decl_type, pf.imports, index))
                                diags.emplace_back(st.begin, "unknown type " + st.decl_type);
                        }
                        if (st.value) check_expr(*st.value, sc);
                    }
                    if (st.kind == Stmt::Kind::Decl)
                        sc.locals.emplace_back(st.decl_name, st.decl_type);
                }
            }
        }
    }
};

}  // namespace detail

// Splices `candidate_line` at `cursor` and reports whether the result parses
// as a complete statement continuation with every identifier resolving.
inline StaticCheckReport check_line(const SourceFile& file, std::size_t cursor,
                                    const std::string& candidate_line, const SymbolIndex& index) {
    StaticCheckReport report;
    std::string prefix = file.text.substr(0, std::min(cursor, file.text.size()));
    std::string spliced = prefix + candidate_line;
    ParsedFile pf = parse_tolerant(spliced);

    for (const auto& [off, msg] : pf.diagnostics)
        if (off >= prefix.size()) report.diagnostics.emplace_back(off, msg);
    if (pf.incomplete_tail)
        report.diagnostics.emplace_back(spliced.size(), "line ends mid-statement");

    if (report.diagnostics.empty()) {
        detail::CheckWalker walker{pf, index, prefix.size(), report.diagnostics};
        walker.run();
    }
    std::sort(report.diagnostics.begin(), report.diagnostics.end());
    report.passed = report.diagnostics.empty();
    return report;
}

// Parses a rendered method signature back into its parts (round-trip check).
inline MethodSignature parse_method_signature(const std::string& rendered) {
    LexResult lr = lex_subject(rendered);
    const auto& t = lr.tokens;
    std::size_t i = 0;
    auto want_word = [&](const char* what) -> std::string {
        if (t[i].kind != TokKind::Ident && t[i].kind != TokKind::Keyword)
            throw SyntaxError(t[i].offset, std::string("expected ") + what);
        return t[i++].text;
    };
    MethodSignature sig;
    sig.return_type = want_word("return type");
    sig.name = want_word("method name");
    if (t[i].kind != TokKind::Punct || t[i].text != "(") throw SyntaxError(t[i].offset, "expected '('");
    ++i;
    if (!(t[i].kind == TokKind::Punct && t[i].text == ")")) {
        while (true) {
            std::string pt = want_word("parameter type");
            std::string pn = want_word("parameter name");
            sig.params.emplace_back(pn, pt);
            if (t[i].kind == TokKind::Punct && t[i].text == ",") {
                ++i;
                continue;
            }
            break;
        }
    }
    if (t[i].kind != TokKind::Punct || t[i].text != ")") throw SyntaxError(t[i].offset, "expected ')'");
    sig.rendered = render_method_signature(sig.return_type, sig.name, sig.params);
    return sig;
}

}  // namespace stallkit
