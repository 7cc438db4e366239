#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "stallkit/common.hpp"

namespace stallkit {

// Lexer for the subject language. Whitespace and "// ..." line comments are
// skipped; everything else becomes a token. Identifiers are
// [A-Za-z_][A-Za-z0-9_]* with keywords reserved.

enum class TokKind { Ident, Keyword, Int, String, Punct, End };

struct Token {
    TokKind kind;
    std::string text;
    std::size_t offset;
};

inline const std::array<std::string_view, 8>& subject_keywords() {
    static const std::array<std::string_view, 8> kws = {
        "package", "import", "class", "return", "int", "str", "bool", "void"};
    return kws;
}

inline bool is_keyword(std::string_view word) {
    for (auto kw : subject_keywords())
        if (kw == word) return true;
    return false;
}

inline bool is_type_keyword(std::string_view word) {
    return word == "int" || word == "str" || word == "bool" || word == "void";
}

struct LexResult {
    std::vector<Token> tokens;  // always terminated by an End token
    bool clean = true;          // false when lexing stopped at a bad character
    std::size_t error_offset = 0;
};

// Lenient lexing stops at the first unlexable byte and returns what it has;
// strict lexing throws SyntaxError there instead.
inline LexResult lex_subject(const std::string& text, bool lenient = false) {
    LexResult out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            while (i < n && text[i] != '\n') ++i;
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t b = i;
            while (i < n && is_ident_char(text[i])) ++i;
            std::string word = text.substr(b, i - b);
            out.tokens.push_back({is_keyword(word) ? TokKind::Keyword : TokKind::Ident,
                                  std::move(word), b});
            continue;
        }
        if (is_digit(c)) {
            std::size_t b = i;
            while (i < n && is_digit(text[i])) ++i;
            out.tokens.push_back({TokKind::Int, text.substr(b, i - b), b});
            continue;
        }
        if (c == '"') {
            std::size_t b = i;
            ++i;
            while (i < n && text[i] != '"' && text[i] != '\n') ++i;
            if (i < n && text[i] == '"') {
                ++i;
                out.tokens.push_back({TokKind::String, text.substr(b, i - b), b});
                continue;
            }
            if (lenient) {
                out.clean = false;
                out.error_offset = b;
                break;
            }
            throw SyntaxError(b, "unterminated string literal");
        }
        switch (c) {
            case '.': case ';': case ',': case '(': case ')':
            case '{': case '}': case '=':
                out.tokens.push_back({TokKind::Punct, std::string(1, c), i});
                ++i;
                continue;
            default:
                if (lenient) {
                    out.clean = false;
                    out.error_offset = i;
                    goto done;
                }
                throw UnknownCharacter(i, c);
        }
    }
done:
    out.tokens.push_back({TokKind::End, "", n});
    return out;
}

}  // namespace stallkit
