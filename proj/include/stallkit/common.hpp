#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stallkit {

// ---------------------------------------------------------------------------
// Error taxonomy. Thrown for contract violations and unrecoverable input
// problems; operations whose contract says "failures are reported in the
// result" return diagnostics instead.
// ---------------------------------------------------------------------------

struct SyntaxError : std::runtime_error {
    std::size_t offset;
    SyntaxError(std::size_t off, const std::string& what)
        : std::runtime_error("syntax error at offset " + std::to_string(off) + ": " + what),
          offset(off) {}
};

struct UnknownCharacter : std::runtime_error {
    std::size_t offset;
    UnknownCharacter(std::size_t off, char c)
        : std::runtime_error("unknown character 0x" + to_hex(c) + " at offset " + std::to_string(off)),
          offset(off) {}
    static std::string to_hex(char c) {
        static const char* digits = "0123456789abcdef";
        unsigned char u = static_cast<unsigned char>(c);
        return std::string{digits[u >> 4], digits[u & 0xf]};
    }
};

struct EmptyRepository : std::runtime_error {
    explicit EmptyRepository(const std::string& root)
        : std::runtime_error("empty repository: no subject files under " + root) {}
};

struct DuplicateSymbol : std::runtime_error {
    std::string qname, path_a, path_b;
    DuplicateSymbol(std::string q, std::string a, std::string b)
        : std::runtime_error("duplicate symbol " + q + " declared in both " + a + " and " + b),
          qname(std::move(q)), path_a(std::move(a)), path_b(std::move(b)) {}
};

struct UnknownImport : std::runtime_error {
    std::string qname;
    std::string diagnostic;  // non-empty when a candidate file was skipped during indexing
    explicit UnknownImport(std::string q, std::string diag = "")
        : std::runtime_error("unknown import " + q + (diag.empty() ? "" : " (" + diag + ")")),
          qname(std::move(q)), diagnostic(std::move(diag)) {}
};

struct EmptyCorpus : std::runtime_error {
    EmptyCorpus() : std::runtime_error("training corpus is empty") {}
};

struct NoValidTokens : std::runtime_error {
    NoValidTokens() : std::runtime_error("mask has no valid tokens") {}
};

struct BackendUnavailable : std::runtime_error {
    explicit BackendUnavailable(const std::string& detail)
        : std::runtime_error("backend unavailable: " + detail) {}
};

struct MalformedRecord : std::runtime_error {
    std::size_t line_no;
    MalformedRecord(std::size_t line, const std::string& detail)
        : std::runtime_error("malformed record at line " + std::to_string(line) + ": " + detail),
          line_no(line) {}
};

// ---------------------------------------------------------------------------
// Small shared helpers.
// ---------------------------------------------------------------------------

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::string trim_copy(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\n' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// FNV-1a; used where a platform-stable hash is required (std::hash is not).
inline std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

// Byte offsets of line starts; line_starts[0] == 0, strictly increasing.
inline std::vector<std::size_t> compute_line_starts(const std::string& text) {
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') starts.push_back(i + 1);
    }
    return starts;
}

// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Used instead
// of std::uniform_real_distribution, whose output is implementation-defined.
template <typename Rng>
double unit_draw(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace stallkit
