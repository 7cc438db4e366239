#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "stallkit/common.hpp"
#include "stallkit/lexer.hpp"

namespace stallkit {

// Model-side tokenizer: word-level over the subject-language surface, with
// camelCase identifiers split into sub-tokens. Unlike the subject lexer it
// keeps whitespace and comment text so that decode(encode(x)) == x for any
// in-vocabulary text. The first sub-token of an identifier is always a
// verbatim prefix of it, which decoding-phase masking relies on.

enum class LmTokKind : std::uint8_t { Word, Number, Punct, Space, Newline, Tab, Unk };

struct LmToken {
    std::string text;
    LmTokKind kind;
};

inline bool is_camel_boundary(char prev, char cur) {
    return (cur >= 'A' && cur <= 'Z') &&
           ((prev >= 'a' && prev <= 'z') || (prev >= '0' && prev <= '9'));
}

inline void split_camel(const std::string& word, std::vector<LmToken>& out) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < word.size(); ++i) {
        if (is_camel_boundary(word[i - 1], word[i])) {
            out.push_back({word.substr(start, i - start), LmTokKind::Word});
            start = i;
        }
    }
    out.push_back({word.substr(start), LmTokKind::Word});
}

inline std::string first_subtoken(const std::string& identifier) {
    for (std::size_t i = 1; i < identifier.size(); ++i)
        if (is_camel_boundary(identifier[i - 1], identifier[i])) return identifier.substr(0, i);
    return identifier;
}

inline std::vector<LmToken> lm_tokenize(const std::string& text) {
    std::vector<LmToken> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if (c == '\n') {
            out.push_back({"\n", LmTokKind::Newline});
            ++i;
        } else if (c == ' ') {
            out.push_back({" ", LmTokKind::Space});
            ++i;
        } else if (c == '\t') {
            out.push_back({"\t", LmTokKind::Tab});
            ++i;
        } else if (is_ident_start(c)) {
            std::size_t b = i;
            while (i < n && is_ident_char(text[i])) ++i;
            split_camel(text.substr(b, i - b), out);
        } else if (is_digit(c)) {
            // digits are single-character tokens, so any number stays in-vocabulary
            out.push_back({std::string(1, c), LmTokKind::Number});
            ++i;
        } else if (c >= 33 && c <= 126) {
            out.push_back({std::string(1, c), LmTokKind::Punct});
            ++i;
        } else {
            throw UnknownCharacter(i, c);
        }
    }
    return out;
}

inline LmTokKind classify_token_text(const std::string& t) {
    if (t == "\n") return LmTokKind::Newline;
    if (t == " ") return LmTokKind::Space;
    if (t == "\t") return LmTokKind::Tab;
    if (t.empty()) return LmTokKind::Unk;
    if (is_ident_start(t[0])) return LmTokKind::Word;
    if (is_digit(t[0])) return LmTokKind::Number;
    return LmTokKind::Punct;
}

// Fixed vocabulary with reserved specials. Ids are assigned to the sorted set
// of distinct corpus tokens so that training is independent of corpus order.
class Vocab {
public:
    static constexpr int kUnkId = 0;
    static constexpr int kNewlineId = 1;

    Vocab() { add_specials(); }

    static Vocab from_corpus(const std::vector<std::string>& corpus) {
        Vocab v;
        std::set<std::string> distinct;
        for (const auto& text : corpus)
            for (const auto& tok : lm_tokenize(text)) distinct.insert(tok.text);
        for (const auto& t : distinct) v.intern(t);
        return v;
    }

    static Vocab from_token_texts(const std::vector<std::string>& texts) {
        Vocab v;
        for (const auto& t : texts) v.intern(t);
        return v;
    }

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& text(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
    LmTokKind kind(int id) const { return kinds_[static_cast<std::size_t>(id)]; }

    int id_of(const std::string& t) const {
        auto it = id_of_.find(t);
        return it == id_of_.end() ? kUnkId : it->second;
    }
    bool contains(const std::string& t) const { return id_of_.count(t) > 0; }

    // True for identifier-shaped tokens that are not reserved words; the
    // prompt-presence bias applies only to these.
    bool is_plain_word(int id) const {
        return kind(id) == LmTokKind::Word && !is_keyword(text(id));
    }

    std::vector<int> encode(const std::string& text) const {
        std::vector<int> ids;
        for (const auto& tok : lm_tokenize(text)) ids.push_back(id_of(tok.text));
        return ids;
    }

    std::string decode(const std::vector<int>& ids) const {
        std::string out;
        for (int id : ids) out += (id == kUnkId) ? "<unk>" : text(id);
        return out;
    }

    const std::vector<std::string>& token_texts() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::vector<LmTokKind> kinds_;
    std::unordered_map<std::string, int> id_of_;

    void add_specials() {
        push("<unk>", LmTokKind::Unk);
        push("\n", LmTokKind::Newline);
        push(" ", LmTokKind::Space);
        push("\t", LmTokKind::Tab);
    }

    void intern(const std::string& t) {
        if (id_of_.count(t)) return;
        push(t, classify_token_text(t));
    }

    void push(const std::string& t, LmTokKind k) {
        id_of_.emplace(t, static_cast<int>(tokens_.size()));
        tokens_.push_back(t);
        kinds_.push_back(k);
    }
};

}  // namespace stallkit
