#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stallkit/common.hpp"
#include "stallkit/tokenizer.hpp"

#include <json.hpp>

namespace stallkit {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Numerically stable softmax; -inf entries come out as exact zeros.
inline std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = kNegInf;
    for (double l : logits) mx = std::max(mx, l);
    std::vector<double> out(logits.size(), 0.0);
    if (mx == kNegInf) return out;
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = (logits[i] == kNegInf) ? 0.0 : std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

// ---------------------------------------------------------------------------
// Backend abstraction: tokenizer + next-token logits.
// ---------------------------------------------------------------------------

class LmBackend {
public:
    virtual ~LmBackend() = default;
    virtual int vocab_size() const = 0;
    virtual int newline_id() const = 0;
    virtual std::vector<int> encode(const std::string& text) const = 0;
    virtual std::string decode(const std::vector<int>& ids) const = 0;
    virtual std::vector<double> next_logits(const std::vector<int>& ids) const = 0;
    virtual std::string token_text(int id) const { return decode({id}); }

    // Vocabulary id of an identifier's first sub-token; nullopt when the
    // backend cannot represent it.
    virtual std::optional<int> first_subtoken_id(const std::string& identifier) const {
        auto ids = encode(first_subtoken(identifier));
        if (ids.empty()) return std::nullopt;
        return ids.front();
    }
};

// ---------------------------------------------------------------------------
// Deterministic n-gram reference model.
//
//   logit(t | ctx) = ln((count(ctx,t) + alpha) / (total(ctx) + alpha*K))
//
// evaluated at the longest context suffix that was seen in training; unseen
// contexts back off to shorter ones (stupid backoff, factor 0.4 applied as a
// per-step log shift).
// ---------------------------------------------------------------------------

class NGramModel {
public:
    NGramModel() = default;
    NGramModel(int order, double alpha, Vocab vocab)
        : order_(order), alpha_(alpha), vocab_(std::move(vocab)) {}

    int order() const { return order_; }
    double alpha() const { return alpha_; }
    double backoff_factor() const { return backoff_; }
    const Vocab& vocab() const { return vocab_; }

    void observe_text(const std::string& text) {
        std::vector<int> ids = vocab_.encode(text);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (int ctx_len = 0; ctx_len < order_; ++ctx_len) {
                if (i < static_cast<std::size_t>(ctx_len)) break;
                std::string key = context_key(ids, i - ctx_len, ctx_len);
                auto& entry = counts_[key];
                entry.next[ids[i]] += 1;
                entry.total += 1;
            }
        }
    }

    std::uint64_t count(const std::vector<int>& ctx, int token) const {
        auto it = counts_.find(context_key(ctx, 0, ctx.size()));
        if (it == counts_.end()) return 0;
        auto jt = it->second.next.find(token);
        return jt == it->second.next.end() ? 0 : jt->second;
    }

    std::vector<double> next_logits(const std::vector<int>& ids) const {
        const int K = vocab_.size();
        int max_ctx = std::min<int>(order_ - 1, static_cast<int>(ids.size()));
        for (int ctx_len = max_ctx; ctx_len >= 0; --ctx_len) {
            auto it = counts_.find(context_key(ids, ids.size() - ctx_len, ctx_len));
            if (it == counts_.end() || it->second.total == 0) continue;
            const auto& entry = it->second;
            double denom = static_cast<double>(entry.total) + alpha_ * K;
            double shift = (max_ctx - ctx_len) * std::log(backoff_);
            std::vector<double> logits(K, std::log(alpha_ / denom) + shift);
            for (const auto& [tok, c] : entry.next)
                logits[static_cast<std::size_t>(tok)] =
                    std::log((static_cast<double>(c) + alpha_) / denom) + shift;
            return logits;
        }
        // untrained model: uniform
        return std::vector<double>(K, -std::log(static_cast<double>(K)));
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["order"] = order_;
        j["alpha"] = alpha_;
        j["backoff"] = backoff_;
        j["vocab"] = vocab_.token_texts();
        nlohmann::json jc = nlohmann::json::object();
        for (const auto& [key, entry] : counts_) {
            nlohmann::json je = nlohmann::json::object();
            for (const auto& [tok, c] : entry.next) je[std::to_string(tok)] = c;
            jc[key] = je;
        }
        j["counts"] = jc;
        return j;
    }

    static NGramModel from_json(const nlohmann::json& j) {
        NGramModel m(j.at("order").get<int>(), j.at("alpha").get<double>(),
                     Vocab::from_token_texts(j.at("vocab").get<std::vector<std::string>>()));
        m.backoff_ = j.at("backoff").get<double>();
        for (const auto& [key, je] : j.at("counts").items()) {
            auto& entry = m.counts_[key];
            for (const auto& [tok, c] : je.items()) {
                entry.next[std::stoi(tok)] = c.get<std::uint64_t>();
                entry.total += c.get<std::uint64_t>();
            }
        }
        return m;
    }

private:
    struct CountEntry {
        std::map<int, std::uint64_t> next;
        std::uint64_t total = 0;
    };

    int order_ = 3;
    double alpha_ = 0.1;
    double backoff_ = 0.4;
    Vocab vocab_;
    std::unordered_map<std::string, CountEntry> counts_;

    static std::string context_key(const std::vector<int>& ids, std::size_t begin, std::size_t len) {
        std::string key;
        for (std::size_t i = 0; i < len; ++i) {
            if (i) key += ',';
            key += std::to_string(ids[begin + i]);
        }
        return key;
    }
};

// Trains on a corpus of texts. The result does not depend on corpus order:
// the vocabulary is the sorted set of distinct tokens and counts are additive.
inline NGramModel train_ngram(const std::vector<std::string>& corpus, int order = 3,
                              double alpha = 0.1) {
    if (corpus.empty()) throw EmptyCorpus();
    Vocab vocab = Vocab::from_corpus(corpus);
    if (vocab.size() <= 4) throw EmptyCorpus();
    NGramModel model(order, alpha, std::move(vocab));
    for (const auto& text : corpus) model.observe_text(text);
    return model;
}

// ---------------------------------------------------------------------------
// N-gram backend. Optionally adds a prompt-presence bonus to the logits of
// identifier tokens that occur in the input ids (a cache-LM-style term); the
// pure count model above is untouched. gamma == 0 disables the term.
// ---------------------------------------------------------------------------

class NGramBackend : public LmBackend {
public:
    explicit NGramBackend(NGramModel model, double prompt_bias_gamma = 0.0)
        : model_(std::move(model)), gamma_(prompt_bias_gamma) {}

    const NGramModel& model() const { return model_; }
    double prompt_bias() const { return gamma_; }

    int vocab_size() const override { return model_.vocab().size(); }
    int newline_id() const override { return Vocab::kNewlineId; }
    std::vector<int> encode(const std::string& text) const override {
        return model_.vocab().encode(text);
    }
    std::string decode(const std::vector<int>& ids) const override {
        return model_.vocab().decode(ids);
    }
    std::string token_text(int id) const override { return model_.vocab().text(id); }

    std::optional<int> first_subtoken_id(const std::string& identifier) const override {
        int id = model_.vocab().id_of(first_subtoken(identifier));
        if (id == Vocab::kUnkId) return std::nullopt;
        return id;
    }

    std::vector<double> next_logits(const std::vector<int>& ids) const override {
        std::vector<double> logits = model_.next_logits(ids);
        if (gamma_ != 0.0) {
            std::vector<bool> seen(logits.size(), false);
            for (int id : ids) {
                if (id >= 0 && static_cast<std::size_t>(id) < logits.size() && !seen[id] &&
                    model_.vocab().is_plain_word(id)) {
                    seen[id] = true;
                    logits[static_cast<std::size_t>(id)] += gamma_;
                }
            }
        }
        return logits;
    }

private:
    NGramModel model_;
    double gamma_;
};

}  // namespace stallkit
