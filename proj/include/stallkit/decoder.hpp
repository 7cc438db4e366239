#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stallkit/analyzer.hpp"
#include "stallkit/lm.hpp"
#include "stallkit/prompt.hpp"

namespace stallkit {

// ---------------------------------------------------------------------------
// Mask construction and masked selection. A mask flags, for every vocabulary
// entry, whether it is the first sub-token of some identifier in the valid
// set; masked selection zeroes the probability of everything else.
// ---------------------------------------------------------------------------

struct MaskVector {
    std::vector<std::uint8_t> bits;  // length K

    std::size_t set_count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }
    bool any() const { return set_count() > 0; }
    bool allows(int id) const {
        return id >= 0 && static_cast<std::size_t>(id) < bits.size() && bits[static_cast<std::size_t>(id)];
    }
};

inline MaskVector mask_from_valid(const ValidTokenSet& valid, const LmBackend& backend) {
    MaskVector mask;
    mask.bits.assign(static_cast<std::size_t>(backend.vocab_size()), 0);
    for (const auto& [name, prov] : valid.entries) {
        auto id = backend.first_subtoken_id(name);
        if (id && *id >= 0 && static_cast<std::size_t>(*id) < mask.bits.size())
            mask.bits[static_cast<std::size_t>(*id)] = 1;
    }
    return mask;
}

inline MaskVector mask_from_valid(const ValidTokenSet& valid, const Vocab& vocab) {
    MaskVector mask;
    mask.bits.assign(static_cast<std::size_t>(vocab.size()), 0);
    for (const auto& [name, prov] : valid.entries) {
        int id = vocab.id_of(first_subtoken(name));
        if (id != Vocab::kUnkId) mask.bits[static_cast<std::size_t>(id)] = 1;
    }
    return mask;
}

// logits ⊕ valid: keep the logit where the mask is set, -inf otherwise.
inline std::vector<double> apply_mask(const std::vector<double>& logits, const MaskVector& mask) {
    std::vector<double> out(logits.size(), kNegInf);
    for (std::size_t k = 0; k < logits.size(); ++k)
        if (mask.bits[k]) out[k] = logits[k];
    return out;
}

// argmax over the masked distribution; throws when no token is valid.
inline int masked_argmax(const std::vector<double>& logits, const MaskVector& mask) {
    int best = -1;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (!mask.bits[k]) continue;
        if (best < 0 || logits[k] > logits[static_cast<std::size_t>(best)])
            best = static_cast<int>(k);
    }
    if (best < 0) throw NoValidTokens();
    return best;
}

inline int plain_argmax(const std::vector<double>& logits) {
    int best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    return best;
}

// ---------------------------------------------------------------------------
// Trigger tracking: the mask applies exactly at the step following a
// member-access '.', constraining the identifier's first sub-token only.
// ---------------------------------------------------------------------------

struct TriggerState {
    bool active = false;

    static bool ends_postfix(const std::string& tok_text, LmTokKind kind) {
        if (kind == LmTokKind::Word) return !is_keyword(tok_text);
        if (kind == LmTokKind::Number) return true;
        return tok_text == ")" || tok_text == "\"";
    }

    void observe(const std::string& tok_text, const std::string& prev_text, LmTokKind prev_kind) {
        active = tok_text == "." && ends_postfix(prev_text, prev_kind);
    }

    static TriggerState from_token_tail(const LmBackend& backend, const std::vector<int>& ids) {
        TriggerState t;
        if (ids.size() >= 2) {
            std::string last = backend.token_text(ids[ids.size() - 1]);
            std::string prev = backend.token_text(ids[ids.size() - 2]);
            t.active = last == "." && ends_postfix(prev, classify_token_text(prev));
        }
        return t;
    }
};

struct Candidate {
    std::vector<int> ids;  // content tokens; the terminating newline is excluded
    double logprob = 0.0;  // sum of ln softmax(step logits)[chosen id] over ids
    std::string text;
};

struct MaskAudit {
    int triggered_steps = 0;
    int masked_steps = 0;
    int empty_mask_fallbacks = 0;
    int violations = 0;  // chosen first sub-token outside the mask; must stay 0
};

// Valid identifiers for the subject text as completed so far; consulted at
// trigger steps when the decode strategy is active.
using MaskProvider = std::function<ValidTokenSet(const std::string& generated)>;

namespace detail {

inline double step_logprob(const std::vector<double>& logits, int chosen) {
    double mx = kNegInf;
    for (double l : logits) mx = std::max(mx, l);
    double sum = 0.0;
    for (double l : logits)
        if (l != kNegInf) sum += std::exp(l - mx);
    return logits[static_cast<std::size_t>(chosen)] - mx - std::log(sum);
}

}  // namespace detail

// Greedy decoding with optional trigger-point masking. Emits at most
// max_new_tokens tokens and stops before including the first newline.
inline Candidate generate(const LmBackend& backend, const std::vector<int>& prompt_ids,
                          const StrategyConfig& config, const MaskProvider& mask_provider = nullptr,
                          MaskAudit* audit = nullptr) {
    if (prompt_ids.empty()) throw std::invalid_argument("generate: empty prompt");
    std::vector<int> ids = prompt_ids;
    Candidate cand;
    TriggerState trigger = TriggerState::from_token_tail(backend, prompt_ids);

    for (int step = 0; step < config.max_new_tokens; ++step) {
        std::vector<double> logits = backend.next_logits(ids);
        std::vector<double> effective = logits;
        bool masked = false;
        if (trigger.active && mask_provider) {
            if (audit) audit->triggered_steps++;
            ValidTokenSet valid = mask_provider(cand.text);
            MaskVector mask = mask_from_valid(valid, backend);
            if (mask.any()) {
                effective = apply_mask(logits, mask);
                masked = true;
                if (audit) audit->masked_steps++;
            } else if (audit) {
                audit->empty_mask_fallbacks++;  // fall back to unmasked argmax
            }
            if (audit && masked) {
                int chosen = plain_argmax(effective);
                if (!mask.allows(chosen)) audit->violations++;
            }
        }
        int chosen = plain_argmax(effective);
        if (chosen == backend.newline_id()) break;
        cand.logprob += detail::step_logprob(effective, chosen);
        cand.ids.push_back(chosen);
        std::string tok = backend.token_text(chosen);
        std::string prev = ids.empty() ? "" : backend.token_text(ids.back());
        trigger.observe(tok, prev, classify_token_text(prev));
        ids.push_back(chosen);
        cand.text += tok;
    }
    return cand;
}

// Standard beam search with per-candidate newline termination. Candidates are
// ranked by descending logprob, ties by lexicographic text.
inline std::vector<Candidate> beam_search(const LmBackend& backend,
                                          const std::vector<int>& prompt_ids,
                                          const StrategyConfig& config,
                                          const MaskProvider& mask_provider = nullptr) {
    if (prompt_ids.empty()) throw std::invalid_argument("beam_search: empty prompt");
    const int width = std::max(1, config.beam_width);

    struct Hyp {
        std::vector<int> ids;
        double logprob = 0.0;     // content tokens only (what Candidate reports)
        double path_score = 0.0;  // includes the terminating-newline step; ranks hypotheses
        std::string text;
        TriggerState trigger;
        bool finished = false;
    };
    auto better = [](const Hyp& a, const Hyp& b) {
        if (a.path_score != b.path_score) return a.path_score > b.path_score;
        return a.text < b.text;
    };

    std::vector<Hyp> beams{
        Hyp{{}, 0.0, 0.0, "", TriggerState::from_token_tail(backend, prompt_ids), false}};

    for (int step = 0; step < config.max_new_tokens; ++step) {
        bool all_finished = true;
        std::vector<Hyp> pool;
        for (const auto& hyp : beams) {
            if (hyp.finished) {
                pool.push_back(hyp);
                continue;
            }
            all_finished = false;
            std::vector<int> full = prompt_ids;
            full.insert(full.end(), hyp.ids.begin(), hyp.ids.end());
            std::vector<double> logits = backend.next_logits(full);
            std::vector<double> effective = logits;
            if (hyp.trigger.active && mask_provider) {
                ValidTokenSet valid = mask_provider(hyp.text);
                MaskVector mask = mask_from_valid(valid, backend);
                if (mask.any()) effective = apply_mask(logits, mask);
            }
            // top (width) extensions of this hypothesis suffice for a global top (width)
            std::vector<int> order;
            for (int k = 0; k < static_cast<int>(effective.size()); ++k)
                if (effective[static_cast<std::size_t>(k)] != kNegInf) order.push_back(k);
            std::partial_sort(order.begin(),
                              order.begin() + std::min<std::size_t>(order.size(),
                                                                    static_cast<std::size_t>(width)),
                              order.end(), [&](int a, int b) {
                                  double la = effective[static_cast<std::size_t>(a)];
                                  double lb = effective[static_cast<std::size_t>(b)];
                                  if (la != lb) return la > lb;
                                  return a < b;
                              });
            int take = std::min<int>(width, static_cast<int>(order.size()));
            for (int r = 0; r < take; ++r) {
                int tok = order[static_cast<std::size_t>(r)];
                Hyp next = hyp;
                next.path_score += detail::step_logprob(effective, tok);
                if (tok == backend.newline_id()) {
                    next.finished = true;  // newline terminates; it is not appended or reported
                    pool.push_back(std::move(next));
                    continue;
                }
                next.logprob += detail::step_logprob(effective, tok);
                next.ids.push_back(tok);
                std::string tok_text = backend.token_text(tok);
                std::string prev_text =
                    hyp.ids.empty() ? backend.token_text(prompt_ids.back()) : backend.token_text(hyp.ids.back());
                next.trigger.observe(tok_text, prev_text, classify_token_text(prev_text));
                next.text += tok_text;
                pool.push_back(std::move(next));
            }
        }
        if (all_finished) break;
        std::sort(pool.begin(), pool.end(), better);
        if (static_cast<int>(pool.size()) > width) pool.resize(static_cast<std::size_t>(width));
        beams = std::move(pool);
    }

    std::sort(beams.begin(), beams.end(), better);
    std::vector<Candidate> out;
    for (const auto& hyp : beams) out.push_back({hyp.ids, hyp.logprob, hyp.text});
    return out;
}

// Emulates imprecise analysis: drops each identifier independently with
// drop_rate, then adds ceil(noise_rate * |valid|) identifiers from noise_pool.
// Deterministic per seed; noise_pool must be sorted for reproducibility.
inline ValidTokenSet perturb_valid_set(const ValidTokenSet& valid, double drop_rate,
                                       double noise_rate, const std::vector<std::string>& noise_pool,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ValidTokenSet out;
    out.at_member_position = valid.at_member_position;
    out.receiver_resolved = valid.receiver_resolved;

    for (const auto& [name, prov] : valid.entries)
        if (unit_draw(rng) >= drop_rate) out.entries.emplace(name, prov);

    std::size_t want = static_cast<std::size_t>(
        std::ceil(noise_rate * static_cast<double>(valid.entries.size())));
    std::vector<std::string> pool;
    for (const auto& n : noise_pool)
        if (!valid.contains(n)) pool.push_back(n);
    for (std::size_t added = 0; added < want && !pool.empty(); ++added) {
        std::size_t j = static_cast<std::size_t>(rng() % pool.size());
        out.entries.emplace(pool[j], Provenance::MemberOfReceiver);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
}

}  // namespace stallkit
