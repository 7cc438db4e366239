#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "stallkit/corpusgen.hpp"
#include "stallkit/decoder.hpp"
#include "stallkit/evalkit.hpp"
#include "stallkit/postproc.hpp"
#include "stallkit/prompt.hpp"
#include "stallkit/repo_index.hpp"
#include "stallkit/retriever.hpp"

namespace stallkit {

// Decorator that charges tokenizer and logits work to a per-task inference
// clock. One instance per task; the wrapped backend is shared and immutable.
class TimingBackend : public LmBackend {
public:
    TimingBackend(const LmBackend& inner, double* inference_s)
        : inner_(inner), inference_s_(inference_s) {}

    int vocab_size() const override { return inner_.vocab_size(); }
    int newline_id() const override { return inner_.newline_id(); }
    std::vector<int> encode(const std::string& text) const override {
        Timer t(inference_s_);
        return inner_.encode(text);
    }
    std::string decode(const std::vector<int>& ids) const override {
        Timer t(inference_s_);
        return inner_.decode(ids);
    }
    std::vector<double> next_logits(const std::vector<int>& ids) const override {
        Timer t(inference_s_);
        return inner_.next_logits(ids);
    }
    std::string token_text(int id) const override { return inner_.token_text(id); }
    std::optional<int> first_subtoken_id(const std::string& identifier) const override {
        return inner_.first_subtoken_id(identifier);
    }

private:
    struct Timer {
        explicit Timer(double* sink) : sink_(sink), t0_(std::chrono::steady_clock::now()) {}
        ~Timer() {
            *sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        }
        double* sink_;
        std::chrono::steady_clock::time_point t0_;
    };

    const LmBackend& inner_;
    double* inference_s_;
};

struct PerturbConfig {
    bool enabled = false;
    double drop_rate = 0.0;
    double noise_rate = 0.0;
    std::uint64_t seed = 0;
};

struct RepoContext {
    RepoSnapshot snapshot;
    SymbolIndex index;
    std::vector<Window> windows;
    std::vector<std::string> member_pool;  // sorted; noise source for perturbation
};

struct BenchContext {
    std::map<std::string, RepoContext> repos;
    const LmBackend* backend = nullptr;
    PerturbConfig perturb;

    const RepoContext& repo(const std::string& name) const {
        auto it = repos.find(name);
        if (it == repos.end()) throw std::runtime_error("no repository context for " + name);
        return it->second;
    }
};

inline void add_repo_context(BenchContext& ctx, const RepoSnapshot& snapshot) {
    RepoContext rc;
    rc.snapshot = snapshot;
    rc.index = build_index(snapshot);
    rc.windows = build_windows(snapshot);
    rc.member_pool = rc.index.all_member_names();
    ctx.repos.emplace(snapshot.name, std::move(rc));
}

inline BenchContext make_bench_context(const GeneratedCorpus& corpus, const LmBackend& backend,
                                       PerturbConfig perturb = {}) {
    BenchContext ctx;
    ctx.backend = &backend;
    ctx.perturb = perturb;
    for (const auto& repo : corpus.repos) add_repo_context(ctx, repo.snapshot());
    return ctx;
}

// Training text for the reference model: every repository file with the full
// ground-truth line of each unseen task blanked out, plus the prompt-marker
// primer so rendered segments stay in-vocabulary.
inline std::vector<std::string> bench_training_texts(const std::vector<RepoSnapshot>& snapshots,
                                                     const std::vector<CompletionTask>& tasks) {
    std::vector<std::string> texts;
    std::vector<std::string> paths;
    for (const auto& repo : snapshots) {
        for (const auto& f : repo.files) {
            paths.push_back(f.path);
            std::string text = f.text;
            for (const auto& task : tasks) {
                if (!task.unseen || task.repo != repo.name || task.file != f.path) continue;
                std::vector<std::string> lines = split_lines(text);
                if (static_cast<std::size_t>(task.cursor_line) < lines.size())
                    lines[static_cast<std::size_t>(task.cursor_line)].clear();
                std::string rebuilt;
                for (const auto& l : lines) rebuilt += l + "\n";
                text = rebuilt;
            }
            texts.push_back(std::move(text));
        }
    }
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    texts.push_back(prompt_vocabulary_primer(paths));
    return texts;
}

inline std::vector<std::string> bench_training_texts(const GeneratedCorpus& corpus) {
    std::vector<RepoSnapshot> snapshots;
    for (const auto& repo : corpus.repos) snapshots.push_back(repo.snapshot());
    return bench_training_texts(snapshots, corpus.tasks);
}

struct RunAudit {
    MaskAudit mask;
    int post_selections = 0;
    int post_contract_violations = 0;  // must stay 0: first-passing / top-1 fallback rule
};

struct TaskOutcome {
    std::string prediction;
    PromptBundle bundle;
    double total_s = 0.0;
    double analysis_s = 0.0;
    double inference_s = 0.0;
    double retrieval_s = 0.0;
    MaskAudit mask_audit;
    bool post_ran = false;
    bool post_any_passed = false;
    bool post_chosen_passed = false;
    std::size_t post_chosen_rank = 0;
    std::string error;
};

// Runs one completion task through the configured pipeline phases.
inline TaskOutcome run_task(const CompletionTask& task, const StrategyConfig& config,
                            const BenchContext& ctx) {
    if (config.needs_slow_gate())
        throw std::runtime_error(
            "decode+post is gated: masked beam search is disproportionately slow; "
            "pass allow_slow to combine them");

    TaskOutcome out;
    auto t0 = std::chrono::steady_clock::now();
    const RepoContext& repo = ctx.repo(task.repo);
    TimingBackend backend(*ctx.backend, &out.inference_s);

    auto perturbed = [&](ValidTokenSet valid) {
        if (!ctx.perturb.enabled) return valid;
        std::uint64_t seed = ctx.perturb.seed ^ stable_hash(task.task_id);
        return perturb_valid_set(valid, ctx.perturb.drop_rate, ctx.perturb.noise_rate,
                                 repo.member_pool, seed);
    };

    ValidSetProvider valid_provider = [&]() {
        SourceFile file(task.file, task.prefix);
        return perturbed(valid_identifiers_at(file, task.prefix.size(), repo.index));
    };

    PhaseTimers timers;
    PromptBundle bundle =
        assemble(task, config, repo.index, &repo.windows, backend, valid_provider, &timers);
    out.retrieval_s += timers.retrieval_s;
    out.analysis_s += timers.analysis_s;

    std::vector<int> prompt_ids = backend.encode(bundle.text());

    MaskProvider mask_provider;
    if (config.decode) {
        mask_provider = [&, &analysis = out.analysis_s](const std::string& generated) {
            auto ta = std::chrono::steady_clock::now();
            SourceFile file(task.file, task.prefix + generated);
            ValidTokenSet valid =
                perturbed(valid_identifiers_at(file, file.text.size(), repo.index));
            analysis +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - ta).count();
            return valid;
        };
    }

    if (config.post) {
        std::vector<Candidate> candidates = beam_search(backend, prompt_ids, config, mask_provider);
        auto ta = std::chrono::steady_clock::now();
        PostprocResult sel = select(candidates, task, repo.index);
        out.analysis_s +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - ta).count();
        out.post_ran = true;
        out.post_any_passed = sel.any_passed;
        out.post_chosen_passed = sel.reports.at(sel.chosen_rank).passed;
        out.post_chosen_rank = sel.chosen_rank;
        out.prediction = sel.chosen.text;
    } else {
        Candidate cand = generate(backend, prompt_ids, config, mask_provider, &out.mask_audit);
        out.prediction = cand.text;
    }

    out.bundle = std::move(bundle);
    out.total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Executes the pipeline over a task list and aggregates metrics and latency.
// Per-task failures score zero and never abort the run.
inline MetricsReport run_bench(const std::vector<CompletionTask>& tasks,
                               const StrategyConfig& config, const BenchContext& ctx, int jobs = 1,
                               RunAudit* audit = nullptr) {
    if (tasks.empty()) throw std::invalid_argument("run_bench: no tasks");
    std::vector<TaskRecord> records(tasks.size());
    std::mutex audit_mu;

    auto run_one = [&](std::size_t i) {
        const CompletionTask& task = tasks[i];
        TaskRecord rec;
        rec.task_id = task.task_id;
        try {
            TaskOutcome outcome = run_task(task, config, ctx);
            rec.prediction = outcome.prediction;
            rec.line_em = line_em(outcome.prediction, task.groundtruth);
            rec.line_es = line_es(outcome.prediction, task.groundtruth);
            rec.id_em = id_em(outcome.prediction, task.groundtruth);
            rec.id_f1 = id_f1(outcome.prediction, task.groundtruth);
            rec.total_s = outcome.total_s;
            rec.analysis_s = outcome.analysis_s;
            rec.inference_s = outcome.inference_s;
            rec.retrieval_s = outcome.retrieval_s;
            if (audit) {
                std::lock_guard<std::mutex> lock(audit_mu);
                audit->mask.triggered_steps += outcome.mask_audit.triggered_steps;
                audit->mask.masked_steps += outcome.mask_audit.masked_steps;
                audit->mask.empty_mask_fallbacks += outcome.mask_audit.empty_mask_fallbacks;
                audit->mask.violations += outcome.mask_audit.violations;
                if (outcome.post_ran) {
                    audit->post_selections++;
                    bool ok = outcome.post_any_passed ? outcome.post_chosen_passed
                                                      : outcome.post_chosen_rank == 0;
                    if (!ok) audit->post_contract_violations++;
                }
            }
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        records[i] = std::move(rec);
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> workers;
        std::size_t next = 0;
        std::mutex mu;
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&]() {
                while (true) {
                    std::size_t i;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= tasks.size()) return;
                        i = next++;
                    }
                    run_one(i);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    return MetricsReport::aggregate(config.label(), std::move(records));
}

}  // namespace stallkit
