// stallkit command-line entry point: corpus generation, repository indexing,
// single completions, and benchmark runs over the strategy matrix.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stallkit/corpusgen.hpp"
#include "stallkit/pipeline.hpp"
#include "stallkit/remote_backend.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace stallkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitMissingArtifact = 3;
constexpr int kExitBackend = 4;

struct RunSettings {
    StrategyConfig strategy;
    int ngram_order = 3;
    double ngram_alpha = 0.1;
    double prompt_bias = 2.0;
    int jobs = 1;
};

// plain key=value lines; '#' starts a comment
std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim_copy(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw std::runtime_error("config line without '=': " + t);
        kv[trim_copy(t.substr(0, eq))] = trim_copy(t.substr(eq + 1));
    }
    return kv;
}

bool parse_bool(const std::string& v) { return v == "1" || v == "true" || v == "on" || v == "yes"; }

void apply_config_file(RunSettings& s, const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) {
        if (k == "prompt_f") s.strategy.prompt_f = parse_bool(v);
        else if (k == "prompt_t") s.strategy.prompt_t = parse_bool(v);
        else if (k == "decode") s.strategy.decode = parse_bool(v);
        else if (k == "post") s.strategy.post = parse_bool(v);
        else if (k == "rag") s.strategy.rag = parse_bool(v);
        else if (k == "allow_slow") s.strategy.allow_slow = parse_bool(v);
        else if (k == "in_file_tokens") s.strategy.in_file_tokens = std::stoi(v);
        else if (k == "per_crossfile_tokens") s.strategy.per_crossfile_tokens = std::stoi(v);
        else if (k == "retrieved_k") s.strategy.retrieved_k = std::stoi(v);
        else if (k == "max_new_tokens") s.strategy.max_new_tokens = std::stoi(v);
        else if (k == "beam_width") s.strategy.beam_width = std::stoi(v);
        else if (k == "ngram_order") s.ngram_order = std::stoi(v);
        else if (k == "ngram_alpha") s.ngram_alpha = std::stod(v);
        else if (k == "prompt_bias") s.prompt_bias = std::stod(v);
        else if (k == "jobs") s.jobs = std::stoi(v);
        else throw std::runtime_error("unknown config key: " + k);
    }
}

StrategyConfig combo_from_label(const std::string& label, const StrategyConfig& base) {
    StrategyConfig c = base;
    c.prompt_f = c.prompt_t = c.decode = c.post = c.rag = false;
    if (label == "in-file" || label == "infile") return c;
    std::string rest = label;
    while (!rest.empty()) {
        auto plus = rest.find('+');
        std::string part = rest.substr(0, plus);
        rest = plus == std::string::npos ? "" : rest.substr(plus + 1);
        if (part == "prompt-f") c.prompt_f = true;
        else if (part == "prompt-t") c.prompt_t = true;
        else if (part == "decode") c.decode = true;
        else if (part == "post") c.post = true;
        else if (part == "rag") c.rag = true;
        else throw std::runtime_error("unknown strategy '" + part + "' in combo " + label);
    }
    return c;
}

// every combination exercised in the experiments; decode+post excluded by default
std::vector<std::string> default_matrix() {
    return {"in-file",
            "rag",
            "prompt-f",
            "prompt-t",
            "decode",
            "post",
            "prompt-f+decode",
            "prompt-f+post",
            "prompt-t+decode",
            "prompt-t+post",
            "rag+prompt-f",
            "rag+prompt-t",
            "rag+decode",
            "rag+post",
            "rag+prompt-f+decode",
            "rag+prompt-f+post",
            "rag+prompt-t+decode",
            "rag+prompt-t+post"};
}

struct LoadedBench {
    std::vector<CompletionTask> tasks;
    BenchContext ctx;
    std::unique_ptr<LmBackend> backend;
    std::vector<RepoSnapshot> snapshots;
};

// Loads tasks + per-repo contexts from a corpus directory (repos/<name>/...)
// and sets up the backend: remote when STALLKIT_BACKEND_URL is set, otherwise
// an n-gram model trained on the corpus with unseen ground-truth lines held out.
LoadedBench load_bench(const std::string& task_file, const std::string& corpus_dir,
                       const RunSettings& settings, PerturbConfig perturb) {
    LoadedBench lb;
    if (!fs::exists(task_file)) throw std::runtime_error("missing task file: " + task_file);
    lb.tasks = load_tasks(task_file);

    std::set<std::string> repo_names;
    for (const auto& t : lb.tasks) repo_names.insert(t.repo);
    for (const auto& name : repo_names) {
        fs::path root = fs::path(corpus_dir) / "repos" / name;
        if (!fs::exists(root))
            throw std::runtime_error("missing repository directory: " + root.string());
        RepoSnapshot snap = load_repo(root.string());
        snap.name = name;
        lb.snapshots.push_back(std::move(snap));
    }

    const char* url = std::getenv("STALLKIT_BACKEND_URL");
    if (url && *url) {
        lb.backend = std::make_unique<RemoteBackend>(url);
    } else {
        NGramModel model = train_ngram(bench_training_texts(lb.snapshots, lb.tasks),
                                       settings.ngram_order, settings.ngram_alpha);
        lb.backend = std::make_unique<NGramBackend>(std::move(model), settings.prompt_bias);
    }

    lb.ctx.backend = lb.backend.get();
    lb.ctx.perturb = perturb;
    for (const auto& snap : lb.snapshots) add_repo_context(lb.ctx, snap);
    return lb;
}

int cmd_gen(std::uint64_t seed, int repos, int tasks_per_repo, int distractors, double unique_frac,
            double unseen_frac, const std::string& out_dir) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.n_repos = repos;
    cfg.tasks_per_repo = tasks_per_repo;
    cfg.distractors = distractors;
    cfg.unique_frac = unique_frac;
    cfg.unseen_frac = unseen_frac;
    GeneratedCorpus corpus = generate_corpus(cfg);
    write_corpus(corpus, out_dir);
    std::size_t files = 0;
    for (const auto& r : corpus.repos) files += r.files.size();
    std::cout << "generated " << corpus.repos.size() << " repos, " << files << " files, "
              << corpus.tasks.size() << " tasks -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_index(const std::string& repo_dir, const std::string& out_file) {
    RepoSnapshot repo = load_repo(repo_dir);
    SymbolIndex index = build_index(repo);
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_file);
    out << index_to_json(index).dump(2) << "\n";
    std::cout << "indexed " << index.modules.size() << " classes from " << repo.files.size()
              << " files (" << index.skipped.size() << " with diagnostics) in " << std::fixed
              << std::setprecision(6) << index.build_time_s << " s -> " << out_file << "\n";
    return kExitOk;
}

int cmd_complete(const std::string& task_file, const std::string& corpus_dir,
                 const std::string& task_id, int nth, const RunSettings& settings,
                 bool dump_prompt) {
    LoadedBench lb = load_bench(task_file, corpus_dir, settings, {});
    const CompletionTask* task = nullptr;
    if (!task_id.empty()) {
        for (const auto& t : lb.tasks)
            if (t.task_id == task_id) task = &t;
        if (!task) throw std::runtime_error("no task with id " + task_id);
    } else {
        if (nth < 0 || static_cast<std::size_t>(nth) >= lb.tasks.size())
            throw std::runtime_error("task index out of range");
        task = &lb.tasks[static_cast<std::size_t>(nth)];
    }

    TaskOutcome outcome = run_task(*task, settings.strategy, lb.ctx);
    if (dump_prompt) {
        for (const auto& seg : outcome.bundle.segments) {
            std::cout << "=== " << segment_kind_name(seg.kind) << " (" << seg.token_count
                      << " tokens) ===\n"
                      << seg.text;
            if (!seg.text.empty() && seg.text.back() != '\n') std::cout << "\n";
        }
        std::cout << "=== prediction ===\n";
    }
    std::cout << outcome.prediction << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& task_file, const std::string& corpus_dir,
              std::vector<std::string> combos, const RunSettings& settings, PerturbConfig perturb,
              const std::string& report_file) {
    if (combos.empty()) combos = default_matrix();

    std::vector<StrategyConfig> configs;
    for (const auto& label : combos) {
        StrategyConfig c = combo_from_label(label, settings.strategy);
        if (c.needs_slow_gate())
            throw std::runtime_error(
                "combo '" + label +
                "' combines decode and post, whose joint cost is disproportionate "
                "(masked beam search); pass --allow-slow to run it anyway");
        configs.push_back(c);
    }

    LoadedBench lb = load_bench(task_file, corpus_dir, settings, perturb);

    std::vector<MetricsReport> reports;
    for (const auto& config : configs) {
        reports.push_back(run_bench(lb.tasks, config, lb.ctx, settings.jobs));
        std::cout << "finished " << reports.back().label << "\n";
    }

    std::cout << "\n" << render_metrics_table(reports) << "\n" << render_latency_table(reports);

    if (!report_file.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : reports) j.push_back(report_to_json(r));
        std::ofstream out(report_file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + report_file);
        out << j.dump(2) << "\n";
        std::cout << "\nreport written to " << report_file << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"static-analysis-boosted repository-level code completion toolkit"};
    app.require_subcommand(1);

    RunSettings settings;
    std::string config_file;

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus and task file");
    std::uint64_t seed = 1;
    int repos = 4, tasks_per_repo = 4, distractors = 3;
    double unique_frac = 0.7, unseen_frac = 1.0;
    std::string out_dir = "corpus";
    gen->add_option("--seed", seed);
    gen->add_option("--repos", repos);
    gen->add_option("--tasks-per-repo", tasks_per_repo);
    gen->add_option("--distractors", distractors);
    gen->add_option("--unique-frac", unique_frac);
    gen->add_option("--unseen-frac", unseen_frac);
    gen->add_option("--out", out_dir);

    // index
    auto* index_cmd = app.add_subcommand("index", "build and serialize a repository symbol index");
    std::string repo_dir, index_out = "index.json";
    index_cmd->add_option("--repo", repo_dir)->required();
    index_cmd->add_option("--out", index_out);

    // shared strategy flags for complete/bench
    auto add_strategy_flags = [&](CLI::App* cmd) {
        cmd->add_flag("--prompt-f", settings.strategy.prompt_f,
                      "prepend file-level dependency context");
        cmd->add_flag("--prompt-t", settings.strategy.prompt_t,
                      "prepend the valid-identifier list");
        cmd->add_flag("--decode", settings.strategy.decode, "mask logits at member-access dots");
        cmd->add_flag("--post", settings.strategy.post, "beam search + static-check reranking");
        cmd->add_flag("--rag", settings.strategy.rag, "prepend retrieved snippets");
        cmd->add_flag("--allow-slow", settings.strategy.allow_slow,
                      "permit the decode+post combination");
        cmd->add_option("--config", config_file, "key=value config file");
        cmd->add_option("--max-new-tokens", settings.strategy.max_new_tokens);
        cmd->add_option("--beam-width", settings.strategy.beam_width);
        cmd->add_option("--prompt-bias", settings.prompt_bias,
                        "prompt-presence logit bonus of the n-gram backend");
        cmd->add_option("--jobs", settings.jobs);
    };

    // complete
    auto* complete = app.add_subcommand("complete", "run one completion task");
    std::string task_file, corpus_dir = ".", task_id;
    int nth = 0;
    bool dump_prompt = false;
    complete->add_option("--task-file", task_file)->required();
    complete->add_option("--corpus", corpus_dir, "corpus directory containing repos/<name>/");
    complete->add_option("--task-id", task_id);
    complete->add_option("--nth", nth, "0-based task index when --task-id is not given");
    complete->add_flag("--dump-prompt", dump_prompt, "print the assembled prompt segments");
    add_strategy_flags(complete);

    // bench
    auto* bench = app.add_subcommand("bench", "run the strategy matrix and report metrics");
    std::vector<std::string> combos;
    std::string report_file;
    double perturb_drop = 0.0, perturb_noise = 0.0;
    std::uint64_t perturb_seed = 0;
    bool perturb_on = false;
    bench->add_option("--task-file", task_file)->required();
    bench->add_option("--corpus", corpus_dir, "corpus directory containing repos/<name>/");
    bench->add_option("--combo", combos,
                      "strategy combination, e.g. in-file or rag+prompt-f+post (repeatable; "
                      "default: the full matrix)");
    bench->add_option("--report", report_file, "write per-combination JSON reports here");
    bench->add_flag("--perturb", perturb_on, "perturb valid-identifier sets");
    bench->add_option("--perturb-drop", perturb_drop);
    bench->add_option("--perturb-noise", perturb_noise);
    bench->add_option("--perturb-seed", perturb_seed);
    add_strategy_flags(bench);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) {
            RunSettings file_settings;
            apply_config_file(file_settings, parse_config_file(config_file));
            // flags given on the command line take precedence over the file
            RunSettings merged = file_settings;
            for (CLI::App* cmd : {complete, bench}) {
                if (!cmd->parsed()) continue;
                for (const auto& [flag, apply] :
                     std::vector<std::pair<std::string, std::function<void()>>>{
                         {"--prompt-f", [&] { merged.strategy.prompt_f = settings.strategy.prompt_f; }},
                         {"--prompt-t", [&] { merged.strategy.prompt_t = settings.strategy.prompt_t; }},
                         {"--decode", [&] { merged.strategy.decode = settings.strategy.decode; }},
                         {"--post", [&] { merged.strategy.post = settings.strategy.post; }},
                         {"--rag", [&] { merged.strategy.rag = settings.strategy.rag; }},
                         {"--allow-slow",
                          [&] { merged.strategy.allow_slow = settings.strategy.allow_slow; }},
                         {"--max-new-tokens",
                          [&] { merged.strategy.max_new_tokens = settings.strategy.max_new_tokens; }},
                         {"--beam-width",
                          [&] { merged.strategy.beam_width = settings.strategy.beam_width; }},
                         {"--prompt-bias", [&] { merged.prompt_bias = settings.prompt_bias; }},
                         {"--jobs", [&] { merged.jobs = settings.jobs; }}}) {
                    if (cmd->count(flag) > 0) apply();
                }
            }
            settings = merged;
        }

        if (gen->parsed())
            return cmd_gen(seed, repos, tasks_per_repo, distractors, unique_frac, unseen_frac,
                           out_dir);
        if (index_cmd->parsed()) return cmd_index(repo_dir, index_out);
        if (complete->parsed())
            return cmd_complete(task_file, corpus_dir, task_id, nth, settings, dump_prompt);
        if (bench->parsed()) {
            PerturbConfig perturb;
            perturb.enabled = perturb_on || perturb_drop > 0.0 || perturb_noise > 0.0;
            perturb.drop_rate = perturb_drop;
            perturb.noise_rate = perturb_noise;
            perturb.seed = perturb_seed;
            return cmd_bench(task_file, corpus_dir, combos, settings, perturb, report_file);
        }
    } catch (const BackendUnavailable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const EmptyRepository& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const MalformedRecord& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::string what = e.what();
        std::cerr << "error: " << what << "\n";
        if (what.rfind("missing", 0) == 0 || what.find("no repository context") != std::string::npos)
            return kExitMissingArtifact;
        return kExitInput;
    }
    return kExitOk;
}
