#pragma once

#include <utility>
#include <vector>

#include "stallkit/analyzer.hpp"
#include "stallkit/decoder.hpp"
#include "stallkit/tasks.hpp"

namespace stallkit {

struct PostprocResult {
    Candidate chosen;
    std::size_t chosen_rank = 0;  // 0-based rank in the model ordering
    bool any_passed = false;
    std::vector<StaticCheckReport> reports;  // one per candidate, model order
};

// Post-processing filter: the first candidate (in model rank order) whose
// spliced line passes static checking; when none passes, the model's top-1.
inline PostprocResult select(const std::vector<Candidate>& candidates, const CompletionTask& task,
                             const SymbolIndex& index) {
    PostprocResult result;
    SourceFile file(task.file, task.prefix);
    std::size_t cursor = task.prefix.size();

    std::ptrdiff_t first_pass = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        StaticCheckReport report = check_line(file, cursor, candidates[i].text, index);
        if (report.passed && first_pass < 0) first_pass = static_cast<std::ptrdiff_t>(i);
        result.reports.push_back(std::move(report));
    }
    result.any_passed = first_pass >= 0;
    result.chosen_rank = result.any_passed ? static_cast<std::size_t>(first_pass) : 0;
    result.chosen = candidates.at(result.chosen_rank);
    return result;
}

}  // namespace stallkit
