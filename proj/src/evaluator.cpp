// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "recross/error.hpp"

namespace recross {

std::string_view to_string(Metric metric) {
    return metric == Metric::em ? "em" : "softem";
}

Metric parse_metric(std::string_view name) {
    if (name == "em") return Metric::em;
    if (name == "softem" || name == "soft_em") return Metric::soft_em;
    fail(ErrorKind::precondition, "unknown metric '" + std::string(name) + "' (expected em or softem)");
}

std::string normalize_answer(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

int exact_match(std::string_view prediction, std::string_view truth) {
    return normalize_answer(prediction) == normalize_answer(truth) ? 1 : 0;
}

int soft_em(std::string_view prediction, std::string_view truth) {
    const std::string p = normalize_answer(prediction);
    const std::string t = normalize_answer(truth);
    if (p == t) {
        return 1;
    }
    if (p.empty() || t.empty()) {
        return 0;
    }
    return (t.find(p) != std::string::npos || p.find(t) != std::string::npos) ? 1 : 0;
}

int metric_match(Metric metric, std::string_view prediction, std::string_view truth) {
    return metric == Metric::em ? exact_match(prediction, truth) : soft_em(prediction, truth);
}

double match_percentage(Metric metric, const std::vector<std::string>& predictions,
                        const std::vector<Example>& eval_set) {
    require(!eval_set.empty(), "evaluation set is empty");
    require(predictions.size() == eval_set.size(), "one prediction per evaluation example is required");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < eval_set.size(); ++i) {
        matches += static_cast<std::size_t>(metric_match(metric, predictions[i], eval_set[i].output_text));
    }
    return 100.0 * static_cast<double>(matches) / static_cast<double>(eval_set.size());
}

TaskScore evaluate_task(const ModelHandle& model, const std::vector<Example>& eval_set, Metric metric,
                        Backend& backend, int round) {
    require(!eval_set.empty(), "evaluation set is empty");
    std::vector<std::string> inputs;
    inputs.reserve(eval_set.size());
    for (const auto& ex : eval_set) {
        require(!ex.output_text.empty(), "evaluation example '" + ex.example_id + "' has no truth");
        inputs.push_back(ex.input_text);
    }
    const auto predictions = backend.generate(model, inputs);
    return {eval_set.front().task_name, round, metric, match_percentage(metric, predictions, eval_set)};
}

namespace {

// Summation over sorted values makes the result independent of input order.
double sorted_mean(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(const std::vector<double>& sorted_values, double mean) {
    if (sorted_values.size() < 2) {
        return 0.0;
    }
    double sq = 0.0;
    for (double v : sorted_values) {
        sq += (v - mean) * (v - mean);
    }
    return std::sqrt(sq / static_cast<double>(sorted_values.size() - 1));
}

}  // namespace

RoundStats round_stats(std::vector<double> values) {
    require(!values.empty(), "no rounds to summarise");
    RoundStats stats;
    stats.mean = sorted_mean(values);
    stats.std = sample_std(values, stats.mean);
    stats.min = values.front();
    stats.max = values.back();
    const std::size_t n = values.size();
    stats.median = n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    // Guard the ordering invariants against last-ulp rounding of the mean.
    stats.mean = std::clamp(stats.mean, stats.min, stats.max);
    return stats;
}

AggregateReport aggregate_rounds(const std::vector<TaskScore>& scores) {
    require(!scores.empty(), "no task scores to aggregate");
    std::set<int> rounds;
    std::set<std::string> tasks;
    std::map<std::pair<int, std::string>, double> cells;
    for (const auto& s : scores) {
        rounds.insert(s.round);
        tasks.insert(s.task);
        if (!cells.emplace(std::pair{s.round, s.task}, s.value).second) {
            fail(ErrorKind::precondition,
                 "duplicate score for task '" + s.task + "' in round " + std::to_string(s.round));
        }
    }
    for (int r : rounds) {
        for (const auto& t : tasks) {
            require(cells.contains({r, t}), "missing score for task '" + t + "' in round " + std::to_string(r));
        }
    }

    AggregateReport report;
    for (const auto& t : tasks) {
        std::vector<double> values;
        for (int r : rounds) {
            values.push_back(cells.at({r, t}));
        }
        MeanStd ms;
        ms.mean = sorted_mean(values);
        ms.std = sample_std(values, ms.mean);
        report.per_task[t] = ms;
    }
    std::vector<double> overall;
    for (int r : rounds) {
        std::vector<double> values;
        for (const auto& t : tasks) {
            values.push_back(cells.at({r, t}));
        }
        const double mean = sorted_mean(values);
        report.round_overall[r] = mean;
        overall.push_back(mean);
    }
    report.overall = round_stats(std::move(overall));
    return report;
}

std::map<std::string, double> retrieval_distribution(const CandidateList& retrieved, const ExampleCollection& corpus) {
    require(!retrieved.empty(), "no retrieved entries");
    std::map<std::string, std::size_t> counts;
    for (const auto& e : retrieved.entries) {
        ++counts[corpus.at_id(e.example_id).task_name];
    }
    std::map<std::string, double> fractions;
    for (const auto& [task, count] : counts) {
        fractions[task] = static_cast<double>(count) / static_cast<double>(retrieved.size());
    }
    return fractions;
}

}  // namespace recross
