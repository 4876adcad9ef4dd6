// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "recross/backend.hpp"
#include "recross/example.hpp"
#include "recross/retriever.hpp"

namespace recross {

enum class Metric { em, soft_em };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

/// Trims, collapses whitespace runs to one space and lower-cases ASCII.
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view prediction, std::string_view truth);

/// Exact match, or either normalised string contains the other. An empty
/// normalised string only matches another empty one.
int soft_em(std::string_view prediction, std::string_view truth);

int metric_match(Metric metric, std::string_view prediction, std::string_view truth);

struct TaskScore {
    std::string task;
    int round = 0;
    Metric metric = Metric::soft_em;
    double value = 0.0;  // percentage in [0, 100]

    bool operator==(const TaskScore&) const = default;
};

TaskScore evaluate_task(const ModelHandle& model, const std::vector<Example>& eval_set,
                        Metric metric, Backend& backend, int round = 0);

/// Percentage of matching (prediction, truth) pairs.
double match_percentage(Metric metric, const std::vector<std::string>& predictions,
                        const std::vector<Example>& eval_set);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Statistics over per-round overall scores. std is the sample standard deviation
/// (divisor R - 1), zero for a single round.
struct RoundStats {
    double mean = 0.0;
    double std = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

RoundStats round_stats(std::vector<double> values);

struct AggregateReport {
    std::map<std::string, MeanStd> per_task;
    /// Round index -> unweighted mean across tasks.
    std::map<int, double> round_overall;
    RoundStats overall;
};

/// Requires every (round, task) cell exactly once.
AggregateReport aggregate_rounds(const std::vector<TaskScore>& scores);

/// Share of retrieved occurrences per upstream task; duplicates count each time.
std::map<std::string, double> retrieval_distribution(const CandidateList& retrieved,
                                                     const ExampleCollection& corpus);

}  // namespace recross
