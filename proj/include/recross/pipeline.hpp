// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "recross/backend.hpp"
#include "recross/config.hpp"
#include "recross/dense_index.hpp"
#include "recross/evaluator.hpp"
#include "recross/example.hpp"

namespace recross {

enum class PipelineMode {
    recross,           // dense retrieval, rerank, re-learn
    dense_only,        // dense retrieval of final_size, re-learn
    zero_shot,         // frozen base model
    random_retrieval,  // uniform sample of final_size upstream rows, re-learn
};

std::string_view to_string(PipelineMode mode);
PipelineMode parse_mode(std::string_view name);

/// One query set per target task, all drawn for the same round.
struct RoundQueries {
    int round = 0;
    std::uint64_t seed = 0;
    std::vector<QuerySet> sets;
};

std::uint64_t round_seed(std::uint64_t run_seed, int round);

/// Draws `rounds` pairwise-disjoint query sets of `query_size` per task from an
/// unlabeled pool. Each task's pool is permuted once with a seed derived from
/// (run seed, task); round r takes the r-th slice.
std::vector<RoundQueries> sample_query_rounds(const ExampleCollection& pool, int rounds,
                                              int query_size, std::uint64_t run_seed);

struct PipelineOptions {
    PipelineMode mode = PipelineMode::recross;
    Metric metric = Metric::soft_em;
    /// Pair scorer for the rerank stage; required by PipelineMode::recross.
    std::optional<ModelHandle> scorer;
    /// When set, intermediates, manifest.json and report.json are written here.
    std::optional<std::filesystem::path> out_dir;
};

struct TaskRecord {
    std::string task;
    double value = 0.0;
    std::string model_id;
    std::string candidates_file;
    std::string candidates_sha256;
    std::string retrieved_file;
    std::string retrieved_sha256;
    std::map<std::string, double> distribution;
};

struct RoundRecord {
    int round = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::vector<TaskRecord> tasks;
};

struct ArtifactRecord {
    std::string path;  // relative to out_dir
    std::string sha256;
};

struct PipelineReport {
    PipelineMode mode = PipelineMode::recross;
    Metric metric = Metric::soft_em;
    RunConfig config;
    std::vector<RoundRecord> rounds;
    std::vector<ArtifactRecord> artifacts;
    /// Aggregated over the rounds that completed.
    std::optional<AggregateReport> aggregate;
    bool partial = false;

    std::vector<TaskScore> task_scores() const;
};

/// Retrieve (final_size x upsample_ratio), rerank to final_size, fine-tune the base
/// model once per (round, task), evaluate on that task's held-out set, then
/// aggregate. A failing round is recorded and the remaining rounds still run.
PipelineReport run_generalization(const ExampleCollection& corpus, const DenseIndex& index,
                                  const std::vector<RoundQueries>& rounds,
                                  const std::map<std::string, std::vector<Example>>& eval_sets,
                                  const RunConfig& config, Backend& backend,
                                  const PipelineOptions& options);

/// zero_shot or random_retrieval; the query sets only name the target tasks.
PipelineReport run_baseline(PipelineMode mode, const ExampleCollection& corpus,
                            const DenseIndex& index, const std::vector<RoundQueries>& rounds,
                            const std::map<std::string, std::vector<Example>>& eval_sets,
                            const RunConfig& config, Backend& backend, Metric metric,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Uniform sample without replacement of `count` admitted rows, from the seed alone.
std::vector<std::size_t> random_rows(const DenseIndex& index, std::size_t count,
                                     std::uint64_t seed, const RowMask& admitted = {});

nlohmann::json report_to_json(const PipelineReport& report);
nlohmann::json manifest_to_json(const PipelineReport& report);

/// Task scores recorded in a report.json document.
std::vector<TaskScore> task_scores_from_json(const nlohmann::json& report);

/// Per-task mean/std table followed by the round statistics.
void write_report_table(std::ostream& out, const AggregateReport& aggregate, Metric metric);

/// CSV rows `target_task,upstream_task,fraction`, averaged over completed rounds.
void write_distribution_csv(std::ostream& out, const nlohmann::json& report);

}  // namespace recross
