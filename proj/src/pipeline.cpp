// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "recross/digest.hpp"
#include "recross/error.hpp"
#include "recross/reranker.hpp"
#include "recross/retriever.hpp"
#include "recross/rng.hpp"

namespace recross {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::recross: return "recross";
        case PipelineMode::dense_only: return "dense_only";
        case PipelineMode::zero_shot: return "zero_shot";
        case PipelineMode::random_retrieval: return "random_retrieval";
    }
    return "unknown";
}

PipelineMode parse_mode(std::string_view name) {
    if (name == "recross") return PipelineMode::recross;
    if (name == "dense_only") return PipelineMode::dense_only;
    if (name == "zero_shot") return PipelineMode::zero_shot;
    if (name == "random_retrieval") return PipelineMode::random_retrieval;
    fail(ErrorKind::precondition, "unknown pipeline mode '" + std::string(name) + "'");
}

std::uint64_t round_seed(std::uint64_t run_seed, int round) {
    return splitmix64(run_seed ^ splitmix64(static_cast<std::uint64_t>(round) + 1));
}

std::vector<RoundQueries> sample_query_rounds(const ExampleCollection& pool, int rounds, int query_size,
                                              std::uint64_t run_seed) {
    require(rounds >= 1 && query_size >= 1, "rounds and query_size must be positive");
    require(!pool.empty(), "query pool is empty");
    std::vector<RoundQueries> out(static_cast<std::size_t>(rounds));
    for (int r = 0; r < rounds; ++r) {
        out[r].round = r;
        out[r].seed = round_seed(run_seed, r);
    }
    const std::size_t per_round = static_cast<std::size_t>(query_size);
    const std::size_t needed = per_round * static_cast<std::size_t>(rounds);
    for (const auto& [task, positions] : pool.by_task()) {
        require(positions.size() >= needed, "query pool for '" + task + "' has " + std::to_string(positions.size()) +
                                                " examples; " + std::to_string(rounds) + " disjoint query sets of " +
                                                std::to_string(query_size) + " need " + std::to_string(needed));
        Rng rng(Fnv1a64().update(run_seed).update("query-sets").update(task).digest());
        const auto drawn = rng.sample_without_replacement(positions.size(), needed);
        for (int r = 0; r < rounds; ++r) {
            QuerySet set{task, {}};
            for (std::size_t i = 0; i < per_round; ++i) {
                set.queries.push_back(pool[positions[drawn[r * per_round + i]]]);
            }
            out[r].sets.push_back(std::move(set));
        }
    }
    return out;
}

std::vector<std::size_t> random_rows(const DenseIndex& index, std::size_t count, std::uint64_t seed,
                                     const RowMask& admitted) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (admitted.empty() || admitted[i]) {
            eligible.push_back(i);
        }
    }
    Rng rng(Fnv1a64().update(seed).update("random-retrieval").digest());
    auto picks = rng.sample_without_replacement(eligible.size(), count);
    for (auto& p : picks) {
        p = eligible[p];
    }
    return picks;
}

std::vector<TaskScore> PipelineReport::task_scores() const {
    std::vector<TaskScore> scores;
    for (const auto& r : rounds) {
        if (!r.ok) {
            continue;
        }
        for (const auto& t : r.tasks) {
            scores.push_back({t.task, r.round, metric, t.value});
        }
    }
    return scores;
}

namespace {

std::string file_stem(const std::string& task) {
    std::string out;
    for (char c : task) {
        const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                          c == '_' || c == '-';
        out.push_back(safe ? c : '_');
    }
    return out;
}

class ArtifactWriter {
public:
    ArtifactWriter(const std::optional<std::filesystem::path>& out_dir, std::vector<ArtifactRecord>& records)
        : out_dir_(out_dir), records_(records) {}

    // Returns the content hash; the file is only written when an output directory is set.
    std::string put(const std::string& relative, const std::string& bytes) {
        std::string digest = sha256_hex(bytes);
        if (out_dir_) {
            write_file(*out_dir_ / relative, bytes);
            records_.push_back({relative, digest});
        }
        return digest;
    }

private:
    const std::optional<std::filesystem::path>& out_dir_;
    std::vector<ArtifactRecord>& records_;
};

std::string serialize(const CandidateList& list) {
    std::ostringstream out;
    write_candidates(out, list);
    return out.str();
}

CandidateList rows_as_candidates(const DenseIndex& index, const std::vector<std::size_t>& rows) {
    CandidateList list;
    for (std::size_t rank = 0; rank < rows.size(); ++rank) {
        list.entries.push_back({index.ids()[rows[rank]], index.tasks()[rows[rank]], rows[rank], 0, rank, 0.0,
                                std::nullopt});
    }
    return list;
}

struct Stage {
    const ExampleCollection& corpus;
    const DenseIndex& index;
    const std::map<std::string, std::vector<Example>>& eval_sets;
    const RunConfig& config;
    Backend& backend;
    PipelineMode mode;
    Metric metric;
    const std::optional<ModelHandle>& scorer;
    ArtifactWriter& artifacts;
    RowMask admitted;

    TaskRecord run_task(const RoundQueries& round, const QuerySet& queries) const {
        auto eval_it = eval_sets.find(queries.target_task);
        require(eval_it != eval_sets.end(), "no evaluation set for task '" + queries.target_task + "'");
        const ModelHandle base{config.base_model};

        TaskRecord record;
        record.task = queries.target_task;
        if (mode == PipelineMode::zero_shot) {
            record.model_id = base.model_id;
            record.value = evaluate_task(base, eval_it->second, metric, backend, round.round).value;
            return record;
        }

        const auto final_size = static_cast<std::size_t>(config.final_size);
        CandidateList candidates;
        CandidateList retrieved;
        switch (mode) {
            case PipelineMode::recross: {
                require(scorer.has_value(), "the rerank stage needs a pair scorer handle");
                candidates = retrieve_filtered(index, queries, static_cast<std::size_t>(config.candidate_size()),
                                               config.excluded_tasks, backend);
                const auto matrix = score_all(queries, candidates, corpus, *scorer, backend);
                retrieved = rerank(matrix, candidates, std::min(final_size, candidates.size()));
                break;
            }
            case PipelineMode::dense_only:
                candidates = retrieve_filtered(index, queries, final_size, config.excluded_tasks, backend);
                retrieved = candidates;
                break;
            case PipelineMode::random_retrieval:
                candidates = rows_as_candidates(index, random_rows(index, final_size, round.seed, admitted));
                retrieved = candidates;
                break;
            case PipelineMode::zero_shot:
                break;
        }
        require(!retrieved.empty(), "retrieval for '" + queries.target_task + "' returned nothing");

        const std::string dir = "round-" + std::to_string(round.round) + "/";
        record.candidates_file = dir + file_stem(record.task) + ".candidates.jsonl";
        record.candidates_sha256 = artifacts.put(record.candidates_file, serialize(candidates));
        record.retrieved_file = dir + file_stem(record.task) + ".retrieved.jsonl";
        record.retrieved_sha256 = artifacts.put(record.retrieved_file, serialize(retrieved));
        record.distribution = retrieval_distribution(retrieved, corpus);

        const auto train = materialize(retrieved, corpus);
        const ModelHandle tuned = backend.finetune(base, train, config.finetune);
        record.model_id = tuned.model_id;
        record.value = evaluate_task(tuned, eval_it->second, metric, backend, round.round).value;
        return record;
    }
};

PipelineReport run_rounds(PipelineMode mode, const ExampleCollection& corpus, const DenseIndex& index,
                          const std::vector<RoundQueries>& rounds,
                          const std::map<std::string, std::vector<Example>>& eval_sets, const RunConfig& config,
                          Backend& backend, Metric metric, const std::optional<ModelHandle>& scorer,
                          const std::optional<std::filesystem::path>& out_dir) {
    config.validate();
    require(!rounds.empty(), "no query rounds");
    PipelineReport report;
    report.mode = mode;
    report.metric = metric;
    report.config = config;

    ArtifactWriter artifacts(out_dir, report.artifacts);
    Stage stage{corpus, index, eval_sets, config, backend, mode, metric, scorer, artifacts,
                exclusion_mask(index, config.excluded_tasks)};

    // Rounds run in order so the manifest lists artifacts deterministically.
    for (const auto& round : rounds) {
        RoundRecord record;
        record.round = round.round;
        record.seed = round.seed;
        try {
            for (const auto& queries : round.sets) {
                record.tasks.push_back(stage.run_task(round, queries));
            }
        } catch (const std::exception& e) {
            record.ok = false;
            record.error = e.what();
            report.partial = true;
            spdlog::error("round {} failed: {}", round.round, e.what());
        }
        report.rounds.push_back(std::move(record));
    }

    const auto scores = report.task_scores();
    if (!scores.empty()) {
        report.aggregate = aggregate_rounds(scores);
    }

    if (out_dir) {
        const std::string report_bytes = report_to_json(report).dump(2) + "\n";
        write_file(*out_dir / "report.json", report_bytes);
        report.artifacts.push_back({"report.json", sha256_hex(report_bytes)});
        write_file(*out_dir / "manifest.json", manifest_to_json(report).dump(2) + "\n");
    }
    return report;
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["query_size"] = c.query_size;
    j["final_size"] = c.final_size;
    j["upsample_ratio"] = c.upsample_ratio;
    j["finetune_lr"] = c.finetune.learning_rate;
    j["finetune_batch"] = c.finetune.batch_size;
    j["finetune_epochs"] = c.finetune.epochs;
    j["rng_seed"] = c.rng_seed;
    j["excluded_tasks"] = c.excluded_tasks;
    j["rounds"] = c.rounds;
    j["max_batch"] = c.max_batch;
    j["base_model"] = c.base_model;
    return j;
}

ordered_json stats_to_json(const RoundStats& s) {
    ordered_json j;
    j["mean"] = s.mean;
    j["std"] = s.std;
    j["median"] = s.median;
    j["min"] = s.min;
    j["max"] = s.max;
    return j;
}

}  // namespace

PipelineReport run_generalization(const ExampleCollection& corpus, const DenseIndex& index,
                                  const std::vector<RoundQueries>& rounds,
                                  const std::map<std::string, std::vector<Example>>& eval_sets,
                                  const RunConfig& config, Backend& backend, const PipelineOptions& options) {
    require(options.mode == PipelineMode::recross || options.mode == PipelineMode::dense_only,
            "run_generalization runs the recross or dense_only modes; use run_baseline for baselines");
    return run_rounds(options.mode, corpus, index, rounds, eval_sets, config, backend, options.metric,
                      options.scorer, options.out_dir);
}

PipelineReport run_baseline(PipelineMode mode, const ExampleCollection& corpus, const DenseIndex& index,
                            const std::vector<RoundQueries>& rounds,
                            const std::map<std::string, std::vector<Example>>& eval_sets, const RunConfig& config,
                            Backend& backend, Metric metric, const std::optional<std::filesystem::path>& out_dir) {
    require(mode == PipelineMode::zero_shot || mode == PipelineMode::random_retrieval,
            "run_baseline runs the zero_shot or random_retrieval modes");
    return run_rounds(mode, corpus, index, rounds, eval_sets, config, backend, metric, std::nullopt, out_dir);
}

json report_to_json(const PipelineReport& report) {
    ordered_json j;
    j["mode"] = to_string(report.mode);
    j["metric"] = to_string(report.metric);
    j["config"] = config_to_json(report.config);
    j["partial"] = report.partial;
    ordered_json rounds = ordered_json::array();
    for (const auto& r : report.rounds) {
        ordered_json round;
        round["round"] = r.round;
        round["seed"] = r.seed;
        round["ok"] = r.ok;
        if (!r.ok) {
            round["error"] = r.error;
        }
        ordered_json tasks = ordered_json::array();
        for (const auto& t : r.tasks) {
            ordered_json task;
            task["task"] = t.task;
            task["value"] = t.value;
            task["model_id"] = t.model_id;
            if (!t.candidates_sha256.empty()) {
                task["candidates"] = {{"file", t.candidates_file}, {"sha256", t.candidates_sha256}};
                task["retrieved"] = {{"file", t.retrieved_file}, {"sha256", t.retrieved_sha256}};
                task["distribution"] = t.distribution;
            }
            tasks.push_back(std::move(task));
        }
        round["tasks"] = std::move(tasks);
        rounds.push_back(std::move(round));
    }
    j["rounds"] = std::move(rounds);
    if (report.aggregate) {
        ordered_json per_task;
        for (const auto& [task, ms] : report.aggregate->per_task) {
            per_task[task] = {{"mean", ms.mean}, {"std", ms.std}};
        }
        j["per_task"] = std::move(per_task);
        ordered_json overall_by_round;
        for (const auto& [round, value] : report.aggregate->round_overall) {
            overall_by_round[std::to_string(round)] = value;
        }
        j["round_overall"] = std::move(overall_by_round);
        j["overall"] = stats_to_json(report.aggregate->overall);
    }
    return json::parse(j.dump());
}

json manifest_to_json(const PipelineReport& report) {
    ordered_json j;
    j["mode"] = to_string(report.mode);
    j["config"] = config_to_json(report.config);
    ordered_json seeds = ordered_json::array();
    ordered_json status = ordered_json::array();
    for (const auto& r : report.rounds) {
        seeds.push_back(r.seed);
        ordered_json s;
        s["round"] = r.round;
        s["ok"] = r.ok;
        if (!r.ok) {
            s["error"] = r.error;
        }
        status.push_back(std::move(s));
    }
    j["round_seeds"] = std::move(seeds);
    j["rounds"] = std::move(status);
    ordered_json artifacts = ordered_json::array();
    for (const auto& a : report.artifacts) {
        artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}});
    }
    j["artifacts"] = std::move(artifacts);
    return json::parse(j.dump());
}

std::vector<TaskScore> task_scores_from_json(const json& report) {
    std::vector<TaskScore> scores;
    try {
        const Metric metric = parse_metric(report.at("metric").get<std::string>());
        for (const auto& round : report.at("rounds")) {
            if (!round.at("ok").get<bool>()) {
                continue;
            }
            for (const auto& task : round.at("tasks")) {
                scores.push_back({task.at("task").get<std::string>(), round.at("round").get<int>(), metric,
                                  task.at("value").get<double>()});
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed report: ") + e.what());
    }
    return scores;
}

void write_report_table(std::ostream& out, const AggregateReport& aggregate, Metric metric) {
    std::size_t width = 4;
    for (const auto& [task, ms] : aggregate.per_task) {
        width = std::max(width, task.size());
    }
    out << std::fixed << std::setprecision(2);
    out << std::left << std::setw(static_cast<int>(width)) << "task" << "  " << to_string(metric) << " mean    std\n";
    for (const auto& [task, ms] : aggregate.per_task) {
        out << std::left << std::setw(static_cast<int>(width)) << task << "  " << std::right << std::setw(11)
            << ms.mean << "  " << std::setw(5) << ms.std << '\n';
    }
    out << "\nround overall:";
    for (const auto& [round, value] : aggregate.round_overall) {
        out << ' ' << round << '=' << value;
    }
    const auto& s = aggregate.overall;
    out << "\noverall  mean " << s.mean << "  std " << s.std << "  median " << s.median << "  min " << s.min
        << "  max " << s.max << '\n';
    out << std::defaultfloat;
}

void write_distribution_csv(std::ostream& out, const json& report) {
    std::map<std::string, std::map<std::string, double>> sums;
    std::map<std::string, int> counts;
    try {
        for (const auto& round : report.at("rounds")) {
            if (!round.at("ok").get<bool>()) {
                continue;
            }
            for (const auto& task : round.at("tasks")) {
                if (!task.contains("distribution")) {
                    continue;
                }
                const auto target = task.at("task").get<std::string>();
                ++counts[target];
                for (const auto& [upstream, fraction] : task.at("distribution").items()) {
                    sums[target][upstream] += fraction.get<double>();
                }
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed report: ") + e.what());
    }
    out << "target_task,upstream_task,fraction\n";
    for (const auto& [target, by_upstream] : sums) {
        for (const auto& [upstream, sum] : by_upstream) {
            char value[32];
            std::snprintf(value, sizeof(value), "%.6f", sum / counts[target]);
            out << target << ',' << upstream << ',' << value << '\n';
        }
    }
}

}  // namespace recross
