// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/miner.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "recross/error.hpp"
#include "recross/parallel.hpp"
#include "recross/retriever.hpp"
#include "recross/rng.hpp"

namespace recross {

void MinerParams::validate() const {
    require(zq_size >= 1, "zq_size must be positive");
    require(hq_size >= 1, "hq_size must be positive");
    require(pool_size >= 1, "pool_size must be positive");
    require(rounds >= 1, "rounds must be positive");
    require(group_count >= 1, "group_count must be positive");
    require(w >= 1, "w must be positive");
    require(finetune.learning_rate > 0.0 && finetune.batch_size >= 1 && finetune.epochs >= 1,
            "finetune spec must be positive");
    require(!base_model.empty(), "base_model must be non-empty");
}

MinerParams apply_miner_params(const KeyValueConfig& kv, MinerParams base) {
    for (const auto& [key, value] : kv.values()) {
        if (key == "zq_size") {
            base.zq_size = parse_config_unsigned(key, value);
        } else if (key == "hq_size") {
            base.hq_size = parse_config_unsigned(key, value);
        } else if (key == "pool_size") {
            base.pool_size = parse_config_unsigned(key, value);
        } else if (key == "rounds") {
            base.rounds = parse_config_unsigned(key, value);
        } else if (key == "group_count") {
            base.group_count = parse_config_unsigned(key, value);
        } else if (key == "w") {
            base.w = parse_config_unsigned(key, value);
        } else if (key == "finetune_lr") {
            base.finetune.learning_rate = parse_config_real(key, value);
        } else if (key == "finetune_batch") {
            base.finetune.batch_size = static_cast<int>(parse_config_unsigned(key, value));
        } else if (key == "finetune_epochs") {
            base.finetune.epochs = static_cast<int>(parse_config_unsigned(key, value));
        } else if (key == "rng_seed") {
            base.rng_seed = parse_config_unsigned(key, value);
        } else if (key == "base_model") {
            base.base_model = value;
        }
    }
    return base;
}

std::vector<std::size_t> group_sizes(std::size_t count, std::size_t groups) {
    require(groups >= 1, "group count must be positive");
    std::vector<std::size_t> sizes(groups, count / groups);
    for (std::size_t g = 0; g < count % groups; ++g) {
        ++sizes[g];
    }
    return sizes;
}

DistantSupervisionTuple mine_tuple(const ExampleCollection& corpus, const DenseIndex& index,
                                   const std::string& query_task, const MinerParams& params, Backend& backend) {
    params.validate();
    auto task_it = corpus.by_task().find(query_task);
    require(task_it != corpus.by_task().end(), "query task '" + query_task + "' is not in the corpus");
    const auto& task_positions = task_it->second;
    require(task_positions.size() >= params.zq_size + params.hq_size,
            "query task '" + query_task + "' has " + std::to_string(task_positions.size()) +
                " examples; mining needs " + std::to_string(params.zq_size + params.hq_size));

    Rng rng(Fnv1a64().update(params.rng_seed).update("mine").update(query_task).digest());

    DistantSupervisionTuple tuple;
    tuple.query_task = query_task;
    const auto drawn = rng.sample_without_replacement(task_positions.size(), params.zq_size + params.hq_size);
    for (std::size_t i = 0; i < drawn.size(); ++i) {
        const Example& ex = corpus[task_positions[drawn[i]]];
        (i < params.zq_size ? tuple.z_q : tuple.held_out).push_back(ex);
    }

    // Candidate pool: dense retrieval for Z_q, query task discarded, one entry per id.
    const auto retrieved = retrieve(index, QuerySet{query_task, tuple.z_q}, params.pool_size, backend);
    std::vector<Example> pool;
    std::unordered_set<std::string> seen;
    for (const auto& entry : retrieved.entries) {
        if (entry.task == query_task || !seen.insert(entry.example_id).second) {
            continue;
        }
        pool.push_back(corpus.at_id(entry.example_id));
    }
    if (pool.size() < 2 * params.w) {
        fail(ErrorKind::pool_too_small, "pool for '" + query_task + "' has " + std::to_string(pool.size()) +
                                            " examples after discarding the query task; need at least " +
                                            std::to_string(2 * params.w));
    }
    require(params.group_count <= pool.size(), "group_count " + std::to_string(params.group_count) +
                                                   " exceeds the pool size " + std::to_string(pool.size()));

    const ModelHandle base{params.base_model};
    std::vector<std::vector<double>> losses(pool.size());
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto sizes = group_sizes(pool.size(), params.group_count);

    for (std::size_t round = 0; round < params.rounds; ++round) {
        rng.shuffle(order);
        std::vector<std::vector<std::size_t>> groups;
        std::size_t start = 0;
        for (std::size_t size : sizes) {
            groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                                order.begin() + static_cast<std::ptrdiff_t>(start + size));
            start += size;
        }

        std::vector<double> group_loss(groups.size());
        parallel_for(groups.size(), [&](std::size_t g) {
            std::vector<Example> train;
            train.reserve(groups[g].size());
            for (std::size_t member : groups[g]) {
                train.push_back(pool[member]);
            }
            const ModelHandle tuned = backend.finetune(base, train, params.finetune);
            group_loss[g] = backend.compute_loss(tuned, tuple.held_out);
        });

        auto& round_groups = tuple.round_groups.emplace_back();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            auto& ids = round_groups.emplace_back();
            for (std::size_t member : groups[g]) {
                losses[member].push_back(group_loss[g]);
                ids.push_back(pool[member].example_id);
            }
        }
    }

    std::vector<double> mean(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        mean[i] = std::accumulate(losses[i].begin(), losses[i].end(), 0.0) / static_cast<double>(losses[i].size());
    }
    // Ascending loss; equal scores keep the last shuffled order.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mean[a] < mean[b]; });

    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t i = order[rank];
        tuple.pool.push_back({pool[i].example_id, losses[i], mean[i]});
        if (rank < params.w) {
            tuple.z_p.push_back(pool[i]);
            tuple.scores[pool[i].example_id] = mean[i];
        } else if (rank >= order.size() - params.w) {
            tuple.z_n.push_back(pool[i]);
            tuple.scores[pool[i].example_id] = mean[i];
        }
    }
    return tuple;
}

std::vector<LabeledPair> build_pair_dataset(const std::vector<DistantSupervisionTuple>& tuples) {
    require(!tuples.empty(), "no distant supervision tuples");
    std::vector<LabeledPair> pairs;
    for (const auto& t : tuples) {
        for (const auto& q : t.z_q) {
            const std::string qt = query_text(q);
            for (const auto& p : t.z_p) {
                pairs.push_back({qt, candidate_text(p), 1});
            }
            for (const auto& n : t.z_n) {
                pairs.push_back({qt, candidate_text(n), 0});
            }
        }
    }
    return pairs;
}

namespace {

nlohmann::json ids_of(const std::vector<Example>& examples) {
    auto ids = nlohmann::json::array();
    for (const auto& ex : examples) {
        ids.push_back(ex.example_id);
    }
    return ids;
}

std::vector<Example> resolve(const nlohmann::json& ids, const ExampleCollection& corpus) {
    std::vector<Example> out;
    for (const auto& id : ids) {
        out.push_back(corpus.at_id(id.get<std::string>()));
    }
    return out;
}

}  // namespace

void write_tuples(std::ostream& out, const std::vector<DistantSupervisionTuple>& tuples) {
    for (const auto& t : tuples) {
        nlohmann::ordered_json record;
        record["query_task"] = t.query_task;
        record["z_q"] = ids_of(t.z_q);
        record["z_p"] = ids_of(t.z_p);
        record["z_n"] = ids_of(t.z_n);
        record["held_out"] = ids_of(t.held_out);
        nlohmann::ordered_json scores = nlohmann::ordered_json::object();
        for (const auto& ex : t.z_p) {
            scores[ex.example_id] = t.scores.at(ex.example_id);
        }
        for (const auto& ex : t.z_n) {
            scores[ex.example_id] = t.scores.at(ex.example_id);
        }
        record["scores"] = std::move(scores);
        out << record.dump() << '\n';
    }
}

std::vector<DistantSupervisionTuple> read_tuples(std::istream& in, const ExampleCollection& corpus) {
    std::vector<DistantSupervisionTuple> tuples;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            DistantSupervisionTuple t;
            t.query_task = j.at("query_task").get<std::string>();
            t.z_q = resolve(j.at("z_q"), corpus);
            t.z_p = resolve(j.at("z_p"), corpus);
            t.z_n = resolve(j.at("z_n"), corpus);
            if (j.contains("held_out")) {
                t.held_out = resolve(j.at("held_out"), corpus);
            }
            const auto scores = j.value("scores", nlohmann::json::object());
            for (const auto& [id, score] : scores.items()) {
                t.scores[id] = score.get<double>();
            }
            tuples.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::parse, "tuples line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    return tuples;
}

void write_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json record;
        record["query"] = p.query;
        record["candidate"] = p.candidate;
        record["label"] = p.label;
        out << record.dump() << '\n';
    }
}

std::vector<LabeledPair> read_pairs(std::istream& in) {
    std::vector<LabeledPair> pairs;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            pairs.push_back({j.at("query").get<std::string>(), j.at("candidate").get<std::string>(),
                             j.at("label").get<int>()});
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::parse, "pairs line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    return pairs;
}

}  // namespace recross
