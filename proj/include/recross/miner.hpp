// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "recross/backend.hpp"
#include "recross/config.hpp"
#include "recross/dense_index.hpp"
#include "recross/example.hpp"

namespace recross {

struct MinerParams {
    std::size_t zq_size = 16;
    std::size_t hq_size = 64;
    /// Retrieval size for the pool, before same-task examples are discarded.
    std::size_t pool_size = 256;
    std::size_t rounds = 8;
    std::size_t group_count = 8;
    std::size_t w = 32;
    FinetuneSpec finetune;
    std::uint64_t rng_seed = 0;
    std::string base_model = "base";

    void validate() const;
};

MinerParams apply_miner_params(const KeyValueConfig& kv, MinerParams base = {});

/// Pool member and every held-out loss it was scored with, one per round.
struct PoolScore {
    std::string example_id;
    std::vector<double> losses;
    double mean = 0.0;
};

/// (Z_q, Z_p, Z_n): queries from one task, the W lowest-loss pool examples and
/// the W highest-loss ones.
struct DistantSupervisionTuple {
    std::string query_task;
    std::vector<Example> z_q;
    std::vector<Example> z_p;
    std::vector<Example> z_n;
    /// Mean held-out loss per example of z_p and z_n.
    std::map<std::string, double> scores;

    // Diagnostics of the run that produced the tuple.
    std::vector<Example> held_out;
    /// Final ascending-score order of the pool.
    std::vector<PoolScore> pool;
    /// round -> group -> example ids.
    std::vector<std::vector<std::vector<std::string>>> round_groups;
};

/// Near-equal contiguous split of `count` items into `groups` parts: the first
/// count % groups parts get one extra item. Returns part sizes.
std::vector<std::size_t> group_sizes(std::size_t count, std::size_t groups);

/// Sample-train-test utility estimation over the dense-retrieval pool of one task.
///
/// Z_q and H_q are disjoint samples of the query task. The pool is the dense
/// retrieval for Z_q with every query-task example discarded, each id kept once.
/// Each round shuffles the pool, splits it into group_count groups, fine-tunes a
/// copy of the base model per group and appends the group's H_q loss to each
/// member. Group evaluations within a round run concurrently; results merge by
/// group index.
DistantSupervisionTuple mine_tuple(const ExampleCollection& corpus, const DenseIndex& index,
                                   const std::string& query_task, const MinerParams& params,
                                   Backend& backend);

/// Every (q, p) pair labelled 1 and every (q, n) pair labelled 0, tuple by tuple,
/// query-major.
std::vector<LabeledPair> build_pair_dataset(const std::vector<DistantSupervisionTuple>& tuples);

/// JSON Lines; examples are referenced by id, scores carried alongside.
void write_tuples(std::ostream& out, const std::vector<DistantSupervisionTuple>& tuples);
std::vector<DistantSupervisionTuple> read_tuples(std::istream& in, const ExampleCollection& corpus);

void write_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs);
std::vector<LabeledPair> read_pairs(std::istream& in);

}  // namespace recross
