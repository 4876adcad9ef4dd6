// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "recross/builtin_backend.hpp"
#include "recross/digest.hpp"
#include "recross/error.hpp"
#include "recross/pipeline.hpp"
#include "support/test_backends.hpp"

using namespace recross;
using recross::testing::ScriptedBackend;
namespace fs = std::filesystem;

namespace {

ExampleCollection upstream_corpus() {
    std::vector<Example> out;
    for (int i = 0; i < 30; ++i) {
        out.push_back({"u" + std::to_string(i), "up" + std::to_string(i % 3),
                       "shared words item " + std::to_string(i) + " k" + std::to_string(i % 5),
                       "o" + std::to_string(i)});
    }
    return ExampleCollection(std::move(out));
}

ExampleCollection query_pool() {
    std::vector<Example> out;
    for (const char* task : {"ta", "tb", "tc"}) {
        for (int i = 0; i < 15; ++i) {
            out.push_back({std::string(task) + "-" + std::to_string(i), task,
                           std::string(task) + " words k" + std::to_string(i % 5) + " n" + std::to_string(i), ""});
        }
    }
    return ExampleCollection(std::move(out));
}

std::map<std::string, std::vector<Example>> echo_eval_sets() {
    // An echoing model gets half of "ta" right, all of "tb" and none of "tc".
    return {{"ta", {{"ea1", "ta", "x", "x"}, {"ea2", "ta", "y", "z"}}},
            {"tb", {{"eb1", "tb", "p", "P"}}},
            {"tc", {{"ec1", "tc", "q", "r"}, {"ec2", "tc", "s", "t"}}}};
}

RunConfig small_config() {
    RunConfig c;
    c.query_size = 3;
    c.final_size = 6;
    c.upsample_ratio = 2;
    c.rounds = 5;
    c.rng_seed = 11;
    return c;
}

// Builtin embeddings, constant pair scores, echoing generation.
void make_echo(ScriptedBackend& backend, double constant_score = 0.5) {
    backend.embed = [](const std::string& t) { return BuiltinBackend::hash_embed(t, 3, 32); };
    backend.score = [constant_score](const TextPair&) { return constant_score; };
    backend.answer = [](const std::string& in) { return in; };
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "recross-test-pipeline" / name;
    fs::remove_all(dir);
    return dir;
}

std::vector<std::string> retrieved_hashes(const PipelineReport& r) {
    std::vector<std::string> out;
    for (const auto& round : r.rounds)
        for (const auto& t : round.tasks) out.push_back(t.retrieved_sha256);
    return out;
}

}  // namespace

TEST_CASE("query rounds are disjoint, sized and seeded") {
    const auto pool = query_pool();
    const auto rounds = sample_query_rounds(pool, 4, 3, 7);
    REQUIRE(rounds.size() == 4);
    std::map<std::string, std::set<std::string>> used;
    for (const auto& r : rounds) {
        CHECK(r.seed == round_seed(7, r.round));
        REQUIRE(r.sets.size() == 3);
        for (const auto& set : r.sets) {
            CHECK(set.queries.size() == 3);
            for (const auto& q : set.queries) {
                CHECK(q.task_name == set.target_task);
                CHECK(used[set.target_task].insert(q.example_id).second);
            }
        }
    }
    const auto again = sample_query_rounds(pool, 4, 3, 7);
    CHECK(again[2].sets[1].queries == rounds[2].sets[1].queries);
    CHECK(sample_query_rounds(pool, 4, 3, 8)[0].sets[0].queries != rounds[0].sets[0].queries);
    CHECK_THROWS_AS(sample_query_rounds(pool, 6, 3, 7), Error);
    CHECK(round_seed(7, 0) != round_seed(7, 1));
    CHECK(round_seed(7, 0) != round_seed(8, 0));
}

TEST_CASE("echo backend report computed by hand") {
    const auto corpus = upstream_corpus();
    ScriptedBackend backend;
    make_echo(backend);
    const auto index = build_index(corpus, backend);
    const auto config = small_config();
    const auto rounds = sample_query_rounds(query_pool(), config.rounds, config.query_size, config.rng_seed);
    PipelineOptions options;
    options.mode = PipelineMode::dense_only;
    options.metric = Metric::em;
    const auto report = run_generalization(corpus, index, rounds, echo_eval_sets(), config, backend, options);

    CHECK_FALSE(report.partial);
    REQUIRE(report.aggregate);
    CHECK(report.aggregate->per_task.at("ta").mean == 50.0);
    CHECK(report.aggregate->per_task.at("tb").mean == 100.0);
    CHECK(report.aggregate->per_task.at("tc").mean == 0.0);
    CHECK(report.aggregate->per_task.at("tb").std == 0.0);
    CHECK(report.aggregate->round_overall.size() == 5);
    for (const auto& [round, value] : report.aggregate->round_overall) CHECK(value == 50.0);
    CHECK(report.aggregate->overall.mean == 50.0);
    CHECK(report.aggregate->overall.median == 50.0);
    CHECK(report.aggregate->overall.std == 0.0);
    for (const auto& r : report.rounds) {
        for (const auto& t : r.tasks) {
            CHECK(t.model_id == "base+6");
            double total = 0;
            for (const auto& [task, f] : t.distribution) total += f;
            CHECK(total == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("upsample ratio 1 with a constant scorer reproduces dense-only retrieval") {
    const auto corpus = upstream_corpus();
    ScriptedBackend backend;
    make_echo(backend, 0.3);
    const auto index = build_index(corpus, backend);
    auto config = small_config();
    config.upsample_ratio = 1;
    const auto rounds = sample_query_rounds(query_pool(), config.rounds, config.query_size, config.rng_seed);

    PipelineOptions dense;
    dense.mode = PipelineMode::dense_only;
    PipelineOptions full;
    full.mode = PipelineMode::recross;
    full.scorer = ModelHandle{"constant"};
    const auto a = run_generalization(corpus, index, rounds, echo_eval_sets(), config, backend, dense);
    const auto b = run_generalization(corpus, index, rounds, echo_eval_sets(), config, backend, full);
    // Reranked entries carry a utility, so compare the example sequences.
    for (std::size_t r = 0; r < a.rounds.size(); ++r) {
        for (std::size_t t = 0; t < a.rounds[r].tasks.size(); ++t) {
            CHECK(a.rounds[r].tasks[t].candidates_sha256 == b.rounds[r].tasks[t].candidates_sha256);
            CHECK(a.rounds[r].tasks[t].distribution == b.rounds[r].tasks[t].distribution);
        }
    }
    CHECK(a.task_scores() == b.task_scores());
}

TEST_CASE("recross mode without a scorer fails every round") {
    const auto corpus = upstream_corpus();
    ScriptedBackend backend;
    make_echo(backend);
    const auto index = build_index(corpus, backend);
    const auto config = small_config();
    const auto rounds = sample_query_rounds(query_pool(), config.rounds, config.query_size, config.rng_seed);
    const auto report = run_generalization(corpus, index, rounds, echo_eval_sets(), config, backend, {});
    CHECK(report.partial);
    CHECK_FALSE(report.aggregate);
    for (const auto& r : report.rounds) CHECK_FALSE(r.ok);
}

TEST_CASE("runs are byte-for-byte reproducible") {
    const auto corpus = upstream_corpus();
    BuiltinBackend backend(BuiltinBackendOptions{.seed = 4});
    const auto index = build_index(corpus, backend);
    auto config = small_config();
    config.excluded_tasks = {"up1"};
    const auto rounds = sample_query_rounds(query_pool(), config.rounds, config.query_size, config.rng_seed);
    std::map<std::string, std::vector<Example>> eval = {
        {"ta", {{"e1", "ta", "shared words item 4", "o4"}}},
        {"tb", {{"e2", "tb", "item 9", "o9"}}},
        {"tc", {{"e3", "tc", "k2", "o2"}}}};

    std::string manifests[2], reports[2];
    for (int run = 0; run < 2; ++run) {
        PipelineOptions options;
        options.scorer = ModelHandle{"base"};
        options.out_dir = fresh_dir("repro-" + std::to_string(run));
        const auto report = run_generalization(corpus, index, rounds, eval, config, backend, options);
        CHECK_FALSE(report.partial);
        manifests[run] = read_file(*options.out_dir / "manifest.json");
        reports[run] = read_file(*options.out_dir / "report.json");

        for (const auto& a : report.artifacts) CHECK(sha256_file(*options.out_dir / a.path) == a.sha256);
        for (const auto& r : report.rounds) {
            for (const auto& t : r.tasks) {
                const auto retrieved = load_candidates(*options.out_dir / t.retrieved_file);
                CHECK(retrieved.size() == 6);
                for (const auto& e : retrieved.entries) {
                    CHECK(e.task != "up1");
                    CHECK(e.utility.has_value());
                }
                CHECK(load_candidates(*options.out_dir / t.candidates_file).size() == 12);
            }
        }
    }
    CHECK(manifests[0] == manifests[1]);
    CHECK(reports[0] == reports[1]);

    const auto doc = nlohmann::json::parse(reports[0]);
    CHECK(doc.at("mode") == "recross");
    CHECK(task_scores_from_json(doc).size() == 15);
    std::ostringstream csv;
    write_distribution_csv(csv, doc);
    CHECK(csv.str().rfind("target_task,upstream_task,fraction\n", 0) == 0);
    CHECK(csv.str().find(",up1,") == std::string::npos);
}

TEST_CASE("zero-shot scores the frozen base model identically every round") {
    const auto corpus = upstream_corpus();
    BuiltinBackend backend(BuiltinBackendOptions{.seed = 4});
    const auto index = build_index(corpus, backend);
    const auto config = small_config();
    const auto rounds = sample_query_rounds(query_pool(), config.rounds, config.query_size, config.rng_seed);
    const auto report = run_baseline(PipelineMode::zero_shot, corpus, index, rounds, echo_eval_sets(), config,
                                     backend, Metric::soft_em);
    REQUIRE(report.aggregate);
    CHECK(report.aggregate->overall.std == 0.0);
    for (const auto& r : report.rounds) {
        for (const auto& t : r.tasks) {
            CHECK(t.model_id == "base");
            CHECK(t.retrieved_file.empty());
        }
    }
}

TEST_CASE("random retrieval depends on the round seed, not the queries") {
    const auto corpus = upstream_corpus();
    ScriptedBackend backend;
    make_echo(backend);
    const auto index = build_index(corpus, backend);
    auto config = small_config();
    config.excluded_tasks = {"up2"};
    auto rounds = sample_query_rounds(query_pool(), config.rounds, config.query_size, config.rng_seed);
    const int encodes_before = backend.encode_calls;
    auto swapped = rounds;
    for (auto& r : swapped) std::swap(r.sets[0].queries, r.sets[1].queries);
    const auto a = run_baseline(PipelineMode::random_retrieval, corpus, index, rounds, echo_eval_sets(), config,
                                backend, Metric::em);
    const auto b = run_baseline(PipelineMode::random_retrieval, corpus, index, swapped, echo_eval_sets(), config,
                                backend, Metric::em);
    CHECK(retrieved_hashes(a) == retrieved_hashes(b));
    CHECK(a.rounds[0].tasks[0].retrieved_sha256 != a.rounds[1].tasks[0].retrieved_sha256);
    for (const auto& r : a.rounds)
        for (const auto& t : r.tasks) CHECK_FALSE(t.distribution.contains("up2"));
    CHECK(backend.encode_calls == encodes_before);
}

TEST_CASE("a failing round is isolated and the report marked partial") {
    const auto corpus = upstream_corpus();
    ScriptedBackend backend;
    make_echo(backend);
    const auto index = build_index(corpus, backend);
    const auto config = small_config();
    const auto rounds = sample_query_rounds(query_pool(), config.rounds, config.query_size, config.rng_seed);
    const std::string poison = rounds[1].sets[0].queries[0].input_text;
    backend.embed = [poison](const std::string& t) {
        if (t == poison) throw Error(ErrorKind::transport, "backend went away");
        return BuiltinBackend::hash_embed(t, 3, 32);
    };
    PipelineOptions options;
    options.mode = PipelineMode::dense_only;
    options.metric = Metric::em;
    options.out_dir = fresh_dir("partial");
    const auto report = run_generalization(corpus, index, rounds, echo_eval_sets(), config, backend, options);
    CHECK(report.partial);
    CHECK(report.rounds[0].ok);
    CHECK_FALSE(report.rounds[1].ok);
    CHECK(report.rounds[1].error.find("backend went away") != std::string::npos);
    CHECK(report.rounds[2].ok);
    REQUIRE(report.aggregate);
    CHECK(report.aggregate->round_overall.size() == 4);
    CHECK_FALSE(report.aggregate->round_overall.contains(1));
    const auto manifest = nlohmann::json::parse(read_file(*options.out_dir / "manifest.json"));
    CHECK(manifest.at("rounds").at(1).at("ok") == false);
    CHECK(nlohmann::json::parse(read_file(*options.out_dir / "report.json")).at("partial") == true);
}

TEST_CASE("mode names") {
    for (auto m : {PipelineMode::recross, PipelineMode::dense_only, PipelineMode::zero_shot,
                   PipelineMode::random_retrieval}) {
        CHECK(parse_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_mode("bm25"), Error);
}
