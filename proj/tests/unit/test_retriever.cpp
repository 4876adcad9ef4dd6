// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "recross/error.hpp"
#include "recross/retriever.hpp"
#include "recross/rng.hpp"
#include "support/oracles.hpp"
#include "support/test_backends.hpp"

using namespace recross;
using recross::testing::ScriptedBackend;

namespace {

EmbeddingVector at_degrees(double deg) {
    const double rad = deg * std::numbers::pi / 180.0;
    return {std::cos(rad), std::sin(rad)};
}

// 20 unit rows evenly spaced every 18 degrees; row i belongs to task "t<i % 4>".
DenseIndex circle_index() {
    std::vector<std::string> ids, tasks;
    std::vector<EmbeddingVector> rows;
    for (int i = 0; i < 20; ++i) {
        ids.push_back("c" + std::to_string(i));
        tasks.push_back("t" + std::to_string(i % 4));
        rows.push_back(at_degrees(18.0 * i));
    }
    return DenseIndex::from_embeddings(ids, tasks, rows);
}

struct AngleQueries {
    QuerySet set;
    ScriptedBackend backend;
};

void prepare(AngleQueries& q, const std::vector<double>& degrees) {
    std::map<std::string, EmbeddingVector> table;
    q.set.target_task = "target";
    for (double d : degrees) {
        const std::string text = "q@" + std::to_string(d);
        table[text] = at_degrees(d);
        q.set.queries.push_back({"id-" + text, "target", text, ""});
    }
    q.backend.embed = testing::table_embedder(table);
}

std::vector<std::size_t> positions(const CandidateList& list) {
    std::vector<std::size_t> out;
    for (const auto& e : list.entries) out.push_back(e.position);
    return out;
}

}  // namespace

TEST_CASE("per-query K is the ceiling of size over query count") {
    CHECK(per_query_k(10, 3) == 4);
    CHECK(per_query_k(9, 3) == 3);
    CHECK(per_query_k(1, 16) == 1);
    CHECK(per_query_k(1024, 16) == 64);
    CHECK(per_query_k(1025, 16) == 65);
    CHECK_THROWS_AS(per_query_k(4, 0), Error);
}

TEST_CASE("three queries, size ten: per-query top four, concatenated and cut") {
    const auto index = circle_index();
    AngleQueries q;
    prepare(q, {5.0, 95.0, 185.0});
    const auto r = retrieve(index, q.set, 10, q.backend);
    CHECK(r.size() == 10);
    CHECK_FALSE(r.short_supply);
    CHECK(positions(r) == std::vector<std::size_t>{0, 1, 19, 2, 5, 6, 4, 7, 10, 11});
    CHECK(r.entries[4].query_index == 1);
    CHECK(r.entries[4].rank == 0);
    CHECK(r.entries[9].rank == 1);
    CHECK(r.entries[0].example_id == "c0");
    CHECK(r.entries[0].score == doctest::Approx(std::cos(5.0 * std::numbers::pi / 180.0)).epsilon(1e-6));
}

TEST_CASE("shared neighbours are kept once per query") {
    const auto index = circle_index();
    AngleQueries q;
    prepare(q, {5.0, 355.0});
    const auto r = retrieve(index, q.set, 4, q.backend);
    CHECK(positions(r) == std::vector<std::size_t>{0, 1, 0, 19});
}

TEST_CASE("filtered retrieval masks before the top-K cut") {
    const auto index = circle_index();
    AngleQueries q;
    prepare(q, {5.0, 95.0, 185.0});
    const auto r = retrieve_filtered(index, q.set, 10, {"t0", "t2"}, q.backend);
    // Only rows with i % 4 in {1, 3} remain.
    CHECK(positions(r) == std::vector<std::size_t>{1, 19, 3, 17, 5, 7, 3, 9, 11, 9});
    for (const auto& e : r.entries) CHECK((e.task == "t1" || e.task == "t3"));
    CHECK_FALSE(r.short_supply);
}

TEST_CASE("excluding every task yields an empty, short list") {
    const auto index = circle_index();
    AngleQueries q;
    prepare(q, {5.0});
    const auto r = retrieve_filtered(index, q.set, 3, {"t0", "t1", "t2", "t3"}, q.backend);
    CHECK(r.empty());
    CHECK(r.short_supply);
}

TEST_CASE("short supply when the index is smaller than K") {
    const auto index = circle_index();
    AngleQueries q;
    prepare(q, {5.0});
    const auto r = retrieve(index, q.set, 30, q.backend);
    CHECK(r.size() == 20);
    CHECK(r.short_supply);
}

TEST_CASE("filtered retrieval agrees with a brute-force oracle") {
    Rng rng(21);
    std::vector<std::vector<double>> rows(300, std::vector<double>(16));
    std::vector<std::string> ids, tasks;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto& x : rows[i]) x = rng.normal();
        ids.push_back("r" + std::to_string(i));
        tasks.push_back("t" + std::to_string(i % 5));
    }
    const auto index = DenseIndex::from_embeddings(ids, tasks, rows);
    std::vector<std::vector<double>> queries(7, std::vector<double>(16));
    for (auto& qv : queries)
        for (auto& x : qv) x = rng.normal();

    const std::set<std::string> excluded = {"t1", "t4"};
    const auto mask = exclusion_mask(index, excluded);
    for (std::size_t size : {1u, 7u, 20u, 64u}) {
        const auto r = retrieve_embedded(index, queries, size, mask);
        CHECK(positions(r) == testing::brute_force_candidates(rows, queries, size, mask));
    }
}

TEST_CASE("a larger size extends every per-query list") {
    const auto index = circle_index();
    std::vector<EmbeddingVector> queries = {at_degrees(40), at_degrees(222), at_degrees(300)};
    const auto small = retrieve_embedded(index, queries, 6);
    const auto large = retrieve_embedded(index, queries, 15);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        std::vector<std::size_t> a, b;
        for (const auto& e : small.entries)
            if (e.query_index == q) a.push_back(e.position);
        for (const auto& e : large.entries)
            if (e.query_index == q) b.push_back(e.position);
        REQUIRE(a.size() <= b.size());
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("candidate lists round-trip through JSON Lines") {
    const auto index = circle_index();
    std::vector<EmbeddingVector> queries = {at_degrees(1), at_degrees(77)};
    auto list = retrieve_embedded(index, queries, 5);
    list.entries[2].utility = 0.1 + 0.2;
    std::stringstream buffer;
    write_candidates(buffer, list);
    const auto back = read_candidates(buffer);
    CHECK(back.entries == list.entries);

    std::istringstream bad("{\"id\":\"x\"}\n");
    CHECK_THROWS_AS(read_candidates(bad), Error);
}

TEST_CASE("invalid retrieval requests") {
    const auto index = circle_index();
    std::vector<EmbeddingVector> none;
    std::vector<EmbeddingVector> wrong_dim = {{1.0, 0.0, 0.0}};
    std::vector<EmbeddingVector> one = {{1.0, 0.0}};
    CHECK_THROWS_AS(retrieve_embedded(index, none, 3), Error);
    CHECK_THROWS_AS(retrieve_embedded(index, wrong_dim, 3), Error);
    CHECK_THROWS_AS(retrieve_embedded(index, one, 0), Error);
    CHECK_THROWS_AS(retrieve_embedded(DenseIndex{}, one, 3), Error);
}
