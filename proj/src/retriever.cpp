// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/retriever.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "recross/error.hpp"
#include "recross/parallel.hpp"

namespace recross {

std::size_t per_query_k(std::size_t size, std::size_t query_count) {
    require(query_count > 0, "no queries");
    return (size + query_count - 1) / query_count;
}

RowMask exclusion_mask(const DenseIndex& index, const std::set<std::string>& excluded_tasks) {
    if (excluded_tasks.empty()) {
        return {};
    }
    RowMask mask(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        mask[i] = !excluded_tasks.contains(index.tasks()[i]);
    }
    return mask;
}

CandidateList retrieve_embedded(const DenseIndex& index, std::span<const EmbeddingVector> queries,
                                std::size_t size, const RowMask& admitted) {
    require(size >= 1, "retrieval size must be positive");
    require(!queries.empty(), "no queries");
    require(!index.empty(), "cannot retrieve from an empty index");
    const std::size_t k = per_query_k(size, queries.size());

    std::vector<std::vector<float>> unit_queries;
    unit_queries.reserve(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        require(queries[q].size() == index.dim(), "query " + std::to_string(q) + " has dimension " +
                                                      std::to_string(queries[q].size()) + ", index has " +
                                                      std::to_string(index.dim()));
        unit_queries.push_back(normalized(queries[q]));
    }

    // Per-query searches are independent; results are assembled in query order.
    std::vector<std::vector<SearchHit>> hits_per_query(unit_queries.size());
    parallel_for(unit_queries.size(), [&](std::size_t q) {
        hits_per_query[q] = search(index, unit_queries[q], k, admitted);
    });

    CandidateList out;
    out.entries.reserve(size);
    for (std::size_t q = 0; q < hits_per_query.size(); ++q) {
        const auto& hits = hits_per_query[q];
        for (std::size_t rank = 0; rank < hits.size() && out.entries.size() < size; ++rank) {
            const auto& hit = hits[rank];
            out.entries.push_back({hit.example_id, index.tasks()[hit.position], hit.position, q, rank, hit.score,
                                   std::nullopt});
        }
    }
    out.short_supply = out.entries.size() < size;
    return out;
}

namespace {

std::vector<EmbeddingVector> encode_queries(const QuerySet& queries, Backend& embedder) {
    require(!queries.queries.empty(), "query set is empty");
    std::vector<std::string> texts;
    texts.reserve(queries.queries.size());
    for (const auto& q : queries.queries) {
        texts.push_back(query_text(q));
    }
    return embedder.encode(texts);
}

}  // namespace

CandidateList retrieve(const DenseIndex& index, const QuerySet& queries, std::size_t size, Backend& embedder) {
    require(!index.empty(), "cannot retrieve from an empty index");
    const auto embeddings = encode_queries(queries, embedder);
    return retrieve_embedded(index, embeddings, size);
}

CandidateList retrieve_filtered(const DenseIndex& index, const QuerySet& queries, std::size_t size,
                                const std::set<std::string>& excluded_tasks, Backend& embedder) {
    require(!index.empty(), "cannot retrieve from an empty index");
    const auto embeddings = encode_queries(queries, embedder);
    const RowMask mask = exclusion_mask(index, excluded_tasks);
    CandidateList out = retrieve_embedded(index, embeddings, size, mask);
    if (out.short_supply) {
        spdlog::warn("filtered index supplied {} of {} requested candidates", out.size(), size);
    }
    return out;
}

void write_candidates(std::ostream& out, const CandidateList& candidates) {
    for (const auto& e : candidates.entries) {
        nlohmann::ordered_json record;
        record["id"] = e.example_id;
        record["task"] = e.task;
        record["position"] = e.position;
        record["query_index"] = e.query_index;
        record["rank"] = e.rank;
        record["score"] = e.score;
        if (e.utility) {
            record["utility"] = *e.utility;
        }
        out << record.dump() << '\n';
    }
}

void save_candidates(const std::filesystem::path& path, const CandidateList& candidates) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorKind::precondition, "cannot open " + path.string() + " for writing");
    }
    write_candidates(out, candidates);
}

CandidateList read_candidates(std::istream& in) {
    CandidateList list;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            CandidateEntry e;
            e.example_id = j.at("id").get<std::string>();
            e.task = j.value("task", std::string{});
            e.position = j.value("position", std::size_t{0});
            e.query_index = j.at("query_index").get<std::size_t>();
            e.rank = j.at("rank").get<std::size_t>();
            e.score = j.at("score").get<double>();
            if (j.contains("utility")) {
                e.utility = j.at("utility").get<double>();
            }
            list.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            fail(ErrorKind::parse, "candidates line " + std::to_string(line_number) + ": " + ex.what());
        }
    }
    return list;
}

CandidateList load_candidates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::precondition, "cannot open " + path.string());
    }
    return read_candidates(in);
}

std::vector<Example> materialize(const CandidateList& candidates, const ExampleCollection& corpus) {
    std::vector<Example> out;
    out.reserve(candidates.size());
    for (const auto& e : candidates.entries) {
        out.push_back(corpus.at_id(e.example_id));
    }
    return out;
}

}  // namespace recross
