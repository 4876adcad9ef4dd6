// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "recross/backend.hpp"
#include "recross/dense_index.hpp"
#include "recross/example.hpp"

namespace recross {

struct CandidateEntry {
    std::string example_id;
    std::string task;
    std::size_t position = 0;     // row in the index
    std::size_t query_index = 0;  // source query
    std::size_t rank = 0;         // rank within the source query's hits
    double score = 0.0;           // retrieval cosine
    std::optional<double> utility;  // mean reranker score, once reranked

    bool operator==(const CandidateEntry&) const = default;
};

/// Ordered retrieval result. Duplicates are kept: an example close to several
/// queries appears once per query that retrieved it.
struct CandidateList {
    std::vector<CandidateEntry> entries;
    /// Set when fewer entries than requested could be produced.
    bool short_supply = false;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

/// Hits per query: ceil(size / query_count).
std::size_t per_query_k(std::size_t size, std::size_t query_count);

/// Aggregation core on already-embedded queries: each query's top-K hits among
/// admitted rows are concatenated in query order and truncated to `size`.
CandidateList retrieve_embedded(const DenseIndex& index, std::span<const EmbeddingVector> queries,
                                std::size_t size, const RowMask& admitted = {});

/// Encodes the query inputs (never their outputs) and aggregates per-query top-K.
CandidateList retrieve(const DenseIndex& index, const QuerySet& queries, std::size_t size,
                       Backend& embedder);

/// As retrieve, with rows of excluded tasks removed from the searchable pool before
/// the per-query top-K cut.
CandidateList retrieve_filtered(const DenseIndex& index, const QuerySet& queries, std::size_t size,
                                const std::set<std::string>& excluded_tasks, Backend& embedder);

RowMask exclusion_mask(const DenseIndex& index, const std::set<std::string>& excluded_tasks);

/// One JSON object per entry: id, task, position, query_index, rank, score and,
/// when present, utility.
void write_candidates(std::ostream& out, const CandidateList& candidates);
void save_candidates(const std::filesystem::path& path, const CandidateList& candidates);
CandidateList read_candidates(std::istream& in);
CandidateList load_candidates(const std::filesystem::path& path);

/// Resolves every entry against the corpus; throws Error(precondition) on an unknown id.
std::vector<Example> materialize(const CandidateList& candidates, const ExampleCollection& corpus);

}  // namespace recross
