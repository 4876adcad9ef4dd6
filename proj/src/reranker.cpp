// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/reranker.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "recross/error.hpp"

namespace recross {

ScoreMatrix::ScoreMatrix(std::size_t query_count, std::vector<std::string> candidates, std::vector<double> scores)
    : query_count_(query_count), candidates_(std::move(candidates)), scores_(std::move(scores)) {
    require(query_count_ >= 1, "score matrix needs at least one query");
    require(scores_.size() == query_count_ * candidates_.size(), "score matrix shape mismatch");
    for (double s : scores_) {
        require(s >= 0.0 && s <= 1.0, "score matrix entries must lie in [0, 1]");
    }
}

std::size_t ScoreMatrix::column_of(const std::string& example_id) const {
    auto it = std::find(candidates_.begin(), candidates_.end(), example_id);
    require(it != candidates_.end(), "candidate '" + example_id + "' has no score column");
    return static_cast<std::size_t>(it - candidates_.begin());
}

double ScoreMatrix::column_mean(std::size_t column) const {
    double sum = 0.0;
    for (std::size_t q = 0; q < query_count_; ++q) {
        sum += at(q, column);
    }
    return sum / static_cast<double>(query_count_);
}

ScoreMatrix score_all(const QuerySet& queries, const CandidateList& candidates, const ExampleCollection& corpus,
                      const ModelHandle& scorer, Backend& backend) {
    require(!candidates.empty(), "no candidates to score");
    require(!queries.queries.empty(), "no queries to score against");

    std::vector<std::string> columns;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& e : candidates.entries) {
        if (seen.emplace(e.example_id, columns.size()).second) {
            columns.push_back(e.example_id);
        }
    }

    std::vector<std::string> candidate_texts;
    candidate_texts.reserve(columns.size());
    for (const auto& id : columns) {
        candidate_texts.push_back(candidate_text(corpus.at_id(id)));
    }

    std::vector<TextPair> pairs;
    pairs.reserve(queries.queries.size() * columns.size());
    for (const auto& q : queries.queries) {
        const std::string qt = query_text(q);
        for (const auto& ct : candidate_texts) {
            pairs.push_back({qt, ct});
        }
    }
    auto scores = backend.score_pairs(scorer, pairs);
    return ScoreMatrix(queries.queries.size(), std::move(columns), std::move(scores));
}

CandidateList rerank(const ScoreMatrix& matrix, const CandidateList& candidates, std::size_t final_size) {
    require(final_size >= 1, "final_size must be positive");
    require(final_size <= candidates.size(), "final_size " + std::to_string(final_size) + " exceeds the " +
                                                 std::to_string(candidates.size()) + " candidates");

    std::unordered_map<std::string, double> mean_of;
    for (std::size_t c = 0; c < matrix.candidates().size(); ++c) {
        mean_of.emplace(matrix.candidates()[c], matrix.column_mean(c));
    }

    std::vector<double> utility(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto it = mean_of.find(candidates.entries[i].example_id);
        require(it != mean_of.end(), "candidate '" + candidates.entries[i].example_id + "' has no score column");
        utility[i] = it->second;
    }

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return utility[a] > utility[b]; });

    CandidateList out;
    out.entries.reserve(final_size);
    for (std::size_t i = 0; i < final_size; ++i) {
        CandidateEntry e = candidates.entries[order[i]];
        e.utility = utility[order[i]];
        out.entries.push_back(std::move(e));
    }
    return out;
}

}  // namespace recross
