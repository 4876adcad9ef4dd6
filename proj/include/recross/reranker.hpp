// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "recross/backend.hpp"
#include "recross/example.hpp"
#include "recross/retriever.hpp"

namespace recross {

/// Pairwise scores, one row per query and one column per distinct candidate id
/// (first-occurrence order).
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    /// `scores` is row-major, query_count x candidates.size(), every value in [0, 1].
    ScoreMatrix(std::size_t query_count, std::vector<std::string> candidates,
                std::vector<double> scores);

    std::size_t query_count() const noexcept { return query_count_; }
    const std::vector<std::string>& candidates() const noexcept { return candidates_; }
    double at(std::size_t query, std::size_t column) const {
        return scores_[query * candidates_.size() + column];
    }
    const std::vector<double>& scores() const noexcept { return scores_; }

    std::size_t column_of(const std::string& example_id) const;
    double column_mean(std::size_t column) const;

private:
    std::size_t query_count_ = 0;
    std::vector<std::string> candidates_;
    std::vector<double> scores_;
};

/// Scores every (query, distinct candidate) pair once with the backend pair scorer.
ScoreMatrix score_all(const QuerySet& queries, const CandidateList& candidates,
                      const ExampleCollection& corpus, const ModelHandle& scorer, Backend& backend);

/// Gives each occurrence its id's mean score, sorts occurrences by that score
/// (descending, ties by original position) and keeps the first `final_size`.
CandidateList rerank(const ScoreMatrix& matrix, const CandidateList& candidates,
                     std::size_t final_size);

}  // namespace recross
