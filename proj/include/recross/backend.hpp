// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recross/config.hpp"
#include "recross/example.hpp"

namespace recross {

/// Mean-pooled instance embedding as returned by the backend (not normalised).
using EmbeddingVector = std::vector<double>;

/// Opaque name of a backend-side model state.
struct ModelHandle {
    std::string model_id;

    bool operator==(const ModelHandle&) const = default;
};

struct TextPair {
    std::string query;
    std::string candidate;
};

struct LabeledPair {
    std::string query;
    std::string candidate;
    int label = 0;

    bool operator==(const LabeledPair&) const = default;
};

/// Query side of a scored pair: queries are unlabeled, so only the input is sent.
std::string query_text(const Example& example);

/// Candidate side of a scored pair: input, a single newline, then output.
std::string candidate_text(const Example& example);

inline constexpr std::size_t kDefaultMaxBatch = 64;

/// Contract to the model backend.
///
/// The public entry points validate both sides of every call (non-empty requests,
/// response lengths, score range, finite embeddings, a stable embedding width) and
/// split list requests into batches of at most max_batch() items; subclasses only
/// implement the raw do_* hooks. Any violation surfaces as an Error, never as a
/// silently shortened result. Safe for concurrent use if the hooks are.
class Backend {
public:
    virtual ~Backend() = default;

    std::vector<EmbeddingVector> encode(std::span<const std::string> texts);
    std::vector<double> score_pairs(const ModelHandle& model, std::span<const TextPair> pairs);
    ModelHandle finetune(const ModelHandle& parent, std::span<const Example> train,
                         const FinetuneSpec& spec);
    double compute_loss(const ModelHandle& model, std::span<const Example> held_out);
    std::vector<std::string> generate(const ModelHandle& model, std::span<const std::string> inputs);
    ModelHandle train_pair_classifier(std::span<const LabeledPair> pairs);

    /// Embedding width seen so far, if any encode call has completed.
    std::optional<std::size_t> dimension() const;

    std::size_t max_batch() const noexcept { return max_batch_; }
    void set_max_batch(std::size_t max_batch);

protected:
    virtual std::vector<EmbeddingVector> do_encode(std::span<const std::string> texts) = 0;
    virtual std::vector<double> do_score_pairs(const ModelHandle& model,
                                               std::span<const TextPair> pairs) = 0;
    virtual ModelHandle do_finetune(const ModelHandle& parent, std::span<const Example> train,
                                    const FinetuneSpec& spec) = 0;
    virtual double do_compute_loss(const ModelHandle& model, std::span<const Example> held_out) = 0;
    virtual std::vector<std::string> do_generate(const ModelHandle& model,
                                                 std::span<const std::string> inputs) = 0;
    virtual ModelHandle do_train_pair_classifier(std::span<const LabeledPair> pairs) = 0;

private:
    void check_dimension(std::size_t dim);

    std::size_t max_batch_ = kDefaultMaxBatch;
    mutable std::mutex dim_mutex_;
    std::optional<std::size_t> dim_;
};

}  // namespace recross
