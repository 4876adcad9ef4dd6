// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "recross/backend.hpp"

namespace recross {

struct BuiltinBackendOptions {
    std::uint64_t seed = 0;
    std::size_t dim = 64;
    /// Standard deviation of the seeded noise added to every compute_loss result.
    double noise_sigma = 0.02;
    /// Hidden per-example utility in [0, 1], keyed by example_id.
    std::unordered_map<std::string, double> utilities;
    double default_utility = 0.0;
};

/// Deterministic in-process backend. Every result is a pure function of
/// (seed, model state, inputs).
///
///  - encode: signed feature hashing of whitespace tokens into `dim` buckets,
///    averaged over tokens.
///  - score_pairs: |query tokens ∩ candidate tokens| / |query tokens|, for any
///    known handle; train_pair_classifier registers a handle and otherwise
///    ignores its training data.
///  - finetune: the child state remembers the mean planted utility of its
///    training examples, plus the examples themselves.
///  - compute_loss: max(0, 1 - stored utility + noise), noise ~ N(0, sigma^2)
///    seeded by (seed, handle). The base model has utility 0.
///  - generate: a fine-tuned model answers with the output of the remembered
///    example whose input overlaps the prompt most; otherwise the last
///    whitespace token of the prompt.
///
/// Mutating calls (finetune, train_pair_classifier) take an exclusive lock;
/// reads run concurrently.
class BuiltinBackend final : public Backend {
public:
    static constexpr std::string_view kBaseModel = "base";

    explicit BuiltinBackend(BuiltinBackendOptions options = {});

    const BuiltinBackendOptions& options() const noexcept { return options_; }

    void plant_utilities(const std::unordered_map<std::string, double>& utilities);

    bool has_model(const std::string& model_id) const;
    /// Mean planted utility remembered by a handle (0 for the base model).
    double stored_utility(const ModelHandle& model) const;

    /// Registry snapshot, for carrying model state across CLI invocations.
    nlohmann::json save_state() const;
    void load_state(const nlohmann::json& state);

    static std::vector<std::string_view> tokenize(std::string_view text);
    static EmbeddingVector hash_embed(std::string_view text, std::uint64_t seed, std::size_t dim);
    static double token_overlap(std::string_view query, std::string_view candidate);

protected:
    std::vector<EmbeddingVector> do_encode(std::span<const std::string> texts) override;
    std::vector<double> do_score_pairs(const ModelHandle& model,
                                       std::span<const TextPair> pairs) override;
    ModelHandle do_finetune(const ModelHandle& parent, std::span<const Example> train,
                            const FinetuneSpec& spec) override;
    double do_compute_loss(const ModelHandle& model, std::span<const Example> held_out) override;
    std::vector<std::string> do_generate(const ModelHandle& model,
                                         std::span<const std::string> inputs) override;
    ModelHandle do_train_pair_classifier(std::span<const LabeledPair> pairs) override;

private:
    enum class ModelKind { language_model, pair_classifier };

    struct ModelState {
        ModelKind kind = ModelKind::language_model;
        std::string parent;
        double utility = 0.0;
        std::vector<Example> memory;
    };

    const ModelState& state_of(const ModelHandle& model) const;
    double loss_noise(const std::string& model_id) const;

    BuiltinBackendOptions options_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, ModelState> models_;
};

}  // namespace recross
