// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "recross/backend.hpp"
#include "recross/error.hpp"

namespace recross::testing {

/// Backend whose behaviour is supplied per test. Unset hooks throw.
class ScriptedBackend : public Backend {
public:
    std::function<EmbeddingVector(const std::string&)> embed;
    std::function<double(const TextPair&)> score;
    std::function<std::string(const std::string&)> answer;
    std::function<double(const ModelHandle&)> loss;
    std::function<std::size_t(std::size_t)> response_length;  // override to truncate responses

    int encode_calls = 0;

protected:
    std::vector<EmbeddingVector> do_encode(std::span<const std::string> texts) override {
        ++encode_calls;
        std::vector<EmbeddingVector> out;
        for (const auto& t : texts) out.push_back(hook(embed, "embed")(t));
        return truncate(std::move(out));
    }
    std::vector<double> do_score_pairs(const ModelHandle&, std::span<const TextPair> pairs) override {
        std::vector<double> out;
        for (const auto& p : pairs) out.push_back(hook(score, "score")(p));
        return truncate(std::move(out));
    }
    ModelHandle do_finetune(const ModelHandle& parent, std::span<const Example> train, const FinetuneSpec&) override {
        return {parent.model_id + "+" + std::to_string(train.size())};
    }
    double do_compute_loss(const ModelHandle& model, std::span<const Example>) override {
        return hook(loss, "loss")(model);
    }
    std::vector<std::string> do_generate(const ModelHandle&, std::span<const std::string> inputs) override {
        std::vector<std::string> out;
        for (const auto& in : inputs) out.push_back(hook(answer, "answer")(in));
        return truncate(std::move(out));
    }
    ModelHandle do_train_pair_classifier(std::span<const LabeledPair>) override { return {"scripted-clf"}; }

private:
    template <typename F>
    static const F& hook(const F& f, const char* name) {
        if (!f) throw std::logic_error(std::string("ScriptedBackend: hook not set: ") + name);
        return f;
    }
    template <typename V>
    V truncate(V v) {
        if (response_length) v.resize(response_length(v.size()));
        return v;
    }
};

/// Looks embeddings up in a fixed table keyed by text.
inline std::function<EmbeddingVector(const std::string&)> table_embedder(std::map<std::string, EmbeddingVector> table) {
    return [table = std::move(table)](const std::string& text) {
        auto it = table.find(text);
        if (it == table.end()) throw std::out_of_range("no embedding for '" + text + "'");
        return it->second;
    };
}

}  // namespace recross::testing
