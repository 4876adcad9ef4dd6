// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/builtin_backend.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <mutex>
#include <unordered_set>

#include "recross/error.hpp"
#include "recross/rng.hpp"

namespace recross {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string hex64(std::uint64_t value) {
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

std::string_view last_token(std::string_view text) {
    auto tokens = BuiltinBackend::tokenize(text);
    return tokens.empty() ? std::string_view{} : tokens.back();
}

}  // namespace

BuiltinBackend::BuiltinBackend(BuiltinBackendOptions options) : options_(std::move(options)) {
    require(options_.dim >= 1, "builtin backend: dim must be positive");
    require(options_.noise_sigma >= 0.0, "builtin backend: noise_sigma must be non-negative");
    models_.emplace(std::string(kBaseModel), ModelState{});
}

void BuiltinBackend::plant_utilities(const std::unordered_map<std::string, double>& utilities) {
    std::unique_lock lock(mutex_);
    for (const auto& [id, u] : utilities) {
        require(u >= 0.0 && u <= 1.0, "planted utility for '" + id + "' outside [0, 1]");
        options_.utilities[id] = u;
    }
}

std::vector<std::string_view> BuiltinBackend::tokenize(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) {
            ++i;
        }
        if (i > start) {
            tokens.push_back(text.substr(start, i - start));
        }
    }
    return tokens;
}

EmbeddingVector BuiltinBackend::hash_embed(std::string_view text, std::uint64_t seed, std::size_t dim) {
    EmbeddingVector v(dim, 0.0);
    const auto tokens = tokenize(text);
    for (auto token : tokens) {
        const std::uint64_t h = Fnv1a64().update(seed).update(token).digest();
        v[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
    if (!tokens.empty()) {
        const double count = static_cast<double>(tokens.size());
        for (double& x : v) {
            x /= count;
        }
    }
    return v;
}

double BuiltinBackend::token_overlap(std::string_view query, std::string_view candidate) {
    auto query_tokens = tokenize(query);
    std::unordered_set<std::string_view> query_set(query_tokens.begin(), query_tokens.end());
    if (query_set.empty()) {
        return 0.0;
    }
    auto candidate_tokens = tokenize(candidate);
    std::unordered_set<std::string_view> candidate_set(candidate_tokens.begin(), candidate_tokens.end());
    std::size_t shared = 0;
    for (auto token : query_set) {
        shared += candidate_set.contains(token) ? 1 : 0;
    }
    return static_cast<double>(shared) / static_cast<double>(query_set.size());
}

bool BuiltinBackend::has_model(const std::string& model_id) const {
    std::shared_lock lock(mutex_);
    return models_.contains(model_id);
}

const BuiltinBackend::ModelState& BuiltinBackend::state_of(const ModelHandle& model) const {
    auto it = models_.find(model.model_id);
    if (it == models_.end()) {
        fail(ErrorKind::not_found, "unknown model handle '" + model.model_id + "'");
    }
    return it->second;
}

double BuiltinBackend::stored_utility(const ModelHandle& model) const {
    std::shared_lock lock(mutex_);
    return state_of(model).utility;
}

double BuiltinBackend::loss_noise(const std::string& model_id) const {
    if (options_.noise_sigma == 0.0) {
        return 0.0;
    }
    Rng rng(Fnv1a64().update(options_.seed).update("loss-noise").update(model_id).digest());
    return options_.noise_sigma * rng.normal();
}

std::vector<EmbeddingVector> BuiltinBackend::do_encode(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        out.push_back(hash_embed(text, options_.seed, options_.dim));
    }
    return out;
}

std::vector<double> BuiltinBackend::do_score_pairs(const ModelHandle& model, std::span<const TextPair> pairs) {
    {
        std::shared_lock lock(mutex_);
        state_of(model);
    }
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs) {
        out.push_back(token_overlap(pair.query, pair.candidate));
    }
    return out;
}

ModelHandle BuiltinBackend::do_finetune(const ModelHandle& parent, std::span<const Example> train,
                                        const FinetuneSpec& spec) {
    std::unique_lock lock(mutex_);
    const ModelState& parent_state = state_of(parent);
    require(parent_state.kind == ModelKind::language_model,
            "finetune: '" + parent.model_id + "' is a pair classifier");

    Fnv1a64 hash;
    hash.update(options_.seed).update(parent.model_id).update(std::uint64_t{train.size()});
    double utility_sum = 0.0;
    for (const auto& ex : train) {
        hash.update(ex.example_id).update("\x1f").update(ex.output_text).update("\x1e");
        auto it = options_.utilities.find(ex.example_id);
        utility_sum += it == options_.utilities.end() ? options_.default_utility : it->second;
    }
    hash.update(std::bit_cast<std::uint64_t>(spec.learning_rate))
        .update(static_cast<std::uint64_t>(spec.batch_size))
        .update(static_cast<std::uint64_t>(spec.epochs));

    ModelHandle child{"ft-" + hex64(hash.digest())};
    if (!models_.contains(child.model_id)) {
        ModelState state;
        state.parent = parent.model_id;
        state.utility = utility_sum / static_cast<double>(train.size());
        state.memory = parent_state.memory;
        state.memory.insert(state.memory.end(), train.begin(), train.end());
        models_.emplace(child.model_id, std::move(state));
    }
    return child;
}

double BuiltinBackend::do_compute_loss(const ModelHandle& model, std::span<const Example> /*held_out*/) {
    std::shared_lock lock(mutex_);
    const ModelState& state = state_of(model);
    require(state.kind == ModelKind::language_model, "compute_loss: '" + model.model_id + "' is a pair classifier");
    return std::max(0.0, 1.0 - state.utility + loss_noise(model.model_id));
}

std::vector<std::string> BuiltinBackend::do_generate(const ModelHandle& model,
                                                     std::span<const std::string> inputs) {
    std::shared_lock lock(mutex_);
    const ModelState& state = state_of(model);
    require(state.kind == ModelKind::language_model, "generate: '" + model.model_id + "' is a pair classifier");
    std::vector<std::string> out;
    out.reserve(inputs.size());
    for (const auto& prompt : inputs) {
        const Example* best = nullptr;
        double best_overlap = 0.0;
        for (const auto& ex : state.memory) {
            const double overlap = token_overlap(prompt, ex.input_text);
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = &ex;
            }
        }
        out.emplace_back(best ? std::string_view(best->output_text) : last_token(prompt));
    }
    return out;
}

ModelHandle BuiltinBackend::do_train_pair_classifier(std::span<const LabeledPair> pairs) {
    Fnv1a64 hash;
    hash.update(options_.seed).update("pair-classifier");
    for (const auto& p : pairs) {
        hash.update(p.query).update("\x1f").update(p.candidate).update("\x1f").update(static_cast<std::uint64_t>(p.label));
    }
    ModelHandle handle{"clf-" + hex64(hash.digest())};
    std::unique_lock lock(mutex_);
    ModelState state;
    state.kind = ModelKind::pair_classifier;
    models_.try_emplace(handle.model_id, std::move(state));
    return handle;
}

nlohmann::json BuiltinBackend::save_state() const {
    std::shared_lock lock(mutex_);
    nlohmann::json models = nlohmann::json::object();
    for (const auto& [id, state] : models_) {
        nlohmann::json memory = nlohmann::json::array();
        for (const auto& ex : state.memory) {
            memory.push_back({{"id", ex.example_id},
                              {"task", ex.task_name},
                              {"input", ex.input_text},
                              {"output", ex.output_text}});
        }
        models[id] = {{"kind", state.kind == ModelKind::language_model ? "language_model" : "pair_classifier"},
                      {"parent", state.parent},
                      {"utility", state.utility},
                      {"memory", std::move(memory)}};
    }
    return {{"seed", options_.seed}, {"dim", options_.dim}, {"models", std::move(models)}};
}

void BuiltinBackend::load_state(const nlohmann::json& snapshot) {
    try {
        if (snapshot.at("seed").get<std::uint64_t>() != options_.seed ||
            snapshot.at("dim").get<std::size_t>() != options_.dim) {
            fail(ErrorKind::precondition, "builtin backend state was saved with a different seed or dim");
        }
        std::unique_lock lock(mutex_);
        for (const auto& [id, record] : snapshot.at("models").items()) {
            ModelState state;
            state.kind = record.at("kind").get<std::string>() == "pair_classifier" ? ModelKind::pair_classifier
                                                                                   : ModelKind::language_model;
            state.parent = record.at("parent").get<std::string>();
            state.utility = record.at("utility").get<double>();
            for (const auto& ex : record.at("memory")) {
                state.memory.push_back({ex.at("id").get<std::string>(), ex.at("task").get<std::string>(),
                                        ex.at("input").get<std::string>(), ex.at("output").get<std::string>()});
            }
            models_[id] = std::move(state);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed builtin backend state: ") + e.what());
    }
}

}  // namespace recross
