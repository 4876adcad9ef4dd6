// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/backend.hpp"

#include <algorithm>
#include <cmath>

#include "recross/error.hpp"

namespace recross {

std::string query_text(const Example& example) {
    return example.input_text;
}

std::string candidate_text(const Example& example) {
    return example.input_text + "\n" + example.output_text;
}

namespace {

void expect_length(const char* op, std::size_t got, std::size_t want) {
    if (got != want) {
        fail(ErrorKind::protocol_violation, std::string(op) + " returned " + std::to_string(got) +
                                                " results for " + std::to_string(want) + " inputs");
    }
}

// Runs `call` over consecutive slices of at most `batch` items, concatenating results.
template <typename In, typename Call>
auto batched(std::span<const In> items, std::size_t batch, const char* op, Call call) {
    using Out = decltype(call(items));
    Out out;
    out.reserve(items.size());
    for (std::size_t start = 0; start < items.size(); start += batch) {
        auto slice = items.subspan(start, std::min(batch, items.size() - start));
        auto part = call(slice);
        expect_length(op, part.size(), slice.size());
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace

void Backend::set_max_batch(std::size_t max_batch) {
    require(max_batch >= 1, "max_batch must be positive");
    max_batch_ = max_batch;
}

std::optional<std::size_t> Backend::dimension() const {
    std::lock_guard lock(dim_mutex_);
    return dim_;
}

void Backend::check_dimension(std::size_t dim) {
    std::lock_guard lock(dim_mutex_);
    if (!dim_) {
        dim_ = dim;
    } else if (*dim_ != dim) {
        fail(ErrorKind::protocol_violation, "embedding dimension changed from " + std::to_string(*dim_) +
                                                " to " + std::to_string(dim));
    }
}

std::vector<EmbeddingVector> Backend::encode(std::span<const std::string> texts) {
    require(!texts.empty(), "encode: no texts");
    auto vectors = batched(texts, max_batch_, "encode",
                           [this](std::span<const std::string> slice) { return do_encode(slice); });
    for (const auto& v : vectors) {
        if (v.empty()) {
            fail(ErrorKind::protocol_violation, "encode returned an empty vector");
        }
        check_dimension(v.size());
        if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
            fail(ErrorKind::protocol_violation, "encode returned a non-finite value");
        }
    }
    return vectors;
}

std::vector<double> Backend::score_pairs(const ModelHandle& model, std::span<const TextPair> pairs) {
    require(!pairs.empty(), "score_pairs: no pairs");
    auto scores = batched(pairs, max_batch_, "score_pairs", [&](std::span<const TextPair> slice) {
        return do_score_pairs(model, slice);
    });
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) {
            fail(ErrorKind::protocol_violation, "score_pairs returned " + std::to_string(s) + " outside [0, 1]");
        }
    }
    return scores;
}

ModelHandle Backend::finetune(const ModelHandle& parent, std::span<const Example> train,
                              const FinetuneSpec& spec) {
    require(!train.empty(), "finetune: empty training set");
    require(std::all_of(train.begin(), train.end(), [](const Example& e) { return !e.output_text.empty(); }),
            "finetune: every training example needs an output");
    require(spec.learning_rate > 0.0 && spec.batch_size >= 1 && spec.epochs >= 1,
            "finetune: learning rate, batch size and epochs must be positive");
    ModelHandle child = do_finetune(parent, train, spec);
    if (child.model_id.empty() || child == parent) {
        fail(ErrorKind::protocol_violation, "finetune must return a new handle distinct from its parent");
    }
    return child;
}

double Backend::compute_loss(const ModelHandle& model, std::span<const Example> held_out) {
    require(!held_out.empty(), "compute_loss: empty held-out set");
    require(std::all_of(held_out.begin(), held_out.end(),
                        [](const Example& e) { return !e.output_text.empty(); }),
            "compute_loss: every held-out example needs an output");
    const double loss = do_compute_loss(model, held_out);
    if (!std::isfinite(loss) || loss < 0.0) {
        fail(ErrorKind::protocol_violation, "compute_loss returned " + std::to_string(loss));
    }
    return loss;
}

std::vector<std::string> Backend::generate(const ModelHandle& model, std::span<const std::string> inputs) {
    require(!inputs.empty(), "generate: no inputs");
    return batched(inputs, max_batch_, "generate",
                   [&](std::span<const std::string> slice) { return do_generate(model, slice); });
}

ModelHandle Backend::train_pair_classifier(std::span<const LabeledPair> pairs) {
    bool has_positive = false;
    bool has_negative = false;
    for (const auto& p : pairs) {
        require(p.label == 0 || p.label == 1, "train_pair_classifier: labels must be 0 or 1");
        (p.label == 1 ? has_positive : has_negative) = true;
    }
    require(has_positive && has_negative, "train_pair_classifier: both labels must be present");
    ModelHandle handle = do_train_pair_classifier(pairs);
    if (handle.model_id.empty()) {
        fail(ErrorKind::protocol_violation, "train_pair_classifier returned an empty handle");
    }
    return handle;
}

}  // namespace recross
