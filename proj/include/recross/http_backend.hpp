// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "recross/backend.hpp"

namespace recross {

inline constexpr int kProtocolVersion = 1;

/// Client for a backend served over HTTP with JSON bodies.
///
/// Endpoints: /encode, /score_pairs, /finetune, /loss, /generate,
/// /train_pair_classifier, all POST. Every request carries
/// `"protocol_version": 1`; failures come back as
/// `{"error": {"kind": ..., "message": ...}}` and are rethrown as Error with the
/// matching kind. Unreachable servers raise ErrorKind::transport.
class HttpBackend final : public Backend {
public:
    /// `base_url` is `http://host:port`, optionally with a path prefix.
    explicit HttpBackend(std::string base_url, int timeout_seconds = 600);

    const std::string& base_url() const noexcept { return base_url_; }

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
    std::string post(const std::string& endpoint, const std::string& body) const;

    std::string base_url_;
    std::string host_;
    std::string prefix_;
    int timeout_seconds_;
};

/// Serves any Backend over the same HTTP protocol the client speaks.
class BackendServer {
public:
    explicit BackendServer(Backend& backend);
    ~BackendServer();

    BackendServer(const BackendServer&) = delete;
    BackendServer& operator=(const BackendServer&) = delete;

    /// Binds to an ephemeral port and serves on a background thread.
    int start(const std::string& host = "127.0.0.1");
    /// Blocks until stop() is called from another thread or a signal handler.
    void listen(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace recross
