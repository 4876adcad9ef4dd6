// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/http_backend.hpp"

#include <httplib.h>

#include <functional>
#include <thread>

#include <json.hpp>

#include "recross/error.hpp"

namespace recross {

using nlohmann::json;

namespace {

json example_to_json(const Example& ex) {
    return {{"id", ex.example_id}, {"task", ex.task_name}, {"input", ex.input_text}, {"output", ex.output_text}};
}

Example example_from_json(const json& j) {
    return {j.at("id").get<std::string>(), j.at("task").get<std::string>(), j.at("input").get<std::string>(),
            j.value("output", std::string{})};
}

json request(json body) {
    body["protocol_version"] = kProtocolVersion;
    return body;
}

std::string_view wire_kind(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::transport:
        case ErrorKind::not_found:
        case ErrorKind::precondition:
        case ErrorKind::protocol_violation:
            return to_string(kind);
        case ErrorKind::parse:
        case ErrorKind::duplicate:
        case ErrorKind::pool_too_small:
            return "precondition";
        default:
            return "protocol_violation";
    }
}

int status_for(std::string_view kind) {
    if (kind == "not_found") return 404;
    if (kind == "precondition") return 400;
    if (kind == "transport") return 503;
    return 500;
}

}  // namespace

// ---------------------------------------------------------------------------
// Client

HttpBackend::HttpBackend(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
    const auto scheme = base_url_.find("://");
    require(scheme != std::string::npos, "backend url must look like http://host:port, got '" + base_url_ + "'");
    const auto path = base_url_.find('/', scheme + 3);
    host_ = base_url_.substr(0, path);
    if (path != std::string::npos) {
        prefix_ = base_url_.substr(path);
        while (!prefix_.empty() && prefix_.back() == '/') {
            prefix_.pop_back();
        }
    }
}

std::string HttpBackend::post(const std::string& endpoint, const std::string& body) const {
    httplib::Client client(host_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    client.set_write_timeout(timeout_seconds_);
    auto res = client.Post(prefix_ + endpoint, body, "application/json");
    if (!res) {
        fail(ErrorKind::transport, "backend " + base_url_ + endpoint + " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        json error;
        try {
            error = json::parse(res->body).at("error");
        } catch (const json::exception&) {
            fail(ErrorKind::protocol_violation, "backend " + endpoint + " returned HTTP " +
                                                    std::to_string(res->status) + " without an error body");
        }
        fail(wire_error_kind(error.value("kind", std::string{})), endpoint + ": " + error.value("message", std::string{}));
    }
    return res->body;
}

namespace {

// Parses a success body and hands it to `extract`; malformed bodies are protocol violations.
template <typename Extract>
auto decode(const std::string& endpoint, const std::string& body, Extract extract) {
    try {
        return extract(json::parse(body));
    } catch (const json::exception& e) {
        fail(ErrorKind::protocol_violation, "malformed " + endpoint + " response: " + e.what());
    }
}

}  // namespace

std::vector<EmbeddingVector> HttpBackend::do_encode(std::span<const std::string> texts) {
    const auto body = request({{"texts", std::vector<std::string>(texts.begin(), texts.end())}}).dump();
    return decode("/encode", post("/encode", body),
                  [](const json& j) { return j.at("embeddings").get<std::vector<EmbeddingVector>>(); });
}

std::vector<double> HttpBackend::do_score_pairs(const ModelHandle& model, std::span<const TextPair> pairs) {
    json list = json::array();
    for (const auto& p : pairs) {
        list.push_back({{"query", p.query}, {"candidate", p.candidate}});
    }
    const auto body = request({{"model_id", model.model_id}, {"pairs", std::move(list)}}).dump();
    return decode("/score_pairs", post("/score_pairs", body),
                  [](const json& j) { return j.at("scores").get<std::vector<double>>(); });
}

ModelHandle HttpBackend::do_finetune(const ModelHandle& parent, std::span<const Example> train,
                                     const FinetuneSpec& spec) {
    json examples = json::array();
    for (const auto& ex : train) {
        examples.push_back(example_to_json(ex));
    }
    const auto body = request({{"model_id", parent.model_id},
                               {"examples", std::move(examples)},
                               {"spec",
                                {{"learning_rate", spec.learning_rate},
                                 {"batch_size", spec.batch_size},
                                 {"epochs", spec.epochs}}}})
                          .dump();
    return decode("/finetune", post("/finetune", body),
                  [](const json& j) { return ModelHandle{j.at("model_id").get<std::string>()}; });
}

double HttpBackend::do_compute_loss(const ModelHandle& model, std::span<const Example> held_out) {
    json examples = json::array();
    for (const auto& ex : held_out) {
        examples.push_back(example_to_json(ex));
    }
    const auto body = request({{"model_id", model.model_id}, {"examples", std::move(examples)}}).dump();
    return decode("/loss", post("/loss", body), [](const json& j) { return j.at("loss").get<double>(); });
}

std::vector<std::string> HttpBackend::do_generate(const ModelHandle& model, std::span<const std::string> inputs) {
    const auto body =
        request({{"model_id", model.model_id}, {"inputs", std::vector<std::string>(inputs.begin(), inputs.end())}})
            .dump();
    return decode("/generate", post("/generate", body),
                  [](const json& j) { return j.at("outputs").get<std::vector<std::string>>(); });
}

ModelHandle HttpBackend::do_train_pair_classifier(std::span<const LabeledPair> pairs) {
    json list = json::array();
    for (const auto& p : pairs) {
        list.push_back({{"query", p.query}, {"candidate", p.candidate}, {"label", p.label}});
    }
    const auto body = request({{"pairs", std::move(list)}}).dump();
    return decode("/train_pair_classifier", post("/train_pair_classifier", body),
                  [](const json& j) { return ModelHandle{j.at("model_id").get<std::string>()}; });
}

// ---------------------------------------------------------------------------
// Server

struct BackendServer::Impl {
    explicit Impl(Backend& b) : backend(b) {}

    using Handler = std::function<json(const json&)>;

    void route(const std::string& endpoint, Handler handler) {
        server.Post(endpoint, [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
            auto reply_error = [&res](std::string_view kind, const std::string& message) {
                res.status = status_for(kind);
                res.set_content(json{{"error", {{"kind", kind}, {"message", message}}}}.dump(), "application/json");
            };
            try {
                const json body = json::parse(req.body);
                if (body.value("protocol_version", 0) != kProtocolVersion) {
                    reply_error("precondition", "unsupported protocol_version");
                    return;
                }
                json reply = handler(body);
                reply["protocol_version"] = kProtocolVersion;
                res.set_content(reply.dump(), "application/json");
            } catch (const Error& e) {
                reply_error(wire_kind(e.kind()), e.what());
            } catch (const json::exception& e) {
                reply_error("precondition", std::string("malformed request: ") + e.what());
            } catch (const std::exception& e) {
                reply_error("protocol_violation", e.what());
            }
        });
    }

    void install() {
        route("/encode", [this](const json& body) {
            auto texts = body.at("texts").get<std::vector<std::string>>();
            return json{{"embeddings", backend.encode(texts)}};
        });
        route("/score_pairs", [this](const json& body) {
            std::vector<TextPair> pairs;
            for (const auto& p : body.at("pairs")) {
                pairs.push_back({p.at("query").get<std::string>(), p.at("candidate").get<std::string>()});
            }
            return json{{"scores", backend.score_pairs({body.at("model_id").get<std::string>()}, pairs)}};
        });
        route("/finetune", [this](const json& body) {
            std::vector<Example> train;
            for (const auto& ex : body.at("examples")) {
                train.push_back(example_from_json(ex));
            }
            FinetuneSpec spec;
            if (auto it = body.find("spec"); it != body.end()) {
                spec.learning_rate = it->value("learning_rate", spec.learning_rate);
                spec.batch_size = it->value("batch_size", spec.batch_size);
                spec.epochs = it->value("epochs", spec.epochs);
            }
            return json{{"model_id", backend.finetune({body.at("model_id").get<std::string>()}, train, spec).model_id}};
        });
        route("/loss", [this](const json& body) {
            std::vector<Example> held_out;
            for (const auto& ex : body.at("examples")) {
                held_out.push_back(example_from_json(ex));
            }
            return json{{"loss", backend.compute_loss({body.at("model_id").get<std::string>()}, held_out)}};
        });
        route("/generate", [this](const json& body) {
            auto inputs = body.at("inputs").get<std::vector<std::string>>();
            return json{{"outputs", backend.generate({body.at("model_id").get<std::string>()}, inputs)}};
        });
        route("/train_pair_classifier", [this](const json& body) {
            std::vector<LabeledPair> pairs;
            for (const auto& p : body.at("pairs")) {
                pairs.push_back({p.at("query").get<std::string>(), p.at("candidate").get<std::string>(),
                                 p.at("label").get<int>()});
            }
            return json{{"model_id", backend.train_pair_classifier(pairs).model_id}};
        });
    }

    Backend& backend;
    httplib::Server server;
    std::thread thread;
};

BackendServer::BackendServer(Backend& backend) : impl_(std::make_unique<Impl>(backend)) {
    impl_->install();
}

BackendServer::~BackendServer() {
    stop();
}

int BackendServer::start(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0) {
        fail(ErrorKind::transport, "cannot bind backend server on " + host);
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void BackendServer::listen(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) {
        fail(ErrorKind::transport, "cannot listen on " + host + ":" + std::to_string(port));
    }
}

void BackendServer::stop() {
    if (impl_->server.is_running()) {
        impl_->server.stop();
    }
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

}  // namespace recross
