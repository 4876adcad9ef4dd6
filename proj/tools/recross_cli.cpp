// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

// recross: command-line front end for index building, retrieval, reranking,
// distant-supervision mining, re-learning, evaluation and multi-round runs.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "recross/builtin_backend.hpp"
#include "recross/config.hpp"
#include "recross/dense_index.hpp"
#include "recross/digest.hpp"
#include "recross/error.hpp"
#include "recross/evaluator.hpp"
#include "recross/example.hpp"
#include "recross/http_backend.hpp"
#include "recross/miner.hpp"
#include "recross/pipeline.hpp"
#include "recross/reranker.hpp"
#include "recross/retriever.hpp"

namespace fs = std::filesystem;
using namespace recross;

namespace {

constexpr const char* kStateFile = "builtin-state.json";

struct Globals {
    std::string config_path;
    std::string backend_url;
    std::string backend_name;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string planted;
    std::string log_level = "warn";
};

// Backend chosen by the global flags, plus builtin state persistence so model
// handles survive from one invocation to the next.
class Session {
public:
    explicit Session(const Globals& g) : globals_(g) {
        if (!g.config_path.empty()) {
            kv_ = KeyValueConfig::load(g.config_path);
        }
        config_ = apply_run_config(kv_);
        if (g.seed) {
            config_.rng_seed = *g.seed;
        }
    }

    RunConfig& config() { return config_; }
    const KeyValueConfig& key_values() const { return kv_; }

    std::optional<fs::path> out_dir() const {
        return globals_.out_dir.empty() ? std::nullopt : std::optional<fs::path>(globals_.out_dir);
    }

    Backend& backend() {
        if (!backend_) {
            open_backend();
        }
        return *backend_;
    }

    void save_state() {
        if (builtin_ && out_dir()) {
            write_file(*out_dir() / kStateFile, builtin_->save_state().dump() + "\n");
        }
    }

private:
    void open_backend() {
        std::string url = globals_.backend_url;
        if (globals_.backend_name.empty() && url.empty()) {
            if (const char* env = std::getenv("RECROSS_BACKEND_URL"); env != nullptr && *env != '\0') {
                url = env;
            }
        }
        if (globals_.backend_name == "builtin") {
            BuiltinBackendOptions options;
            options.seed = config_.rng_seed;
            if (!globals_.planted.empty()) {
                for (const auto& [id, u] : nlohmann::json::parse(read_file(globals_.planted)).items()) {
                    options.utilities[id] = u.get<double>();
                }
            }
            auto builtin = std::make_unique<BuiltinBackend>(options);
            if (out_dir() && fs::exists(*out_dir() / kStateFile)) {
                builtin->load_state(nlohmann::json::parse(read_file(*out_dir() / kStateFile)));
            }
            builtin_ = builtin.get();
            backend_ = std::move(builtin);
        } else if (!globals_.backend_name.empty()) {
            throw Error(ErrorKind::precondition, "unknown backend '" + globals_.backend_name + "' (only 'builtin' is built in)");
        } else if (!url.empty()) {
            backend_ = std::make_unique<HttpBackend>(url);
        } else {
            throw Error(ErrorKind::precondition,
                              "no backend: pass --backend builtin, --backend-url URL, or set RECROSS_BACKEND_URL");
        }
        backend_->set_max_batch(static_cast<std::size_t>(config_.max_batch));
    }

    const Globals& globals_;
    KeyValueConfig kv_;
    RunConfig config_;
    std::unique_ptr<Backend> backend_;
    BuiltinBackend* builtin_ = nullptr;
};

QuerySet load_queries(const std::string& path, const std::string& task) {
    const auto corpus = load_corpus(path);
    QuerySet set;
    for (const auto& ex : corpus) {
        if (task.empty() || ex.task_name == task) {
            set.queries.push_back(ex);
        }
    }
    require(!set.queries.empty(), "no queries in " + path + (task.empty() ? "" : " for task '" + task + "'"));
    set.target_task = task.empty() ? set.queries.front().task_name : task;
    return set;
}

std::map<std::string, std::vector<Example>> group_by_task(const ExampleCollection& corpus) {
    std::map<std::string, std::vector<Example>> out;
    for (const auto& ex : corpus) {
        out[ex.task_name].push_back(ex);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

std::string resolve(const std::optional<fs::path>& out_dir, const std::string& path, const std::string& fallback) {
    if (!path.empty()) {
        return path;
    }
    return out_dir ? (*out_dir / fallback).string() : std::string("-");
}

BackendServer* g_server = nullptr;

void stop_server(int) {
    if (g_server != nullptr) {
        g_server->stop();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"recross: retrieve, rerank and re-learn from upstream examples"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "recross 0.1.0");

    Globals g;
    app.add_option("--config", g.config_path, "key = value run configuration file")->check(CLI::ExistingFile);
    auto* url_opt = app.add_option("--backend-url", g.backend_url, "backend protocol server, http://host:port");
    app.add_option("--backend", g.backend_name, "built-in backend name ('builtin')")->excludes(url_opt);
    app.add_option("--seed", g.seed, "run seed; overrides rng_seed from --config");
    app.add_option("--out-dir", g.out_dir, "directory for outputs and builtin backend state");
    app.add_option("--planted", g.planted, "builtin backend: JSON object of example_id -> utility in [0, 1]")
        ->check(CLI::ExistingFile);
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

    // build-index
    std::string corpus_path, index_path, out_path, exclude_csv;
    auto* build_index_cmd = app.add_subcommand("build-index", "embed a corpus and write a dense index");
    build_index_cmd->add_option("--corpus", corpus_path, "corpus JSON Lines")->required()->check(CLI::ExistingFile);
    build_index_cmd->add_option("--out", out_path, "index file")->required();
    build_index_cmd->add_option("--exclude", exclude_csv, "comma-separated tasks left out of the index");

    // retrieve
    std::string queries_path, task;
    std::size_t size = 0;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "dense retrieval for one query set");
    retrieve_cmd->add_option("--index", index_path, "index file")->required()->check(CLI::ExistingFile);
    retrieve_cmd->add_option("--queries", queries_path, "query JSON Lines")->required()->check(CLI::ExistingFile);
    retrieve_cmd->add_option("--size", size, "number of entries to return")->required();
    retrieve_cmd->add_option("--exclude", exclude_csv, "comma-separated tasks never returned");
    retrieve_cmd->add_option("--task", task, "use only queries of this task");
    retrieve_cmd->add_option("--out", out_path, "candidates JSON Lines (default stdout)");

    // rerank
    std::string candidates_path, scorer;
    std::size_t final_size = 0;
    auto* rerank_cmd = app.add_subcommand("rerank", "score candidates against the queries and keep the best");
    rerank_cmd->add_option("--candidates", candidates_path, "candidates JSON Lines")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--queries", queries_path, "query JSON Lines")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--corpus", corpus_path, "corpus the candidates were retrieved from")
        ->required()
        ->check(CLI::ExistingFile);
    rerank_cmd->add_option("--scorer", scorer, "pair scorer model id")->required();
    rerank_cmd->add_option("--final-size", final_size, "entries to keep")->required();
    rerank_cmd->add_option("--task", task, "use only queries of this task");
    rerank_cmd->add_option("--out", out_path, "reranked JSON Lines (default stdout)");

    // mine
    std::string tasks_csv, params_path;
    auto* mine_cmd = app.add_subcommand("mine", "mine distant-supervision tuples for query tasks");
    mine_cmd->add_option("--corpus", corpus_path, "corpus JSON Lines")->required()->check(CLI::ExistingFile);
    mine_cmd->add_option("--index", index_path, "index over the corpus")->required()->check(CLI::ExistingFile);
    mine_cmd->add_option("--tasks", tasks_csv, "comma-separated query tasks")->required();
    mine_cmd->add_option("--params", params_path, "key = value miner parameters")->check(CLI::ExistingFile);
    mine_cmd->add_option("--out", out_path, "tuples JSON Lines (default stdout)");

    // build-pairs
    std::string tuples_path;
    auto* pairs_cmd = app.add_subcommand("build-pairs", "expand tuples into labelled pair-classifier rows");
    pairs_cmd->add_option("--tuples", tuples_path, "tuples JSON Lines")->required()->check(CLI::ExistingFile);
    pairs_cmd->add_option("--corpus", corpus_path, "corpus the tuples reference")->required()->check(CLI::ExistingFile);
    pairs_cmd->add_option("--out", out_path, "pairs JSON Lines (default stdout)");

    // train-reranker
    std::string pairs_path;
    auto* train_cmd = app.add_subcommand("train-reranker", "train a pair classifier on the backend");
    train_cmd->add_option("--pairs", pairs_path, "pairs JSON Lines")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--out", out_path, "write {\"model_id\": ...} here (default stdout)");

    // relearn
    std::string model = "base", retrieved_path, train_path;
    auto* relearn_cmd = app.add_subcommand("relearn", "fine-tune a model on retrieved examples");
    relearn_cmd->add_option("--model", model, "parent model id");
    auto* retrieved_opt =
        relearn_cmd->add_option("--retrieved", retrieved_path, "retrieved JSON Lines")->check(CLI::ExistingFile);
    relearn_cmd->add_option("--corpus", corpus_path, "corpus the retrieved ids refer to")
        ->check(CLI::ExistingFile)
        ->needs(retrieved_opt);
    relearn_cmd->add_option("--train", train_path, "training examples as corpus JSON Lines")
        ->check(CLI::ExistingFile)
        ->excludes(retrieved_opt);
    relearn_cmd->add_option("--out", out_path, "write {\"model_id\": ...} here (default stdout)");

    // evaluate
    std::string eval_path, metric_name = "softem";
    int round = 0;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a model on a labelled evaluation set");
    evaluate_cmd->add_option("--model", model, "model id")->required();
    evaluate_cmd->add_option("--eval", eval_path, "evaluation JSON Lines")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--metric", metric_name, "softem|em");
    evaluate_cmd->add_option("--round", round, "round index recorded with the score");
    evaluate_cmd->add_option("--out", out_path, "score JSON (default stdout)");

    // run
    std::string mode_name = "recross";
    std::optional<int> rounds, query_size, final_size_opt, upsample;
    auto* run_cmd = app.add_subcommand("run", "multi-round pipeline: retrieve, rerank, re-learn, evaluate");
    run_cmd->add_option("--corpus", corpus_path, "upstream corpus JSON Lines")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--queries", queries_path, "unlabelled query pool JSON Lines")
        ->required()
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--eval", eval_path, "labelled evaluation JSON Lines")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--index", index_path, "prebuilt index (built from --corpus when omitted)")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--mode", mode_name, "recross|dense_only|zero_shot|random_retrieval");
    run_cmd->add_option("--scorer", scorer, "pair scorer model id (default: base_model)");
    run_cmd->add_option("--metric", metric_name, "softem|em");
    run_cmd->add_option("--exclude", exclude_csv, "comma-separated upstream tasks to leave out");
    run_cmd->add_option("--rounds", rounds, "query-set rounds");
    run_cmd->add_option("--query-size", query_size, "queries per set");
    run_cmd->add_option("--final-size", final_size_opt, "examples kept for re-learning");
    run_cmd->add_option("--upsample-ratio", upsample, "candidates retrieved per kept example");

    // report
    std::string scores_path, distribution_path;
    auto* report_cmd = app.add_subcommand("report", "summarise a report.json");
    report_cmd->add_option("--scores", scores_path, "report.json from run")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--out", out_path, "table output (default stdout)");
    report_cmd->add_option("--distribution", distribution_path,
                           "task-distribution CSV (default <out-dir>/distribution.csv)");

    // serve
    std::string host = "127.0.0.1";
    int port = 8765;
    auto* serve_cmd = app.add_subcommand("serve", "serve the selected backend over the HTTP protocol");
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "port");

    CLI11_PARSE(app, argc, argv);

    spdlog::set_default_logger(spdlog::stderr_color_mt("recross"));
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        Session session(g);
        RunConfig& config = session.config();
        if (!exclude_csv.empty()) {
            config.excluded_tasks = split_task_list(exclude_csv);
        }
        const auto out_dir = session.out_dir();

        if (*build_index_cmd) {
            const auto corpus = filter_tasks(load_corpus(corpus_path), config.excluded_tasks);
            const auto index = build_index(corpus, session.backend());
            save_index(index, out_path);
            spdlog::info("indexed {} rows of dimension {}", index.size(), index.dim());
        } else if (*retrieve_cmd) {
            const auto index = load_index(index_path);
            const auto queries = load_queries(queries_path, task);
            const auto result = retrieve_filtered(index, queries, size, config.excluded_tasks, session.backend());
            std::ostringstream out;
            write_candidates(out, result);
            write_text(resolve(out_dir, out_path, "candidates.jsonl"), out.str());
        } else if (*rerank_cmd) {
            const auto corpus = load_corpus(corpus_path);
            const auto candidates = load_candidates(candidates_path);
            const auto queries = load_queries(queries_path, task);
            const auto matrix = score_all(queries, candidates, corpus, {scorer}, session.backend());
            std::ostringstream out;
            write_candidates(out, rerank(matrix, candidates, final_size));
            write_text(resolve(out_dir, out_path, "retrieved.jsonl"), out.str());
        } else if (*mine_cmd) {
            const auto corpus = load_corpus(corpus_path);
            const auto index = load_index(index_path);
            MinerParams params;
            params.rng_seed = config.rng_seed;
            params.base_model = config.base_model;
            params.finetune = config.finetune;
            if (!params_path.empty()) {
                params = apply_miner_params(KeyValueConfig::load(params_path), params);
            }
            if (g.seed) {
                params.rng_seed = *g.seed;
            }
            std::vector<DistantSupervisionTuple> tuples;
            for (const auto& t : split_task_list(tasks_csv)) {
                tuples.push_back(mine_tuple(corpus, index, t, params, session.backend()));
            }
            std::ostringstream out;
            write_tuples(out, tuples);
            write_text(resolve(out_dir, out_path, "tuples.jsonl"), out.str());
        } else if (*pairs_cmd) {
            const auto corpus = load_corpus(corpus_path);
            std::ifstream in(tuples_path);
            const auto pairs = build_pair_dataset(read_tuples(in, corpus));
            std::ostringstream out;
            write_pairs(out, pairs);
            write_text(resolve(out_dir, out_path, "pairs.jsonl"), out.str());
        } else if (*train_cmd) {
            std::ifstream in(pairs_path);
            const auto handle = session.backend().train_pair_classifier(read_pairs(in));
            write_text(resolve(out_dir, out_path, "reranker.json"),
                       nlohmann::json{{"model_id", handle.model_id}}.dump() + "\n");
        } else if (*relearn_cmd) {
            std::vector<Example> train;
            if (!retrieved_path.empty()) {
                require(!corpus_path.empty(), "--retrieved needs --corpus to resolve example ids");
                train = materialize(load_candidates(retrieved_path), load_corpus(corpus_path));
            } else {
                require(!train_path.empty(), "relearn needs --retrieved or --train");
                const auto rows = load_corpus(train_path);
                train.assign(rows.begin(), rows.end());
            }
            const auto handle = session.backend().finetune({model}, train, config.finetune);
            write_text(resolve(out_dir, out_path, "model.json"),
                       nlohmann::json{{"model_id", handle.model_id}}.dump() + "\n");
        } else if (*evaluate_cmd) {
            const Metric metric = parse_metric(metric_name);
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& [name, set] : group_by_task(load_corpus(eval_path))) {
                const auto score = evaluate_task({model}, set, metric, session.backend(), round);
                out.push_back({{"task", score.task},
                               {"round", score.round},
                               {"metric", to_string(score.metric)},
                               {"value", score.value}});
            }
            write_text(resolve(out_dir, out_path, "scores.json"), out.dump(2) + "\n");
        } else if (*run_cmd) {
            require(out_dir.has_value(), "run needs --out-dir");
            if (rounds) config.rounds = *rounds;
            if (query_size) config.query_size = *query_size;
            if (final_size_opt) config.final_size = *final_size_opt;
            if (upsample) config.upsample_ratio = *upsample;
            config.validate();

            const auto corpus = load_corpus(corpus_path);
            const auto pool = load_corpus(queries_path);
            const auto eval_sets = group_by_task(load_corpus(eval_path));
            Backend& backend = session.backend();
            const DenseIndex index = index_path.empty()
                                         ? build_index(filter_tasks(corpus, config.excluded_tasks), backend)
                                         : load_index(index_path);
            const auto query_rounds = sample_query_rounds(pool, config.rounds, config.query_size, config.rng_seed);
            const PipelineMode mode = parse_mode(mode_name);
            const Metric metric = parse_metric(metric_name);

            PipelineReport report;
            if (mode == PipelineMode::recross || mode == PipelineMode::dense_only) {
                PipelineOptions options;
                options.mode = mode;
                options.metric = metric;
                options.out_dir = out_dir;
                if (mode == PipelineMode::recross) {
                    options.scorer = ModelHandle{scorer.empty() ? config.base_model : scorer};
                }
                report = run_generalization(corpus, index, query_rounds, eval_sets, config, backend, options);
            } else {
                report = run_baseline(mode, corpus, index, query_rounds, eval_sets, config, backend, metric, out_dir);
            }
            if (report.aggregate) {
                write_report_table(std::cout, *report.aggregate, metric);
            }
            session.save_state();
            if (report.partial) {
                spdlog::warn("some rounds failed; report.json is marked partial");
                return 3;
            }
        } else if (*report_cmd) {
            const auto doc = nlohmann::json::parse(read_file(scores_path));
            const auto scores = task_scores_from_json(doc);
            require(!scores.empty(), "report has no completed rounds");
            std::ostringstream table;
            write_report_table(table, aggregate_rounds(scores), scores.front().metric);
            write_text(out_path, table.str());
            std::ostringstream csv;
            write_distribution_csv(csv, doc);
            const std::string csv_path = resolve(out_dir, distribution_path, "distribution.csv");
            if (csv_path != "-") {
                write_file(csv_path, csv.str());
            } else {
                std::cout << '\n' << csv.str();
            }
        } else if (*serve_cmd) {
            BackendServer server(session.backend());
            g_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            std::cerr << "serving on http://" << host << ':' << port << '\n';
            server.listen(host, port);
            g_server = nullptr;
        }
        session.save_state();
    } catch (const Error& e) {
        std::cerr << "recross: " << to_string(e.kind()) << " error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "recross: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
