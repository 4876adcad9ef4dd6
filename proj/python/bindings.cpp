// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings for the core engine: corpora, backends, the dense index,
// retrieval, reranking, mining, evaluation and the multi-round pipeline.

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "recross/builtin_backend.hpp"
#include "recross/config.hpp"
#include "recross/dense_index.hpp"
#include "recross/error.hpp"
#include "recross/evaluator.hpp"
#include "recross/example.hpp"
#include "recross/http_backend.hpp"
#include "recross/miner.hpp"
#include "recross/pipeline.hpp"
#include "recross/reranker.hpp"
#include "recross/retriever.hpp"

namespace py = pybind11;
using namespace recross;

namespace {

QuerySet make_query_set(const std::vector<Example>& queries, std::string target_task) {
    if (target_task.empty() && !queries.empty()) target_task = queries.front().task_name;
    return QuerySet{std::move(target_task), queries};
}

}  // namespace

PYBIND11_MODULE(_recross, m) {
    m.doc() = "retrieval augmentation for cross-task generalization";

    // Carries the error kind name as `.kind`.
    static const py::handle error_type = py::exception<Error>(m, "RecrossError").release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = error_type(e.what());
            err.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(error_type.ptr(), err.ptr());
        }
    });

    py::class_<Example>(m, "Example")
        .def(py::init<std::string, std::string, std::string, std::string>(), py::arg("example_id"),
             py::arg("task_name"), py::arg("input_text"), py::arg("output_text") = "")
        .def_readwrite("example_id", &Example::example_id)
        .def_readwrite("task_name", &Example::task_name)
        .def_readwrite("input_text", &Example::input_text)
        .def_readwrite("output_text", &Example::output_text)
        .def(py::self == py::self)
        .def("__repr__", [](const Example& e) { return "<Example " + e.example_id + " task=" + e.task_name + ">"; });

    py::class_<ExampleCollection>(m, "ExampleCollection")
        .def(py::init<std::vector<Example>>())
        .def("__len__", &ExampleCollection::size)
        .def("__getitem__", [](const ExampleCollection& c, std::size_t i) {
            if (i >= c.size()) throw py::index_error();
            return c[i];
        })
        .def_property_readonly("examples", &ExampleCollection::examples)
        .def("task_names", &ExampleCollection::task_names)
        .def("position_of", &ExampleCollection::position_of);
    m.def("load_corpus", &load_corpus, py::arg("path"));
    m.def("filter_tasks", &filter_tasks, py::arg("corpus"), py::arg("excluded"));

    py::class_<ModelHandle>(m, "ModelHandle")
        .def(py::init<std::string>(), py::arg("model_id"))
        .def_readonly("model_id", &ModelHandle::model_id)
        .def("__repr__", [](const ModelHandle& h) { return "<ModelHandle " + h.model_id + ">"; });
    py::implicitly_convertible<std::string, ModelHandle>();

    py::class_<LabeledPair>(m, "LabeledPair")
        .def(py::init<std::string, std::string, int>(), py::arg("query"), py::arg("candidate"), py::arg("label"))
        .def_readonly("query", &LabeledPair::query)
        .def_readonly("candidate", &LabeledPair::candidate)
        .def_readonly("label", &LabeledPair::label);

    py::class_<FinetuneSpec>(m, "FinetuneSpec")
        .def(py::init<>())
        .def_readwrite("learning_rate", &FinetuneSpec::learning_rate)
        .def_readwrite("batch_size", &FinetuneSpec::batch_size)
        .def_readwrite("epochs", &FinetuneSpec::epochs);

    py::class_<Backend>(m, "Backend")
        .def("encode", [](Backend& b, const std::vector<std::string>& texts) { return b.encode(texts); })
        .def("score_pairs",
             [](Backend& b, const ModelHandle& model, const std::vector<std::pair<std::string, std::string>>& pairs) {
                 std::vector<TextPair> tp;
                 for (const auto& [q, c] : pairs) tp.push_back({q, c});
                 return b.score_pairs(model, tp);
             })
        .def("finetune",
             [](Backend& b, const ModelHandle& parent, const std::vector<Example>& train, const FinetuneSpec& spec) {
                 return b.finetune(parent, train, spec);
             },
             py::arg("parent"), py::arg("train"), py::arg("spec") = FinetuneSpec{})
        .def("compute_loss",
             [](Backend& b, const ModelHandle& model, const std::vector<Example>& held_out) {
                 return b.compute_loss(model, held_out);
             })
        .def("generate",
             [](Backend& b, const ModelHandle& model, const std::vector<std::string>& inputs) {
                 return b.generate(model, inputs);
             })
        .def("train_pair_classifier",
             [](Backend& b, const std::vector<LabeledPair>& pairs) { return b.train_pair_classifier(pairs); })
        .def_property("max_batch", &Backend::max_batch, &Backend::set_max_batch);

    py::class_<BuiltinBackend, Backend>(m, "BuiltinBackend")
        .def(py::init([](std::uint64_t seed, std::size_t dim, double noise_sigma,
                         std::unordered_map<std::string, double> utilities, double default_utility) {
                 return std::make_unique<BuiltinBackend>(
                     BuiltinBackendOptions{seed, dim, noise_sigma, std::move(utilities), default_utility});
             }),
             py::arg("seed") = 0, py::arg("dim") = 64, py::arg("noise_sigma") = 0.02,
             py::arg("utilities") = std::unordered_map<std::string, double>{}, py::arg("default_utility") = 0.0)
        .def("has_model", &BuiltinBackend::has_model)
        .def("save_state", [](const BuiltinBackend& b) { return b.save_state().dump(); })
        .def("load_state", [](BuiltinBackend& b, const std::string& s) { b.load_state(nlohmann::json::parse(s)); });

    py::class_<HttpBackend, Backend>(m, "HttpBackend")
        .def(py::init<std::string, int>(), py::arg("url"), py::arg("timeout_seconds") = 600);

    py::class_<SearchHit>(m, "SearchHit")
        .def_readonly("position", &SearchHit::position)
        .def_readonly("example_id", &SearchHit::example_id)
        .def_readonly("score", &SearchHit::score);

    py::class_<DenseIndex>(m, "DenseIndex")
        .def_property_readonly("dim", &DenseIndex::dim)
        .def("__len__", &DenseIndex::size)
        .def_property_readonly("ids", &DenseIndex::ids)
        .def_property_readonly("tasks", &DenseIndex::tasks)
        .def("row", [](const DenseIndex& idx, std::size_t i) {
            if (i >= idx.size()) throw py::index_error();
            const auto r = idx.row(i);
            return std::vector<float>(r.begin(), r.end());
        })
        .def("search",
             [](const DenseIndex& idx, const std::vector<float>& query, std::size_t k, const RowMask& admitted) {
                 return search(idx, query, k, admitted);
             },
             py::arg("query"), py::arg("k"), py::arg("admitted") = RowMask{},
             py::call_guard<py::gil_scoped_release>())
        .def("save", [](const DenseIndex& idx, const std::filesystem::path& p) { save_index(idx, p); });
    m.def("build_index", &build_index, py::arg("corpus"), py::arg("backend"));
    m.def("load_index", &load_index, py::arg("path"));

    py::class_<CandidateEntry>(m, "CandidateEntry")
        .def_readonly("example_id", &CandidateEntry::example_id)
        .def_readonly("task", &CandidateEntry::task)
        .def_readonly("position", &CandidateEntry::position)
        .def_readonly("query_index", &CandidateEntry::query_index)
        .def_readonly("rank", &CandidateEntry::rank)
        .def_readonly("score", &CandidateEntry::score)
        .def_readonly("utility", &CandidateEntry::utility);

    py::class_<CandidateList>(m, "CandidateList")
        .def_readonly("entries", &CandidateList::entries)
        .def_readonly("short_supply", &CandidateList::short_supply)
        .def("__len__", &CandidateList::size)
        .def("ids", [](const CandidateList& c) {
            std::vector<std::string> out;
            for (const auto& e : c.entries) out.push_back(e.example_id);
            return out;
        })
        .def("to_jsonl", [](const CandidateList& c) {
            std::ostringstream out;
            write_candidates(out, c);
            return out.str();
        });

    m.def(
        "retrieve",
        [](const DenseIndex& index, const std::vector<Example>& queries, std::size_t size, Backend& backend,
           const std::set<std::string>& excluded_tasks) {
            return retrieve_filtered(index, make_query_set(queries, ""), size, excluded_tasks, backend);
        },
        py::arg("index"), py::arg("queries"), py::arg("size"), py::arg("backend"),
        py::arg("excluded_tasks") = std::set<std::string>{});

    m.def(
        "rerank",
        [](const std::vector<Example>& queries, const CandidateList& candidates, const ExampleCollection& corpus,
           const ModelHandle& scorer, std::size_t final_size, Backend& backend) {
            const auto matrix = score_all(make_query_set(queries, ""), candidates, corpus, scorer, backend);
            return rerank(matrix, candidates, final_size);
        },
        py::arg("queries"), py::arg("candidates"), py::arg("corpus"), py::arg("scorer"), py::arg("final_size"),
        py::arg("backend"));
    m.def("materialize", &materialize, py::arg("candidates"), py::arg("corpus"));

    py::class_<MinerParams>(m, "MinerParams")
        .def(py::init<>())
        .def_readwrite("zq_size", &MinerParams::zq_size)
        .def_readwrite("hq_size", &MinerParams::hq_size)
        .def_readwrite("pool_size", &MinerParams::pool_size)
        .def_readwrite("rounds", &MinerParams::rounds)
        .def_readwrite("group_count", &MinerParams::group_count)
        .def_readwrite("w", &MinerParams::w)
        .def_readwrite("finetune", &MinerParams::finetune)
        .def_readwrite("rng_seed", &MinerParams::rng_seed)
        .def_readwrite("base_model", &MinerParams::base_model);

    py::class_<DistantSupervisionTuple>(m, "DistantSupervisionTuple")
        .def_readonly("query_task", &DistantSupervisionTuple::query_task)
        .def_readonly("z_q", &DistantSupervisionTuple::z_q)
        .def_readonly("z_p", &DistantSupervisionTuple::z_p)
        .def_readonly("z_n", &DistantSupervisionTuple::z_n)
        .def_readonly("scores", &DistantSupervisionTuple::scores)
        .def_readonly("held_out", &DistantSupervisionTuple::held_out)
        .def_readonly("round_groups", &DistantSupervisionTuple::round_groups);

    m.def("mine_tuple", &mine_tuple, py::arg("corpus"), py::arg("index"), py::arg("query_task"), py::arg("params"),
          py::arg("backend"));
    m.def("build_pair_dataset", &build_pair_dataset, py::arg("tuples"));
    m.def("group_sizes", &group_sizes, py::arg("count"), py::arg("groups"));

    m.def("normalize_answer", &normalize_answer);
    m.def("exact_match", &exact_match, py::arg("prediction"), py::arg("truth"));
    m.def("soft_em", &soft_em, py::arg("prediction"), py::arg("truth"));
    m.def(
        "evaluate",
        [](const ModelHandle& model, const std::vector<Example>& eval_set, const std::string& metric,
           Backend& backend) { return evaluate_task(model, eval_set, parse_metric(metric), backend).value; },
        py::arg("model"), py::arg("eval_set"), py::arg("metric") = "softem", py::arg("backend"));

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("query_size", &RunConfig::query_size)
        .def_readwrite("final_size", &RunConfig::final_size)
        .def_readwrite("upsample_ratio", &RunConfig::upsample_ratio)
        .def_readwrite("finetune", &RunConfig::finetune)
        .def_readwrite("rng_seed", &RunConfig::rng_seed)
        .def_readwrite("excluded_tasks", &RunConfig::excluded_tasks)
        .def_readwrite("rounds", &RunConfig::rounds)
        .def_readwrite("max_batch", &RunConfig::max_batch)
        .def_readwrite("base_model", &RunConfig::base_model);

    // Full pipeline; returns the report document as a JSON string.
    m.def(
        "run",
        [](const ExampleCollection& corpus, const ExampleCollection& query_pool, const ExampleCollection& eval,
           const RunConfig& config, Backend& backend, const std::string& mode_name, const std::string& metric_name,
           std::optional<std::string> scorer, std::optional<std::filesystem::path> out_dir) {
            config.validate();
            std::map<std::string, std::vector<Example>> eval_sets;
            for (const auto& e : eval) eval_sets[e.task_name].push_back(e);
            const auto index = build_index(filter_tasks(corpus, config.excluded_tasks), backend);
            const auto rounds = sample_query_rounds(query_pool, config.rounds, config.query_size, config.rng_seed);
            const auto mode = parse_mode(mode_name);
            const auto metric = parse_metric(metric_name);
            PipelineReport report;
            if (mode == PipelineMode::recross || mode == PipelineMode::dense_only) {
                PipelineOptions options{mode, metric, std::nullopt, out_dir};
                if (mode == PipelineMode::recross) options.scorer = ModelHandle{scorer.value_or(config.base_model)};
                report = run_generalization(corpus, index, rounds, eval_sets, config, backend, options);
            } else {
                report = run_baseline(mode, corpus, index, rounds, eval_sets, config, backend, metric, out_dir);
            }
            return report_to_json(report).dump();
        },
        py::arg("corpus"), py::arg("query_pool"), py::arg("eval"), py::arg("config"), py::arg("backend"),
        py::arg("mode") = "recross", py::arg("metric") = "softem", py::arg("scorer") = std::nullopt,
        py::arg("out_dir") = std::nullopt);
}
