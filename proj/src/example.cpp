// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/example.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "recross/error.hpp"

namespace recross {

ExampleCollection::ExampleCollection(std::vector<Example> examples) : examples_(std::move(examples)) {
    by_id_.reserve(examples_.size());
    for (std::size_t i = 0; i < examples_.size(); ++i) {
        const Example& ex = examples_[i];
        require(!ex.example_id.empty(), "example at position " + std::to_string(i) + " has an empty id");
        require(!ex.task_name.empty(), "example '" + ex.example_id + "' has an empty task name");
        require(!ex.input_text.empty(), "example '" + ex.example_id + "' has an empty input");
        auto [it, inserted] = by_id_.emplace(ex.example_id, i);
        if (!inserted) {
            fail(ErrorKind::duplicate, "duplicate example id '" + ex.example_id + "' at positions " +
                                           std::to_string(it->second) + " and " + std::to_string(i));
        }
        by_task_[ex.task_name].push_back(i);
    }
}

std::optional<std::size_t> ExampleCollection::position_of(const std::string& example_id) const {
    auto it = by_id_.find(example_id);
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Example& ExampleCollection::at_id(const std::string& example_id) const {
    auto position = position_of(example_id);
    require(position.has_value(), "unknown example id '" + example_id + "'");
    return examples_[*position];
}

std::vector<std::string> ExampleCollection::task_names() const {
    std::vector<std::string> names;
    names.reserve(by_task_.size());
    for (const auto& [name, positions] : by_task_) {
        names.push_back(name);
    }
    return names;
}

namespace {

std::string synthesized_id(const std::string& task, std::size_t line_number) {
    char digits[32];
    std::snprintf(digits, sizeof(digits), "%06zu", line_number);
    return task + "-" + digits;
}

std::string string_field(const nlohmann::json& record, const char* key, bool required,
                         const std::string& where) {
    auto it = record.find(key);
    if (it == record.end() || it->is_null()) {
        if (required) {
            fail(ErrorKind::parse, where + ": missing field '" + key + "'");
        }
        return {};
    }
    if (!it->is_string()) {
        fail(ErrorKind::parse, where + ": field '" + key + "' must be a string");
    }
    return it->get<std::string>();
}

}  // namespace

ExampleCollection parse_corpus(std::istream& in, const std::string& source_name) {
    std::vector<Example> examples;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const std::string where = source_name + ":" + std::to_string(line_number);
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::parse, where + ": " + e.what());
        }
        if (!record.is_object()) {
            fail(ErrorKind::parse, where + ": expected a JSON object");
        }
        for (const auto& [key, value] : record.items()) {
            if (key != "id" && key != "task" && key != "input" && key != "output") {
                spdlog::warn("{}: ignoring unknown field '{}'", where, key);
            }
        }
        Example ex;
        ex.task_name = string_field(record, "task", true, where);
        ex.input_text = string_field(record, "input", true, where);
        ex.output_text = string_field(record, "output", false, where);
        ex.example_id = string_field(record, "id", false, where);
        if (ex.example_id.empty()) {
            ex.example_id = synthesized_id(ex.task_name, line_number);
        }
        if (ex.task_name.empty()) {
            fail(ErrorKind::parse, where + ": empty task");
        }
        if (ex.input_text.empty()) {
            fail(ErrorKind::parse, where + ": empty input");
        }
        auto [it, inserted] = first_line.emplace(ex.example_id, line_number);
        if (!inserted) {
            fail(ErrorKind::duplicate, source_name + ": duplicate example id '" + ex.example_id +
                                           "' on lines " + std::to_string(it->second) + " and " +
                                           std::to_string(line_number));
        }
        examples.push_back(std::move(ex));
    }
    return ExampleCollection(std::move(examples));
}

ExampleCollection load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::precondition, "cannot open corpus " + path.string());
    }
    return parse_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const ExampleCollection& corpus) {
    for (const Example& ex : corpus) {
        nlohmann::ordered_json record;
        record["id"] = ex.example_id;
        record["task"] = ex.task_name;
        record["input"] = ex.input_text;
        record["output"] = ex.output_text;
        out << record.dump() << '\n';
    }
}

void save_corpus(const std::filesystem::path& path, const ExampleCollection& corpus) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorKind::precondition, "cannot open " + path.string() + " for writing");
    }
    write_corpus(out, corpus);
}

ExampleCollection filter_tasks(const ExampleCollection& corpus, const std::set<std::string>& excluded) {
    if (excluded.empty()) {
        return corpus;
    }
    std::vector<Example> kept;
    kept.reserve(corpus.size());
    for (const Example& ex : corpus) {
        if (!excluded.contains(ex.task_name)) {
            kept.push_back(ex);
        }
    }
    return ExampleCollection(std::move(kept));
}

}  // namespace recross
