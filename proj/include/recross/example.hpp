// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace recross {

/// One templatized task instance. `output_text` is empty for unlabeled queries.
struct Example {
    std::string example_id;
    std::string task_name;
    std::string input_text;
    std::string output_text;

    bool operator==(const Example&) const = default;
};

/// Insertion-ordered corpus with a per-task position index. Immutable once built.
class ExampleCollection {
public:
    ExampleCollection() = default;

    /// Throws Error(duplicate) on a repeated example_id, Error(precondition) on an
    /// empty id, task or input.
    explicit ExampleCollection(std::vector<Example> examples);

    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }

    const std::vector<Example>& examples() const noexcept { return examples_; }
    const Example& operator[](std::size_t position) const { return examples_[position]; }
    auto begin() const noexcept { return examples_.begin(); }
    auto end() const noexcept { return examples_.end(); }

    /// Task name -> positions, each list ascending.
    const std::map<std::string, std::vector<std::size_t>>& by_task() const noexcept {
        return by_task_;
    }

    std::optional<std::size_t> position_of(const std::string& example_id) const;
    const Example& at_id(const std::string& example_id) const;

    std::vector<std::string> task_names() const;

private:
    std::vector<Example> examples_;
    std::map<std::string, std::vector<std::size_t>> by_task_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Unlabeled queries for one unseen task. Retrieval never reads output_text.
struct QuerySet {
    std::string target_task;
    std::vector<Example> queries;
};

/// Reads the JSON Lines corpus format: one object per line with `id`, `task`,
/// `input`, `output`. Blank lines are skipped. A missing `id` is synthesized as
/// `<task>-<zero-padded line number>`.
ExampleCollection load_corpus(const std::filesystem::path& path);
ExampleCollection parse_corpus(std::istream& in, const std::string& source_name = "<stream>");

void write_corpus(std::ostream& out, const ExampleCollection& corpus);
void save_corpus(const std::filesystem::path& path, const ExampleCollection& corpus);

ExampleCollection filter_tasks(const ExampleCollection& corpus, const std::set<std::string>& excluded);

}  // namespace recross
