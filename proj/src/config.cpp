// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "recross/error.hpp"

namespace recross {

namespace {

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text) {
    Int value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        fail(ErrorKind::parse, "config key '" + key + "': expected an integer, got '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& key, const std::string& text) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != text.size() || text.empty() || !std::isfinite(value)) {
        fail(ErrorKind::parse, "config key '" + key + "': expected a real number, got '" + text + "'");
    }
    return value;
}

}  // namespace

void RunConfig::validate() const {
    require(query_size >= 1, "query_size must be positive");
    require(final_size >= 1, "final_size must be positive");
    require(upsample_ratio >= 1, "upsample_ratio must be at least 1");
    require(finetune.learning_rate > 0.0, "finetune_lr must be positive");
    require(finetune.batch_size >= 1, "finetune_batch must be positive");
    require(finetune.epochs >= 1, "finetune_epochs must be positive");
    require(rounds >= 1, "rounds must be positive");
    require(max_batch >= 1, "max_batch must be positive");
    require(!base_model.empty(), "base_model must be non-empty");
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source_name) {
    KeyValueConfig config;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string content = trim(line);
        if (content.empty()) {
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::parse, source_name + ":" + std::to_string(line_number) + ": expected key = value");
        }
        std::string key = trim(std::string_view(content).substr(0, eq));
        if (key.empty()) {
            fail(ErrorKind::parse, source_name + ":" + std::to_string(line_number) + ": empty key");
        }
        config.values_[key] = trim(std::string_view(content).substr(eq + 1));
    }
    return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::precondition, "cannot open config " + path.string());
    }
    return parse(in, path.string());
}

std::uint64_t parse_config_unsigned(const std::string& key, const std::string& value) {
    return parse_integer<std::uint64_t>(key, value);
}

double parse_config_real(const std::string& key, const std::string& value) {
    return parse_real(key, value);
}

std::set<std::string> split_task_list(const std::string& csv) {
    std::set<std::string> tasks;
    std::stringstream stream(csv);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            tasks.insert(item);
        }
    }
    return tasks;
}

RunConfig apply_run_config(const KeyValueConfig& kv, RunConfig base) {
    for (const auto& [key, value] : kv.values()) {
        if (key == "query_size") {
            base.query_size = parse_integer<int>(key, value);
        } else if (key == "final_size") {
            base.final_size = parse_integer<int>(key, value);
        } else if (key == "upsample_ratio") {
            base.upsample_ratio = parse_integer<int>(key, value);
        } else if (key == "finetune_lr") {
            base.finetune.learning_rate = parse_real(key, value);
        } else if (key == "finetune_batch") {
            base.finetune.batch_size = parse_integer<int>(key, value);
        } else if (key == "finetune_epochs") {
            base.finetune.epochs = parse_integer<int>(key, value);
        } else if (key == "rng_seed") {
            base.rng_seed = parse_integer<std::uint64_t>(key, value);
        } else if (key == "excluded_tasks") {
            base.excluded_tasks = split_task_list(value);
        } else if (key == "rounds") {
            base.rounds = parse_integer<int>(key, value);
        } else if (key == "max_batch") {
            base.max_batch = parse_integer<int>(key, value);
        } else if (key == "base_model") {
            base.base_model = value;
        }
    }
    return base;
}

std::string to_key_values(const RunConfig& config) {
    std::ostringstream out;
    out.precision(17);
    out << "query_size = " << config.query_size << '\n'
        << "final_size = " << config.final_size << '\n'
        << "upsample_ratio = " << config.upsample_ratio << '\n'
        << "finetune_lr = " << config.finetune.learning_rate << '\n'
        << "finetune_batch = " << config.finetune.batch_size << '\n'
        << "finetune_epochs = " << config.finetune.epochs << '\n'
        << "rng_seed = " << config.rng_seed << '\n'
        << "excluded_tasks = ";
    bool first = true;
    for (const auto& task : config.excluded_tasks) {
        out << (first ? "" : ",") << task;
        first = false;
    }
    out << '\n'
        << "rounds = " << config.rounds << '\n'
        << "max_batch = " << config.max_batch << '\n'
        << "base_model = " << config.base_model << '\n';
    return out.str();
}

}  // namespace recross
