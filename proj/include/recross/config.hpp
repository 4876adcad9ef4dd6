// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>

namespace recross {

struct FinetuneSpec {
    double learning_rate = 1e-6;
    int batch_size = 4;
    int epochs = 2;

    bool operator==(const FinetuneSpec&) const = default;
};

struct RunConfig {
    int query_size = 16;
    int final_size = 512;
    int upsample_ratio = 2;
    FinetuneSpec finetune;
    std::uint64_t rng_seed = 0;
    std::set<std::string> excluded_tasks;

    // Pipeline plumbing.
    int rounds = 5;
    int max_batch = 64;
    std::string base_model = "base";

    int candidate_size() const { return final_size * upsample_ratio; }

    /// Throws Error(precondition) naming the offending field.
    void validate() const;
};

/// Flat `key = value` settings. `#` starts a comment; blank lines are ignored.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, const std::string& source_name = "<stream>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return values_.contains(key); }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

private:
    std::map<std::string, std::string> values_;
};

/// Overlays recognised keys onto `base`. Unknown keys are left for other readers.
RunConfig apply_run_config(const KeyValueConfig& kv, RunConfig base = {});

/// Serialises every RunConfig field, in a form apply_run_config reads back.
std::string to_key_values(const RunConfig& config);

std::set<std::string> split_task_list(const std::string& csv);

/// Strict integer/real parsing for config values; throws Error(parse) naming the key.
std::uint64_t parse_config_unsigned(const std::string& key, const std::string& value);
double parse_config_real(const std::string& key, const std::string& value);

}  // namespace recross
