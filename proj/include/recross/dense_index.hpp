// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "recross/backend.hpp"
#include "recross/example.hpp"

namespace recross {

struct SearchHit {
    std::size_t position = 0;
    std::string example_id;
    /// Inner product of unit vectors, i.e. cosine similarity.
    double score = 0.0;
};

/// Row-normalised embedding matrix over a corpus, stored row-major as float32.
/// Immutable after construction; search is safe to call concurrently.
class DenseIndex {
public:
    DenseIndex() = default;

    /// L2-normalises each row. Throws Error(build) naming the id of a zero or
    /// non-finite row, Error(precondition) on shape mismatches or duplicate ids.
    static DenseIndex from_embeddings(std::vector<std::string> ids, std::vector<std::string> tasks,
                                      std::span<const EmbeddingVector> embeddings);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<std::string>& tasks() const noexcept { return tasks_; }
    const std::vector<float>& matrix() const noexcept { return matrix_; }
    std::span<const float> row(std::size_t position) const {
        return {matrix_.data() + position * dim_, dim_};
    }

    bool operator==(const DenseIndex&) const = default;

private:
    friend DenseIndex load_index(const std::filesystem::path& path);

    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::string> tasks_;
    std::vector<float> matrix_;
};

/// Encodes every corpus input in corpus order and normalises the rows.
DenseIndex build_index(const ExampleCollection& corpus, Backend& embedder);

/// L2-normalised copy of `vector`; throws Error(precondition) on a zero or non-finite vector.
std::vector<float> normalized(std::span<const double> vector);

/// Rows admitted to a search. An empty mask admits every row.
using RowMask = std::vector<bool>;

/// Exact top-k by inner product. Scores descend; equal scores keep ascending
/// row position. Returns min(k, admitted rows) hits.
std::vector<SearchHit> search(const DenseIndex& index, std::span<const float> query, std::size_t k,
                              const RowMask& admitted = {});

/// Binary layout, all integers little-endian:
///   magic "RCRSIDX\0" | u32 version | u32 dim | u64 rows
///   rows x (u32 byte length, id bytes) | rows x (u32 byte length, task bytes)
///   zero padding to a 64-byte boundary | rows*dim float32, row-major
inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Writes to a sibling temporary file, then renames over `path`.
void save_index(const DenseIndex& index, const std::filesystem::path& path);

/// Throws Error(version) on a bad magic or unknown version and Error(load) on
/// truncation or trailing bytes; never returns a partial index.
DenseIndex load_index(const std::filesystem::path& path);

}  // namespace recross
