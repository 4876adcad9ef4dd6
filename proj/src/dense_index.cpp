// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/dense_index.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "recross/error.hpp"

namespace recross {

static_assert(std::endian::native == std::endian::little, "index files are little-endian");

namespace {

constexpr std::array<char, 8> kMagic = {'R', 'C', 'R', 'S', 'I', 'D', 'X', '\0'};
constexpr std::size_t kMatrixAlignment = 64;

// Normalises in double, then narrows.
bool normalize_into(std::span<const double> v, float* out) {
    double sq = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
        sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) {
        return false;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<float>(v[i] / norm);
    }
    return true;
}

double dot(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

}  // namespace

std::vector<float> normalized(std::span<const double> vector) {
    require(!vector.empty(), "cannot normalise an empty vector");
    std::vector<float> out(vector.size());
    require(normalize_into(vector, out.data()), "cannot normalise a zero or non-finite vector");
    return out;
}

DenseIndex DenseIndex::from_embeddings(std::vector<std::string> ids, std::vector<std::string> tasks,
                                       std::span<const EmbeddingVector> embeddings) {
    require(ids.size() == tasks.size() && ids.size() == embeddings.size(),
            "ids, tasks and embeddings must have equal length");
    DenseIndex index;
    if (embeddings.empty()) {
        return index;
    }
    index.dim_ = embeddings.front().size();
    require(index.dim_ > 0, "embeddings must be non-empty");
    std::unordered_set<std::string> seen;
    index.matrix_.resize(ids.size() * index.dim_);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(seen.insert(ids[i]).second, "duplicate id '" + ids[i] + "' in index");
        if (embeddings[i].size() != index.dim_) {
            fail(ErrorKind::protocol_violation, "embedding of '" + ids[i] + "' has dimension " +
                                                    std::to_string(embeddings[i].size()) + ", expected " +
                                                    std::to_string(index.dim_));
        }
        if (!normalize_into(embeddings[i], index.matrix_.data() + i * index.dim_)) {
            fail(ErrorKind::build, "embedding of '" + ids[i] + "' has zero norm or non-finite values");
        }
    }
    index.ids_ = std::move(ids);
    index.tasks_ = std::move(tasks);
    return index;
}

DenseIndex build_index(const ExampleCollection& corpus, Backend& embedder) {
    require(!corpus.empty(), "cannot build an index over an empty corpus");
    std::vector<std::string> texts;
    std::vector<std::string> ids;
    std::vector<std::string> tasks;
    texts.reserve(corpus.size());
    for (const Example& ex : corpus) {
        texts.push_back(ex.input_text);
        ids.push_back(ex.example_id);
        tasks.push_back(ex.task_name);
    }
    const auto embeddings = embedder.encode(texts);
    return DenseIndex::from_embeddings(std::move(ids), std::move(tasks), embeddings);
}

std::vector<SearchHit> search(const DenseIndex& index, std::span<const float> query, std::size_t k,
                              const RowMask& admitted) {
    require(query.size() == index.dim(), "query dimension " + std::to_string(query.size()) +
                                             " does not match index dimension " + std::to_string(index.dim()));
    require(admitted.empty() || admitted.size() == index.size(), "row mask size does not match the index");

    struct Scored {
        double score;
        std::size_t position;
    };
    // Strict weak order: higher score first, then lower position.
    auto better = [](const Scored& a, const Scored& b) {
        return a.score != b.score ? a.score > b.score : a.position < b.position;
    };

    // Max-heap on `better` keeps the worst retained hit at the front.
    std::vector<Scored> heap;
    heap.reserve(std::min(k, index.size()) + 1);
    for (std::size_t pos = 0; pos < index.size() && k > 0; ++pos) {
        if (!admitted.empty() && !admitted[pos]) {
            continue;
        }
        Scored s{dot(index.row(pos), query), pos};
        if (heap.size() < k) {
            heap.push_back(s);
            std::push_heap(heap.begin(), heap.end(), better);
        } else if (better(s, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), better);
            heap.back() = s;
            std::push_heap(heap.begin(), heap.end(), better);
        }
    }
    std::sort_heap(heap.begin(), heap.end(), better);

    std::vector<SearchHit> hits;
    hits.reserve(heap.size());
    for (const auto& s : heap) {
        hits.push_back({s.position, index.ids()[s.position], s.score});
    }
    return hits;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

template <typename T>
void put(std::string& out, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    void take(void* out, std::size_t n) {
        if (bytes_.size() - offset_ < n) {
            fail(ErrorKind::load, "index file is truncated");
        }
        std::memcpy(out, bytes_.data() + offset_, n);
        offset_ += n;
    }

    template <typename T>
    T get() {
        T value;
        take(&value, sizeof(T));
        return value;
    }

    std::string get_string() {
        const auto n = get<std::uint32_t>();
        std::string s(n, '\0');
        take(s.data(), n);
        return s;
    }

    void skip_to_alignment(std::size_t alignment) {
        const std::size_t pad = (alignment - offset_ % alignment) % alignment;
        std::string zeros(pad, '\0');
        take(zeros.data(), pad);
    }

    std::size_t remaining() const { return bytes_.size() - offset_; }

private:
    const std::string& bytes_;
    std::size_t offset_ = 0;
};

}  // namespace

void save_index(const DenseIndex& index, const std::filesystem::path& path) {
    std::string out;
    out.reserve(32 + index.matrix().size() * sizeof(float));
    out.append(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kIndexFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(index.dim()));
    put<std::uint64_t>(out, index.size());
    for (const auto& id : index.ids()) {
        put_string(out, id);
    }
    for (const auto& task : index.tasks()) {
        put_string(out, task);
    }
    out.append((kMatrixAlignment - out.size() % kMatrixAlignment) % kMatrixAlignment, '\0');
    out.append(reinterpret_cast<const char*>(index.matrix().data()), index.matrix().size() * sizeof(float));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
        if (!file) {
            fail(ErrorKind::precondition, "cannot open " + tmp.string() + " for writing");
        }
        file.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!file.flush()) {
            fail(ErrorKind::precondition, "failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

DenseIndex load_index(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        fail(ErrorKind::load, "cannot open index " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader in(bytes);

    std::array<char, 8> magic{};
    if (bytes.size() < magic.size()) {
        fail(ErrorKind::load, "index file is truncated");
    }
    in.take(magic.data(), magic.size());
    if (magic != kMagic) {
        fail(ErrorKind::version, path.string() + " is not a recross index file");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != kIndexFormatVersion) {
        fail(ErrorKind::version, "unsupported index format version " + std::to_string(version));
    }
    DenseIndex index;
    index.dim_ = in.get<std::uint32_t>();
    const auto rows = in.get<std::uint64_t>();
    // Each row needs at least two length prefixes; reject absurd counts before allocating.
    if (rows > in.remaining() / 8) {
        fail(ErrorKind::load, "index file is truncated");
    }
    index.ids_.reserve(rows);
    index.tasks_.reserve(rows);
    for (std::uint64_t i = 0; i < rows; ++i) {
        index.ids_.push_back(in.get_string());
    }
    for (std::uint64_t i = 0; i < rows; ++i) {
        index.tasks_.push_back(in.get_string());
    }
    in.skip_to_alignment(kMatrixAlignment);
    const std::size_t values = rows * index.dim_;
    if (in.remaining() < values * sizeof(float)) {
        fail(ErrorKind::load, "index file is truncated");
    }
    index.matrix_.resize(values);
    in.take(index.matrix_.data(), values * sizeof(float));
    if (in.remaining() != 0) {
        fail(ErrorKind::load, "index file has " + std::to_string(in.remaining()) + " trailing bytes");
    }
    if (rows > 0 && index.dim_ == 0) {
        fail(ErrorKind::load, "index file declares zero dimension");
    }
    return index;
}

}  // namespace recross
