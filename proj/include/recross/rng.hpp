// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace recross {

/// 64-bit FNV-1a. Used wherever a stable, platform-independent hash of text is needed.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    Fnv1a64& update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= kPrime;
        }
        return *this;
    }

    /// Little-endian encoding of the integer, so hashes agree across hosts.
    Fnv1a64& update(std::uint64_t value) noexcept {
        for (int i = 0; i < 8; ++i) {
            state_ ^= static_cast<unsigned char>(value >> (8 * i));
            state_ *= kPrime;
        }
        return *this;
    }

    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeded generator whose output sequence is identical on every standard library.
///
/// std::shuffle and the std distributions are implementation-defined, so golden
/// files would drift between toolchains; only the raw mt19937_64 stream is pinned
/// by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform real in [0, 1) with 53 bits of precision.
    double uniform();

    /// Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// `count` distinct indices from [0, population), in sampling order.
    std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count);

private:
    std::mt19937_64 engine_;
};

}  // namespace recross
