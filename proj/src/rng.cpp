// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/rng.hpp"

#include <cmath>
#include <numbers>

namespace recross {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    // Largest multiple of bound that fits; draws above it are rejected.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = next();
    while (draw >= limit) {
        draw = next();
    }
    return draw % bound;
}

double Rng::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t population, std::size_t count) {
    std::vector<std::size_t> pool(population);
    for (std::size_t i = 0; i < population; ++i) {
        pool[i] = i;
    }
    // Partial Fisher-Yates from the front.
    const std::size_t n = std::min(count, population);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(below(population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

}  // namespace recross
