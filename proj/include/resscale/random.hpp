/*
 * Copyright 2026 The resscale Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>

namespace resscale {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer (Stafford mix 13). Full 64-bit avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and an index path.
/// Each index is absorbed with its position so (i, k) and (k, i) differ.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::span<const std::uint64_t> indices) noexcept {
    std::uint64_t h = mix64(master + kGoldenGamma);
    std::uint64_t pos = 1;
    for (std::uint64_t idx : indices) {
        h = mix64(h ^ mix64(idx + pos * kGoldenGamma));
        h += kGoldenGamma;
        ++pos;
    }
    return mix64(h);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> indices) noexcept {
    return derive_seed(master, std::span<const std::uint64_t>(indices.begin(), indices.size()));
}

/// Maps the top 53 bits to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/**
 * SplitMix64 generator. The k-th output is mix64(seed + k * gamma), so a
 * block of outputs can be produced without a serial dependency (see fill_*).
 * Gaussian variates use the Box-Muller transform and cache the
 * second value of each pair.
 */
class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    constexpr double uniform() noexcept { return to_unit(next()); }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the log finite.
        const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        const double u2 = to_unit(next());
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Fills out[i] = scale * (2u - 1) with u uniform on [0, 1).
    void fill_symmetric_uniform(std::span<double> out, double scale) noexcept {
        const std::uint64_t base = state_;
        const std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double u = to_unit(mix64(base + (i + 1) * kGoldenGamma));
            out[i] = scale * (2.0 * u - 1.0);
        }
        state_ = base + n * kGoldenGamma;
    }

    /// Fills out[i] = +scale or -scale with equal probability.
    void fill_rademacher(std::span<double> out, double scale) noexcept {
        const std::uint64_t base = state_;
        const std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t bits = mix64(base + (i + 1) * kGoldenGamma);
            out[i] = (bits >> 63) ? scale : -scale;
        }
        state_ = base + n * kGoldenGamma;
    }

    void fill_normal(std::span<double> out, double scale) noexcept {
        for (double& x : out) x = scale * normal();
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace resscale
