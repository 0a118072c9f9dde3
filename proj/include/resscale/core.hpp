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

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <numbers>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace resscale {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// res1: V sigma(h); res2: V sigma(W h); res3: V ReLU(W h).
enum class Arch { res1, res2, res3 };

std::string to_string(Arch arch);
Arch parse_arch(const std::string& name);

inline bool has_inner_weights(Arch arch) { return arch != Arch::res1; }

struct ModelSpec {
    Arch arch = Arch::res3;
    int width = 40;
    int depth = 1000;
    /// Negative-side slope of the parametric ReLU used by res1/res2.
    double slope = 1.0;
    int n_in = 64;
    int n_out = 1;

    void validate() const {
        if (width < 1) throw std::invalid_argument("ModelSpec: width must be >= 1");
        if (depth < 1) throw std::invalid_argument("ModelSpec: depth must be >= 1");
        if (n_in < 1) throw std::invalid_argument("ModelSpec: n_in must be >= 1");
        if (n_out < 1) throw std::invalid_argument("ModelSpec: n_out must be >= 1");
        if (!(slope >= 1.0 / std::numbers::sqrt2 - 1e-15 && slope <= 1.0))
            throw std::invalid_argument("ModelSpec: slope must lie in [1/sqrt(2), 1]");
    }
};

/// alpha_L = L^-beta, or a fixed multiplier.
class ScalingRule {
public:
    static ScalingRule from_beta(double beta) {
        if (!(beta > 0.0)) throw std::invalid_argument("ScalingRule: beta must be > 0");
        return ScalingRule(beta, 0.0);
    }
    static ScalingRule fixed(double alpha) {
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw std::invalid_argument("ScalingRule: alpha must be finite and >= 0");
        return ScalingRule(std::nullopt, alpha);
    }

    double alpha(int depth) const { return beta_ ? std::pow(static_cast<double>(depth), -*beta_) : alpha_; }
    std::optional<double> beta() const { return beta_; }

private:
    ScalingRule(std::optional<double> beta, double alpha) : beta_(beta), alpha_(alpha) {}
    std::optional<double> beta_;
    double alpha_;
};

/// Input embedding A and linear readout B.
template <class Scalar>
struct Projections {
    MatrixX<Scalar> a;  // width x n_in
    MatrixX<Scalar> b;  // n_out x width
};

/// First non-finite state (1-based layer index, 0 for the embedding).
struct Overflow {
    int layer = 0;
};

template <class Scalar>
struct LayerView {
    const MatrixX<Scalar>& v;
    const MatrixX<Scalar>* w;  // null for res1
};

/// Anything that hands out per-layer weights for k = 1..depth().
template <class T>
concept LayerSource = requires(const T& t, int k) {
    { t.depth() } -> std::convertible_to<int>;
    t.layer(k);
};

/// Materialized per-layer weights V_1..V_L (and W_1..W_L for res2/res3).
template <class Scalar>
struct WeightTape {
    std::vector<MatrixX<Scalar>> v;
    std::vector<MatrixX<Scalar>> w;
    std::string scheme;
    std::uint64_t seed = 0;

    int depth() const { return static_cast<int>(v.size()); }
    bool has_w() const { return !w.empty(); }
    LayerView<Scalar> layer(int k) const {
        return {v[static_cast<std::size_t>(k - 1)], has_w() ? &w[static_cast<std::size_t>(k - 1)] : nullptr};
    }
};

}  // namespace resscale
