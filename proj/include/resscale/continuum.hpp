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

#include "resscale/core.hpp"
#include "resscale/init.hpp"
#include "resscale/model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace resscale {

/**
 * Matrix Brownian increments on a fine grid of coarse_steps * refinement
 * steps over [0, 1]. The coarse increments are drawn first and refined by
 * Brownian-bridge splitting (X -> X/2 + Y, X/2 - Y with Y ~ N(0, dt/4)),
 * one stream per level, so refinement 2m extends the grid at refinement m.
 * Coarse increments are always formed by summing fine ones.
 */
class BrownianGrid {
public:
    static BrownianGrid sample(int width, int coarse_steps, int refinement, std::uint64_t seed);

    int width() const { return width_; }
    int coarse_steps() const { return coarse_steps_; }
    int refinement() const { return refinement_; }
    int fine_steps() const { return static_cast<int>(fine_.cols()); }

    Eigen::Map<const Eigen::MatrixXd> fine_increment(int j) const;
    Eigen::MatrixXd coarse_increment(int k) const;

    std::vector<Eigen::MatrixXd> fine_increments() const;
    std::vector<Eigen::MatrixXd> coarse_increments() const;

private:
    int width_ = 0;
    int coarse_steps_ = 0;
    int refinement_ = 1;
    Eigen::MatrixXd fine_;  // (width^2) x fine_steps, column-major d x d blocks
};

/// Diffusion coefficient sigma: parametric ReLU or identically zero.
struct Activation {
    double slope = 1.0;
    bool zero = false;

    static Activation prelu(double s) { return {s, false}; }
    static Activation none() { return {0.0, true}; }

    Eigen::VectorXd apply(const Eigen::VectorXd& h) const {
        if (zero) return Eigen::VectorXd::Zero(h.size());
        return prelu_values(h);
    }

private:
    Eigen::VectorXd prelu_values(const Eigen::VectorXd& h) const {
        return h.unaryExpr([s = slope](double v) { return v > 0.0 ? v : s * v; });
    }
};

/// h_{k+1} = h_k + sqrt(2/d) dB_k^T sigma(h_k), i.e. the row form
/// h^T <- h^T + sqrt(2/d) sigma(h^T) dB_k.
Trajectory<double> euler_maruyama_res1(const Activation& sigma, const std::vector<Eigen::MatrixXd>& increments,
                                       const Eigen::VectorXd& h0);

struct RateFit {
    std::vector<int> depths;
    std::vector<double> errors;      // mean terminal error per depth
    std::vector<double> std_errors;  // its Monte-Carlo standard error
    std::optional<double> slope;     // empty when the fit is degenerate
    std::optional<double> intercept;
    bool degenerate = false;
};

/// Least-squares log-log fit; degenerate (no slope) if any error is zero.
RateFit fit_rate(std::vector<int> depths, std::vector<double> errors, std::vector<double> std_errors);

struct SdeErrorOptions {
    int width = 10;
    std::vector<int> depths{8, 16, 32, 64, 128, 256, 512};
    int refinement = 32;
    int trials = 200;
    std::uint64_t seed = 0;
    Activation sigma = Activation::prelu(1.0 / std::numbers::sqrt2);
    int workers = 1;
};

/// Coarse Euler-Maruyama at L steps against the same Brownian path resolved
/// at L * refinement steps; mean terminal error per depth and fitted slope.
RateFit strong_error_sde(const SdeErrorOptions& opts);

/**
 * Explicit Euler with step 1/N for dH = V_t g(H, Theta_t) dt. Weights are
 * read at the right end of each step, so with N = L and V_k = V(k / L) the
 * scheme coincides with the residual recurrence at alpha = 1/L.
 */
template <class VPath, class WPath = VPath>
Trajectory<double> ode_integrate(const ModelSpec& model, const VPath& v, const WPath* w, const Eigen::VectorXd& h0,
                                 int steps) {
    if (steps < 1) throw std::invalid_argument("ode_integrate: steps must be >= 1");
    if (has_inner_weights(model.arch) && !w) throw std::invalid_argument("ode_integrate: res2/res3 need a W path");
    Trajectory<double> traj;
    traj.alpha = 1.0 / steps;
    traj.states.resize(h0.size(), steps + 1);
    traj.states.col(0) = h0;
    for (int j = 0; j < steps; ++j) {
        const double t = static_cast<double>(j + 1) / steps;
        const Eigen::MatrixXd vt = v.at(t);
        Eigen::MatrixXd wt;
        if (w) wt = w->at(t);
        const LayerView<double> layer{vt, w ? &wt : nullptr};
        const Eigen::VectorXd g = g_apply<double>(model, traj.states.col(j), layer);
        traj.states.col(j + 1) = traj.states.col(j) + traj.alpha * (vt * g);
        if (!traj.states.col(j + 1).allFinite()) {
            traj.overflow = Overflow{j + 1};
            return traj;
        }
    }
    return traj;
}

/// Smooth weight paths for one trial on the grid {i / intervals}.
struct SmoothPaths {
    SmoothMatrixPath v;
    std::optional<SmoothMatrixPath> w;
};

SmoothPaths sample_smooth_paths(const ModelSpec& model, const GPSpec& gp, int intervals, std::uint64_t seed);

struct OdeErrorOptions {
    ModelSpec model{Arch::res3, 10, 1024, 1.0, 64, 1};
    GPSpec gp{};
    std::vector<int> depths{16, 32, 64, 128, 256, 512, 1024};
    int reference_steps = 65536;
    int trials = 20;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Per-trial seeds used by ode_error_vs_depth (paths and initial state).
std::uint64_t ode_trial_seed(std::uint64_t seed, int trial);
Eigen::VectorXd ode_initial_state(const ModelSpec& model, std::uint64_t trial_seed);

/// Reference Euler at reference_steps on the realized smooth path; coarse
/// residual network at alpha = 1/L reading the same path at k / L.
RateFit ode_error_vs_depth(const OdeErrorOptions& opts);

struct SmoothProbeOptions {
    ModelSpec model{Arch::res3, 40, 10000, 1.0, 64, 1};
    GPSpec gp{};
    double beta = 1.0;
    std::vector<int> depths{100, 200, 500, 1000, 2000, 5000, 10000};
    int trials = 20;
    std::uint64_t seed = 0;
    /// When set: linear res1 with V_t = mu I + GP path, reporting max_k ratios.
    std::optional<double> explosion_shift;
    int workers = 1;
};

struct SmoothProbeResult {
    std::vector<int> depths;
    Eigen::MatrixXd ratios;  // trials x depths; +inf on overflow
    std::vector<double> medians;
};

/// ||h_L - h_0|| / ||h_0|| (or max_k in explosion mode) across depths, each
/// trial reading one realized path at every depth. Depths must divide the largest.
SmoothProbeResult smooth_regime_probe(const SmoothProbeOptions& opts);

}  // namespace resscale
