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

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace resscale {

enum class Quantity { output_ratio, output_norm_ratio, gradient_ratio, gradient_norm_ratio };

std::string to_string(Quantity q);

/// Network, weight scheme and depth scaling shared by every trial.
struct MonteCarloConfig {
    ModelSpec model;
    InitScheme scheme = IidInit{};
    ScalingRule rule = ScalingRule::from_beta(0.5);
};

std::string describe(const MonteCarloConfig& config);
/// 16 hex digits of a 64-bit FNV-1a hash.
std::string fingerprint(std::string_view text);

/// Per-trial inputs derived from (master seed, trial index).
struct TrialInputs {
    std::uint64_t tape_seed = 0;
    Projections<double> proj;
    Eigen::VectorXd x;
    Eigen::VectorXd target;
};

TrialInputs trial_inputs(const ModelSpec& model, std::uint64_t master_seed, int trial);

/// One value per trial; +inf marks a trial whose pass overflowed.
struct RatioSample {
    Quantity quantity = Quantity::output_ratio;
    std::string fingerprint;
    std::vector<double> values;

    int trials() const { return static_cast<int>(values.size()); }
    int overflow_count() const;
    std::vector<double> finite_values() const;
};

struct RatioSet {
    RatioSample output_ratio;
    RatioSample output_norm_ratio;
    std::optional<RatioSample> gradient_ratio;
    std::optional<RatioSample> gradient_norm_ratio;

    const RatioSample& get(Quantity q) const;
};

/// Runs `trials` independent trials; results are ordered by trial index and
/// do not depend on `workers`.
RatioSet monte_carlo(const MonteCarloConfig& config, int trials, std::uint64_t seed, bool gradients, int workers = 1);

RatioSample monte_carlo_ratios(const MonteCarloConfig& config, Quantity quantity, int trials, std::uint64_t seed,
                               int workers = 1);

enum class BoundStatus { pass, fail, not_applicable };

std::string to_string(BoundStatus s);

/**
 * Expectation checks pass when lower - 3 SE <= statistic <= upper + 3 SE.
 * Coverage checks store the nominal level 1 - delta in `lower`, the observed
 * fraction in `statistic` and the binomial SE at the nominal level in
 * `std_error`; they pass when statistic >= lower - 3 SE.
 */
struct BoundReport {
    std::string id;
    double lower = 0.0;
    double upper = 0.0;
    double statistic = 0.0;
    double std_error = 0.0;
    int trials = 0;
    int overflow = 0;
    BoundStatus status = BoundStatus::not_applicable;
    std::string note;

    bool passed() const { return status == BoundStatus::pass; }
};

/// Applies the 3 SE slack around [lower, upper].
BoundStatus expectation_status(double statistic, double std_error, double lower, double upper);

/// Mean of ||h_L - h_0||^2 / ||h_0||^2 against [(1 + a^2/2)^L - 1, (1 + a^2)^L - 1].
BoundReport check_expectation_bracket(const MonteCarloConfig& config, int trials, std::uint64_t seed, int workers = 1);
BoundReport expectation_bracket_report(const MonteCarloConfig& config, const RatioSample& output_ratio);

enum class HighProbBound { automatic, identity, critical };

/**
 * Coverage of the high-probability bounds on ||h_L - h_0||^2 / ||h_0||^2.
 * identity (L a^2 <= 1): ratio^2 <= 2 L a^2 / delta.
 * critical (beta = 1/2): exp(3/8 - sqrt(22/(d delta))) - 1 < ratio^2 < exp(1 + sqrt(10/(d delta))) + 1,
 * requiring d >= 64 and 2 L exp(-L d / 64) <= delta / 11 (s = 1). The
 * depth condition involving the moment constant C is not checked.
 * automatic picks critical for beta = 1/2, identity when L a^2 <= 1.
 */
BoundReport check_highprob_bounds(const MonteCarloConfig& config, int trials, std::uint64_t seed, double delta,
                                  HighProbBound bound = HighProbBound::automatic, int workers = 1);
BoundReport highprob_report(const MonteCarloConfig& config, const RatioSample& output_ratio, double delta,
                            HighProbBound bound = HighProbBound::automatic);

/// Mean of ||p_0 - p_L||^2 / ||p_L||^2. For beta = 1/2 the bracket is
/// [e^(1/2) - 1, e^4 - 1], otherwise [(1 + a^2/2)^L - 1, (1 + a^2)^L - 1].
BoundReport check_gradient_bracket(const MonteCarloConfig& config, int trials, std::uint64_t seed, int workers = 1);
BoundReport gradient_bracket_report(const MonteCarloConfig& config, const RatioSample& gradient_ratio);

/// D'Agostino-Pearson test on log(values) over the finite entries. Needs at
/// least 100 of them; throws std::domain_error on nonpositive values.
struct LognormalityResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n = 0;
};

LognormalityResult lognormality_test(std::span<const double> values);
LognormalityResult lognormality_test(const RatioSample& sample);

enum class Regime { identity, critical, explosion };

std::string to_string(Regime r);
/// -1 identity, 0 critical, +1 explosion.
int regime_code(Regime r);

struct RegimeThresholds {
    double identity_below = -1.0;
    double explosion_above = 1.0;
};

struct RegimeLabel {
    Regime label = Regime::critical;
    double median_log10 = 0.0;
    RegimeThresholds thresholds;
};

Regime regime_of(double median_log10, const RegimeThresholds& t = {});

/// Median of log10 ratios with overflowed trials counted as +inf. Needs >= 30 trials.
RegimeLabel classify_regime(const RatioSample& sample, const RegimeThresholds& t = {});

struct HeatmapOptions {
    ModelSpec model{Arch::res3, 40, 1000, 1.0, 64, 1};
    std::vector<double> hursts;
    std::vector<double> betas;
    int trials = 30;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Rows follow hursts, columns follow betas. Medians may be +inf when more
/// than half the cell's trials overflowed.
struct HeatmapGrid {
    std::vector<double> hursts;
    std::vector<double> betas;
    Eigen::MatrixXd output_log10;
    Eigen::MatrixXd gradient_log10;
    Eigen::MatrixXi overflow;
    int trials = 0;
};

/// One fBm tape per (H, trial), reused across every beta of the row.
HeatmapGrid heatmap_sweep(const HeatmapOptions& opts);

/// First beta where a decreasing row crosses zero, linearly interpolated.
std::optional<double> zero_crossing(std::span<const double> betas, std::span<const double> values);

/// Monte-Carlo checks of the architecture and weight-law assumptions:
/// g-energy bracket, ReLU halving, second moment of Wx, linear-form tail.
BoundReport check_g_energy(const ModelSpec& model, Distribution dist, int trials, std::uint64_t seed);
BoundReport check_relu_halving(int width, Distribution dist, int trials, std::uint64_t seed);
BoundReport check_second_moment(int width, Distribution dist, int trials, std::uint64_t seed);
BoundReport check_linear_tail(int width, Distribution dist, double t, int trials, std::uint64_t seed);
std::vector<BoundReport> check_assumption_suite(const ModelSpec& model, Distribution dist, int trials,
                                                std::uint64_t seed);

/// Pooled lag-1 autocorrelation of unit-variance fGn against 0 +- 3/sqrt(N)
/// at H = 1/2; for other H the target is the exact autocovariance.
BoundReport check_fgn_autocorrelation(double hurst, int length, int paths, std::uint64_t seed);

}  // namespace resscale
