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

#include <span>
#include <vector>

namespace resscale {

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);
/// Standard error of the mean.
double standard_error(std::span<const double> x);

/// Linear-interpolation quantile (numpy's default), q in [0, 1].
double quantile(std::vector<double> x, double q);
double median(std::vector<double> x);

/// Sample autocorrelation at a lag, pooled over sequences (columns), using
/// the known mean zero.
double pooled_autocorrelation(const Eigen::MatrixXd& sequences, int lag);

struct NormalityTest {
    double skew_z = 0.0;
    double kurtosis_z = 0.0;
    double statistic = 0.0;  // K^2 = skew_z^2 + kurtosis_z^2
    double p_value = 1.0;
};

/// D'Agostino-Pearson omnibus test: skewness (D'Agostino 1970) and kurtosis
/// (Anscombe-Glynn 1983) z-scores combined into a chi-square(2) statistic.
NormalityTest dagostino_pearson(std::span<const double> x);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct TrendTest {
    double rho = 0.0;
    double p_decreasing = 1.0;  // one-sided P(rho <= observed) under independence
    double p_increasing = 1.0;
};

/// Exact permutation null for n <= 10, normal approximation above.
TrendTest spearman_trend(std::span<const double> x, std::span<const double> y);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

double normal_sf(double z);

}  // namespace resscale
