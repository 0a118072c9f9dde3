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

#include "resscale/descriptive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace resscale {

double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean: empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("variance: need at least two values");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double standard_error(std::span<const double> x) {
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || x[lo] == x[hi]) return x[lo];
    if (std::isinf(x[lo])) return x[lo];
    if (std::isinf(x[hi])) return x[hi];
    return x[lo] + frac * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double pooled_autocorrelation(const Eigen::MatrixXd& sequences, int lag) {
    const Eigen::Index n = sequences.rows();
    if (lag < 0 || lag >= n) throw std::invalid_argument("pooled_autocorrelation: bad lag");
    const double c0 = sequences.squaredNorm();
    const double ck = (sequences.topRows(n - lag).array() * sequences.bottomRows(n - lag).array()).sum();
    const double pairs = static_cast<double>((n - lag) * sequences.cols());
    const double points = static_cast<double>(n * sequences.cols());
    return (ck / pairs) / (c0 / points);
}

NormalityTest dagostino_pearson(std::span<const double> x) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 20) throw std::invalid_argument("dagostino_pearson: need at least 20 values");
    const double m = mean(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double c = v - m;
        const double c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw std::invalid_argument("dagostino_pearson: zero variance");
    const double b1 = m3 / std::pow(m2, 1.5);
    const double b2 = m4 / (m2 * m2);

    NormalityTest out;
    {
        const double y = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
        const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                             ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
        const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
        const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
        const double alpha = std::sqrt(2.0 / (w2 - 1.0));
        const double ya = y / alpha;
        out.skew_z = delta * std::log(ya + std::sqrt(ya * ya + 1.0));
    }
    {
        const double e = 3.0 * (n - 1.0) / (n + 1.0);
        const double var = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
        const double xs = (b2 - e) / std::sqrt(var);
        const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                                  std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
        const double a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
        const double term1 = 1.0 - 2.0 / (9.0 * a);
        const double denom = 1.0 + xs * std::sqrt(2.0 / (a - 4.0));
        const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
        out.kurtosis_z = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
    }
    out.statistic = out.skew_z * out.skew_z + out.kurtosis_z * out.kurtosis_z;
    out.p_value = std::exp(-0.5 * out.statistic);
    return out;
}

namespace {

std::vector<double> ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman_rho: need paired samples");
    return pearson(ranks(x), ranks(y));
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

TrendTest spearman_trend(std::span<const double> x, std::span<const double> y) {
    TrendTest out;
    out.rho = spearman_rho(x, y);
    const std::size_t n = x.size();
    constexpr double eps = 1e-12;
    if (n <= 10) {
        const std::vector<double> rx = ranks(x);
        std::vector<double> ry = ranks(y);
        std::sort(ry.begin(), ry.end());
        std::size_t below = 0, above = 0, total = 0;
        do {
            const double r = pearson(rx, ry);
            if (r <= out.rho + eps) ++below;
            if (r >= out.rho - eps) ++above;
            ++total;
        } while (std::next_permutation(ry.begin(), ry.end()));
        out.p_decreasing = static_cast<double>(below) / static_cast<double>(total);
        out.p_increasing = static_cast<double>(above) / static_cast<double>(total);
    } else {
        const double z = out.rho * std::sqrt(static_cast<double>(n) - 1.0);
        out.p_decreasing = 1.0 - normal_sf(z);
        out.p_increasing = normal_sf(z);
    }
    return out;
}

LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares_line: need paired samples");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares_line: degenerate abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

}  // namespace resscale
