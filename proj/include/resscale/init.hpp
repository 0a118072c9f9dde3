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
#include "resscale/random.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>
#include <variant>

namespace resscale {

enum class Distribution { UniformScaled, GaussianScaled, Rademacher };

std::string to_string(Distribution dist);

/// Entry law with mean 0 and variance exactly 1/width.
class DistributionSpec {
public:
    DistributionSpec(Distribution kind, int width);

    Distribution kind() const { return kind_; }
    int width() const { return width_; }
    double variance() const { return 1.0 / width_; }
    /// Sub-Gaussian constant of sqrt(width) * entry. All three laws have s = 1.
    double subgaussian_s() const { return 1.0; }

private:
    Distribution kind_;
    int width_;
};

/// Squared-exponential Gaussian process over layer fraction t in [0, 1].
struct GPSpec {
    double lengthscale = 0.1;
    double variance = 1e-2;

    void validate() const;
    double kernel(double s, double t) const;
};

/// Fractional Gaussian noise with unit marginal variance.
struct FBMSpec {
    double hurst = 0.5;

    void validate() const;
};

struct IidInit {
    Distribution dist = Distribution::UniformScaled;
};

using InitScheme = std::variant<IidInit, GPSpec, FBMSpec>;

std::string describe(const InitScheme& scheme);

/// fGn autocovariance at integer lag k, unit variance at lag 0.
double fgn_autocovariance(int lag, double hurst);

/// Squared-exponential covariance on the grid {t_i = i / denom : i = first..last}.
Eigen::MatrixXd gp_covariance(int first, int last, int denom, const GPSpec& spec);

/// Toeplitz fGn covariance of size n x n.
Eigen::MatrixXd fgn_covariance(int n, double hurst);

/**
 * Factor F with covariance ~= F F^T.
 *
 * fGn uses a dense Cholesky factor (n x n). The squared-exponential kernel is
 * numerically low rank on fine grids, so it uses a pivoted partial Cholesky
 * that stops once every residual diagonal entry falls below the jitter level
 * 1e-12 * trace / n; the neglected remainder is PSD with entries below it.
 */
struct CovarianceFactor {
    Eigen::MatrixXd factor;
    bool jittered = false;

    int points() const { return static_cast<int>(factor.rows()); }
    int rank() const { return static_cast<int>(factor.cols()); }
};

/// Cached per (grid, lengthscale, variance). Thread-safe; results are immutable.
std::shared_ptr<const CovarianceFactor> gp_factor(int first, int last, int denom, const GPSpec& spec);

/// Cached per (n, hurst). Thread-safe; results are immutable.
std::shared_ptr<const CovarianceFactor> fgn_factor(int n, double hurst);

/// Factor a dense symmetric matrix, adding 1e-12 * trace / n to the diagonal
/// once if the plain Cholesky fails. Throws std::runtime_error otherwise.
CovarianceFactor dense_cholesky_factor(const Eigen::MatrixXd& cov);

/// Low-rank pivoted Cholesky of a PSD matrix given through its entries.
template <class Entry>
Eigen::MatrixXd pivoted_cholesky(int n, Entry&& entry, double tolerance);

Eigen::MatrixXd sample_iid_matrix(const DistributionSpec& dist, Rng& rng);

/// Fills an existing width x width block in column-major order.
void fill_iid(const DistributionSpec& dist, Rng& rng, Eigen::Ref<Eigen::MatrixXd> out);

/// GP values at t = k / L, k = 1..L.
Eigen::VectorXd sample_gp_path(int length, const GPSpec& spec, Rng& rng);

/// Unit-variance fGn increments of length L.
Eigen::VectorXd sample_fgn(int length, const FBMSpec& spec, Rng& rng);

/// A ~ N(0, 1/n_in) entries, B ~ N(0, 1/width) entries.
Projections<double> sample_projections(const ModelSpec& model, Rng& rng);

/// Standard Gaussian vector.
Eigen::VectorXd sample_standard_normal(int size, Rng& rng);

/// Stream labels mixed into derive_seed for tape entries.
enum class TapeStream : std::uint64_t { V = 1, W = 2 };

/**
 * IID: layer k's V (resp. W) comes from stream derive_seed(seed, {V|W, k}).
 * GP: entry (i, j) of V is an independent path at k / L, stream
 * derive_seed(seed, {V|W, i, j}). FBM: same per-entry streams, unit-variance
 * fGn scaled by 1 / sqrt(width).
 */
WeightTape<double> build_weight_tape(const ModelSpec& model, const InitScheme& scheme, std::uint64_t seed);

/// Generates the layers of an IID tape on demand, bit-identical to
/// build_weight_tape. Intended for sequential access by the forward pass.
class IidLayerStream {
public:
    IidLayerStream(const ModelSpec& model, Distribution dist, std::uint64_t seed);

    int depth() const { return depth_; }
    LayerView<double> layer(int k) const;

private:
    DistributionSpec dist_;
    int depth_;
    bool with_w_;
    std::uint64_t seed_;
    mutable int current_ = 0;
    mutable Eigen::MatrixXd v_;
    mutable Eigen::MatrixXd w_;
};

/**
 * A d x d matrix-valued GP path sampled on {i / n : i = 0..n}, kept in
 * factored form (values = factor * coefficients) so long paths stay cheap.
 * Evaluation between grid nodes is piecewise linear.
 */
class SmoothMatrixPath {
public:
    SmoothMatrixPath(int width, int intervals, const GPSpec& spec, std::uint64_t seed, std::uint64_t stream);

    int width() const { return width_; }
    int intervals() const { return intervals_; }
    /// Value at node i (t = i / n), plus shift * I.
    Eigen::MatrixXd node(int i) const;
    void node_into(int i, Eigen::MatrixXd& out) const;
    Eigen::MatrixXd at(double t) const;

    void set_shift(double mu) { shift_ = mu; }

private:
    int width_;
    int intervals_;
    double shift_ = 0.0;
    std::shared_ptr<const CovarianceFactor> factor_;
    Eigen::MatrixXd coefficients_;  // rank x width^2
};

/// Tape of depth L reading V_k = path(k / L) (and W_k likewise). L must divide
/// the path's interval count.
class PathLayerSource {
public:
    PathLayerSource(const SmoothMatrixPath& v, const SmoothMatrixPath* w, int depth);

    int depth() const { return depth_; }
    LayerView<double> layer(int k) const;

private:
    const SmoothMatrixPath& vpath_;
    const SmoothMatrixPath* wpath_;
    int depth_;
    int stride_;
    mutable int current_ = 0;
    mutable Eigen::MatrixXd v_;
    mutable Eigen::MatrixXd w_;
};

template <class Entry>
Eigen::MatrixXd pivoted_cholesky(int n, Entry&& entry, double tolerance) {
    Eigen::VectorXd diag(n);
    for (int i = 0; i < n; ++i) diag(i) = entry(i, i);
    std::vector<Eigen::VectorXd> columns;
    Eigen::VectorXd col(n);
    while (static_cast<int>(columns.size()) < n) {
        Eigen::Index pivot = 0;
        const double largest = diag.maxCoeff(&pivot);
        if (!(largest > tolerance)) break;
        const int p = static_cast<int>(pivot);
        for (int i = 0; i < n; ++i) col(i) = entry(i, p);
        for (const auto& prev : columns) col -= prev(p) * prev;
        col /= std::sqrt(largest);
        diag -= col.cwiseAbs2();
        diag(p) = 0.0;
        columns.push_back(col);
    }
    Eigen::MatrixXd factor(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) factor.col(static_cast<Eigen::Index>(c)) = columns[c];
    return factor;
}

}  // namespace resscale
