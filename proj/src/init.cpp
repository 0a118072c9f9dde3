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

#include "resscale/init.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace resscale {

std::string to_string(Arch arch) {
    switch (arch) {
        case Arch::res1: return "res1";
        case Arch::res2: return "res2";
        case Arch::res3: return "res3";
    }
    return "?";
}

Arch parse_arch(const std::string& name) {
    if (name == "res1" || name == "res-1") return Arch::res1;
    if (name == "res2" || name == "res-2") return Arch::res2;
    if (name == "res3" || name == "res-3") return Arch::res3;
    throw std::invalid_argument("unknown architecture: " + name);
}

std::string to_string(Distribution dist) {
    switch (dist) {
        case Distribution::UniformScaled: return "uniform";
        case Distribution::GaussianScaled: return "gauss";
        case Distribution::Rademacher: return "rademacher";
    }
    return "?";
}

DistributionSpec::DistributionSpec(Distribution kind, int width) : kind_(kind), width_(width) {
    if (width < 1) throw std::invalid_argument("DistributionSpec: width must be >= 1");
}

void GPSpec::validate() const {
    if (!(lengthscale > 0.0)) throw std::invalid_argument("GPSpec: lengthscale must be > 0");
    if (!(variance >= 0.0)) throw std::invalid_argument("GPSpec: variance must be >= 0");
}

double GPSpec::kernel(double s, double t) const {
    const double r = s - t;
    return variance * std::exp(-r * r / (2.0 * lengthscale * lengthscale));
}

void FBMSpec::validate() const {
    if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("FBMSpec: hurst must lie in (0, 1)");
}

std::string describe(const InitScheme& scheme) {
    std::ostringstream out;
    out.precision(17);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidInit>) out << "iid-" << to_string(s.dist);
            else if constexpr (std::is_same_v<T, GPSpec>) out << "gp(l=" << s.lengthscale << ",v=" << s.variance << ")";
            else out << "fbm(H=" << s.hurst << ")";
        },
        scheme);
    return out.str();
}

double fgn_autocovariance(int lag, double hurst) {
    const double k = std::abs(static_cast<double>(lag));
    const double e = 2.0 * hurst;
    return 0.5 * (std::pow(k + 1.0, e) + std::pow(std::abs(k - 1.0), e) - 2.0 * std::pow(k, e));
}

Eigen::MatrixXd gp_covariance(int first, int last, int denom, const GPSpec& spec) {
    const int n = last - first + 1;
    Eigen::MatrixXd k(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            k(i, j) = spec.kernel(static_cast<double>(first + i) / denom, static_cast<double>(first + j) / denom);
    return k;
}

Eigen::MatrixXd fgn_covariance(int n, double hurst) {
    Eigen::VectorXd gamma(n);
    for (int k = 0; k < n; ++k) gamma(k) = fgn_autocovariance(k, hurst);
    Eigen::MatrixXd cov(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) cov(i, j) = gamma(std::abs(i - j));
    return cov;
}

CovarianceFactor dense_cholesky_factor(const Eigen::MatrixXd& cov) {
    const Eigen::Index n = cov.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), false};
    const double jitter = 1e-12 * cov.trace() / static_cast<double>(n);
    Eigen::MatrixXd bumped = cov;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() != Eigen::Success) throw std::runtime_error("covariance factorization failed after jitter");
    return {llt.matrixL(), true};
}

namespace {

template <class Key>
class FactorCache {
public:
    template <class Build>
    std::shared_ptr<const CovarianceFactor> get(const Key& key, Build&& build) {
        {
            std::lock_guard lock(mutex_);
            if (auto it = entries_.find(key); it != entries_.end()) return it->second;
        }
        auto made = std::make_shared<const CovarianceFactor>(build());
        std::lock_guard lock(mutex_);
        return entries_.try_emplace(key, std::move(made)).first->second;
    }

private:
    std::mutex mutex_;
    std::map<Key, std::shared_ptr<const CovarianceFactor>> entries_;
};

}  // namespace

std::shared_ptr<const CovarianceFactor> gp_factor(int first, int last, int denom, const GPSpec& spec) {
    spec.validate();
    if (last < first || denom < 1) throw std::invalid_argument("gp_factor: empty grid");
    static FactorCache<std::tuple<int, int, int, double, double>> cache;
    return cache.get({first, last, denom, spec.lengthscale, spec.variance}, [&] {
        const int n = last - first + 1;
        auto entry = [&](int i, int j) {
            return spec.kernel(static_cast<double>(first + i) / denom, static_cast<double>(first + j) / denom);
        };
        const double tolerance = 1e-12 * spec.variance;
        return CovarianceFactor{pivoted_cholesky(n, entry, tolerance), false};
    });
}

std::shared_ptr<const CovarianceFactor> fgn_factor(int n, double hurst) {
    FBMSpec{hurst}.validate();
    if (n < 1) throw std::invalid_argument("fgn_factor: length must be >= 1");
    static FactorCache<std::tuple<int, double>> cache;
    return cache.get({n, hurst}, [&] { return dense_cholesky_factor(fgn_covariance(n, hurst)); });
}

void fill_iid(const DistributionSpec& dist, Rng& rng, Eigen::Ref<Eigen::MatrixXd> out) {
    const double sd = std::sqrt(dist.variance());
    std::span<double> data(out.data(), static_cast<std::size_t>(out.size()));
    switch (dist.kind()) {
        case Distribution::UniformScaled: rng.fill_symmetric_uniform(data, std::sqrt(3.0) * sd); break;
        case Distribution::GaussianScaled: rng.fill_normal(data, sd); break;
        case Distribution::Rademacher: rng.fill_rademacher(data, sd); break;
    }
}

Eigen::MatrixXd sample_iid_matrix(const DistributionSpec& dist, Rng& rng) {
    Eigen::MatrixXd m(dist.width(), dist.width());
    fill_iid(dist, rng, m);
    return m;
}

Projections<double> sample_projections(const ModelSpec& model, Rng& rng) {
    Projections<double> proj;
    proj.a.resize(model.width, model.n_in);
    proj.b.resize(model.n_out, model.width);
    rng.fill_normal({proj.a.data(), static_cast<std::size_t>(proj.a.size())}, 1.0 / std::sqrt(model.n_in));
    rng.fill_normal({proj.b.data(), static_cast<std::size_t>(proj.b.size())}, 1.0 / std::sqrt(model.width));
    return proj;
}

Eigen::VectorXd sample_standard_normal(int size, Rng& rng) {
    Eigen::VectorXd x(size);
    rng.fill_normal({x.data(), static_cast<std::size_t>(x.size())}, 1.0);
    return x;
}

namespace {

Eigen::VectorXd apply_factor(const CovarianceFactor& f, Rng& rng) {
    Eigen::VectorXd z(f.rank());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return f.factor * z;
}

}  // namespace

Eigen::VectorXd sample_gp_path(int length, const GPSpec& spec, Rng& rng) {
    if (length < 1) throw std::invalid_argument("sample_gp_path: length must be >= 1");
    return apply_factor(*gp_factor(1, length, length, spec), rng);
}

Eigen::VectorXd sample_fgn(int length, const FBMSpec& spec, Rng& rng) {
    spec.validate();
    if (length < 1) throw std::invalid_argument("sample_fgn: length must be >= 1");
    return apply_factor(*fgn_factor(length, spec.hurst), rng);
}

namespace {

// Per-entry paths: column (i + j * width) holds the path of entry (i, j).
Eigen::MatrixXd entry_paths(const CovarianceFactor& f, int width, std::uint64_t seed, TapeStream stream) {
    const Eigen::Index entries = static_cast<Eigen::Index>(width) * width;
    Eigen::MatrixXd z(f.rank(), entries);
    for (int j = 0; j < width; ++j) {
        for (int i = 0; i < width; ++i) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(stream), static_cast<std::uint64_t>(i),
                                       static_cast<std::uint64_t>(j)}));
            auto col = z.col(i + static_cast<Eigen::Index>(j) * width);
            for (Eigen::Index r = 0; r < col.size(); ++r) col(r) = rng.normal();
        }
    }
    return f.factor * z;
}

std::vector<Eigen::MatrixXd> split_layers(const Eigen::MatrixXd& paths, int width, double scale) {
    std::vector<Eigen::MatrixXd> layers(static_cast<std::size_t>(paths.rows()));
    for (Eigen::Index k = 0; k < paths.rows(); ++k) {
        Eigen::RowVectorXd row = paths.row(k) * scale;
        layers[static_cast<std::size_t>(k)] = Eigen::Map<const Eigen::MatrixXd>(row.data(), width, width);
    }
    return layers;
}

}  // namespace

WeightTape<double> build_weight_tape(const ModelSpec& model, const InitScheme& scheme, std::uint64_t seed) {
    model.validate();
    const int d = model.width;
    const int depth = model.depth;
    const bool with_w = has_inner_weights(model.arch);

    WeightTape<double> tape;
    tape.scheme = describe(scheme);
    tape.seed = seed;

    if (const auto* iid = std::get_if<IidInit>(&scheme)) {
        const DistributionSpec dist(iid->dist, d);
        tape.v.resize(static_cast<std::size_t>(depth));
        if (with_w) tape.w.resize(static_cast<std::size_t>(depth));
        for (int k = 1; k <= depth; ++k) {
            Rng rv(derive_seed(seed, {static_cast<std::uint64_t>(TapeStream::V), static_cast<std::uint64_t>(k)}));
            tape.v[static_cast<std::size_t>(k - 1)] = sample_iid_matrix(dist, rv);
            if (with_w) {
                Rng rw(derive_seed(seed, {static_cast<std::uint64_t>(TapeStream::W), static_cast<std::uint64_t>(k)}));
                tape.w[static_cast<std::size_t>(k - 1)] = sample_iid_matrix(dist, rw);
            }
        }
        return tape;
    }

    std::shared_ptr<const CovarianceFactor> factor;
    double scale = 1.0;
    if (const auto* gp = std::get_if<GPSpec>(&scheme)) {
        factor = gp_factor(1, depth, depth, *gp);
    } else {
        const auto& fbm = std::get<FBMSpec>(scheme);
        factor = fgn_factor(depth, fbm.hurst);
        scale = 1.0 / std::sqrt(static_cast<double>(d));
    }
    tape.v = split_layers(entry_paths(*factor, d, seed, TapeStream::V), d, scale);
    if (with_w) tape.w = split_layers(entry_paths(*factor, d, seed, TapeStream::W), d, scale);
    return tape;
}

IidLayerStream::IidLayerStream(const ModelSpec& model, Distribution dist, std::uint64_t seed)
    : dist_(dist, model.width),
      depth_(model.depth),
      with_w_(has_inner_weights(model.arch)),
      seed_(seed),
      v_(model.width, model.width),
      w_(with_w_ ? model.width : 0, with_w_ ? model.width : 0) {
    model.validate();
}

LayerView<double> IidLayerStream::layer(int k) const {
    if (k < 1 || k > depth_) throw std::out_of_range("IidLayerStream: layer index out of range");
    if (k != current_) {
        Rng rv(derive_seed(seed_, {static_cast<std::uint64_t>(TapeStream::V), static_cast<std::uint64_t>(k)}));
        fill_iid(dist_, rv, v_);
        if (with_w_) {
            Rng rw(derive_seed(seed_, {static_cast<std::uint64_t>(TapeStream::W), static_cast<std::uint64_t>(k)}));
            fill_iid(dist_, rw, w_);
        }
        current_ = k;
    }
    return {v_, with_w_ ? &w_ : nullptr};
}

SmoothMatrixPath::SmoothMatrixPath(int width, int intervals, const GPSpec& spec, std::uint64_t seed,
                                   std::uint64_t stream)
    : width_(width), intervals_(intervals) {
    if (width < 1 || intervals < 1) throw std::invalid_argument("SmoothMatrixPath: width and intervals must be >= 1");
    factor_ = gp_factor(0, intervals, intervals, spec);
    const Eigen::Index entries = static_cast<Eigen::Index>(width) * width;
    coefficients_.resize(factor_->rank(), entries);
    for (int j = 0; j < width; ++j) {
        for (int i = 0; i < width; ++i) {
            Rng rng(derive_seed(seed, {stream, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
            auto col = coefficients_.col(i + static_cast<Eigen::Index>(j) * width);
            for (Eigen::Index r = 0; r < col.size(); ++r) col(r) = rng.normal();
        }
    }
}

void SmoothMatrixPath::node_into(int i, Eigen::MatrixXd& out) const {
    if (i < 0 || i > intervals_) throw std::out_of_range("SmoothMatrixPath: node out of range");
    out.resize(width_, width_);
    Eigen::Map<Eigen::RowVectorXd> flat(out.data(), out.size());
    flat.noalias() = factor_->factor.row(i) * coefficients_;
    if (shift_ != 0.0) out.diagonal().array() += shift_;
}

Eigen::MatrixXd SmoothMatrixPath::node(int i) const {
    Eigen::MatrixXd out;
    node_into(i, out);
    return out;
}

Eigen::MatrixXd SmoothMatrixPath::at(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("SmoothMatrixPath: t outside [0, 1]");
    const double x = t * intervals_;
    const int lo = std::min(static_cast<int>(std::floor(x)), intervals_);
    const double frac = x - lo;
    if (lo == intervals_ || frac == 0.0) return node(lo);
    return (1.0 - frac) * node(lo) + frac * node(lo + 1);
}

PathLayerSource::PathLayerSource(const SmoothMatrixPath& v, const SmoothMatrixPath* w, int depth)
    : vpath_(v), wpath_(w), depth_(depth), stride_(0) {
    if (depth < 1 || v.intervals() % depth != 0)
        throw std::invalid_argument("PathLayerSource: depth must divide the path's interval count");
    if (w && w->intervals() != v.intervals()) throw std::invalid_argument("PathLayerSource: mismatched path grids");
    stride_ = v.intervals() / depth;
}

LayerView<double> PathLayerSource::layer(int k) const {
    if (k < 1 || k > depth_) throw std::out_of_range("PathLayerSource: layer index out of range");
    if (k != current_) {
        vpath_.node_into(k * stride_, v_);
        if (wpath_) wpath_->node_into(k * stride_, w_);
        current_ = k;
    }
    return {v_, wpath_ ? &w_ : nullptr};
}

}  // namespace resscale
