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

#include "resscale/continuum.hpp"

#include "resscale/descriptive.hpp"
#include "resscale/parallel.hpp"
#include "resscale/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace resscale {

namespace {

enum class ProbeStream : std::uint64_t { Paths = 1, Projections = 2, Input = 3, Initial = 4 };

std::uint64_t sub(std::uint64_t seed, ProbeStream s) { return derive_seed(seed, {static_cast<std::uint64_t>(s)}); }

// Row-form Euler-Maruyama step on raw d x d increment blocks.
template <class Increment>
Trajectory<double> euler_maruyama(const Activation& sigma, int steps, Increment&& increment,
                                  const Eigen::VectorXd& h0) {
    const Eigen::Index d = h0.size();
    const double scale = std::sqrt(2.0 / static_cast<double>(d));
    Trajectory<double> traj;
    traj.alpha = scale;
    traj.states.resize(d, steps + 1);
    traj.states.col(0) = h0;
    Eigen::VectorXd s(d);
    for (int k = 0; k < steps; ++k) {
        const auto db = increment(k);
        if (db.rows() != d || db.cols() != d) throw std::invalid_argument("euler_maruyama_res1: increment has wrong shape");
        s = sigma.apply(traj.states.col(k));
        traj.states.col(k + 1) = traj.states.col(k);
        traj.states.col(k + 1).noalias() += scale * (db.transpose() * s);
        if (!traj.states.col(k + 1).allFinite()) {
            traj.overflow = Overflow{k + 1};
            return traj;
        }
    }
    return traj;
}

void check_depths(const std::vector<int>& depths, const char* who) {
    if (depths.size() < 4) throw std::invalid_argument(std::string(who) + ": at least 4 depths are required");
    for (std::size_t i = 0; i < depths.size(); ++i) {
        if (depths[i] < 1) throw std::invalid_argument(std::string(who) + ": depths must be >= 1");
        if (i > 0 && depths[i] <= depths[i - 1]) throw std::invalid_argument(std::string(who) + ": depths must increase");
    }
}

RateFit summarize(const std::vector<int>& depths, const Eigen::MatrixXd& errors) {
    std::vector<double> means;
    std::vector<double> ses;
    for (Eigen::Index c = 0; c < errors.cols(); ++c) {
        std::vector<double> col(errors.col(c).data(), errors.col(c).data() + errors.rows());
        means.push_back(mean(col));
        ses.push_back(col.size() > 1 ? standard_error(col) : 0.0);
    }
    return fit_rate(depths, std::move(means), std::move(ses));
}

}  // namespace

BrownianGrid BrownianGrid::sample(int width, int coarse_steps, int refinement, std::uint64_t seed) {
    if (width < 1 || coarse_steps < 1) throw std::invalid_argument("BrownianGrid: width and steps must be >= 1");
    if (refinement < 1 || !std::has_single_bit(static_cast<unsigned>(refinement)))
        throw std::invalid_argument("BrownianGrid: refinement must be a power of two");
    const Eigen::Index entries = static_cast<Eigen::Index>(width) * width;
    BrownianGrid grid;
    grid.width_ = width;
    grid.coarse_steps_ = coarse_steps;
    grid.refinement_ = refinement;
    grid.fine_.resize(entries, coarse_steps);
    {
        Rng rng(derive_seed(seed, {0}));
        const double sd = std::sqrt(1.0 / coarse_steps);
        for (Eigen::Index k = 0; k < coarse_steps; ++k)
            for (Eigen::Index e = 0; e < entries; ++e) grid.fine_(e, k) = sd * rng.normal();
    }
    const int levels = std::countr_zero(static_cast<unsigned>(refinement));
    for (int level = 1; level <= levels; ++level) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(level)}));
        const Eigen::Index n = grid.fine_.cols();
        const double half_sd = 0.5 * std::sqrt(1.0 / static_cast<double>(n));
        Eigen::MatrixXd next(entries, 2 * n);
        for (Eigen::Index k = 0; k < n; ++k) {
            for (Eigen::Index e = 0; e < entries; ++e) {
                const double x = 0.5 * grid.fine_(e, k);
                const double y = half_sd * rng.normal();
                next(e, 2 * k) = x + y;
                next(e, 2 * k + 1) = x - y;
            }
        }
        grid.fine_ = std::move(next);
    }
    return grid;
}

Eigen::Map<const Eigen::MatrixXd> BrownianGrid::fine_increment(int j) const {
    if (j < 0 || j >= fine_steps()) throw std::out_of_range("BrownianGrid: fine index out of range");
    return {fine_.col(j).data(), width_, width_};
}

Eigen::MatrixXd BrownianGrid::coarse_increment(int k) const {
    if (k < 0 || k >= coarse_steps_) throw std::out_of_range("BrownianGrid: coarse index out of range");
    Eigen::MatrixXd sum = fine_increment(k * refinement_);
    for (int j = 1; j < refinement_; ++j) sum += fine_increment(k * refinement_ + j);
    return sum;
}

std::vector<Eigen::MatrixXd> BrownianGrid::fine_increments() const {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(fine_steps()));
    for (int j = 0; j < fine_steps(); ++j) out.emplace_back(fine_increment(j));
    return out;
}

std::vector<Eigen::MatrixXd> BrownianGrid::coarse_increments() const {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(coarse_steps_));
    for (int k = 0; k < coarse_steps_; ++k) out.push_back(coarse_increment(k));
    return out;
}

Trajectory<double> euler_maruyama_res1(const Activation& sigma, const std::vector<Eigen::MatrixXd>& increments,
                                       const Eigen::VectorXd& h0) {
    return euler_maruyama(sigma, static_cast<int>(increments.size()),
                          [&](int k) -> const Eigen::MatrixXd& { return increments[static_cast<std::size_t>(k)]; }, h0);
}

RateFit fit_rate(std::vector<int> depths, std::vector<double> errors, std::vector<double> std_errors) {
    if (depths.size() != errors.size() || depths.size() != std_errors.size())
        throw std::invalid_argument("fit_rate: mismatched lengths");
    check_depths(depths, "fit_rate");
    RateFit fit;
    fit.depths = std::move(depths);
    fit.errors = std::move(errors);
    fit.std_errors = std::move(std_errors);
    fit.degenerate = std::any_of(fit.errors.begin(), fit.errors.end(), [](double e) { return !(e > 0.0) || !std::isfinite(e); });
    if (fit.degenerate) return fit;
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < fit.depths.size(); ++i) {
        x.push_back(std::log(static_cast<double>(fit.depths[i])));
        y.push_back(std::log(fit.errors[i]));
    }
    const LineFit line = least_squares_line(x, y);
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    return fit;
}

RateFit strong_error_sde(const SdeErrorOptions& opts) {
    check_depths(opts.depths, "strong_error_sde");
    if (opts.refinement < 16) throw std::invalid_argument("strong_error_sde: refinement must be >= 16");
    if (opts.trials < 1) throw std::invalid_argument("strong_error_sde: trials must be >= 1");
    if (opts.width < 1) throw std::invalid_argument("strong_error_sde: width must be >= 1");
    const auto n_depths = static_cast<Eigen::Index>(opts.depths.size());
    Eigen::MatrixXd errors(opts.trials, n_depths);
    parallel_for(static_cast<std::size_t>(opts.trials), opts.workers, [&](std::size_t t) {
        const std::uint64_t trial_seed = derive_seed(opts.seed, {t});
        Rng init(sub(trial_seed, ProbeStream::Initial));
        const Eigen::VectorXd h0 = sample_standard_normal(opts.width, init);
        for (Eigen::Index i = 0; i < n_depths; ++i) {
            const int depth = opts.depths[static_cast<std::size_t>(i)];
            const BrownianGrid grid = BrownianGrid::sample(
                opts.width, depth, opts.refinement, derive_seed(trial_seed, {static_cast<std::uint64_t>(depth)}));
            const auto fine = euler_maruyama(
                opts.sigma, grid.fine_steps(), [&](int j) { return grid.fine_increment(j); }, h0);
            const auto coarse = euler_maruyama(
                opts.sigma, depth, [&](int k) { return grid.coarse_increment(k); }, h0);
            if (!fine.ok() || !coarse.ok()) throw std::runtime_error("strong_error_sde: non-finite state");
            errors(static_cast<Eigen::Index>(t), i) = (fine.final() - coarse.final()).norm();
        }
    });
    return summarize(opts.depths, errors);
}

SmoothPaths sample_smooth_paths(const ModelSpec& model, const GPSpec& gp, int intervals, std::uint64_t seed) {
    gp.validate();
    const std::uint64_t path_seed = sub(seed, ProbeStream::Paths);
    SmoothPaths paths{SmoothMatrixPath(model.width, intervals, gp, path_seed, static_cast<std::uint64_t>(TapeStream::V)),
                      std::nullopt};
    if (has_inner_weights(model.arch))
        paths.w.emplace(model.width, intervals, gp, path_seed, static_cast<std::uint64_t>(TapeStream::W));
    return paths;
}

std::uint64_t ode_trial_seed(std::uint64_t seed, int trial) {
    return derive_seed(seed, {static_cast<std::uint64_t>(trial)});
}

Eigen::VectorXd ode_initial_state(const ModelSpec& model, std::uint64_t trial_seed) {
    Rng rng(sub(trial_seed, ProbeStream::Initial));
    Eigen::VectorXd h0 = sample_standard_normal(model.width, rng);
    return h0 / h0.norm();
}

RateFit ode_error_vs_depth(const OdeErrorOptions& opts) {
    check_depths(opts.depths, "ode_error_vs_depth");
    opts.model.validate();
    if (opts.trials < 1) throw std::invalid_argument("ode_error_vs_depth: trials must be >= 1");
    if (opts.reference_steps < 64 * opts.depths.back())
        throw std::invalid_argument("ode_error_vs_depth: reference_steps must be >= 64 x max depth");
    for (int depth : opts.depths)
        if (opts.reference_steps % depth != 0)
            throw std::invalid_argument("ode_error_vs_depth: every depth must divide reference_steps");
    const auto n_depths = static_cast<Eigen::Index>(opts.depths.size());
    Eigen::MatrixXd errors(opts.trials, n_depths);
    parallel_for(static_cast<std::size_t>(opts.trials), opts.workers, [&](std::size_t t) {
        const std::uint64_t trial_seed = ode_trial_seed(opts.seed, static_cast<int>(t));
        const SmoothPaths paths = sample_smooth_paths(opts.model, opts.gp, opts.reference_steps, trial_seed);
        const SmoothMatrixPath* w = paths.w ? &*paths.w : nullptr;
        const Eigen::VectorXd h0 = ode_initial_state(opts.model, trial_seed);
        const auto reference = ode_integrate(opts.model, paths.v, w, h0, opts.reference_steps);
        if (!reference.ok()) throw std::runtime_error("ode_error_vs_depth: non-finite reference state");
        for (Eigen::Index i = 0; i < n_depths; ++i) {
            const int depth = opts.depths[static_cast<std::size_t>(i)];
            const PathLayerSource source(paths.v, w, depth);
            const auto coarse = forward_from_state(opts.model, source, h0, 1.0 / depth);
            if (!coarse.ok()) throw std::runtime_error("ode_error_vs_depth: non-finite state");
            errors(static_cast<Eigen::Index>(t), i) = (reference.final() - coarse.final()).norm();
        }
    });
    return summarize(opts.depths, errors);
}

SmoothProbeResult smooth_regime_probe(const SmoothProbeOptions& opts) {
    if (opts.depths.empty()) throw std::invalid_argument("smooth_regime_probe: depths must be nonempty");
    if (opts.trials < 1) throw std::invalid_argument("smooth_regime_probe: trials must be >= 1");
    const ScalingRule rule = ScalingRule::from_beta(opts.beta);
    ModelSpec model = opts.model;
    if (opts.explosion_shift) {
        model.arch = Arch::res1;
        model.slope = 1.0;
    }
    model.validate();
    const int intervals = *std::max_element(opts.depths.begin(), opts.depths.end());
    const auto n_depths = static_cast<Eigen::Index>(opts.depths.size());
    SmoothProbeResult result;
    result.depths = opts.depths;
    result.ratios.resize(opts.trials, n_depths);
    parallel_for(static_cast<std::size_t>(opts.trials), opts.workers, [&](std::size_t t) {
        const std::uint64_t trial_seed = derive_seed(opts.seed, {t});
        SmoothPaths paths = sample_smooth_paths(model, opts.gp, intervals, trial_seed);
        if (opts.explosion_shift) paths.v.set_shift(*opts.explosion_shift);
        const SmoothMatrixPath* w = paths.w ? &*paths.w : nullptr;
        Rng proj_rng(sub(trial_seed, ProbeStream::Projections));
        const Projections<double> proj = sample_projections(model, proj_rng);
        Rng input_rng(sub(trial_seed, ProbeStream::Input));
        const Eigen::VectorXd x = sample_standard_normal(model.n_in, input_rng);
        const Eigen::VectorXd h0 = embed_input(proj, x);
        for (Eigen::Index i = 0; i < n_depths; ++i) {
            const int depth = opts.depths[static_cast<std::size_t>(i)];
            const PathLayerSource source(paths.v, w, depth);
            const auto traj = forward_from_state(model, source, h0, rule.alpha(depth));
            double ratio = std::numeric_limits<double>::infinity();
            if (traj.ok()) ratio = opts.explosion_shift ? max_norm_ratio(traj) : norm_ratio_output(traj);
            result.ratios(static_cast<Eigen::Index>(t), i) = ratio;
        }
    });
    for (Eigen::Index i = 0; i < n_depths; ++i) {
        std::vector<double> col(result.ratios.col(i).data(), result.ratios.col(i).data() + result.ratios.rows());
        result.medians.push_back(median(col));
    }
    return result;
}

}  // namespace resscale
