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

#include "resscale/stats.hpp"

#include "resscale/descriptive.hpp"
#include "resscale/model.hpp"
#include "resscale/parallel.hpp"
#include "resscale/random.hpp"
#include "resscale/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace resscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class TrialStream : std::uint64_t { Tape = 1, Projections = 2, Input = 3, Target = 4 };

std::uint64_t sub(std::uint64_t seed, TrialStream s) { return derive_seed(seed, {static_cast<std::uint64_t>(s)}); }

struct TrialResult {
    double output = kInf;
    double output_norm = kInf;
    double gradient = kInf;
    double gradient_norm = kInf;
};

template <LayerSource Tape>
TrialResult run_trial(const ModelSpec& model, const Tape& tape, const TrialInputs& in, double alpha, bool gradients) {
    TrialResult r;
    const Eigen::VectorXd h0 = embed_input(in.proj, in.x);
    const Trajectory<double> traj = forward_from_state(model, tape, h0, alpha);
    if (!traj.ok()) return r;
    r.output = norm_ratio_output(traj);
    r.output_norm = norm_ratio_final(traj);
    if (!gradients) return r;
    const Eigen::VectorXd p_final = squared_loss_gradient(in.proj, traj.final(), in.target);
    const double pn = p_final.norm();
    if (!(pn > 0.0)) throw std::domain_error("monte_carlo: zero terminal gradient");
    const SensitivityTape<double> back = backward_gradient(model, tape, traj, p_final);
    if (!back.ok()) return r;
    r.gradient = (back.at(0) - p_final).norm() / pn;
    r.gradient_norm = back.at(0).norm() / pn;
    return r;
}

double mean_of_squares(std::span<const double> v, double& se) {
    std::vector<double> sq;
    sq.reserve(v.size());
    for (double x : v) sq.push_back(x * x);
    if (sq.empty()) {
        se = kInf;
        return kInf;
    }
    se = sq.size() > 1 ? standard_error(sq) : 0.0;
    return mean(sq);
}

BoundReport bracket_report(std::string id, const MonteCarloConfig& config, const RatioSample& sample, double lower,
                           double upper) {
    BoundReport rep;
    rep.id = std::move(id);
    rep.lower = lower;
    rep.upper = upper;
    rep.trials = sample.trials();
    rep.overflow = sample.overflow_count();
    const std::vector<double> finite = sample.finite_values();
    if (finite.size() < 2) {
        rep.note = "fewer than two finite trials";
        rep.status = BoundStatus::not_applicable;
        return rep;
    }
    rep.statistic = mean_of_squares(finite, rep.std_error);
    rep.status = expectation_status(rep.statistic, rep.std_error, lower, upper);
    rep.note = "L=" + std::to_string(config.model.depth);
    return rep;
}

double bracket_alpha(const MonteCarloConfig& config) { return config.rule.alpha(config.model.depth); }

bool is_half(std::optional<double> beta) { return beta && std::abs(*beta - 0.5) < 1e-12; }

double fraction(std::size_t hits, std::size_t n) { return static_cast<double>(hits) / static_cast<double>(n); }

double binomial_se(double p, int n) {
    const double q = std::clamp(p, 0.0, 1.0);
    return std::sqrt(q * (1.0 - q) / n);
}

Eigen::VectorXd relu(const Eigen::VectorXd& v) { return v.cwiseMax(0.0); }

template <class Body>
BoundReport mean_check(std::string id, int trials, std::uint64_t seed, double lower, double upper, Body&& body) {
    if (trials < 2) throw std::invalid_argument(id + ": trials must be >= 2");
    std::vector<double> values(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        values[static_cast<std::size_t>(t)] = body(rng);
    }
    BoundReport rep;
    rep.id = std::move(id);
    rep.lower = lower;
    rep.upper = upper;
    rep.trials = trials;
    rep.statistic = mean(values);
    rep.std_error = standard_error(values);
    rep.status = expectation_status(rep.statistic, rep.std_error, lower, upper);
    return rep;
}

}  // namespace

std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::output_ratio: return "output_ratio";
        case Quantity::output_norm_ratio: return "output_norm_ratio";
        case Quantity::gradient_ratio: return "gradient_ratio";
        case Quantity::gradient_norm_ratio: return "gradient_norm_ratio";
    }
    return "?";
}

std::string describe(const MonteCarloConfig& config) {
    std::ostringstream os;
    os.precision(17);
    const ModelSpec& m = config.model;
    os << "arch=" << to_string(m.arch) << ";d=" << m.width << ";L=" << m.depth << ";slope=" << m.slope
       << ";n_in=" << m.n_in << ";n_out=" << m.n_out << ";init=" << describe(config.scheme);
    if (config.rule.beta())
        os << ";beta=" << *config.rule.beta();
    else
        os << ";alpha=" << config.rule.alpha(m.depth);
    return os.str();
}

std::string fingerprint(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TrialInputs trial_inputs(const ModelSpec& model, std::uint64_t master_seed, int trial) {
    const std::uint64_t seed = derive_seed(master_seed, {static_cast<std::uint64_t>(trial)});
    TrialInputs in;
    in.tape_seed = sub(seed, TrialStream::Tape);
    Rng proj_rng(sub(seed, TrialStream::Projections));
    in.proj = sample_projections(model, proj_rng);
    Rng input_rng(sub(seed, TrialStream::Input));
    in.x = sample_standard_normal(model.n_in, input_rng);
    Rng target_rng(sub(seed, TrialStream::Target));
    in.target = sample_standard_normal(model.n_out, target_rng);
    return in;
}

int RatioSample::overflow_count() const {
    return static_cast<int>(std::count_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }));
}

std::vector<double> RatioSample::finite_values() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values)
        if (std::isfinite(v)) out.push_back(v);
    return out;
}

const RatioSample& RatioSet::get(Quantity q) const {
    switch (q) {
        case Quantity::output_ratio: return output_ratio;
        case Quantity::output_norm_ratio: return output_norm_ratio;
        case Quantity::gradient_ratio:
            if (!gradient_ratio) throw std::logic_error("RatioSet: gradients were not computed");
            return *gradient_ratio;
        case Quantity::gradient_norm_ratio:
            if (!gradient_norm_ratio) throw std::logic_error("RatioSet: gradients were not computed");
            return *gradient_norm_ratio;
    }
    throw std::logic_error("RatioSet: unknown quantity");
}

RatioSet monte_carlo(const MonteCarloConfig& config, int trials, std::uint64_t seed, bool gradients, int workers) {
    if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
    config.model.validate();
    const double alpha = config.rule.alpha(config.model.depth);
    std::vector<TrialResult> results(static_cast<std::size_t>(trials));
    parallel_for(results.size(), workers, [&](std::size_t t) {
        const TrialInputs in = trial_inputs(config.model, seed, static_cast<int>(t));
        if (const auto* iid = std::get_if<IidInit>(&config.scheme)) {
            const IidLayerStream tape(config.model, iid->dist, in.tape_seed);
            results[t] = run_trial(config.model, tape, in, alpha, gradients);
        } else {
            const WeightTape<double> tape = build_weight_tape(config.model, config.scheme, in.tape_seed);
            results[t] = run_trial(config.model, tape, in, alpha, gradients);
        }
    });
    const std::string fp = fingerprint(describe(config));
    auto collect = [&](Quantity q, double TrialResult::*field) {
        RatioSample s{q, fp, {}};
        s.values.reserve(results.size());
        for (const auto& r : results) s.values.push_back(r.*field);
        return s;
    };
    RatioSet set{collect(Quantity::output_ratio, &TrialResult::output),
                 collect(Quantity::output_norm_ratio, &TrialResult::output_norm), std::nullopt, std::nullopt};
    if (gradients) {
        set.gradient_ratio = collect(Quantity::gradient_ratio, &TrialResult::gradient);
        set.gradient_norm_ratio = collect(Quantity::gradient_norm_ratio, &TrialResult::gradient_norm);
    }
    return set;
}

RatioSample monte_carlo_ratios(const MonteCarloConfig& config, Quantity quantity, int trials, std::uint64_t seed,
                               int workers) {
    const bool gradients = quantity == Quantity::gradient_ratio || quantity == Quantity::gradient_norm_ratio;
    return monte_carlo(config, trials, seed, gradients, workers).get(quantity);
}

std::string to_string(BoundStatus s) {
    switch (s) {
        case BoundStatus::pass: return "PASS";
        case BoundStatus::fail: return "FAIL";
        case BoundStatus::not_applicable: return "N/A";
    }
    return "?";
}

BoundStatus expectation_status(double statistic, double std_error, double lower, double upper) {
    if (!std::isfinite(statistic)) return BoundStatus::fail;
    return statistic >= lower - 3.0 * std_error && statistic <= upper + 3.0 * std_error ? BoundStatus::pass
                                                                                       : BoundStatus::fail;
}

BoundReport expectation_bracket_report(const MonteCarloConfig& config, const RatioSample& output_ratio) {
    const double a2 = std::pow(bracket_alpha(config), 2);
    const int L = config.model.depth;
    return bracket_report("expectation_bracket", config, output_ratio, std::pow(1.0 + 0.5 * a2, L) - 1.0,
                          std::pow(1.0 + a2, L) - 1.0);
}

BoundReport check_expectation_bracket(const MonteCarloConfig& config, int trials, std::uint64_t seed, int workers) {
    return expectation_bracket_report(config, monte_carlo_ratios(config, Quantity::output_ratio, trials, seed, workers));
}

BoundReport highprob_report(const MonteCarloConfig& config, const RatioSample& output_ratio, double delta,
                            HighProbBound bound) {
    BoundReport rep;
    rep.trials = output_ratio.trials();
    rep.overflow = output_ratio.overflow_count();
    const int L = config.model.depth;
    const double d = config.model.width;
    const double a2 = std::pow(bracket_alpha(config), 2);
    if (bound == HighProbBound::automatic) {
        if (is_half(config.rule.beta()))
            bound = HighProbBound::critical;
        else if (L * a2 <= 1.0)
            bound = HighProbBound::identity;
    }
    rep.id = bound == HighProbBound::critical ? "highprob_critical" : "highprob_identity";
    if (!(delta > 0.0 && delta < 1.0)) {
        rep.note = "delta outside (0, 1): bound is vacuous, coverage not checked";
        return rep;
    }
    double lo = -kInf;
    double hi = kInf;
    bool strict = false;
    switch (bound) {
        case HighProbBound::automatic:
            rep.id = "highprob";
            rep.note = "no high-probability bound for L alpha^2 > 1 away from beta = 1/2";
            return rep;
        case HighProbBound::identity:
            if (L * a2 > 1.0) {
                rep.note = "side condition L alpha^2 <= 1 fails";
                return rep;
            }
            hi = 2.0 * L * a2 / delta;
            break;
        case HighProbBound::critical:
            if (!is_half(config.rule.beta())) {
                rep.note = "side condition beta = 1/2 fails";
                return rep;
            }
            if (d < 64) {
                rep.note = "side condition d >= 64 fails";
                return rep;
            }
            if (2.0 * L * std::exp(-L * d / 64.0) > delta / 11.0) {
                rep.note = "side condition 2 L exp(-L d / 64) <= delta / 11 fails";
                return rep;
            }
            lo = std::exp(0.375 - std::sqrt(22.0 / (d * delta))) - 1.0;
            hi = std::exp(1.0 + std::sqrt(10.0 / (d * delta))) + 1.0;
            strict = true;
            rep.note = "depth condition involving C not checked";
            break;
    }
    std::size_t inside = 0;
    for (double r : output_ratio.values) {
        if (!std::isfinite(r)) continue;
        const double r2 = r * r;
        const bool ok = strict ? (r2 > lo && r2 < hi) : (r2 <= hi);
        if (ok) ++inside;
    }
    const double nominal = 1.0 - delta;
    rep.lower = nominal;
    rep.upper = 1.0;
    rep.statistic = fraction(inside, output_ratio.values.size());
    rep.std_error = binomial_se(nominal, rep.trials);
    rep.status = rep.statistic >= nominal - 3.0 * rep.std_error ? BoundStatus::pass : BoundStatus::fail;
    std::ostringstream os;
    os.precision(6);
    os << (rep.note.empty() ? "" : rep.note + "; ") << "bounds on ratio^2: (" << lo << ", " << hi << ")";
    rep.note = os.str();
    return rep;
}

BoundReport check_highprob_bounds(const MonteCarloConfig& config, int trials, std::uint64_t seed, double delta,
                                  HighProbBound bound, int workers) {
    return highprob_report(config, monte_carlo_ratios(config, Quantity::output_ratio, trials, seed, workers), delta,
                           bound);
}

BoundReport gradient_bracket_report(const MonteCarloConfig& config, const RatioSample& gradient_ratio) {
    if (is_half(config.rule.beta()))
        return bracket_report("gradient_bracket", config, gradient_ratio, std::exp(0.5) - 1.0, std::exp(4.0) - 1.0);
    const double a2 = std::pow(bracket_alpha(config), 2);
    const int L = config.model.depth;
    return bracket_report("gradient_bracket", config, gradient_ratio, std::pow(1.0 + 0.5 * a2, L) - 1.0,
                          std::pow(1.0 + a2, L) - 1.0);
}

BoundReport check_gradient_bracket(const MonteCarloConfig& config, int trials, std::uint64_t seed, int workers) {
    return gradient_bracket_report(config,
                                   monte_carlo_ratios(config, Quantity::gradient_ratio, trials, seed, workers));
}

LognormalityResult lognormality_test(std::span<const double> values) {
    std::vector<double> logs;
    logs.reserve(values.size());
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        if (!(v > 0.0)) throw std::domain_error("lognormality_test: nonpositive value");
        logs.push_back(std::log(v));
    }
    if (logs.size() < 100) throw std::invalid_argument("lognormality_test: need at least 100 finite values");
    const NormalityTest t = dagostino_pearson(logs);
    return {t.statistic, t.p_value, static_cast<int>(logs.size())};
}

LognormalityResult lognormality_test(const RatioSample& sample) { return lognormality_test(sample.values); }

std::string to_string(Regime r) {
    switch (r) {
        case Regime::identity: return "identity";
        case Regime::critical: return "critical";
        case Regime::explosion: return "explosion";
    }
    return "?";
}

int regime_code(Regime r) {
    switch (r) {
        case Regime::identity: return -1;
        case Regime::critical: return 0;
        case Regime::explosion: return 1;
    }
    return 0;
}

Regime regime_of(double median_log10, const RegimeThresholds& t) {
    if (median_log10 < t.identity_below) return Regime::identity;
    if (median_log10 > t.explosion_above) return Regime::explosion;
    return Regime::critical;
}

RegimeLabel classify_regime(const RatioSample& sample, const RegimeThresholds& t) {
    if (sample.trials() < 30) throw std::invalid_argument("classify_regime: need at least 30 trials");
    std::vector<double> logs;
    logs.reserve(sample.values.size());
    for (double v : sample.values) logs.push_back(std::isfinite(v) ? std::log10(v) : kInf);
    RegimeLabel label;
    label.median_log10 = median(logs);
    label.thresholds = t;
    label.label = regime_of(label.median_log10, t);
    return label;
}

HeatmapGrid heatmap_sweep(const HeatmapOptions& opts) {
    if (opts.hursts.empty() || opts.betas.empty()) throw std::invalid_argument("heatmap_sweep: grids must be nonempty");
    if (opts.trials < 1) throw std::invalid_argument("heatmap_sweep: trials must be >= 1");
    opts.model.validate();
    for (double h : opts.hursts) FBMSpec{h}.validate();
    std::vector<double> alphas;
    for (double b : opts.betas) alphas.push_back(ScalingRule::from_beta(b).alpha(opts.model.depth));

    const std::size_t nh = opts.hursts.size();
    const std::size_t nb = opts.betas.size();
    const std::size_t nt = static_cast<std::size_t>(opts.trials);
    std::vector<TrialResult> results(nh * nt * nb);
    parallel_for(nh * nt, opts.workers, [&](std::size_t task) {
        const std::size_t h = task / nt;
        const std::size_t t = task % nt;
        const TrialInputs in = trial_inputs(opts.model, opts.seed, static_cast<int>(t));
        const WeightTape<double> tape =
            build_weight_tape(opts.model, FBMSpec{opts.hursts[h]}, derive_seed(in.tape_seed, {h}));
        for (std::size_t b = 0; b < nb; ++b)
            results[(h * nt + t) * nb + b] = run_trial(opts.model, tape, in, alphas[b], true);
    });

    HeatmapGrid grid;
    grid.hursts = opts.hursts;
    grid.betas = opts.betas;
    grid.trials = opts.trials;
    grid.output_log10.resize(static_cast<Eigen::Index>(nh), static_cast<Eigen::Index>(nb));
    grid.gradient_log10.resizeLike(grid.output_log10);
    grid.overflow.setZero(static_cast<Eigen::Index>(nh), static_cast<Eigen::Index>(nb));
    std::vector<double> out(nt);
    std::vector<double> grad(nt);
    for (std::size_t h = 0; h < nh; ++h) {
        for (std::size_t b = 0; b < nb; ++b) {
            int overflow = 0;
            for (std::size_t t = 0; t < nt; ++t) {
                const TrialResult& r = results[(h * nt + t) * nb + b];
                out[t] = std::log10(r.output);
                grad[t] = std::log10(r.gradient);
                if (!std::isfinite(r.output) || !std::isfinite(r.gradient)) ++overflow;
            }
            const auto i = static_cast<Eigen::Index>(h);
            const auto j = static_cast<Eigen::Index>(b);
            grid.output_log10(i, j) = median(out);
            grid.gradient_log10(i, j) = median(grad);
            grid.overflow(i, j) = overflow;
        }
    }
    return grid;
}

std::optional<double> zero_crossing(std::span<const double> betas, std::span<const double> values) {
    if (betas.size() != values.size()) throw std::invalid_argument("zero_crossing: mismatched lengths");
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const double a = values[i];
        const double b = values[i + 1];
        if (!(a > 0.0 && b <= 0.0)) continue;
        if (!std::isfinite(a) || !std::isfinite(b)) return betas[i + 1];
        return betas[i] + (betas[i + 1] - betas[i]) * a / (a - b);
    }
    return std::nullopt;
}

BoundReport check_g_energy(const ModelSpec& model, Distribution dist, int trials, std::uint64_t seed) {
    const DistributionSpec spec(dist, model.width);
    Eigen::MatrixXd w(model.width, model.width);
    const Eigen::MatrixXd unused = Eigen::MatrixXd::Identity(model.width, model.width);
    auto rep = mean_check("g_energy_bracket", trials, seed, 0.5, 1.0, [&](Rng& rng) {
        const Eigen::VectorXd h = sample_standard_normal(model.width, rng);
        if (has_inner_weights(model.arch)) fill_iid(spec, rng, w);
        const LayerView<double> layer{unused, has_inner_weights(model.arch) ? &w : nullptr};
        return g_apply<double>(model, h, layer).squaredNorm() / h.squaredNorm();
    });
    rep.note = to_string(model.arch) + ", " + to_string(dist);
    return rep;
}

BoundReport check_relu_halving(int width, Distribution dist, int trials, std::uint64_t seed) {
    const DistributionSpec spec(dist, width);
    Eigen::MatrixXd w(width, width);
    auto rep = mean_check("relu_halving", trials, seed, 0.5, 0.5, [&](Rng& rng) {
        const Eigen::VectorXd h = sample_standard_normal(width, rng);
        fill_iid(spec, rng, w);
        return relu(w * h).squaredNorm() / h.squaredNorm();
    });
    rep.note = to_string(dist) + ", d=" + std::to_string(width);
    return rep;
}

BoundReport check_second_moment(int width, Distribution dist, int trials, std::uint64_t seed) {
    const DistributionSpec spec(dist, width);
    const double target = spec.variance() * width;
    Eigen::MatrixXd w(width, width);
    auto rep = mean_check("second_moment", trials, seed, target, target, [&](Rng& rng) {
        const Eigen::VectorXd x = sample_standard_normal(width, rng);
        fill_iid(spec, rng, w);
        return (w * x).squaredNorm() / x.squaredNorm();
    });
    rep.note = to_string(dist) + ", d=" + std::to_string(width);
    return rep;
}

BoundReport check_linear_tail(int width, Distribution dist, double t, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("check_linear_tail: trials must be >= 1");
    const DistributionSpec spec(dist, width);
    const double s = spec.subgaussian_s();
    const double bound = 2.0 * std::exp(-width * t * t / (4.0 * s * s));
    Eigen::MatrixXd v(width, width);
    std::size_t hits = 0;
    for (int i = 0; i < trials; ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        const Eigen::VectorXd x = sample_standard_normal(width, rng);
        const Eigen::VectorXd y = sample_standard_normal(width, rng);
        fill_iid(spec, rng, v);
        if (y.dot(v * x) / (x.norm() * y.norm()) >= t) ++hits;
    }
    BoundReport rep;
    std::ostringstream id;
    id << "linear_tail_t" << t;
    rep.id = id.str();
    rep.lower = 0.0;
    rep.upper = bound;
    rep.trials = trials;
    rep.statistic = fraction(hits, static_cast<std::size_t>(trials));
    rep.std_error = binomial_se(bound, trials);
    rep.status = rep.statistic <= bound + 3.0 * rep.std_error ? BoundStatus::pass : BoundStatus::fail;
    rep.note = to_string(dist) + ", d=" + std::to_string(width);
    return rep;
}

std::vector<BoundReport> check_assumption_suite(const ModelSpec& model, Distribution dist, int trials,
                                                std::uint64_t seed) {
    std::vector<BoundReport> out;
    out.push_back(check_g_energy(model, dist, trials, derive_seed(seed, {1})));
    out.push_back(check_relu_halving(model.width, dist, trials, derive_seed(seed, {2})));
    out.push_back(check_second_moment(model.width, dist, trials, derive_seed(seed, {3})));
    std::uint64_t k = 4;
    for (double t : {0.1, 0.2, 0.5}) out.push_back(check_linear_tail(model.width, dist, t, trials, derive_seed(seed, {k++})));
    return out;
}

BoundReport check_fgn_autocorrelation(double hurst, int length, int paths, std::uint64_t seed) {
    if (length < 2 || paths < 1) throw std::invalid_argument("check_fgn_autocorrelation: need length >= 2, paths >= 1");
    const FBMSpec spec{hurst};
    spec.validate();
    Eigen::MatrixXd seq(length, paths);
    for (int p = 0; p < paths; ++p) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(p)}));
        seq.col(p) = sample_fgn(length, spec, rng);
    }
    const double target = fgn_autocovariance(1, hurst);
    const double n = static_cast<double>(length - 1) * paths;
    BoundReport rep;
    std::ostringstream id;
    id << "fgn_lag1_H" << hurst;
    rep.id = id.str();
    rep.lower = target;
    rep.upper = target;
    rep.trials = paths;
    rep.statistic = pooled_autocorrelation(seq, 1);
    rep.std_error = 1.0 / std::sqrt(n);
    rep.status = expectation_status(rep.statistic, rep.std_error, target, target);
    rep.note = "length=" + std::to_string(length);
    return rep;
}

}  // namespace resscale
