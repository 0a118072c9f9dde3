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

#include "resscale/harness.hpp"

#include "resscale/continuum.hpp"
#include "resscale/descriptive.hpp"
#include "resscale/model.hpp"
#include "resscale/random.hpp"
#include "resscale/sensitivity.hpp"
#include "resscale/stats.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace resscale {

namespace {

using nlohmann::json;

constexpr std::pair<Kind, std::string_view> kKinds[] = {
    {Kind::norms, "norms"},
    {Kind::gradients, "gradients"},
    {Kind::distribution, "distribution"},
    {Kind::heatmap, "heatmap"},
    {Kind::sde_convergence, "sde-convergence"},
    {Kind::ode_convergence, "ode-convergence"},
    {Kind::regimes, "regimes"},
    {Kind::validate, "validate"},
};

std::vector<int> powers_of_two(int from, int to) {
    std::vector<int> out;
    for (int v = from; v <= to; v *= 2) out.push_back(v);
    return out;
}

double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(std::string(what), "cannot parse '" + std::string(s) + "'");
    return v;
}

int parse_int(std::string_view s, std::string_view what) {
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(std::string(what), "cannot parse '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

double tidy(double v) { return std::round(v * 1e12) / 1e12; }

template <class T>
T get_field(const json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "has the wrong type");
    }
}

bool is_fbm(const ExperimentConfig& c) { return c.init == "fbm"; }

MonteCarloConfig mc_config(const ExperimentConfig& c, int depth, double beta) {
    MonteCarloConfig m;
    m.model = c.model;
    m.model.depth = depth;
    m.scheme = make_scheme(c);
    m.rule = ScalingRule::from_beta(beta);
    return m;
}

std::optional<double> hurst_of(const ExperimentConfig& c) {
    if (is_fbm(c)) return c.hursts.front();
    return std::nullopt;
}

void emit_sample(std::vector<ResultRecord>& rows, const RatioSample& s, int depth, std::optional<double> hurst,
                 double beta) {
    const std::string q = to_string(s.quantity);
    for (int t = 0; t < s.trials(); ++t) {
        const double v = s.values[static_cast<std::size_t>(t)];
        rows.push_back({q, depth, hurst, beta, t, "sample", v, std::nullopt, std::nullopt, std::isfinite(v) ? 0 : 1, ""});
    }
    const int overflow = s.overflow_count();
    rows.push_back({q, depth, hurst, beta, std::nullopt, "median", median(s.values), std::nullopt, s.trials(), overflow, ""});
    rows.push_back({q, depth, hurst, beta, std::nullopt, "q1", quantile(s.values, 0.25), std::nullopt, s.trials(), overflow, ""});
    rows.push_back({q, depth, hurst, beta, std::nullopt, "q3", quantile(s.values, 0.75), std::nullopt, s.trials(), overflow, ""});
    const std::vector<double> finite = s.finite_values();
    if (!finite.empty()) {
        rows.push_back({q, depth, hurst, beta, std::nullopt, "mean", mean(finite),
                        finite.size() > 1 ? std::optional<double>(standard_error(finite)) : std::nullopt,
                        static_cast<int>(finite.size()), overflow, ""});
    }
}

void emit_report(std::vector<ResultRecord>& rows, const BoundReport& r, std::optional<int> depth,
                 std::optional<double> beta) {
    const std::string label = to_string(r.status);
    rows.push_back({r.id, depth, std::nullopt, beta, std::nullopt, "estimate", r.statistic, r.std_error, r.trials,
                    r.overflow, label});
    rows.push_back({r.id, depth, std::nullopt, beta, std::nullopt, "lower", r.lower, std::nullopt, std::nullopt,
                    std::nullopt, label});
    rows.push_back({r.id, depth, std::nullopt, beta, std::nullopt, "upper", r.upper, std::nullopt, std::nullopt,
                    std::nullopt, label});
}

void emit_fit(std::vector<ResultRecord>& rows, const std::string& quantity, const RateFit& fit, int trials) {
    for (std::size_t i = 0; i < fit.depths.size(); ++i)
        rows.push_back({quantity, fit.depths[i], std::nullopt, std::nullopt, std::nullopt, "mean", fit.errors[i],
                        fit.std_errors[i], trials, std::nullopt, ""});
    const std::string label = fit.degenerate ? "degenerate" : "";
    rows.push_back({quantity, std::nullopt, std::nullopt, std::nullopt, std::nullopt, "slope", fit.slope, std::nullopt,
                    trials, std::nullopt, label});
    rows.push_back({quantity, std::nullopt, std::nullopt, std::nullopt, std::nullopt, "intercept", fit.intercept,
                    std::nullopt, trials, std::nullopt, label});
}

void run_sweep(const ExperimentConfig& c, bool gradients, Outcome& out) {
    for (double beta : c.betas) {
        for (int depth : c.depths) {
            const RatioSet set = monte_carlo(mc_config(c, depth, beta), c.trials, c.seed, gradients, c.workers);
            if (gradients) {
                emit_sample(out.rows, *set.gradient_ratio, depth, hurst_of(c), beta);
                emit_sample(out.rows, *set.gradient_norm_ratio, depth, hurst_of(c), beta);
            } else {
                emit_sample(out.rows, set.output_ratio, depth, hurst_of(c), beta);
                emit_sample(out.rows, set.output_norm_ratio, depth, hurst_of(c), beta);
            }
        }
    }
}

void run_distribution(const ExperimentConfig& c, Outcome& out) {
    for (double beta : c.betas) {
        for (int depth : c.depths) {
            const MonteCarloConfig mc = mc_config(c, depth, beta);
            const RatioSet set = monte_carlo(mc, c.trials, c.seed, false, c.workers);
            emit_sample(out.rows, set.output_norm_ratio, depth, hurst_of(c), beta);
            emit_sample(out.rows, set.output_ratio, depth, hurst_of(c), beta);
            const RatioSample& s = set.output_norm_ratio;
            if (s.finite_values().size() >= 100) {
                const LognormalityResult t = lognormality_test(s);
                const std::string label = t.p_value < 0.01 ? "reject" : "accept";
                out.rows.push_back({"log_output_norm_ratio", depth, hurst_of(c), beta, std::nullopt, "normality_k2",
                                    t.statistic, std::nullopt, t.n, s.overflow_count(), label});
                out.rows.push_back({"log_output_norm_ratio", depth, hurst_of(c), beta, std::nullopt, "normality_p",
                                    t.p_value, std::nullopt, t.n, s.overflow_count(), label});
            }
            emit_report(out.rows, highprob_report(mc, set.output_ratio, c.delta), depth, beta);
        }
    }
}

void run_heatmap(const ExperimentConfig& c, Outcome& out) {
    HeatmapOptions opts;
    opts.model = c.model;
    opts.model.depth = c.depths.front();
    opts.hursts = c.hursts;
    opts.betas = c.betas;
    opts.trials = c.trials;
    opts.seed = c.seed;
    opts.workers = c.workers;
    const HeatmapGrid grid = heatmap_sweep(opts);
    const int depth = opts.model.depth;
    for (std::size_t h = 0; h < grid.hursts.size(); ++h) {
        const auto i = static_cast<Eigen::Index>(h);
        for (std::size_t b = 0; b < grid.betas.size(); ++b) {
            const auto j = static_cast<Eigen::Index>(b);
            const int overflow = grid.overflow(i, j);
            for (const auto& [name, m] : {std::pair{"output_ratio", &grid.output_log10},
                                          std::pair{"gradient_ratio", &grid.gradient_log10}}) {
                const double v = (*m)(i, j);
                out.rows.push_back({name, depth, grid.hursts[h], grid.betas[b], std::nullopt, "median_log10", v,
                                    std::nullopt, grid.trials, overflow, to_string(regime_of(v))});
            }
        }
        for (const auto& [name, m] : {std::pair{"output_ratio", &grid.output_log10},
                                      std::pair{"gradient_ratio", &grid.gradient_log10}}) {
            std::vector<double> row(static_cast<std::size_t>(m->cols()));
            for (Eigen::Index j = 0; j < m->cols(); ++j) row[static_cast<std::size_t>(j)] = (*m)(i, j);
            const auto z = zero_crossing(grid.betas, row);
            out.rows.push_back({name, depth, grid.hursts[h], std::nullopt, std::nullopt, "beta_crossing", z,
                                std::nullopt, grid.trials, std::nullopt, z ? "" : "none"});
        }
    }
}

void run_sde(const ExperimentConfig& c, Outcome& out) {
    SdeErrorOptions o;
    o.width = c.model.width;
    o.depths = c.depths;
    o.refinement = c.refinement;
    o.trials = c.trials;
    o.seed = c.seed;
    o.sigma = Activation::prelu(c.model.slope);
    o.workers = c.workers;
    emit_fit(out.rows, "sde_strong_error", strong_error_sde(o), c.trials);
}

void run_ode(const ExperimentConfig& c, Outcome& out) {
    OdeErrorOptions o;
    o.model = c.model;
    o.model.depth = c.depths.back();
    o.gp = c.gp;
    o.depths = c.depths;
    o.reference_steps = c.reference_steps > 0 ? c.reference_steps : 64 * c.depths.back();
    o.trials = c.trials;
    o.seed = c.seed;
    o.workers = c.workers;
    emit_fit(out.rows, "ode_error", ode_error_vs_depth(o), c.trials);
}

void emit_trend(std::vector<ResultRecord>& rows, const std::string& quantity, double beta,
                const std::vector<int>& depths, const std::vector<double>& medians) {
    std::vector<double> x;
    for (int d : depths) x.push_back(std::log(static_cast<double>(d)));
    if (depths.size() >= 2) {
        const TrendTest t = spearman_trend(x, medians);
        rows.push_back({quantity, std::nullopt, std::nullopt, beta, std::nullopt, "spearman_rho", t.rho, std::nullopt,
                        std::nullopt, std::nullopt, ""});
        rows.push_back({quantity, std::nullopt, std::nullopt, beta, std::nullopt, "p_decreasing", t.p_decreasing,
                        std::nullopt, std::nullopt, std::nullopt, ""});
        rows.push_back({quantity, std::nullopt, std::nullopt, beta, std::nullopt, "p_increasing", t.p_increasing,
                        std::nullopt, std::nullopt, std::nullopt, ""});
    }
    rows.push_back({quantity, std::nullopt, std::nullopt, beta, std::nullopt, "growth", medians.back() / medians.front(),
                    std::nullopt, std::nullopt, std::nullopt, ""});
}

void run_regimes(const ExperimentConfig& c, Outcome& out) {
    for (double beta : c.betas) {
        std::vector<double> out_medians;
        std::vector<double> grad_medians;
        for (int depth : c.depths) {
            const RatioSet set = monte_carlo(mc_config(c, depth, beta), c.trials, c.seed, true, c.workers);
            for (const RatioSample* s : {&set.output_ratio, &*set.gradient_ratio}) {
                const double med = median(s->values);
                (s->quantity == Quantity::output_ratio ? out_medians : grad_medians).push_back(med);
                std::vector<double> logs;
                for (double v : s->values) logs.push_back(std::log10(v));
                const double med_log = median(logs);
                const std::string q = to_string(s->quantity);
                const std::string label = c.trials >= 30 ? to_string(classify_regime(*s).label) : "";
                out.rows.push_back({q, depth, hurst_of(c), beta, std::nullopt, "median", med, std::nullopt, c.trials,
                                    s->overflow_count(), ""});
                out.rows.push_back({q, depth, hurst_of(c), beta, std::nullopt, "median_log10", med_log, std::nullopt,
                                    c.trials, s->overflow_count(), label});
            }
        }
        emit_trend(out.rows, "output_ratio", beta, c.depths, out_medians);
        emit_trend(out.rows, "gradient_ratio", beta, c.depths, grad_medians);
        if (c.mu) {
            SmoothProbeOptions o;
            o.model = c.model;
            o.gp = c.gp;
            o.beta = beta;
            o.depths = c.depths;
            o.trials = c.trials;
            o.seed = c.seed;
            o.explosion_shift = c.mu;
            o.workers = c.workers;
            const SmoothProbeResult r = smooth_regime_probe(o);
            for (std::size_t i = 0; i < r.depths.size(); ++i)
                out.rows.push_back({"explosion_max_ratio", r.depths[i], std::nullopt, beta, std::nullopt, "median",
                                    r.medians[i], std::nullopt, c.trials, std::nullopt, ""});
            emit_trend(out.rows, "explosion_max_ratio", beta, r.depths, r.medians);
        }
    }
}

// Max of |<p_0, z> - <p_L, q_L(z)>| / (||p_0|| ||z||) over random small networks.
BoundReport duality_check(int configs, std::uint64_t seed) {
    double worst = 0.0;
    for (int i = 0; i < configs; ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        ModelSpec m;
        m.arch = static_cast<Arch>(i % 3);
        m.width = 3 + static_cast<int>(rng.uniform() * 10);
        m.depth = 5 + static_cast<int>(rng.uniform() * 30);
        m.slope = 1.0 / std::numbers::sqrt2 + rng.uniform() * (1.0 - 1.0 / std::numbers::sqrt2);
        m.n_in = 5;
        const WeightTape<double> tape = build_weight_tape(m, IidInit{Distribution::GaussianScaled}, rng.next());
        const Projections<double> proj = sample_projections(m, rng);
        const Eigen::VectorXd x = sample_standard_normal(m.n_in, rng);
        const auto traj = forward(m, tape, proj, x, ScalingRule::from_beta(0.5));
        const Eigen::VectorXd z = sample_standard_normal(m.width, rng);
        const Eigen::VectorXd pl = sample_standard_normal(m.width, rng);
        const auto q = forward_sensitivity(m, tape, traj, z);
        const auto p = backward_gradient(m, tape, traj, pl);
        const double gap = std::abs(p.at(0).dot(z) - pl.dot(q.at(m.depth)));
        worst = std::max(worst, gap / (p.at(0).norm() * z.norm()));
    }
    BoundReport r;
    r.id = "duality";
    r.lower = 0.0;
    r.upper = 1e-10;
    r.statistic = worst;
    r.trials = configs;
    r.status = worst <= 1e-10 ? BoundStatus::pass : BoundStatus::fail;
    return r;
}

void run_validate(const ExperimentConfig& c, Outcome& out) {
    std::vector<std::pair<BoundReport, std::optional<int>>> reports;
    auto add = [&](BoundReport r, std::optional<int> depth = std::nullopt) { reports.emplace_back(std::move(r), depth); };
    const Distribution dist = std::holds_alternative<IidInit>(make_scheme(c))
                                  ? std::get<IidInit>(make_scheme(c)).dist
                                  : Distribution::UniformScaled;
    std::uint64_t stream = 0;
    auto next_seed = [&] { return derive_seed(c.seed, {++stream}); };

    const std::pair<int, double> brackets[] = {{10, 0.1}, {100, 0.05}, {1000, 1.0 / std::sqrt(1000.0)}};
    for (Arch arch : {Arch::res1, Arch::res3}) {
        for (const auto& [depth, alpha] : brackets) {
            MonteCarloConfig mc;
            mc.model = c.model;
            mc.model.arch = arch;
            mc.model.depth = depth;
            if (arch == Arch::res1) mc.model.slope = 1.0 / std::numbers::sqrt2;
            mc.scheme = IidInit{dist};
            mc.rule = ScalingRule::fixed(alpha);
            BoundReport r = check_expectation_bracket(mc, c.trials, next_seed(), c.workers);
            std::ostringstream id;
            id << "expectation_bracket_" << to_string(arch) << "_L" << depth;
            r.id = id.str();
            add(r, depth);
        }
    }
    {
        MonteCarloConfig mc;
        mc.model = c.model;
        mc.model.width = std::max(c.model.width, 100);
        mc.scheme = IidInit{dist};
        mc.rule = ScalingRule::from_beta(0.5);
        const RatioSet set = monte_carlo(mc, c.trials, next_seed(), false, c.workers);
        add(highprob_report(mc, set.output_ratio, c.delta, HighProbBound::critical), mc.model.depth);
        if (set.output_norm_ratio.finite_values().size() >= 100) {
            const LognormalityResult t = lognormality_test(set.output_norm_ratio);
            BoundReport r;
            r.id = "lognormality_p";
            r.lower = 0.01;
            r.upper = 1.0;
            r.statistic = t.p_value;
            r.trials = t.n;
            r.status = t.p_value >= 0.01 ? BoundStatus::pass : BoundStatus::fail;
            add(r, mc.model.depth);
        }
        mc.rule = ScalingRule::from_beta(1.0);
        mc.model.width = c.model.width;
        add(check_highprob_bounds(mc, c.trials, next_seed(), c.delta, HighProbBound::identity, c.workers),
            mc.model.depth);
    }
    {
        MonteCarloConfig mc;
        mc.model = c.model;
        mc.scheme = IidInit{dist};
        mc.rule = ScalingRule::from_beta(0.5);
        BoundReport r = check_gradient_bracket(mc, c.trials, next_seed(), c.workers);
        r.id = "gradient_bracket_beta0.5";
        add(r, mc.model.depth);
        mc.model.depth = 100;
        mc.rule = ScalingRule::fixed(0.05);
        r = check_gradient_bracket(mc, c.trials, next_seed(), c.workers);
        r.id = "gradient_bracket_L100";
        add(r, 100);
    }
    for (Arch arch : {Arch::res1, Arch::res2, Arch::res3}) {
        ModelSpec m = c.model;
        m.arch = arch;
        BoundReport r = check_g_energy(m, dist, c.trials, next_seed());
        r.id = "g_energy_" + to_string(arch);
        add(r);
    }
    for (const BoundReport& r : check_assumption_suite(c.model, dist, c.trials, next_seed()))
        if (r.id != "g_energy_bracket") add(r);
    BoundReport tail = check_linear_tail(100, Distribution::Rademacher, 0.5, c.trials, next_seed());
    tail.id += "_rademacher_d100";
    add(tail);
    add(check_fgn_autocorrelation(0.5, 1000, 20, next_seed()));
    add(duality_check(100, next_seed()));

    for (const auto& [r, depth] : reports) {
        emit_report(out.rows, r, depth, std::nullopt);
        if (r.status == BoundStatus::fail) out.all_passed = false;
    }
}

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }
std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

void check_label(const std::string& s) {
    if (s.find_first_of(",\n\r\"") != std::string::npos) throw std::logic_error("write_csv: label needs quoting: " + s);
}

}  // namespace

std::string to_string(Kind kind) {
    for (const auto& [k, name] : kKinds)
        if (k == kind) return std::string(name);
    return "?";
}

Kind parse_kind(std::string_view name) {
    for (const auto& [k, n] : kKinds)
        if (n == name) return k;
    throw ConfigError("kind", "unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig default_config(Kind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.model = ModelSpec{Arch::res3, 40, 1000, 1.0, 64, 1};
    c.depths = parse_depth_grid("10:1000");
    switch (kind) {
        case Kind::norms:
        case Kind::gradients:
        case Kind::regimes: break;
        case Kind::distribution:
            c.model.width = 100;
            c.depths = {1000};
            c.betas = {0.5};
            c.trials = 10000;
            break;
        case Kind::heatmap:
            c.init = "fbm";
            c.depths = {1000};
            c.hursts = {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.97};
            c.betas = parse_real_grid("0.2:1.3:0.1");
            c.trials = 30;
            break;
        case Kind::sde_convergence:
            c.model.arch = Arch::res1;
            c.model.width = 10;
            c.init = "iid-gauss";
            c.depths = powers_of_two(8, 512);
            c.betas = {0.5};
            c.trials = 200;
            break;
        case Kind::ode_convergence:
            c.model.width = 10;
            c.init = "gp";
            c.depths = powers_of_two(16, 1024);
            c.betas = {1.0};
            c.trials = 20;
            break;
        case Kind::validate:
            c.depths = {1000};
            c.betas = {0.5};
            c.trials = 1000;
            break;
    }
    return c;
}

void validate(const ExperimentConfig& c) {
    const ModelSpec& m = c.model;
    if (m.width < 1) throw ConfigError("d", "must be >= 1");
    if (m.n_in < 1) throw ConfigError("n_in", "must be >= 1");
    if (m.n_out < 1) throw ConfigError("n_out", "must be >= 1");
    if (!(m.slope >= 1.0 / std::numbers::sqrt2 - 1e-15 && m.slope <= 1.0))
        throw ConfigError("slope", "must lie in [1/sqrt(2), 1]");
    if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
    if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
    if (c.depths.empty()) throw ConfigError("depths", "grid is empty");
    for (int d : c.depths)
        if (d < 1) throw ConfigError("depths", "entries must be >= 1");
    if (c.betas.empty()) throw ConfigError("betas", "grid is empty");
    for (double b : c.betas)
        if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("betas", "entries must be > 0");
    if (!(c.delta > 0.0 && c.delta <= 1.0)) throw ConfigError("delta", "must lie in (0, 1]");
    static const char* inits[] = {"iid-uniform", "iid-gauss", "iid-rademacher", "gp", "fbm"};
    if (std::find(std::begin(inits), std::end(inits), c.init) == std::end(inits))
        throw ConfigError("init", "unknown scheme '" + c.init + "'");
    if (is_fbm(c) || c.kind == Kind::heatmap) {
        if (c.hursts.empty()) throw ConfigError("hursts", "grid is empty");
        for (double h : c.hursts)
            if (!(h > 0.0 && h < 1.0)) throw ConfigError("hursts", "entries must lie in (0, 1)");
    }
    if (!(c.gp.lengthscale > 0.0)) throw ConfigError("gp_lengthscale", "must be > 0");
    if (!(c.gp.variance > 0.0)) throw ConfigError("gp_variance", "must be > 0");
    const bool sorted = std::adjacent_find(c.depths.begin(), c.depths.end(), std::greater_equal<>()) == c.depths.end();
    switch (c.kind) {
        case Kind::heatmap:
            if (c.init != "fbm") throw ConfigError("init", "heatmap uses fbm weights");
            if (c.depths.size() != 1) throw ConfigError("depths", "heatmap takes a single depth");
            break;
        case Kind::sde_convergence:
            if (m.arch != Arch::res1) throw ConfigError("arch", "sde-convergence simulates res1");
            if (c.depths.size() < 4 || !sorted) throw ConfigError("depths", "need at least 4 increasing depths");
            if (c.refinement < 16 || (c.refinement & (c.refinement - 1)) != 0)
                throw ConfigError("refinement", "must be a power of two >= 16");
            break;
        case Kind::ode_convergence: {
            if (c.init != "gp") throw ConfigError("init", "ode-convergence uses gp weights");
            if (c.depths.size() < 4 || !sorted) throw ConfigError("depths", "need at least 4 increasing depths");
            const int ref = c.reference_steps > 0 ? c.reference_steps : 64 * c.depths.back();
            if (ref < 64 * c.depths.back()) throw ConfigError("reference_steps", "must be >= 64 x the largest depth");
            for (int d : c.depths)
                if (ref % d != 0) throw ConfigError("depths", "every depth must divide reference_steps");
            break;
        }
        case Kind::regimes:
            if (c.mu) {
                if (!(*c.mu > 0.0)) throw ConfigError("mu", "must be > 0");
                if (c.init != "gp") throw ConfigError("mu", "the explosion probe uses gp weights");
                const int top = *std::max_element(c.depths.begin(), c.depths.end());
                for (int d : c.depths)
                    if (top % d != 0) throw ConfigError("depths", "every depth must divide the largest for the explosion probe");
            }
            break;
        default: break;
    }
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["arch"] = to_string(c.model.arch);
    j["d"] = c.model.width;
    j["n_in"] = c.model.n_in;
    j["n_out"] = c.model.n_out;
    j["slope"] = c.model.slope;
    j["init"] = c.init;
    j["gp_lengthscale"] = c.gp.lengthscale;
    j["gp_variance"] = c.gp.variance;
    j["hursts"] = c.hursts;
    j["betas"] = c.betas;
    j["depths"] = c.depths;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["delta"] = c.delta;
    j["refinement"] = c.refinement;
    j["reference_steps"] = c.reference_steps;
    j["mu"] = c.mu ? json(*c.mu) : json(nullptr);
    return j;
}

void apply_json(ExperimentConfig& c, const json& input) {
    if (!input.is_object()) throw ConfigError("config", "must be a JSON object");
    const json& j = input.contains("config") ? input.at("config") : input;
    if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
    if (input.contains("config")) {
        if (input.contains("workers")) c.workers = get_field<int>(input.at("workers"), "workers");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") {
            const Kind k = parse_kind(get_field<std::string>(value, key));
            if (k != c.kind) throw ConfigError("kind", "config is for '" + to_string(k) + "', not '" + to_string(c.kind) + "'");
        } else if (key == "arch") {
            try {
                c.model.arch = parse_arch(get_field<std::string>(value, key));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError("arch", e.what());
            }
        } else if (key == "d") {
            c.model.width = get_field<int>(value, key);
        } else if (key == "n_in") {
            c.model.n_in = get_field<int>(value, key);
        } else if (key == "n_out") {
            c.model.n_out = get_field<int>(value, key);
        } else if (key == "slope") {
            c.model.slope = get_field<double>(value, key);
        } else if (key == "init") {
            c.init = get_field<std::string>(value, key);
        } else if (key == "gp_lengthscale") {
            c.gp.lengthscale = get_field<double>(value, key);
        } else if (key == "gp_variance") {
            c.gp.variance = get_field<double>(value, key);
        } else if (key == "hursts") {
            c.hursts = get_field<std::vector<double>>(value, key);
        } else if (key == "betas") {
            c.betas = get_field<std::vector<double>>(value, key);
        } else if (key == "depths") {
            c.depths = value.is_string() ? parse_depth_grid(value.get<std::string>()) : get_field<std::vector<int>>(value, key);
        } else if (key == "trials") {
            c.trials = get_field<int>(value, key);
        } else if (key == "seed") {
            c.seed = get_field<std::uint64_t>(value, key);
        } else if (key == "workers") {
            c.workers = get_field<int>(value, key);
        } else if (key == "out") {
            c.out = get_field<std::string>(value, key);
        } else if (key == "delta") {
            c.delta = get_field<double>(value, key);
        } else if (key == "refinement") {
            c.refinement = get_field<int>(value, key);
        } else if (key == "reference_steps") {
            c.reference_steps = get_field<int>(value, key);
        } else if (key == "mu") {
            c.mu = value.is_null() ? std::nullopt : std::optional<double>(get_field<double>(value, key));
        } else {
            throw ConfigError(key, "unknown field");
        }
    }
}

std::vector<int> parse_depth_grid(std::string_view text) {
    if (text.find(':') == std::string_view::npos) {
        std::vector<int> out;
        for (auto part : split(text, ',')) out.push_back(parse_int(part, "depths"));
        return out;
    }
    const auto parts = split(text, ':');
    if (parts.size() > 3) throw ConfigError("depths", "expected start:stop[:count]");
    const int a = parse_int(parts[0], "depths");
    const int b = parse_int(parts[1], "depths");
    const int n = parts.size() == 3 ? parse_int(parts[2], "depths") : 10;
    if (a < 1 || b < a) throw ConfigError("depths", "need 1 <= start <= stop");
    if (n < 1) throw ConfigError("depths", "count must be >= 1");
    std::vector<int> out;
    const double la = std::log(static_cast<double>(a));
    const double lb = std::log(static_cast<double>(b));
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        const int v = i == n - 1 ? b : static_cast<int>(std::lround(std::exp(la + t * (lb - la))));
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    return out;
}

std::vector<double> parse_real_grid(std::string_view text) {
    std::vector<double> out;
    if (text.find(':') == std::string_view::npos) {
        for (auto part : split(text, ',')) out.push_back(parse_double(part, "grid"));
        return out;
    }
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("grid", "expected start:stop:step");
    const double a = parse_double(parts[0], "grid");
    const double b = parse_double(parts[1], "grid");
    const double step = parse_double(parts[2], "grid");
    if (!(step > 0.0) || b < a) throw ConfigError("grid", "need start <= stop and step > 0");
    const auto n = static_cast<int>(std::floor((b - a) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) out.push_back(tidy(a + i * step));
    return out;
}

InitScheme make_scheme(const ExperimentConfig& c) {
    if (c.init == "iid-uniform") return IidInit{Distribution::UniformScaled};
    if (c.init == "iid-gauss") return IidInit{Distribution::GaussianScaled};
    if (c.init == "iid-rademacher") return IidInit{Distribution::Rademacher};
    if (c.init == "gp") return c.gp;
    if (c.init == "fbm") {
        if (c.hursts.empty()) throw ConfigError("hursts", "grid is empty");
        return FBMSpec{c.hursts.front()};
    }
    throw ConfigError("init", "unknown scheme '" + c.init + "'");
}

std::string config_fingerprint(const ExperimentConfig& c) { return fingerprint(config_to_json(c).dump()); }

std::string format_number(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("format_number: non-finite value");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& os, const std::vector<ResultRecord>& rows, const std::string& fingerprint) {
    os << kCsvHeader << '\n';
    for (const ResultRecord& r : rows) {
        check_label(r.quantity);
        check_label(r.statistic);
        check_label(r.label);
        std::string value;
        std::optional<int> overflow = r.overflow;
        std::string label = r.label;
        if (r.value) {
            const double v = *r.value;
            if (std::isnan(v)) throw std::logic_error("write_csv: NaN in " + r.quantity + "/" + r.statistic);
            if (std::isfinite(v)) {
                value = format_number(v);
            } else {
                if (!overflow || *overflow < 1) overflow = 1;
                if (label.empty()) label = v > 0 ? "+inf" : "-inf";
            }
        }
        std::string se;
        if (r.std_error && std::isfinite(*r.std_error)) se = format_number(*r.std_error);
        os << fingerprint << ',' << r.quantity << ',' << cell(r.depth) << ',' << cell(r.hurst) << ',' << cell(r.beta)
           << ',' << cell(r.trial) << ',' << r.statistic << ',' << value << ',' << se << ','
           << cell(r.trials) << ',' << cell(overflow) << ',' << label << '\n';
    }
}

Outcome execute(const ExperimentConfig& config) {
    validate(config);
    ExperimentConfig c = config;
    c.model.depth = *std::max_element(c.depths.begin(), c.depths.end());
    Outcome out;
    switch (c.kind) {
        case Kind::norms: run_sweep(c, false, out); break;
        case Kind::gradients: run_sweep(c, true, out); break;
        case Kind::distribution: run_distribution(c, out); break;
        case Kind::heatmap: run_heatmap(c, out); break;
        case Kind::sde_convergence: run_sde(c, out); break;
        case Kind::ode_convergence: run_ode(c, out); break;
        case Kind::regimes: run_regimes(c, out); break;
        case Kind::validate: run_validate(c, out); break;
    }
    return out;
}

int run(const ExperimentConfig& c, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = execute(c);
    } catch (const ConfigError& e) {
        log << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        log << "invalid configuration: " << e.what() << '\n';
        return 2;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string fp = config_fingerprint(c);
    namespace fs = std::filesystem;
    try {
        const fs::path dir(c.out);
        fs::create_directories(dir);
        {
            std::ofstream csv(dir / "results.csv", std::ios::binary | std::ios::trunc);
            if (!csv) throw std::runtime_error("cannot open " + (dir / "results.csv").string());
            write_csv(csv, outcome.rows, fp);
            if (!csv.flush()) throw std::runtime_error("write failed for " + (dir / "results.csv").string());
        }
        json manifest;
        manifest["tool"] = "resscale";
        manifest["version"] = std::string(kVersion);
        manifest["config"] = config_to_json(c);
        manifest["seed"] = c.seed;
        manifest["workers"] = c.workers;
        manifest["fingerprint"] = fp;
        manifest["rows"] = outcome.rows.size();
        manifest["wall_time_seconds"] = wall;
        manifest["rerun"] = "resscale " + to_string(c.kind) + " --config manifest.json --out <dir>";
        manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
        manifest["compiler"] = __VERSION__;
        if (c.kind == Kind::validate) manifest["all_passed"] = outcome.all_passed;
        std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!mf) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
        mf << manifest.dump(2) << '\n';
        if (!mf.flush()) throw std::runtime_error("write failed for " + (dir / "manifest.json").string());
    } catch (const std::exception& e) {
        log << "I/O error: " << e.what() << '\n';
        return 3;
    }
    if (c.kind == Kind::validate) {
        for (const ResultRecord& r : outcome.rows)
            if (r.statistic == "estimate")
                log << r.label << ' ' << r.quantity << ' ' << (r.value ? format_number(*r.value) : "-") << '\n';
        return outcome.all_passed ? 0 : 1;
    }
    return 0;
}

}  // namespace resscale
