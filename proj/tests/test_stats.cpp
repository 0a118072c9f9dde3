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

#include "resscale/random.hpp"
#include "resscale/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace resscale;

namespace {

MonteCarloConfig config(Arch arch, int d, int depth, ScalingRule rule, InitScheme scheme = IidInit{}) {
    MonteCarloConfig c;
    c.model = ModelSpec{arch, d, depth, 1.0, 16, 1};
    c.scheme = scheme;
    c.rule = rule;
    return c;
}

}  // namespace

TEST_CASE("fingerprint is 64-bit FNV-1a") {
    CHECK(fingerprint("") == "cbf29ce484222325");
    CHECK(fingerprint("a") == "af63dc4c8601ec8c");
    const MonteCarloConfig a = config(Arch::res3, 10, 20, ScalingRule::from_beta(0.5));
    MonteCarloConfig b = a;
    b.rule = ScalingRule::from_beta(1.0);
    CHECK(describe(a) != describe(b));
}

TEST_CASE("alpha = 0 gives zero ratios") {
    const RatioSet set = monte_carlo(config(Arch::res3, 8, 30, ScalingRule::fixed(0.0)), 20, 1, true);
    for (double v : set.output_ratio.values) CHECK(v == 0.0);
    for (double v : set.gradient_ratio->values) CHECK(v == 0.0);
    for (double v : set.output_norm_ratio.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    const BoundReport rep = expectation_bracket_report(config(Arch::res3, 8, 30, ScalingRule::fixed(0.0)), set.output_ratio);
    CHECK(rep.lower == 0.0);
    CHECK(rep.upper == 0.0);
    CHECK(rep.statistic == 0.0);
    CHECK(rep.passed());
}

TEST_CASE("monte carlo is deterministic and independent of workers") {
    for (const InitScheme& scheme : std::vector<InitScheme>{IidInit{}, GPSpec{0.1, 1.0}, FBMSpec{0.3}}) {
        const MonteCarloConfig c = config(Arch::res2, 6, 24, ScalingRule::from_beta(0.5), scheme);
        const RatioSet one = monte_carlo(c, 12, 7, true, 1);
        const RatioSet again = monte_carlo(c, 12, 7, true, 1);
        const RatioSet many = monte_carlo(c, 12, 7, true, 4);
        CHECK(one.output_ratio.values == again.output_ratio.values);
        CHECK(one.output_ratio.values == many.output_ratio.values);
        CHECK(one.gradient_ratio->values == many.gradient_ratio->values);
        CHECK(one.output_ratio.fingerprint == many.output_ratio.fingerprint);
        const RatioSet other = monte_carlo(c, 12, 8, true, 1);
        CHECK(one.output_ratio.values != other.output_ratio.values);
    }
    const MonteCarloConfig c = config(Arch::res3, 6, 10, ScalingRule::from_beta(0.5));
    CHECK(monte_carlo_ratios(c, Quantity::output_ratio, 1, 3).values ==
          monte_carlo_ratios(c, Quantity::output_ratio, 1, 3).values);
    // The first trials do not depend on how many follow.
    const RatioSample short_run = monte_carlo_ratios(c, Quantity::output_ratio, 3, 3);
    const RatioSample long_run = monte_carlo_ratios(c, Quantity::output_ratio, 9, 3);
    CHECK(std::equal(short_run.values.begin(), short_run.values.end(), long_run.values.begin()));
}

TEST_CASE("ratio sample overflow bookkeeping") {
    RatioSample s;
    s.values = {1.0, std::numeric_limits<double>::infinity(), 2.0};
    CHECK(s.overflow_count() == 1);
    CHECK(s.finite_values() == std::vector<double>{1.0, 2.0});
}

TEST_CASE("expectation bracket: L = 100, alpha = 0.05") {
    for (Arch arch : {Arch::res1, Arch::res3}) {
        const BoundReport rep = check_expectation_bracket(config(arch, 20, 100, ScalingRule::fixed(0.05)), 1000, 11);
        CHECK(rep.lower == doctest::Approx(std::pow(1.00125, 100) - 1));
        CHECK(rep.upper == doctest::Approx(std::pow(1.0025, 100) - 1));
        CHECK(rep.trials == 1000);
        CHECK(rep.passed());
    }
}

TEST_CASE("expectation bracket: L = 1000, alpha = 1/sqrt(1000)") {
    const BoundReport rep =
        check_expectation_bracket(config(Arch::res3, 20, 1000, ScalingRule::fixed(1 / std::sqrt(1000.0))), 1000, 12);
    CHECK(rep.lower == doctest::Approx(std::exp(0.5) - 1).epsilon(1e-3));
    CHECK(rep.upper == doctest::Approx(std::exp(1.0) - 1).epsilon(1e-3));
    CHECK(rep.passed());
}

TEST_CASE("expectation status applies 3 SE slack") {
    CHECK(expectation_status(0.9, 0.05, 1.0, 2.0) == BoundStatus::pass);
    CHECK(expectation_status(0.8, 0.05, 1.0, 2.0) == BoundStatus::fail);
    CHECK(expectation_status(2.1, 0.05, 1.0, 2.0) == BoundStatus::pass);
    CHECK(expectation_status(2.2, 0.05, 1.0, 2.0) == BoundStatus::fail);
    CHECK(to_string(BoundStatus::not_applicable) == "N/A");
}

TEST_CASE("high-probability bounds") {
    const MonteCarloConfig identity = config(Arch::res3, 20, 1000, ScalingRule::from_beta(1.0));
    const BoundReport rep = check_highprob_bounds(identity, 1000, 13, 0.1);
    CHECK(rep.id == "highprob_identity");
    CHECK(rep.lower == doctest::Approx(0.9));
    CHECK(rep.passed());

    CHECK(check_highprob_bounds(identity, 100, 13, 1.0).status == BoundStatus::not_applicable);
    CHECK_FALSE(check_highprob_bounds(identity, 100, 13, 1.0).note.empty());

    // Width below 64 leaves the critical bound without its side condition.
    const MonteCarloConfig narrow = config(Arch::res3, 20, 1000, ScalingRule::from_beta(0.5));
    CHECK(check_highprob_bounds(narrow, 100, 13, 0.1, HighProbBound::critical).status == BoundStatus::not_applicable);

    // A synthetic sample entirely above the identity bound fails.
    RatioSample far;
    far.values.assign(200, 10.0);
    CHECK(highprob_report(identity, far, 0.1).status == BoundStatus::fail);
}

TEST_CASE("gradient bracket") {
    const MonteCarloConfig c = config(Arch::res1, 20, 100, ScalingRule::fixed(0.05));
    const BoundReport rep = check_gradient_bracket(c, 1000, 14);
    CHECK(rep.lower == doctest::Approx(std::pow(1.00125, 100) - 1));
    CHECK(rep.passed());

    const MonteCarloConfig crit = config(Arch::res3, 20, 100, ScalingRule::from_beta(0.5));
    RatioSample s;
    s.values.assign(200, 1.0);
    const BoundReport r2 = gradient_bracket_report(crit, s);
    CHECK(r2.lower == doctest::Approx(std::exp(0.5) - 1));
    CHECK(r2.upper == doctest::Approx(std::exp(4.0) - 1));
    CHECK(r2.passed());

    const RatioSet zero = monte_carlo(config(Arch::res3, 8, 30, ScalingRule::fixed(0.0)), 10, 1, true);
    for (double v : zero.gradient_ratio->values) CHECK(v == 0.0);
}

TEST_CASE("lognormality test on synthetic samples") {
    int accepted = 0;
    const int reps = 40;
    for (int r = 0; r < reps; ++r) {
        Rng rng(static_cast<std::uint64_t>(100 + r));
        std::vector<double> x(10000);
        for (double& v : x) v = std::exp(0.3 * rng.normal() + 0.1);
        accepted += lognormality_test(x).p_value > 0.01;
    }
    CHECK(accepted >= 38);

    Rng rng(5);
    std::vector<double> u(10000);
    for (double& v : u) v = 0.5 + rng.uniform();
    CHECK(lognormality_test(u).p_value < 0.01);
    CHECK_THROWS_AS(lognormality_test(std::vector<double>(200, -1.0)), std::domain_error);
    CHECK_THROWS(lognormality_test(std::vector<double>(50, 1.0)));
}

TEST_CASE("regime classification") {
    RatioSample big, small;
    big.values.assign(30, 1e3);
    small.values.assign(30, 1e-3);
    CHECK(classify_regime(big).label == Regime::explosion);
    CHECK(classify_regime(small).label == Regime::identity);
    CHECK(classify_regime(big).median_log10 == doctest::Approx(3.0));
    CHECK(regime_of(0.0) == Regime::critical);
    CHECK(regime_code(Regime::identity) == -1);
    CHECK(regime_code(Regime::explosion) == 1);

    RatioSample overflowed;
    overflowed.values.assign(30, std::numeric_limits<double>::infinity());
    CHECK(classify_regime(overflowed).label == Regime::explosion);
    RatioSample few;
    few.values.assign(10, 1.0);
    CHECK_THROWS(classify_regime(few));

    const RatioSample crit =
        monte_carlo_ratios(config(Arch::res3, 20, 300, ScalingRule::from_beta(0.5)), Quantity::output_ratio, 30, 15);
    CHECK(classify_regime(crit).label == Regime::critical);
}

TEST_CASE("zero crossing") {
    const std::vector<double> betas{0.2, 0.4, 0.6, 0.8};
    CHECK(*zero_crossing(betas, std::vector<double>{2.0, 1.0, -1.0, -2.0}) == doctest::Approx(0.5));
    CHECK_FALSE(zero_crossing(betas, std::vector<double>{2.0, 1.0, 0.5, 0.1}).has_value());
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(*zero_crossing(betas, std::vector<double>{inf, inf, -1.0, -2.0}) == doctest::Approx(0.6));
    CHECK_THROWS(zero_crossing(betas, std::vector<double>{1.0}));
}

TEST_CASE("small heatmap: explosion and identity cells") {
    HeatmapOptions opts;
    opts.model = ModelSpec{Arch::res3, 20, 200, 1.0, 16, 1};
    opts.hursts = {0.5};
    opts.betas = {0.25, 0.5, 0.75, 1.0};
    opts.trials = 30;
    opts.seed = 3;
    const HeatmapGrid grid = heatmap_sweep(opts);
    CHECK(regime_of(grid.output_log10(0, 0)) == Regime::explosion);
    CHECK(regime_of(grid.output_log10(0, 3)) == Regime::identity);
    CHECK(regime_of(grid.gradient_log10(0, 0)) == Regime::explosion);
    CHECK(regime_of(grid.gradient_log10(0, 3)) == Regime::identity);
    for (int j = 0; j + 1 < 4; ++j) CHECK(grid.output_log10(0, j) >= grid.output_log10(0, j + 1));

    opts.workers = 3;
    const HeatmapGrid again = heatmap_sweep(opts);
    CHECK(again.output_log10 == grid.output_log10);
    CHECK(again.gradient_log10 == grid.gradient_log10);
}

TEST_CASE("assumption checks") {
    const ModelSpec res3{Arch::res3, 40, 1, 1.0, 16, 1};
    for (Distribution dist : {Distribution::UniformScaled, Distribution::GaussianScaled, Distribution::Rademacher}) {
        for (const BoundReport& rep : check_assumption_suite(res3, dist, 2000, 16)) {
            INFO(rep.id, " ", rep.note, " ", rep.statistic);
            CHECK(rep.passed());
        }
    }
    const BoundReport halving = check_relu_halving(40, Distribution::GaussianScaled, 4000, 17);
    CHECK(std::abs(halving.statistic - 0.5) <= 3 * halving.std_error);

    const ModelSpec res1{Arch::res1, 40, 1, 1.0, 16, 1};
    const BoundReport identity = check_g_energy(res1, Distribution::GaussianScaled, 100, 18);
    CHECK(identity.statistic == doctest::Approx(1.0).epsilon(1e-14));

    const BoundReport tail = check_linear_tail(100, Distribution::Rademacher, 0.5, 20000, 19);
    CHECK(tail.upper == doctest::Approx(2 * std::exp(-100 * 0.25 / 4)));
    CHECK(tail.passed());
}

TEST_CASE("fGn autocorrelation checks") {
    for (double h : {0.2, 0.5, 0.8}) {
        const BoundReport rep = check_fgn_autocorrelation(h, 1000, 30, 20);
        INFO(rep.id, " ", rep.statistic);
        CHECK(rep.passed());
    }
    CHECK(check_fgn_autocorrelation(0.8, 1000, 30, 20).lower == doctest::Approx(0.5 * (std::pow(2.0, 1.6) - 2)));
}
