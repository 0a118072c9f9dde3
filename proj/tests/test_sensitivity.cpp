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
#include "resscale/model.hpp"
#include "resscale/random.hpp"
#include "resscale/sensitivity.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace resscale;

namespace {

struct Instance {
    ModelSpec model;
    WeightTape<double> tape;
    Projections<double> proj;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
};

Instance make_instance(Arch arch, int d, int depth, double slope, const InitScheme& scheme, std::uint64_t seed) {
    Instance in;
    in.model = ModelSpec{arch, d, depth, slope, 5, 1};
    in.tape = build_weight_tape(in.model, scheme, seed);
    Rng rng(derive_seed(seed, {99}));
    in.proj = sample_projections(in.model, rng);
    in.x = sample_standard_normal(5, rng);
    in.y = sample_standard_normal(1, rng);
    return in;
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("jacobian examples") {
    const Eigen::MatrixXd eye2 = Eigen::MatrixXd::Identity(2, 2);
    ModelSpec res1{Arch::res1, 2, 1, 1.0, 2, 1};
    const Eigen::Vector2d h(0.4, -0.7);
    const Eigen::Vector2d v(3, 5);
    CHECK(jacobian_vector(res1, LayerView<double>{eye2, nullptr}, h, v) == v);
    CHECK(jacobian_transpose_vector(res1, LayerView<double>{eye2, nullptr}, h, v) == v);

    ModelSpec res3{Arch::res3, 2, 1, 1.0, 2, 1};
    CHECK(jacobian_vector(res3, LayerView<double>{eye2, &eye2}, Eigen::Vector2d(1, -1), v) == Eigen::Vector2d(3, 0));
    CHECK_THROWS_AS(jacobian_vector(res3, LayerView<double>{eye2, &eye2}, Eigen::VectorXd::Ones(3), Eigen::VectorXd(v)),
                    std::invalid_argument);
}

TEST_CASE("jacobian matches central differences on res2") {
    const int d = 15;
    ModelSpec m{Arch::res2, d, 1, 0.8, 2, 1};
    Rng rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd w = sample_iid_matrix(DistributionSpec(Distribution::GaussianScaled, d), rng);
        const LayerView<double> layer{w, &w};
        const Eigen::VectorXd h = sample_standard_normal(d, rng);
        const Eigen::VectorXd v = sample_standard_normal(d, rng);
        const double eps = 1e-6;
        const Eigen::VectorXd pre = w * h;
        const Eigen::VectorXd dir = w * v;
        // Skip draws where the difference stencil crosses a kink.
        if (((pre.array().abs() - eps * dir.array().abs()) <= 0).any()) continue;
        const Eigen::VectorXd fd = (g_apply(m, Eigen::VectorXd(h + eps * v), layer) -
                                    g_apply(m, Eigen::VectorXd(h - eps * v), layer)) /
                                   (2 * eps);
        CHECK(rel(fd, jacobian_vector(m, layer, h, v)) <= 1e-6);
    }
}

TEST_CASE("transpose identity") {
    Rng rng(7);
    for (Arch arch : {Arch::res1, Arch::res2, Arch::res3}) {
        ModelSpec m{arch, 25, 1, 0.75, 2, 1};
        for (int rep = 0; rep < 10; ++rep) {
            const Eigen::MatrixXd w = sample_iid_matrix(DistributionSpec(Distribution::UniformScaled, 25), rng);
            const LayerView<double> layer{w, &w};
            const Eigen::VectorXd h = sample_standard_normal(25, rng);
            const Eigen::VectorXd v = sample_standard_normal(25, rng);
            const Eigen::VectorXd u = sample_standard_normal(25, rng);
            const double lhs = jacobian_vector(m, layer, h, v).dot(u);
            const double rhs = v.dot(jacobian_transpose_vector(m, layer, h, u));
            CHECK(std::abs(lhs - rhs) <= 1e-12 * (1 + std::abs(lhs)));
        }
    }
}

TEST_CASE("res3 transpose against a dense jacobian") {
    const int d = 12;
    ModelSpec m{Arch::res3, d, 1, 1.0, 2, 1};
    Rng rng(8);
    const Eigen::MatrixXd w = sample_iid_matrix(DistributionSpec(Distribution::GaussianScaled, d), rng);
    const LayerView<double> layer{w, &w};
    const Eigen::VectorXd h = sample_standard_normal(d, rng);
    Eigen::MatrixXd jac(d, d);
    const Eigen::VectorXd pre = w * h;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) jac(i, j) = pre(i) > 0 ? w(i, j) : 0.0;
    for (int j = 0; j < d; ++j) CHECK(rel(jacobian_vector(m, layer, h, Eigen::VectorXd::Unit(d, j)), jac.col(j)) <= 1e-15);
    const Eigen::VectorXd u = sample_standard_normal(d, rng);
    CHECK((jacobian_transpose_vector(m, layer, h, u) - jac.transpose() * u).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("alpha = 0 sensitivities are constant") {
    const Instance in = make_instance(Arch::res3, 10, 15, 1.0, IidInit{}, 3);
    Rng rng(4);
    const Eigen::VectorXd h0 = sample_standard_normal(10, rng);
    const Trajectory<double> traj = forward_from_state(in.model, in.tape, h0, 0.0);
    const Eigen::VectorXd z = sample_standard_normal(10, rng);
    const SensitivityTape<double> q = forward_sensitivity(in.model, in.tape, traj, z);
    const SensitivityTape<double> p = backward_gradient(in.model, in.tape, traj, z);
    CHECK(q.mode == SensitivityMode::forward);
    CHECK(p.mode == SensitivityMode::backward);
    for (int k = 0; k <= 15; ++k) {
        CHECK(q.at(k) == z);
        CHECK(p.at(k) == z);
    }
    CHECK(gradient_ratio(in.model, in.tape, in.proj, in.x, in.y, ScalingRule::fixed(0.0)) == 0.0);
    Rng probes(5);
    const auto est = estimate_ratio_forward(in.model, in.tape, in.proj, in.x, in.y, ScalingRule::fixed(0.0), 400, probes);
    CHECK(std::abs(est.value - 1.0) <= 3 * est.std_error);
}

TEST_CASE("one-step forward sensitivity by hand") {
    ModelSpec m{Arch::res1, 2, 1, 1.0, 2, 1};
    WeightTape<double> tape;
    Eigen::MatrixXd v(2, 2);
    v << 2, -1, 0.5, 3;
    tape.v = {v};
    const Trajectory<double> traj = forward_from_state(m, tape, Eigen::Vector2d(1, 1), 0.1);
    const Eigen::Vector2d z(1, -2);
    const SensitivityTape<double> q = forward_sensitivity(m, tape, traj, z);
    CHECK(q.at(1)(0) == doctest::Approx(1 + 0.1 * (2 + 2)));
    CHECK(q.at(1)(1) == doctest::Approx(-2 + 0.1 * (0.5 - 6)));
}

TEST_CASE("forward sensitivity matches finite differences of the state map") {
    for (Arch arch : {Arch::res1, Arch::res2}) {
        const Instance in = make_instance(arch, 12, 40, 0.9, IidInit{Distribution::GaussianScaled}, 11);
        Rng rng(12);
        const Eigen::VectorXd h0 = sample_standard_normal(12, rng);
        const Eigen::VectorXd z = sample_standard_normal(12, rng);
        const double alpha = 1.0 / std::sqrt(40.0);
        const Trajectory<double> traj = forward_from_state(in.model, in.tape, h0, alpha);
        const double eps = 1e-6;
        const Eigen::VectorXd plus = forward_from_state(in.model, in.tape, Eigen::VectorXd(h0 + eps * z), alpha).final();
        const Eigen::VectorXd minus = forward_from_state(in.model, in.tape, Eigen::VectorXd(h0 - eps * z), alpha).final();
        const Eigen::VectorXd fd = (plus - minus) / (2 * eps);
        CHECK(rel(fd, forward_sensitivity(in.model, in.tape, traj, z).at(40)) <= 1e-5);
    }
}

TEST_CASE("duality over 100 configurations") {
    const std::vector<InitScheme> schemes{IidInit{Distribution::UniformScaled}, IidInit{Distribution::Rademacher},
                                          GPSpec{0.1, 1.0}, FBMSpec{0.3}};
    const std::vector<double> betas{0.25, 0.5, 1.0};
    int count = 0;
    double worst = 0;
    for (int c = 0; count < 100; ++c) {
        const Arch arch = static_cast<Arch>(c % 3);
        const InitScheme& scheme = schemes[static_cast<std::size_t>(c / 3 % schemes.size())];
        const double beta = betas[static_cast<std::size_t>(c / 12 % betas.size())];
        const int depth = 5 + 7 * (c % 5);
        const Instance in = make_instance(arch, 8, depth, 0.8, scheme, static_cast<std::uint64_t>(c));
        const Trajectory<double> traj = forward(in.model, in.tape, in.proj, in.x, ScalingRule::from_beta(beta));
        REQUIRE(traj.ok());
        Rng rng(static_cast<std::uint64_t>(1000 + c));
        const Eigen::VectorXd z = sample_standard_normal(8, rng);
        const Eigen::VectorXd pl = squared_loss_gradient(in.proj, traj.final(), in.y);
        const SensitivityTape<double> q = forward_sensitivity(in.model, in.tape, traj, z);
        const SensitivityTape<double> p = backward_gradient(in.model, in.tape, traj, pl);
        const double gap = std::abs(p.at(0).dot(z) - pl.dot(q.at(depth)));
        worst = std::max(worst, gap / (p.at(0).norm() * z.norm()));
        ++count;
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("squared loss terminal gradient") {
    Projections<double> proj;
    proj.a = Eigen::MatrixXd::Identity(3, 3);
    proj.b.resize(2, 3);
    proj.b << 1, 0, 2, -1, 3, 0;
    const Eigen::Vector3d h(1, 2, 3);
    const Eigen::Vector2d y(1, 1);
    // B h - y = (6, 4); 2 B^T (6, 4) = 2 (6 - 4, 12, 12)
    const Eigen::VectorXd p = squared_loss_gradient(proj, h, y);
    CHECK(p == Eigen::Vector3d(4, 24, 24));
}

TEST_CASE("gradient ratio is order 1 for res3 at beta = 1/2") {
    const Instance in = make_instance(Arch::res3, 40, 1000, 1.0, IidInit{Distribution::UniformScaled}, 14);
    const double r = gradient_ratio(in.model, in.tape, in.proj, in.x, in.y, ScalingRule::from_beta(0.5));
    CHECK(r > 0.1);
    CHECK(r < 10.0);
}

TEST_CASE("forward probe estimate agrees with the backward value") {
    const Instance in = make_instance(Arch::res3, 20, 100, 1.0, IidInit{Distribution::GaussianScaled}, 15);
    const auto rule = ScalingRule::from_beta(0.5);
    const GradientRatios<double> exact = gradient_ratios(in.model, in.tape, in.proj, in.x, in.y, rule);
    Rng rng(16);
    const auto est = estimate_ratio_forward(in.model, in.tape, in.proj, in.x, in.y, rule, 1000, rng);
    CHECK(est.probes == 1000);
    CHECK(std::abs(est.value - exact.norm_ratio * exact.norm_ratio) <= 3 * est.std_error);

    const Instance one = make_instance(Arch::res1, 1, 30, 0.8, IidInit{Distribution::GaussianScaled}, 17);
    const GradientRatios<double> e1 = gradient_ratios(one.model, one.tape, one.proj, one.x, one.y, rule);
    Rng r1(18);
    const auto est1 = estimate_ratio_forward(one.model, one.tape, one.proj, one.x, one.y, rule, 1, r1);
    CHECK(est1.value == doctest::Approx(e1.norm_ratio * e1.norm_ratio).epsilon(1e-12));
}

TEST_CASE("gradient expectation bracket for res1") {
    const int trials = 1000;
    const int depth = 50;
    const double alpha = 1.0 / std::sqrt(double(depth));
    double sum = 0, sum2 = 0;
    for (int t = 0; t < trials; ++t) {
        const Instance in = make_instance(Arch::res1, 10, depth, 0.8, IidInit{Distribution::GaussianScaled},
                                          derive_seed(77, {static_cast<std::uint64_t>(t)}));
        const double r = gradient_ratio(in.model, in.tape, in.proj, in.x, in.y, ScalingRule::fixed(alpha));
        sum += r * r;
        sum2 += r * r * r * r;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sum2 / trials - mean * mean) / (trials - 1));
    const double lower = std::pow(1 + alpha * alpha / 2, depth) - 1;
    const double upper = std::pow(1 + alpha * alpha, depth) - 1;
    CHECK(mean >= lower - 3 * se);
    CHECK(mean <= upper + 3 * se);
}
