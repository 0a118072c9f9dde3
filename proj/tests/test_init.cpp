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
#include "resscale/random.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace resscale;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("entry laws have mean 0 and variance 1/d") {
    const int d = 50;
    for (Distribution kind : {Distribution::UniformScaled, Distribution::GaussianScaled, Distribution::Rademacher}) {
        const DistributionSpec spec(kind, d);
        CHECK(spec.variance() == doctest::Approx(1.0 / d));
        Rng rng(3);
        double s1 = 0, s2 = 0;
        const int reps = 200;
        for (int r = 0; r < reps; ++r) {
            const Eigen::MatrixXd m = sample_iid_matrix(spec, rng);
            s1 += m.sum();
            s2 += m.squaredNorm();
            if (kind == Distribution::UniformScaled) CHECK(max_abs(m) <= std::sqrt(3.0 / d));
            if (kind == Distribution::Rademacher) CHECK((m.cwiseAbs().array() == 1.0 / std::sqrt(d)).all());
        }
        const double n = static_cast<double>(reps) * d * d;
        CHECK(std::abs(s1 / n) < 5.0 * std::sqrt(1.0 / d / n));
        CHECK(s2 / n == doctest::Approx(1.0 / d).epsilon(0.01));
    }
    CHECK_THROWS_AS(DistributionSpec(Distribution::Rademacher, 0), std::invalid_argument);
}

TEST_CASE("fGn autocovariance values") {
    // Closed-form values evaluated in Python.
    CHECK(fgn_autocovariance(0, 0.3) == doctest::Approx(1.0));
    CHECK(fgn_autocovariance(1, 0.75) == doctest::Approx(0.41421356237309515).epsilon(1e-13));
    CHECK(fgn_autocovariance(2, 0.3) == doctest::Approx(-0.049125544044516634).epsilon(1e-13));
    CHECK(fgn_autocovariance(5, 0.9) == doctest::Approx(0.5222628119876305).epsilon(1e-13));
    CHECK(fgn_autocovariance(1, 0.1) == doctest::Approx(-0.42565082250148245).epsilon(1e-13));
    CHECK(fgn_autocovariance(-3, 0.7) == fgn_autocovariance(3, 0.7));
    for (int k = 1; k < 20; ++k) CHECK(fgn_autocovariance(k, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("squared-exponential covariance on a grid") {
    const GPSpec spec{0.1, 0.01};
    const Eigen::MatrixXd k = gp_covariance(1, 10, 10, spec);
    CHECK(k.rows() == 10);
    CHECK(k(0, 2) == doctest::Approx(0.0013533528323661278).epsilon(1e-13));
    CHECK(k(4, 4) == doctest::Approx(0.01));
    CHECK(max_abs(k - k.transpose()) == 0.0);
    CHECK_THROWS_AS(GPSpec({0.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(FBMSpec{1.0}.validate(), std::invalid_argument);
    CHECK_THROWS_AS(FBMSpec{0.0}.validate(), std::invalid_argument);
}

TEST_CASE("covariance factors reproduce their matrices") {
    SUBCASE("fgn dense factor") {
        for (double h : {0.1, 0.5, 0.9}) {
            const auto f = fgn_factor(200, h);
            const Eigen::MatrixXd cov = fgn_covariance(200, h);
            CHECK(max_abs(f->factor * f->factor.transpose() - cov) < 1e-10);
            CHECK(f->rank() == 200);
        }
    }
    SUBCASE("gp low-rank factor") {
        const GPSpec spec{0.1, 0.01};
        const auto f = gp_factor(1, 1000, 1000, spec);
        const Eigen::MatrixXd cov = gp_covariance(1, 1000, 1000, spec);
        CHECK(f->rank() < 100);
        CHECK(max_abs(f->factor * f->factor.transpose() - cov) <= 1e-12 * spec.variance * 1.0001);
        CHECK(gp_factor(1, 1000, 1000, spec).get() == f.get());
    }
    SUBCASE("pivoted Cholesky is exact on a full-rank matrix") {
        Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 6);
        const Eigen::MatrixXd spd = a * a.transpose() + Eigen::MatrixXd::Identity(6, 6);
        const Eigen::MatrixXd f = pivoted_cholesky(6, [&](int i, int j) { return spd(i, j); }, 0.0);
        CHECK(f.cols() == 6);
        CHECK(max_abs(f * f.transpose() - spd) < 1e-12);
    }
    SUBCASE("dense factor jitters a singular matrix and rejects an indefinite one") {
        const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
        const CovarianceFactor f = dense_cholesky_factor(ones);
        CHECK(f.jittered);
        CHECK(max_abs(f.factor * f.factor.transpose() - ones) < 1e-10);
        Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
        bad(1, 1) = -1.0;
        CHECK_THROWS_AS(dense_cholesky_factor(bad), std::runtime_error);
    }
}

TEST_CASE("sampled fGn and GP paths match their covariances") {
    const int n = 8;
    const int reps = 40000;
    SUBCASE("fgn") {
        const FBMSpec spec{0.8};
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        Rng rng(17);
        for (int r = 0; r < reps; ++r) {
            const Eigen::VectorXd x = sample_fgn(n, spec, rng);
            acc += x * x.transpose();
        }
        acc /= reps;
        CHECK(max_abs(acc - fgn_covariance(n, 0.8)) < 5.0 * std::sqrt(2.0 / reps));
    }
    SUBCASE("gp") {
        const GPSpec spec{0.3, 1.0};
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        Rng rng(18);
        for (int r = 0; r < reps; ++r) {
            const Eigen::VectorXd x = sample_gp_path(n, spec, rng);
            acc += x * x.transpose();
        }
        acc /= reps;
        CHECK(max_abs(acc - gp_covariance(1, n, n, spec)) < 5.0 * std::sqrt(2.0 / reps));
    }
}

TEST_CASE("iid tapes use one stream per layer and matrix") {
    ModelSpec model{Arch::res3, 6, 12, 1.0, 4, 1};
    const WeightTape<double> tape = build_weight_tape(model, IidInit{Distribution::GaussianScaled}, 77);
    REQUIRE(tape.depth() == 12);
    REQUIRE(tape.has_w());
    const DistributionSpec spec(Distribution::GaussianScaled, 6);
    for (int k = 1; k <= 12; ++k) {
        Rng rv(derive_seed(77, {static_cast<std::uint64_t>(TapeStream::V), static_cast<std::uint64_t>(k)}));
        Rng rw(derive_seed(77, {static_cast<std::uint64_t>(TapeStream::W), static_cast<std::uint64_t>(k)}));
        CHECK(tape.layer(k).v == sample_iid_matrix(spec, rv));
        CHECK(*tape.layer(k).w == sample_iid_matrix(spec, rw));
    }
    const WeightTape<double> again = build_weight_tape(model, IidInit{Distribution::GaussianScaled}, 77);
    CHECK(again.v == tape.v);
    model.arch = Arch::res1;
    CHECK_FALSE(build_weight_tape(model, IidInit{}, 77).has_w());
}

TEST_CASE("IidLayerStream is bit-identical to the materialized tape") {
    for (Distribution dist : {Distribution::UniformScaled, Distribution::GaussianScaled, Distribution::Rademacher}) {
        const ModelSpec model{Arch::res2, 7, 20, 0.8, 3, 1};
        const WeightTape<double> tape = build_weight_tape(model, IidInit{dist}, 5);
        const IidLayerStream stream(model, dist, 5);
        CHECK(stream.depth() == 20);
        for (int k : {1, 2, 3, 20, 7, 7, 1}) {
            CHECK(stream.layer(k).v == tape.layer(k).v);
            CHECK(*stream.layer(k).w == *tape.layer(k).w);
        }
        CHECK_THROWS_AS(stream.layer(0), std::out_of_range);
    }
}

TEST_CASE("gp and fbm tapes read per-entry paths") {
    const ModelSpec model{Arch::res3, 3, 16, 1.0, 2, 1};
    SUBCASE("gp") {
        const GPSpec spec{0.2, 0.5};
        const WeightTape<double> tape = build_weight_tape(model, spec, 9);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                Rng rng(derive_seed(9, {static_cast<std::uint64_t>(TapeStream::W), static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(j)}));
                const Eigen::VectorXd path = sample_gp_path(16, spec, rng);
                for (int k = 1; k <= 16; ++k)
                    CHECK((*tape.layer(k).w)(i, j) == doctest::Approx(path(k - 1)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("fbm scaled by 1/sqrt(d)") {
        const FBMSpec spec{0.7};
        const WeightTape<double> tape = build_weight_tape(model, spec, 9);
        Rng rng(derive_seed(9, {static_cast<std::uint64_t>(TapeStream::V), 2, 1}));
        const Eigen::VectorXd path = sample_fgn(16, spec, rng) / std::sqrt(3.0);
        for (int k = 1; k <= 16; ++k) CHECK(tape.layer(k).v(2, 1) == doctest::Approx(path(k - 1)).epsilon(1e-12));
        CHECK(tape.scheme == describe(InitScheme{spec}));
    }
}

TEST_CASE("projections have the stated variances") {
    const ModelSpec model{Arch::res3, 60, 1, 1.0, 80, 30};
    Rng rng(21);
    double sa = 0, sb = 0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
        const Projections<double> p = sample_projections(model, rng);
        REQUIRE(p.a.rows() == 60);
        REQUIRE(p.a.cols() == 80);
        REQUIRE(p.b.rows() == 30);
        REQUIRE(p.b.cols() == 60);
        sa += p.a.squaredNorm() / p.a.size();
        sb += p.b.squaredNorm() / p.b.size();
    }
    CHECK(sa / reps == doctest::Approx(1.0 / 80).epsilon(0.02));
    CHECK(sb / reps == doctest::Approx(1.0 / 60).epsilon(0.02));
}

TEST_CASE("smooth matrix paths: nodes, interpolation, shift and layer source") {
    const GPSpec spec{0.2, 1.0};
    SmoothMatrixPath path(4, 8, spec, 31, 1);
    CHECK(path.intervals() == 8);
    CHECK(path.width() == 4);
    const Eigen::MatrixXd n3 = path.node(3);
    const Eigen::MatrixXd n4 = path.node(4);
    CHECK(max_abs(path.at(3.0 / 8) - n3) == 0.0);
    CHECK(max_abs(path.at(3.25 / 8) - (0.75 * n3 + 0.25 * n4)) < 1e-14);
    CHECK(max_abs(path.at(1.0) - path.node(8)) == 0.0);
    CHECK_THROWS_AS(path.at(1.5), std::out_of_range);

    const PathLayerSource source(path, nullptr, 4);
    CHECK(source.depth() == 4);
    for (int k = 1; k <= 4; ++k) CHECK(max_abs(source.layer(k).v - path.node(2 * k)) == 0.0);
    CHECK_THROWS_AS(PathLayerSource(path, nullptr, 3), std::invalid_argument);

    path.set_shift(2.0);
    CHECK(max_abs(path.node(3) - n3 - 2.0 * Eigen::MatrixXd::Identity(4, 4)) < 1e-15);

    // Entry (i, j) of the node matrix at i / n follows the scalar GP law.
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(9, 9);
    const int reps = 3000;
    for (int r = 0; r < reps; ++r) {
        const SmoothMatrixPath p(1, 8, spec, static_cast<std::uint64_t>(r), 1);
        Eigen::VectorXd x(9);
        for (int i = 0; i <= 8; ++i) x(i) = p.node(i)(0, 0);
        acc += x * x.transpose();
    }
    acc /= reps;
    CHECK(max_abs(acc - gp_covariance(0, 8, 8, spec)) < 5.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("gp path edge cases and lag-1 correlation") {
    Rng rng(4);
    CHECK(sample_gp_path(50, GPSpec{0.1, 0.0}, rng).isZero(0.0));
    // L = 1: a single N(0, v) draw.
    double s2 = 0;
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) s2 += std::pow(sample_gp_path(1, GPSpec{0.1, 2.0}, rng)(0), 2);
    CHECK(s2 / reps == doctest::Approx(2.0).epsilon(5.0 * std::sqrt(2.0 / reps)));

    const int trials = 300;
    double num = 0, den = 0;
    for (int r = 0; r < trials; ++r) {
        const Eigen::VectorXd x = sample_gp_path(1000, GPSpec{0.1, 0.01}, rng);
        num += x.head(999).dot(x.tail(999));
        den += x.head(999).squaredNorm();
    }
    const double expected = std::exp(-std::pow(1.0 / 1000, 2) / (2 * 0.01));
    CHECK(std::abs(num / den - expected) < 3.0 / std::sqrt(trials));
}

TEST_CASE("fGn lag-1 autocorrelation at H = 0.2, 0.5, 0.8") {
    for (double h : {0.2, 0.5, 0.8}) {
        const int n = 1000;
        const int paths = 30;
        Eigen::MatrixXd seq(n, paths);
        Rng rng(41);
        for (int p = 0; p < paths; ++p) seq.col(p) = sample_fgn(n, FBMSpec{h}, rng);
        double lag1 = 0, lag0 = 0;
        for (int p = 0; p < paths; ++p) {
            lag1 += seq.col(p).head(n - 1).dot(seq.col(p).tail(n - 1));
            lag0 += seq.col(p).squaredNorm();
        }
        const double gamma1 = 0.5 * (std::pow(2.0, 2 * h) - 2.0);
        CHECK(std::abs(lag1 / lag0 - gamma1) < 3.0 / std::sqrt(n * paths));
    }
    CHECK(0.5 * (std::pow(2.0, 1.6) - 2.0) == doctest::Approx(0.5157).epsilon(1e-4));
    CHECK(0.5 * (std::pow(2.0, 0.4) - 2.0) == doctest::Approx(-0.3402).epsilon(1e-3));
}

TEST_CASE("fbm at H = 1/2 matches the iid Gaussian scheme") {
    const ModelSpec model{Arch::res1, 40, 1000, 1.0, 2, 1};
    const WeightTape<double> fbm = build_weight_tape(model, FBMSpec{0.5}, 12);
    const WeightTape<double> iid = build_weight_tape(model, IidInit{Distribution::GaussianScaled}, 12);
    auto moments = [](const WeightTape<double>& t) {
        double s2 = 0, s4 = 0, n = 0;
        for (const auto& v : t.v) {
            s2 += v.squaredNorm();
            s4 += v.array().pow(4).sum();
            n += static_cast<double>(v.size());
        }
        return std::pair{s2 / n, s4 / n};
    };
    const auto [f2, f4] = moments(fbm);
    const auto [i2, i4] = moments(iid);
    const double n = 1000.0 * 1600.0;
    const double var = 1.0 / 40;
    // Pooled variance within 3 SE of 1/d for both; second and fourth moments agree.
    CHECK(std::abs(f2 - var) < 3.0 * var * std::sqrt(2.0 / n));
    CHECK(std::abs(i2 - var) < 3.0 * var * std::sqrt(2.0 / n));
    CHECK(std::abs(f4 - i4) < 3.0 * var * var * std::sqrt(2.0 * 96.0 / n));
}

TEST_CASE("gp tape increments scale like 1/L") {
    auto mean_step = [](int depth) {
        const ModelSpec model{Arch::res1, 5, depth, 1.0, 2, 1};
        const WeightTape<double> tape = build_weight_tape(model, GPSpec{0.1, 0.01}, 3);
        double acc = 0;
        for (int k = 1; k < depth; ++k) acc += (tape.layer(k + 1).v - tape.layer(k).v).cwiseAbs().mean();
        return acc / (depth - 1);
    };
    const double ratio = mean_step(100) / mean_step(1000);
    CHECK(ratio > 10.0 / 1.5);
    CHECK(ratio < 10.0 * 1.5);
}

TEST_CASE("uniform tape at d = 40, L = 1000 stays in range") {
    const ModelSpec model{Arch::res3, 40, 1000, 1.0, 2, 1};
    const WeightTape<double> tape = build_weight_tape(model, IidInit{Distribution::UniformScaled}, 8);
    const double bound = std::sqrt(3.0 / 40);
    bool ok = true;
    for (int k = 1; k <= 1000; ++k) ok = ok && max_abs(tape.layer(k).v) <= bound && max_abs(*tape.layer(k).w) <= bound;
    CHECK(ok);
}
