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

#include "resscale/model.hpp"
#include "resscale/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>

namespace resscale {

enum class SensitivityMode { forward, backward };

/// Column k holds q_k (forward mode) or p_k (backward mode), k = 0..L.
template <class Scalar>
struct SensitivityTape {
    SensitivityMode mode = SensitivityMode::forward;
    MatrixX<Scalar> seq;
    std::optional<Overflow> overflow;

    bool ok() const { return !overflow.has_value(); }
    auto at(int k) const { return seq.col(k); }
};

/// (dg/dh)(h) v.
template <class Scalar, class DerivedH, class DerivedV>
VectorX<Scalar> jacobian_vector(const ModelSpec& model, const LayerView<Scalar>& layer,
                                const Eigen::MatrixBase<DerivedH>& h, const Eigen::MatrixBase<DerivedV>& v) {
    if (h.size() != v.size()) throw std::invalid_argument("jacobian_vector: size mismatch");
    detail::check_layer(model, layer, h.size());
    const Scalar slope = static_cast<Scalar>(model.slope);
    switch (model.arch) {
        case Arch::res1: return prelu_derivative(h, slope).cwiseProduct(v);
        case Arch::res2: {
            const VectorX<Scalar> pre = *layer.w * h;
            return prelu_derivative(pre, slope).cwiseProduct(*layer.w * v);
        }
        case Arch::res3: {
            const VectorX<Scalar> pre = *layer.w * h;
            return prelu_derivative(pre, Scalar(0)).cwiseProduct(*layer.w * v);
        }
    }
    return {};
}

/// (dg/dh)(h)^T u.
template <class Scalar, class DerivedH, class DerivedU>
VectorX<Scalar> jacobian_transpose_vector(const ModelSpec& model, const LayerView<Scalar>& layer,
                                          const Eigen::MatrixBase<DerivedH>& h, const Eigen::MatrixBase<DerivedU>& u) {
    if (h.size() != u.size()) throw std::invalid_argument("jacobian_transpose_vector: size mismatch");
    detail::check_layer(model, layer, h.size());
    const Scalar slope = static_cast<Scalar>(model.slope);
    switch (model.arch) {
        case Arch::res1: return prelu_derivative(h, slope).cwiseProduct(u);
        case Arch::res2: {
            const VectorX<Scalar> pre = *layer.w * h;
            return layer.w->transpose() * prelu_derivative(pre, slope).cwiseProduct(u);
        }
        case Arch::res3: {
            const VectorX<Scalar> pre = *layer.w * h;
            return layer.w->transpose() * prelu_derivative(pre, Scalar(0)).cwiseProduct(u);
        }
    }
    return {};
}

/// q_0 = z, q_{k+1} = q_k + alpha V_{k+1} (dg/dh)(h_k) q_k, so q_L = (dh_L/dh_0) z.
template <class Scalar, LayerSource Tape, class Derived>
SensitivityTape<Scalar> forward_sensitivity(const ModelSpec& model, const Tape& tape, const Trajectory<Scalar>& traj,
                                            const Eigen::MatrixBase<Derived>& z) {
    if (!traj.ok()) throw std::invalid_argument("forward_sensitivity: trajectory overflowed");
    const int depth = tape.depth();
    if (traj.depth() != depth) throw std::invalid_argument("forward_sensitivity: trajectory/tape depth mismatch");
    SensitivityTape<Scalar> out;
    out.mode = SensitivityMode::forward;
    out.seq.resize(z.size(), depth + 1);
    out.seq.col(0) = z;
    for (int k = 0; k < depth; ++k) {
        const LayerView<Scalar> layer = tape.layer(k + 1);
        const VectorX<Scalar> jq = jacobian_vector(model, layer, traj.states.col(k), out.seq.col(k));
        out.seq.col(k + 1) = out.seq.col(k) + traj.alpha * (layer.v * jq);
        if (!out.seq.col(k + 1).allFinite()) {
            out.overflow = Overflow{k + 1};
            return out;
        }
    }
    return out;
}

/// p_k = p_{k+1} + alpha (dg/dh)(h_k)^T V_{k+1}^T p_{k+1}, from p_L down to p_0.
template <class Scalar, LayerSource Tape, class Derived>
SensitivityTape<Scalar> backward_gradient(const ModelSpec& model, const Tape& tape, const Trajectory<Scalar>& traj,
                                          const Eigen::MatrixBase<Derived>& terminal) {
    if (!traj.ok()) throw std::invalid_argument("backward_gradient: trajectory overflowed");
    const int depth = tape.depth();
    if (traj.depth() != depth) throw std::invalid_argument("backward_gradient: trajectory/tape depth mismatch");
    SensitivityTape<Scalar> out;
    out.mode = SensitivityMode::backward;
    out.seq.resize(terminal.size(), depth + 1);
    out.seq.col(depth) = terminal;
    VectorX<Scalar> vtp(terminal.size());
    for (int k = depth - 1; k >= 0; --k) {
        const LayerView<Scalar> layer = tape.layer(k + 1);
        vtp.noalias() = layer.v.transpose() * out.seq.col(k + 1);
        out.seq.col(k) = out.seq.col(k + 1) + traj.alpha * jacobian_transpose_vector(model, layer, traj.states.col(k), vtp);
        if (!out.seq.col(k).allFinite()) {
            out.overflow = Overflow{k};
            return out;
        }
    }
    return out;
}

/// Gradient of ||B h_L - y||^2 with respect to h_L.
template <class Scalar, class DerivedH, class DerivedY>
VectorX<Scalar> squared_loss_gradient(const Projections<Scalar>& proj, const Eigen::MatrixBase<DerivedH>& h_final,
                                      const Eigen::MatrixBase<DerivedY>& target) {
    if (proj.b.rows() != target.size()) throw std::invalid_argument("squared_loss_gradient: target has wrong size");
    return Scalar(2) * proj.b.transpose() * (proj.b * h_final - target);
}

template <class Scalar>
struct GradientRatios {
    Scalar relative_change = Scalar(0);  // ||p_0 - p_L|| / ||p_L||
    Scalar norm_ratio = Scalar(0);       // ||p_0|| / ||p_L||
    std::optional<Overflow> overflow;
};

/// Runs forward, forms p_L from the squared loss through B and propagates it back.
template <class Scalar, LayerSource Tape, class DerivedX, class DerivedY>
GradientRatios<Scalar> gradient_ratios(const ModelSpec& model, const Tape& tape, const Projections<Scalar>& proj,
                                       const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& target,
                                       const ScalingRule& rule) {
    GradientRatios<Scalar> out;
    const Trajectory<Scalar> traj = forward(model, tape, proj, x, rule);
    if (!traj.ok()) {
        out.overflow = traj.overflow;
        return out;
    }
    const VectorX<Scalar> p_final = squared_loss_gradient(proj, traj.final(), target);
    const Scalar pn = p_final.norm();
    if (!(pn > Scalar(0))) throw std::domain_error("gradient_ratio: zero terminal gradient");
    const SensitivityTape<Scalar> back = backward_gradient(model, tape, traj, p_final);
    if (!back.ok()) {
        out.overflow = back.overflow;
        return out;
    }
    out.relative_change = (back.at(0) - p_final).norm() / pn;
    out.norm_ratio = back.at(0).norm() / pn;
    return out;
}

/// ||p_0 - p_L|| / ||p_L||; throws std::overflow_error if a pass overflows.
template <class Scalar, LayerSource Tape, class DerivedX, class DerivedY>
Scalar gradient_ratio(const ModelSpec& model, const Tape& tape, const Projections<Scalar>& proj,
                      const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& target,
                      const ScalingRule& rule) {
    const auto r = gradient_ratios(model, tape, proj, x, target, rule);
    if (r.overflow) throw std::overflow_error("gradient_ratio: overflow at layer " + std::to_string(r.overflow->layer));
    return r.relative_change;
}

template <class Scalar>
struct ProbeEstimate {
    Scalar value = Scalar(0);
    Scalar std_error = Scalar(0);
    int probes = 0;
};

/**
 * Monte-Carlo estimate of ||p_0||^2 / ||p_L||^2 through forward-mode
 * sensitivities: with b = p_L / ||p_L|| and z ~ N(0, I),
 * E (b^T q_L(z))^2 = ||p_0||^2 / ||p_L||^2. The sum is normalized by
 * sum ||z||^2 / d, which makes the d = 1 case exact.
 */
template <class Scalar, LayerSource Tape, class DerivedX, class DerivedY>
ProbeEstimate<Scalar> estimate_ratio_forward(const ModelSpec& model, const Tape& tape, const Projections<Scalar>& proj,
                                             const Eigen::MatrixBase<DerivedX>& x,
                                             const Eigen::MatrixBase<DerivedY>& target, const ScalingRule& rule,
                                             int n_probes, Rng& rng) {
    if (n_probes < 1) throw std::invalid_argument("estimate_ratio_forward: n_probes must be >= 1");
    const Trajectory<Scalar> traj = forward(model, tape, proj, x, rule);
    if (!traj.ok()) throw std::overflow_error("estimate_ratio_forward: forward pass overflowed");
    const VectorX<Scalar> p_final = squared_loss_gradient(proj, traj.final(), target);
    const Scalar pn = p_final.norm();
    if (!(pn > Scalar(0))) throw std::domain_error("estimate_ratio_forward: zero terminal gradient");
    const VectorX<Scalar> b = p_final / pn;
    const Eigen::Index d = b.size();

    VectorX<Scalar> values(n_probes);
    Scalar z_mass = Scalar(0);
    VectorX<Scalar> z(d);
    for (int i = 0; i < n_probes; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) z(j) = static_cast<Scalar>(rng.normal());
        const SensitivityTape<Scalar> q = forward_sensitivity(model, tape, traj, z);
        if (!q.ok()) throw std::overflow_error("estimate_ratio_forward: sensitivity overflowed");
        const Scalar proj_q = b.dot(q.at(tape.depth()));
        values(i) = proj_q * proj_q;
        z_mass += z.squaredNorm() / static_cast<Scalar>(d);
    }
    ProbeEstimate<Scalar> est;
    est.probes = n_probes;
    est.value = values.sum() / z_mass;
    if (n_probes > 1) {
        const Scalar mean = values.mean();
        const Scalar var = (values.array() - mean).square().sum() / static_cast<Scalar>(n_probes - 1);
        est.std_error = std::sqrt(var / n_probes) * static_cast<Scalar>(n_probes) / z_mass;
    }
    return est;
}

}  // namespace resscale
