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

#include <Eigen/Core>

#include <optional>
#include <stdexcept>

namespace resscale {

/// Hidden states h_0..h_L stored as the columns of a width x (L + 1) matrix.
/// On overflow, columns past the offending layer are left unset.
template <class Scalar>
struct Trajectory {
    MatrixX<Scalar> states;
    Scalar alpha = Scalar(0);
    std::optional<Overflow> overflow;

    int depth() const { return static_cast<int>(states.cols()) - 1; }
    auto initial() const { return states.col(0); }
    auto final() const { return states.col(states.cols() - 1); }
    bool ok() const { return !overflow.has_value(); }
};

/// Parametric ReLU: x for x > 0, slope * x otherwise.
template <class Derived>
auto prelu(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar slope) {
    using S = typename Derived::Scalar;
    return x.unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; });
}

/// Derivative of the parametric ReLU, taking the left branch at 0.
template <class Derived>
auto prelu_derivative(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar slope) {
    using S = typename Derived::Scalar;
    return x.unaryExpr([slope](S v) { return v > S(0) ? S(1) : slope; });
}

namespace detail {

template <class Scalar>
void check_layer(const ModelSpec& model, const LayerView<Scalar>& layer, Eigen::Index width) {
    if (layer.v.rows() != width || layer.v.cols() != width) throw std::invalid_argument("layer V has wrong shape");
    if (has_inner_weights(model.arch)) {
        if (!layer.w) throw std::invalid_argument("res2/res3 layers require W");
        if (layer.w->rows() != width || layer.w->cols() != width) throw std::invalid_argument("layer W has wrong shape");
    }
}

}  // namespace detail

/// g(h, theta) for the configured architecture.
template <class Scalar, class Derived>
VectorX<Scalar> g_apply(const ModelSpec& model, const Eigen::MatrixBase<Derived>& h, const LayerView<Scalar>& layer) {
    detail::check_layer(model, layer, h.size());
    const Scalar slope = static_cast<Scalar>(model.slope);
    switch (model.arch) {
        case Arch::res1: return prelu(h, slope);
        case Arch::res2: return prelu(VectorX<Scalar>(*layer.w * h), slope);
        case Arch::res3: return (*layer.w * h).cwiseMax(Scalar(0));
    }
    return {};
}

template <class Scalar, class Derived>
VectorX<Scalar> embed_input(const Projections<Scalar>& proj, const Eigen::MatrixBase<Derived>& x) {
    if (proj.a.cols() != x.size()) throw std::invalid_argument("embed_input: input has wrong size");
    return proj.a * x;
}

template <class Scalar, class Derived>
VectorX<Scalar> readout(const Projections<Scalar>& proj, const Eigen::MatrixBase<Derived>& h) {
    if (proj.b.cols() != h.size()) throw std::invalid_argument("readout: state has wrong size");
    return proj.b * h;
}

/// h_{k+1} = h_k + alpha V_{k+1} g(h_k, theta_{k+1}).
template <class Scalar, LayerSource Tape, class Derived>
Trajectory<Scalar> forward_from_state(const ModelSpec& model, const Tape& tape, const Eigen::MatrixBase<Derived>& h0,
                                      Scalar alpha) {
    const int depth = tape.depth();
    const Eigen::Index d = h0.size();
    Trajectory<Scalar> traj;
    traj.alpha = alpha;
    traj.states.resize(d, depth + 1);
    traj.states.col(0) = h0;
    if (!h0.allFinite()) {
        traj.overflow = Overflow{0};
        return traj;
    }
    VectorX<Scalar> inner(d);
    VectorX<Scalar> g(d);
    const Scalar slope = static_cast<Scalar>(model.slope);
    for (int k = 0; k < depth; ++k) {
        const LayerView<Scalar> layer = tape.layer(k + 1);
        detail::check_layer(model, layer, d);
        auto hk = traj.states.col(k);
        switch (model.arch) {
            case Arch::res1: g = prelu(hk, slope); break;
            case Arch::res2:
                inner.noalias() = *layer.w * hk;
                g = prelu(inner, slope);
                break;
            case Arch::res3:
                inner.noalias() = *layer.w * hk;
                g = inner.cwiseMax(Scalar(0));
                break;
        }
        auto next = traj.states.col(k + 1);
        next = hk;
        next.noalias() += alpha * (layer.v * g);
        if (!next.allFinite()) {
            traj.overflow = Overflow{k + 1};
            return traj;
        }
    }
    return traj;
}

template <class Scalar, LayerSource Tape, class Derived>
Trajectory<Scalar> forward(const ModelSpec& model, const Tape& tape, const Projections<Scalar>& proj,
                           const Eigen::MatrixBase<Derived>& x, const ScalingRule& rule) {
    const VectorX<Scalar> h0 = embed_input(proj, x);
    return forward_from_state(model, tape, h0, static_cast<Scalar>(rule.alpha(tape.depth())));
}

/// ||h_L - h_0|| / ||h_0||.
template <class Scalar>
Scalar norm_ratio_output(const Trajectory<Scalar>& traj) {
    const Scalar n0 = traj.initial().norm();
    if (!(n0 > Scalar(0))) throw std::domain_error("norm_ratio_output: zero initial state");
    return (traj.final() - traj.initial()).norm() / n0;
}

/// ||h_L|| / ||h_0||.
template <class Scalar>
Scalar norm_ratio_final(const Trajectory<Scalar>& traj) {
    const Scalar n0 = traj.initial().norm();
    if (!(n0 > Scalar(0))) throw std::domain_error("norm_ratio_final: zero initial state");
    return traj.final().norm() / n0;
}

/// max_k ||h_k - h_0|| / ||h_0||.
template <class Scalar>
Scalar max_norm_ratio(const Trajectory<Scalar>& traj) {
    const Scalar n0 = traj.initial().norm();
    if (!(n0 > Scalar(0))) throw std::domain_error("max_norm_ratio: zero initial state");
    return (traj.states.colwise() - traj.initial()).colwise().norm().maxCoeff() / n0;
}

}  // namespace resscale
