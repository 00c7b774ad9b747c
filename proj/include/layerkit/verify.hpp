#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "layerkit/backward.hpp"
#include "layerkit/conv.hpp"
#include "layerkit/dense_ops.hpp"
#include "layerkit/layer.hpp"
#include "layerkit/tensor.hpp"

// Property-check engine: finite-difference gradient oracle, layer-vs-dense
// equivalence, equivariance and sharing-structure checkers. Every check is
// deterministic given (seed, shapes) and reports its worst-case metric.

namespace layerkit {

struct CheckReport {
    std::string name;
    bool pass = false;
    double metric = 0.0;     // max abs diff, or max relative error for gradients
    double tolerance = 0.0;
    std::string instance;    // shapes / seed description

    static CheckReport make(std::string name, double metric, double tolerance,
                            std::string instance) {
        CheckReport r;
        r.name = std::move(name);
        r.metric = metric;
        r.tolerance = tolerance;
        r.pass = metric <= tolerance;
        r.instance = std::move(instance);
        return r;
    }
};

// Central differences of L = sum(grad_output (*) forward) per element.
inline Gradients finite_difference_grad(const LayerSpec& spec, const LayerParams& params,
                                        const Tensor& input, const Tensor& grad_output,
                                        double h = 1e-5) {
    if (!(h > 0.0)) throw ConfigError("finite_difference_grad: h must be positive");
    const auto loss = [&](const Tensor& in, const LayerParams& p) {
        const Tensor y = layer_forward(in, spec, p);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += grad_output[i] * y[i];
        return acc;
    };

    Gradients g;
    g.input = Tensor::zeros(input.shape());
    {
        Tensor probe = input;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            const double v = probe[i];
            probe[i] = v + h;
            const double up = loss(probe, params);
            probe[i] = v - h;
            const double down = loss(probe, params);
            probe[i] = v;
            g.input[i] = (up - down) / (2.0 * h);
        }
    }
    LayerParams mutable_params = params;
    for (auto& [name, tensor] : trainable_params(spec, mutable_params)) {
        Tensor grad = Tensor::zeros(tensor->shape());
        for (std::size_t i = 0; i < tensor->size(); ++i) {
            const double v = (*tensor)[i];
            (*tensor)[i] = v + h;
            const double up = loss(input, mutable_params);
            (*tensor)[i] = v - h;
            const double down = loss(input, mutable_params);
            (*tensor)[i] = v;
            grad[i] = (up - down) / (2.0 * h);
        }
        g.params.emplace_back(name, std::move(grad));
    }
    return g;
}

// |a-f| / max(|a|, |f|, 1e-8), the robust gradient-check metric.
inline double max_relative_error(const Tensor& analytic, const Tensor& fd) {
    if (analytic.shape() != fd.shape()) throw ShapeError("max_relative_error: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i], f = fd[i];
        worst = std::max(worst, std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-8}));
    }
    return worst;
}

inline CheckReport check_gradients(const LayerSpec& spec, const LayerParams& params,
                                   const Tensor& input, const Tensor& grad_output,
                                   double tolerance = 1e-4, double h = 1e-5,
                                   const std::string& tag = "") {
    const Gradients analytic = layer_backward(spec, params, input, grad_output);
    const Gradients fd = finite_difference_grad(spec, params, input, grad_output, h);
    double worst = max_relative_error(analytic.input, fd.input);
    for (const auto& [name, t] : fd.params)
        worst = std::max(worst, max_relative_error(analytic.param(name), t));
    return CheckReport::make(std::string("grad/") + layer_kind_name(spec.kind), worst, tolerance,
                             tag);
}

// Materialize the matching dense operator for a layer kind. Configuration
// error when no constructor exists (inhomogeneous dynamic).
inline DenseOperator dense_operator_for(const LayerSpec& spec, const LayerParams& params,
                                        const Tensor& input) {
    const std::size_t H = input.extent(1), W = input.extent(2);
    switch (spec.kind) {
        case LayerKind::depthwise_conv:
            return depthwise_dense_operator_2d(params.kernel, spec.geometry, H, W);
        case LayerKind::dynamic_depthwise_conv:
            return depthwise_dense_operator_2d(predict_dynamic_kernel(input, 0, spec, params),
                                               spec.geometry, H, W);
        case LayerKind::local_attention:
            return local_attention_dense_operator(input, spec, params);
        case LayerKind::static_local_attention:
            return static_attention_dense_operator(spec, params, H, W);
        case LayerKind::pointwise_conv:
            return sepmlp_spatial_operator(params.projection, H * W);
        case LayerKind::token_mixing_mlp:
            return sepmlp_channel_operator(params.spatial_mix, input.extent(3));
        case LayerKind::inhomogeneous_dynamic_conv:
            throw ConfigError("no dense-operator constructor for inhomogeneous dynamic conv");
    }
    throw ConfigError("dense_operator_for: unknown kind");
}

inline CheckReport check_oracle_equivalence(const LayerSpec& spec, const LayerParams& params,
                                            const Tensor& input, double tolerance = 1e-10,
                                            const std::string& tag = "") {
    if (input.extent(0) != 1)
        throw ConfigError("check_oracle_equivalence: single-image inputs only");
    const DenseOperator op = dense_operator_for(spec, params, input);
    const Tensor direct = layer_forward(input, spec, params);
    const std::vector<double> flat = flatten_for(op, input);
    const Tensor via_matrix = unflatten_from(op, dense_apply(op, flat), input.extent(1),
                                             input.extent(2), input.extent(3));
    return CheckReport::make(std::string("oracle/") + layer_kind_name(spec.kind),
                             max_abs_diff(direct, via_matrix), tolerance, tag);
}

enum class EquivarianceVerdict { applicable, inapplicable };

// forward(shift(x)) vs shift(forward(x)). The comparison region depends on
// the layer: full map for circular depth-wise and block-multiple attention
// shifts, interior margin for zero-padded depth-wise.
inline CheckReport check_translation_equivariance(const LayerSpec& spec, const LayerParams& params,
                                                  const Tensor& input, int shift_y, int shift_x,
                                                  EquivarianceVerdict* verdict = nullptr,
                                                  double tolerance = 1e-12) {
    const std::size_t H = input.extent(1), W = input.extent(2), C = input.extent(3),
                      B = input.extent(0);
    std::ostringstream tag;
    tag << "shift=(" << shift_y << "," << shift_x << ") map=" << H << "x" << W << "x" << C;
    if (verdict) *verdict = EquivarianceVerdict::applicable;

    const bool attention_like = spec.geometry.mode == WindowMode::non_overlapping_partition;
    if (attention_like &&
        (shift_y % spec.geometry.window_h != 0 || shift_x % spec.geometry.window_w != 0)) {
        if (verdict) *verdict = EquivarianceVerdict::inapplicable;
        return CheckReport::make(std::string("equivariance/") + layer_kind_name(spec.kind) +
                                     "/non-block-shift",
                                 0.0, tolerance, tag.str());
    }

    const Tensor shifted_then_fwd = layer_forward(cyclic_shift(input, shift_y, shift_x), spec, params);
    const Tensor fwd_then_shifted = cyclic_shift(layer_forward(input, spec, params), shift_y, shift_x);

    double worst = 0.0;
    if (!attention_like && spec.geometry.padding == Padding::zero) {
        // compare only where neither evaluation touched the zero boundary
        const int ry = (spec.geometry.window_h - 1) / 2, rx = (spec.geometry.window_w - 1) / 2;
        const auto wrap = [](long v, std::size_t n) {
            long m = v % static_cast<long>(n);
            return static_cast<std::size_t>(m < 0 ? m + static_cast<long>(n) : m);
        };
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) {
                    const bool inner = y >= static_cast<std::size_t>(ry) &&
                                       y + static_cast<std::size_t>(ry) < H &&
                                       x >= static_cast<std::size_t>(rx) &&
                                       x + static_cast<std::size_t>(rx) < W;
                    const std::size_t py = wrap(static_cast<long>(y) - shift_y, H);
                    const std::size_t px = wrap(static_cast<long>(x) - shift_x, W);
                    const bool pre_inner = py >= static_cast<std::size_t>(ry) &&
                                           py + static_cast<std::size_t>(ry) < H &&
                                           px >= static_cast<std::size_t>(rx) &&
                                           px + static_cast<std::size_t>(rx) < W;
                    if (!inner || !pre_inner) continue;
                    for (std::size_t c = 0; c < C; ++c)
                        worst = std::max(worst,
                                         std::abs(shifted_then_fwd.at4(b, y, x, c) -
                                                  fwd_then_shifted.at4(b, y, x, c)));
                }
    } else {
        worst = max_abs_diff(shifted_then_fwd, fwd_then_shifted);
    }
    return CheckReport::make(std::string("equivariance/") + layer_kind_name(spec.kind), worst,
                             tolerance, tag.str());
}

// Verifies the sharing pattern a kind claims: head-group constancy across
// channels for attention kinds, position constancy for depth-wise kinds.
inline CheckReport check_sharing_structure(const LayerSpec& spec, const LayerParams& params,
                                           const Tensor& input, const std::string& tag = "") {
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const Tensor w = extract_dynamic_weights(input, spec, params);
    const std::size_t N = w.extent(0);
    double worst = 0.0;
    const bool channel_shared = spec.kind == LayerKind::local_attention ||
                                spec.kind == LayerKind::static_local_attention ||
                                spec.kind == LayerKind::inhomogeneous_dynamic_conv;
    const bool position_shared = spec.kind == LayerKind::depthwise_conv ||
                                 spec.kind == LayerKind::dynamic_depthwise_conv;
    if (channel_shared) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < Nk; ++j)
                for (std::size_t d = 0; d < D; ++d) {
                    const std::size_t anchor = (d / group) * group;
                    worst = std::max(worst, std::abs(w[(i * Nk + j) * D + d] -
                                                     w[(i * Nk + j) * D + anchor]));
                }
    }
    if (position_shared) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < Nk; ++j)
                for (std::size_t d = 0; d < D; ++d)
                    worst = std::max(worst, std::abs(w[(i * Nk + j) * D + d] - w[(j)*D + d]));
    }
    return CheckReport::make(std::string("sharing/") + layer_kind_name(spec.kind), worst, 0.0,
                             tag);
}

// Dynamic kinds must produce different weights on different inputs; static
// kinds identical ones. Reports pass/fail with the observed max diff.
inline CheckReport check_dynamic_vs_static(const LayerSpec& spec, const LayerParams& params,
                                           const Tensor& input_a, const Tensor& input_b,
                                           const std::string& tag = "") {
    const Tensor wa = extract_dynamic_weights(input_a, spec, params);
    const Tensor wb = extract_dynamic_weights(input_b, spec, params);
    const double diff = max_abs_diff(wa, wb);
    const bool dynamic_kind = spec.kind == LayerKind::local_attention ||
                              spec.kind == LayerKind::dynamic_depthwise_conv ||
                              spec.kind == LayerKind::inhomogeneous_dynamic_conv;
    CheckReport r;
    r.name = std::string("dynamic/") + layer_kind_name(spec.kind);
    r.metric = diff;
    r.tolerance = dynamic_kind ? 1e-12 : 0.0;  // dynamic: diff must exceed; static: diff == 0
    r.pass = dynamic_kind ? diff > 1e-12 : diff == 0.0;
    r.instance = tag;
    return r;
}

// Locality probe: perturbing position p must leave outputs outside the
// windows containing p untouched.
inline CheckReport check_locality(const LayerSpec& spec, const LayerParams& params,
                                  const Tensor& input, std::size_t py, std::size_t px,
                                  const std::string& tag = "") {
    const std::size_t H = input.extent(1), W = input.extent(2), C = input.extent(3);
    Tensor perturbed = input;
    for (std::size_t c = 0; c < C; ++c) perturbed.at4(0, py, px, c) += 1.0;
    const Tensor base = layer_forward(input, spec, params);
    const Tensor poked = layer_forward(perturbed, spec, params);
    double leak = 0.0;
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
            bool in_reach;
            if (spec.geometry.mode == WindowMode::non_overlapping_partition) {
                in_reach = (y / spec.geometry.window_h == py / spec.geometry.window_h) &&
                           (x / spec.geometry.window_w == px / spec.geometry.window_w);
            } else {
                const long dy = static_cast<long>(y) - static_cast<long>(py);
                const long dx = static_cast<long>(x) - static_cast<long>(px);
                long wy = std::abs(dy), wx = std::abs(dx);
                if (spec.geometry.padding == Padding::circular) {
                    wy = std::min(wy, static_cast<long>(H) - wy);
                    wx = std::min(wx, static_cast<long>(W) - wx);
                }
                in_reach = wy <= (spec.geometry.window_h - 1) / 2 &&
                           wx <= (spec.geometry.window_w - 1) / 2;
                // dynamic kinds see every position through pooling/prediction
                if (spec.kind == LayerKind::dynamic_depthwise_conv ||
                    spec.kind == LayerKind::inhomogeneous_dynamic_conv)
                    in_reach = true;
            }
            if (spec.kind == LayerKind::local_attention) {
                // dynamic attention weights couple the whole window; covered above
            }
            if (in_reach) continue;
            for (std::size_t c = 0; c < C; ++c)
                leak = std::max(leak, std::abs(base.at4(0, y, x, c) - poked.at4(0, y, x, c)));
        }
    return CheckReport::make(std::string("locality/") + layer_kind_name(spec.kind), leak, 0.0,
                             tag);
}

}  // namespace layerkit
