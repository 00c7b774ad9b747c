#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "layerkit/attention.hpp"
#include "layerkit/conv.hpp"
#include "layerkit/layer.hpp"
#include "layerkit/tensor.hpp"

// Analytic gradients of L = sum(grad_output (*) forward(input)) with
// respect to the input and every parameter tensor the kind uses.

namespace layerkit {

struct Gradients {
    Tensor input;
    std::vector<std::pair<std::string, Tensor>> params;

    const Tensor& param(const std::string& name) const {
        for (const auto& [n, t] : params)
            if (n == name) return t;
        throw ConfigError("gradients: no parameter named " + name);
    }
};

namespace detail {

inline void backward_pointwise(const Tensor& input, const LayerParams& params,
                               const Tensor& grad_output, Gradients& g) {
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      Din = input.extent(3);
    const Tensor& proj = params.projection;
    const std::size_t Dout = proj.extent(0);
    Tensor gproj = Tensor::zeros(proj.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t r = 0; r < Dout; ++r) {
                    const double go = grad_output.at4(b, y, x, r);
                    for (std::size_t c = 0; c < Din; ++c) {
                        g.input.at4(b, y, x, c) += proj.at2(r, c) * go;
                        gproj.at2(r, c) += go * input.at4(b, y, x, c);
                    }
                }
    g.params.emplace_back("projection", std::move(gproj));
}

inline void backward_token_mixing(const Tensor& input, const LayerParams& params,
                                  const Tensor& grad_output, Gradients& g) {
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      D = input.extent(3);
    const std::size_t N = H * W;
    const Tensor& mix = params.spatial_mix;
    Tensor gmix = Tensor::zeros(mix.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j)
                for (std::size_t d = 0; d < D; ++d) {
                    const double go = grad_output.at4(b, i / W, i % W, d);
                    g.input.at4(b, j / W, j % W, d) += mix.at2(i, j) * go;
                    gmix.at2(i, j) += go * input.at4(b, j / W, j % W, d);
                }
    g.params.emplace_back("spatial_mix", std::move(gmix));
}

// Shared by the static and dynamic depth-wise paths: conv gradients for a
// given kernel, accumulating the kernel gradient into gkernel.
inline void backward_depthwise_conv(const Tensor& input, const LayerSpec& spec,
                                    const Tensor& kernel, const Tensor& grad_output,
                                    std::size_t batch, Tensor& grad_input, Tensor& gkernel) {
    const std::size_t H = input.extent(1), W = input.extent(2), D = input.extent(3);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t j = 0; j < Nk; ++j) {
                std::size_t sy, sx;
                if (!tap_source(spec.geometry, H, W, y, x, static_cast<int>(j), sy, sx)) continue;
                for (std::size_t d = 0; d < D; ++d) {
                    const double go = grad_output.at4(batch, y, x, d);
                    grad_input.at4(batch, sy, sx, d) += kernel.at2(d, j) * go;
                    gkernel.at2(d, j) += go * input.at4(batch, sy, sx, d);
                }
            }
}

inline void backward_static_attention(const Tensor& input, const LayerSpec& spec,
                                      const LayerParams& params, const Tensor& grad_output,
                                      Gradients& g) {
    const WindowIndex win(input, spec.geometry);
    const std::size_t B = input.extent(0);
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = win.Kh * win.Kw;
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    Tensor gtable = Tensor::zeros(params.window_table.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t wi = 0; wi < win.windows(); ++wi)
            for (std::size_t q = 0; q < Nk; ++q) {
                std::size_t qy, qx;
                win.position(wi, q, qy, qx);
                for (std::size_t k = 0; k < Nk; ++k) {
                    std::size_t ky, kx;
                    win.position(wi, k, ky, kx);
                    for (std::size_t d = 0; d < D; ++d) {
                        const double go = grad_output.at4(b, qy, qx, d);
                        const std::size_t ti = ((wi * M + d / group) * Nk + q) * Nk + k;
                        g.input.at4(b, ky, kx, d) += params.window_table[ti] * go;
                        gtable[ti] += go * input.at4(b, ky, kx, d);
                    }
                }
            }
    g.params.emplace_back("window_table", std::move(gtable));
}

inline void backward_local_attention(const Tensor& input, const LayerSpec& spec,
                                     const LayerParams& params, const Tensor& grad_output,
                                     Gradients& g) {
    if (spec.use_qkv_projections)
        throw UnimplementedError(
            "layer_backward: local attention with q/k/v projections is not implemented");
    const AttentionWeights w = attention_weights(input, spec, params);
    const WindowIndex win(input, spec.geometry);
    const std::size_t B = input.extent(0), M = w.heads, Nk = w.slots;
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(group));

    Tensor gbias;
    if (spec.use_relative_position_bias) gbias = Tensor::zeros(params.position_bias.shape());

    std::vector<double> da(Nk), ds(Nk);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t wi = 0; wi < w.windows; ++wi)
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t q = 0; q < Nk; ++q) {
                    std::size_t qy, qx;
                    win.position(wi, q, qy, qx);
                    // dL/da_qk and the value path
                    for (std::size_t k = 0; k < Nk; ++k) {
                        std::size_t ky, kx;
                        win.position(wi, k, ky, kx);
                        double acc = 0.0;
                        for (std::size_t d = 0; d < group; ++d) {
                            const double go = grad_output.at4(b, qy, qx, m * group + d);
                            acc += go * input.at4(b, ky, kx, m * group + d);
                            g.input.at4(b, ky, kx, m * group + d) += w.at(b, wi, m, q, k) * go;
                        }
                        da[k] = acc;
                    }
                    // softmax Jacobian: ds_k = a_k (da_k - sum_k' a_k' da_k')
                    double mean = 0.0;
                    for (std::size_t k = 0; k < Nk; ++k) mean += w.at(b, wi, m, q, k) * da[k];
                    for (std::size_t k = 0; k < Nk; ++k)
                        ds[k] = w.at(b, wi, m, q, k) * (da[k] - mean);
                    // logit paths: query, key, bias
                    for (std::size_t k = 0; k < Nk; ++k) {
                        std::size_t ky, kx;
                        win.position(wi, k, ky, kx);
                        for (std::size_t d = 0; d < group; ++d) {
                            g.input.at4(b, qy, qx, m * group + d) +=
                                scale * ds[k] * input.at4(b, ky, kx, m * group + d);
                            g.input.at4(b, ky, kx, m * group + d) +=
                                scale * ds[k] * input.at4(b, qy, qx, m * group + d);
                        }
                        if (spec.use_relative_position_bias) {
                            const int dy = static_cast<int>(k / win.Kw) - static_cast<int>(q / win.Kw);
                            const int dx = static_cast<int>(k % win.Kw) - static_cast<int>(q % win.Kw);
                            gbias.at2(m, static_cast<std::size_t>(
                                             spec.geometry.offset_index(dy, dx))) += ds[k];
                        }
                    }
                }
    if (spec.use_relative_position_bias) g.params.emplace_back("position_bias", std::move(gbias));
}

inline void backward_dynamic_depthwise(const Tensor& input, const LayerSpec& spec,
                                       const LayerParams& params, const Tensor& grad_output,
                                       Gradients& g) {
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      D = input.extent(3);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const Tensor& P1 = params.predictor_reduce;
    const Tensor& P2 = params.predictor_expand;
    const std::size_t hidden = P1.extent(0);
    const std::size_t rows = (params.predictor_per_group ? M : D) * Nk;

    Tensor gP1 = Tensor::zeros(P1.shape());
    Tensor gP2 = Tensor::zeros(P2.shape());

    for (std::size_t b = 0; b < B; ++b) {
        // forward intermediates for this instance
        std::vector<double> pooled(D, 0.0);
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t d = 0; d < D; ++d) pooled[d] += input.at4(b, y, x, d);
        for (double& v : pooled) v /= static_cast<double>(H * W);
        std::vector<double> u(hidden, 0.0);
        for (std::size_t r = 0; r < hidden; ++r)
            for (std::size_t d = 0; d < D; ++d) u[r] += P1.at2(r, d) * pooled[d];
        std::vector<double> h(hidden);
        for (std::size_t r = 0; r < hidden; ++r)
            h[r] = params.predictor_hidden_relu ? std::max(0.0, u[r]) : u[r];
        const Tensor kernel = predict_dynamic_kernel(input, b, spec, params);

        // convolution path
        Tensor gkernel = Tensor::zeros({D, Nk});
        backward_depthwise_conv(input, spec, kernel, grad_output, b, g.input, gkernel);

        // predictor path
        std::vector<double> draw(rows, 0.0);
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t j = 0; j < Nk; ++j)
                draw[(params.predictor_per_group ? d / group : d) * Nk + j] += gkernel.at2(d, j);
        std::vector<double> dh(hidden, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < hidden; ++c) {
                dh[c] += P2.at2(r, c) * draw[r];
                gP2.at2(r, c) += draw[r] * h[c];
            }
        std::vector<double> du(hidden);
        for (std::size_t r = 0; r < hidden; ++r)
            du[r] = (params.predictor_hidden_relu && u[r] <= 0.0) ? 0.0 : dh[r];
        std::vector<double> dpooled(D, 0.0);
        for (std::size_t r = 0; r < hidden; ++r)
            for (std::size_t d = 0; d < D; ++d) {
                dpooled[d] += P1.at2(r, d) * du[r];
                gP1.at2(r, d) += du[r] * pooled[d];
            }
        const double inv = 1.0 / static_cast<double>(H * W);
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t d = 0; d < D; ++d)
                    g.input.at4(b, y, x, d) += inv * dpooled[d];
    }
    g.params.emplace_back("predictor_reduce", std::move(gP1));
    g.params.emplace_back("predictor_expand", std::move(gP2));
}

inline void backward_inhomogeneous(const Tensor& input, const LayerSpec& spec,
                                   const LayerParams& params, const Tensor& grad_output,
                                   Gradients& g) {
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      D = input.extent(3);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const Tensor& W1 = params.point_reduce;
    const Tensor& W2 = params.point_expand;
    const std::size_t hidden = W1.extent(0);

    Tensor gW1 = Tensor::zeros(W1.shape());
    Tensor gW2 = Tensor::zeros(W2.shape());
    std::vector<double> u(hidden), h(hidden), wts(M * Nk), dwts(M * Nk), dh(hidden), du(hidden);

    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                for (std::size_t r = 0; r < hidden; ++r) {
                    double acc = 0.0;
                    for (std::size_t d = 0; d < D; ++d) acc += W1.at2(r, d) * input.at4(b, y, x, d);
                    u[r] = acc;
                    h[r] = params.predictor_hidden_relu ? std::max(0.0, acc) : acc;
                }
                for (std::size_t r = 0; r < M * Nk; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < hidden; ++c) acc += W2.at2(r, c) * h[c];
                    wts[r] = acc;
                    dwts[r] = 0.0;
                }
                for (std::size_t j = 0; j < Nk; ++j) {
                    std::size_t sy, sx;
                    if (!tap_source(spec.geometry, H, W, y, x, static_cast<int>(j), sy, sx))
                        continue;
                    for (std::size_t d = 0; d < D; ++d) {
                        const double go = grad_output.at4(b, y, x, d);
                        g.input.at4(b, sy, sx, d) += wts[(d / group) * Nk + j] * go;
                        dwts[(d / group) * Nk + j] += go * input.at4(b, sy, sx, d);
                    }
                }
                for (std::size_t r = 0; r < hidden; ++r) dh[r] = 0.0;
                for (std::size_t r = 0; r < M * Nk; ++r)
                    for (std::size_t c = 0; c < hidden; ++c) {
                        dh[c] += W2.at2(r, c) * dwts[r];
                        gW2.at2(r, c) += dwts[r] * h[c];
                    }
                for (std::size_t r = 0; r < hidden; ++r)
                    du[r] = (params.predictor_hidden_relu && u[r] <= 0.0) ? 0.0 : dh[r];
                for (std::size_t r = 0; r < hidden; ++r)
                    for (std::size_t d = 0; d < D; ++d) {
                        g.input.at4(b, y, x, d) += W1.at2(r, d) * du[r];
                        gW1.at2(r, d) += du[r] * input.at4(b, y, x, d);
                    }
            }
    g.params.emplace_back("point_reduce", std::move(gW1));
    g.params.emplace_back("point_expand", std::move(gW2));
}

}  // namespace detail

inline Gradients layer_backward(const LayerSpec& spec, const LayerParams& params,
                                const Tensor& input, const Tensor& grad_output) {
    spec.validate();
    if (input.shape() != grad_output.shape() && spec.kind != LayerKind::pointwise_conv)
        throw ShapeError("layer_backward: grad_output shape != input shape");
    Gradients g;
    g.input = Tensor::zeros(input.shape());
    switch (spec.kind) {
        case LayerKind::pointwise_conv:
            detail::backward_pointwise(input, params, grad_output, g);
            break;
        case LayerKind::token_mixing_mlp:
            detail::backward_token_mixing(input, params, grad_output, g);
            break;
        case LayerKind::depthwise_conv: {
            Tensor gkernel = Tensor::zeros(params.kernel.shape());
            for (std::size_t b = 0; b < input.extent(0); ++b)
                detail::backward_depthwise_conv(input, spec, params.kernel, grad_output, b,
                                                g.input, gkernel);
            g.params.emplace_back("kernel", std::move(gkernel));
            break;
        }
        case LayerKind::static_local_attention:
            detail::backward_static_attention(input, spec, params, grad_output, g);
            break;
        case LayerKind::local_attention:
            detail::backward_local_attention(input, spec, params, grad_output, g);
            break;
        case LayerKind::dynamic_depthwise_conv:
            detail::backward_dynamic_depthwise(input, spec, params, grad_output, g);
            break;
        case LayerKind::inhomogeneous_dynamic_conv:
            detail::backward_inhomogeneous(input, spec, params, grad_output, g);
            break;
    }
    return g;
}

}  // namespace layerkit
