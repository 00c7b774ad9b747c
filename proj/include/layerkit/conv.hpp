#pragma once

#include <cmath>
#include <vector>

#include "layerkit/attention.hpp"
#include "layerkit/layer.hpp"
#include "layerkit/tensor.hpp"

namespace layerkit {

namespace detail {

// Resolve the source position of window slot j relative to output position
// (y, x). Returns false when the tap falls outside a zero-padded map.
inline bool tap_source(const WindowGeometry& g, std::size_t H, std::size_t W, std::size_t y,
                       std::size_t x, int j, std::size_t& sy, std::size_t& sx) {
    int dy, dx;
    g.slot_offset(j, dy, dx);
    long py = static_cast<long>(y) + dy;
    long px = static_cast<long>(x) + dx;
    if (g.padding == Padding::circular) {
        py = ((py % static_cast<long>(H)) + static_cast<long>(H)) % static_cast<long>(H);
        px = ((px % static_cast<long>(W)) + static_cast<long>(W)) % static_cast<long>(W);
    } else if (py < 0 || py >= static_cast<long>(H) || px < 0 || px >= static_cast<long>(W)) {
        return false;
    }
    sy = static_cast<std::size_t>(py);
    sx = static_cast<std::size_t>(px);
    return true;
}

}  // namespace detail

// Depth-wise convolution: channel d only sees channel d of the input,
// with one Nk-tap kernel per channel shared across positions.
inline Tensor depthwise_conv_with_kernel(const Tensor& input, const LayerSpec& spec,
                                         const Tensor& kernel) {
    spec.validate();
    if (input.rank() != 4) throw ShapeError("depthwise: expected (B,H,W,C)");
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      D = input.extent(3);
    if (D != static_cast<std::size_t>(spec.channels))
        throw ShapeError("depthwise: channel extent != spec.channels");
    if (spec.geometry.mode != WindowMode::dense_sliding)
        throw GeometryError("depthwise convolution requires dense_sliding geometry");
    spec.geometry.validate(H, W);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    if (kernel.rank() != 2 || kernel.extent(0) != D || kernel.extent(1) != Nk)
        throw ShapeError("depthwise: kernel must be (D, Nk)");

    Tensor out = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t j = 0; j < Nk; ++j) {
                    std::size_t sy, sx;
                    if (!detail::tap_source(spec.geometry, H, W, y, x, static_cast<int>(j), sy, sx))
                        continue;
                    for (std::size_t d = 0; d < D; ++d)
                        out.at4(b, y, x, d) += kernel.at2(d, j) * input.at4(b, sy, sx, d);
                }
    return out;
}

inline Tensor depthwise_conv_forward(const Tensor& input, const LayerSpec& spec,
                                     const LayerParams& params) {
    return depthwise_conv_with_kernel(input, spec, params.kernel);
}

// Kernel prediction for the homogeneous dynamic variant: global average
// pool, reduce to D/4, rectify, expand to per-channel (or per-group)
// kernels. One kernel set per image instance.
inline Tensor predict_dynamic_kernel(const Tensor& input, std::size_t batch, const LayerSpec& spec,
                                     const LayerParams& params) {
    const std::size_t H = input.extent(1), W = input.extent(2), D = input.extent(3);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const Tensor& P1 = params.predictor_reduce;
    const Tensor& P2 = params.predictor_expand;
    if (P1.rank() != 2 || P1.extent(1) != D)
        throw ShapeError("dynamic depthwise: predictor_reduce must be (hidden, D)");
    const std::size_t hidden = P1.extent(0);
    const std::size_t rows = (params.predictor_per_group ? M : D) * Nk;
    if (P2.rank() != 2 || P2.extent(0) != rows || P2.extent(1) != hidden)
        throw ShapeError("dynamic depthwise: predictor_expand has wrong shape");

    std::vector<double> pooled(D, 0.0);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t d = 0; d < D; ++d) pooled[d] += input.at4(batch, y, x, d);
    for (double& v : pooled) v /= static_cast<double>(H * W);

    std::vector<double> h(hidden, 0.0);
    for (std::size_t r = 0; r < hidden; ++r)
        for (std::size_t d = 0; d < D; ++d) h[r] += P1.at2(r, d) * pooled[d];
    if (params.predictor_hidden_relu)
        for (double& v : h) v = std::max(0.0, v);

    std::vector<double> raw(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < hidden; ++c) raw[r] += P2.at2(r, c) * h[c];

    Tensor kernel = Tensor::zeros({D, Nk});
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t j = 0; j < Nk; ++j)
            kernel.at2(d, j) = params.predictor_per_group ? raw[(d / group) * Nk + j]
                                                          : raw[d * Nk + j];
    return kernel;
}

inline Tensor dynamic_depthwise_forward(const Tensor& input, const LayerSpec& spec,
                                        const LayerParams& params) {
    spec.validate();
    if (input.rank() != 4) throw ShapeError("dynamic depthwise: expected (B,H,W,C)");
    const std::size_t B = input.extent(0);
    Tensor out = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < B; ++b) {
        const Tensor kernel = predict_dynamic_kernel(input, b, spec, params);
        // one-image view, convolved with this instance's kernels
        Tensor img({1, input.extent(1), input.extent(2), input.extent(3)},
                   std::vector<double>(input.data() + b * input.size() / B,
                                       input.data() + (b + 1) * input.size() / B));
        Tensor y = depthwise_conv_with_kernel(img, spec, kernel);
        for (std::size_t i = 0; i < y.size(); ++i) out.data()[b * y.size() + i] = y[i];
    }
    return out;
}

// Inhomogeneous dynamic weights: two point-wise projections predict M*Nk
// weights at every position, shared within each channel group; aggregation
// over the sliding window with no softmax.
inline Tensor inhomogeneous_dynamic_forward(const Tensor& input, const LayerSpec& spec,
                                            const LayerParams& params) {
    spec.validate();
    if (input.rank() != 4) throw ShapeError("inhomogeneous dynamic: expected (B,H,W,C)");
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      D = input.extent(3);
    if (D != static_cast<std::size_t>(spec.channels))
        throw ShapeError("inhomogeneous dynamic: channel extent != spec.channels");
    if (spec.geometry.mode != WindowMode::dense_sliding)
        throw GeometryError("inhomogeneous dynamic requires dense_sliding geometry");
    spec.geometry.validate(H, W);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const Tensor& W1 = params.point_reduce;
    const Tensor& W2 = params.point_expand;
    if (W1.rank() != 2 || W1.extent(1) != D)
        throw ShapeError("inhomogeneous dynamic: point_reduce must be (hidden, D)");
    const std::size_t hidden = W1.extent(0);
    if (W2.rank() != 2 || W2.extent(0) != M * Nk || W2.extent(1) != hidden)
        throw ShapeError("inhomogeneous dynamic: point_expand must be (M*Nk, hidden)");

    Tensor out = Tensor::zeros(input.shape());
    std::vector<double> h(hidden), wts(M * Nk);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                for (std::size_t r = 0; r < hidden; ++r) {
                    double acc = 0.0;
                    for (std::size_t d = 0; d < D; ++d) acc += W1.at2(r, d) * input.at4(b, y, x, d);
                    h[r] = params.predictor_hidden_relu ? std::max(0.0, acc) : acc;
                }
                for (std::size_t r = 0; r < M * Nk; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < hidden; ++c) acc += W2.at2(r, c) * h[c];
                    wts[r] = acc;
                }
                for (std::size_t j = 0; j < Nk; ++j) {
                    std::size_t sy, sx;
                    if (!detail::tap_source(spec.geometry, H, W, y, x, static_cast<int>(j), sy, sx))
                        continue;
                    for (std::size_t d = 0; d < D; ++d)
                        out.at4(b, y, x, d) += wts[(d / group) * Nk + j] * input.at4(b, sy, sx, d);
                }
            }
    return out;
}

// Point-wise 1x1 convolution: per-position matrix multiply, no spatial mixing.
inline Tensor pointwise_conv_forward(const Tensor& input, const LayerSpec& spec,
                                     const LayerParams& params) {
    spec.validate();
    if (input.rank() != 4) throw ShapeError("pointwise: expected (B,H,W,C)");
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      Din = input.extent(3);
    const Tensor& proj = params.projection;
    if (proj.rank() != 2 || proj.extent(1) != Din)
        throw ShapeError("pointwise: projection must be (D_out, D_in)");
    const std::size_t Dout = proj.extent(0);
    Tensor out = Tensor::zeros({B, H, W, Dout});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t r = 0; r < Dout; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < Din; ++c)
                        acc += proj.at2(r, c) * input.at4(b, y, x, c);
                    out.at4(b, y, x, r) = acc;
                }
    return out;
}

// Token-mixing MLP: each channel's spatial vector multiplied by one shared
// NxN matrix.
inline Tensor token_mixing_mlp_forward(const Tensor& input, const LayerSpec& spec,
                                       const LayerParams& params) {
    spec.validate();
    if (input.rank() != 4) throw ShapeError("token mixing: expected (B,H,W,C)");
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      D = input.extent(3);
    const std::size_t N = H * W;
    const Tensor& mix = params.spatial_mix;
    if (mix.rank() != 2 || mix.extent(0) != N || mix.extent(1) != N)
        throw ShapeError("token mixing: spatial_mix must be NxN with N = H*W");
    Tensor out = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const double wij = mix.at2(i, j);
                if (wij == 0.0) continue;
                for (std::size_t d = 0; d < D; ++d)
                    out.at4(b, i / W, i % W, d) += wij * input.at4(b, j / W, j % W, d);
            }
    return out;
}

// Dispatcher used by the verification harness and the CLI.
inline Tensor layer_forward(const Tensor& input, const LayerSpec& spec, const LayerParams& params) {
    switch (spec.kind) {
        case LayerKind::local_attention: return local_attention_forward(input, spec, params);
        case LayerKind::static_local_attention:
            return static_local_attention_forward(input, spec, params);
        case LayerKind::depthwise_conv: return depthwise_conv_forward(input, spec, params);
        case LayerKind::dynamic_depthwise_conv:
            return dynamic_depthwise_forward(input, spec, params);
        case LayerKind::inhomogeneous_dynamic_conv:
            return inhomogeneous_dynamic_forward(input, spec, params);
        case LayerKind::pointwise_conv: return pointwise_conv_forward(input, spec, params);
        case LayerKind::token_mixing_mlp: return token_mixing_mlp_forward(input, spec, params);
    }
    throw UnimplementedError("layer_forward: unknown kind");
}

// Instantiated connection-weight vectors w_i1..w_iNk for every position of
// image `batch`; shape (N, Nk, D). Dynamic kinds vary with the input,
// static kinds return the stored parameters.
inline Tensor extract_dynamic_weights(const Tensor& input, const LayerSpec& spec,
                                      const LayerParams& params, std::size_t batch = 0) {
    spec.validate();
    if (input.rank() != 4) throw ShapeError("extract_dynamic_weights: expected (B,H,W,C)");
    const std::size_t H = input.extent(1), W = input.extent(2);
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const std::size_t N = H * W;
    Tensor out = Tensor::zeros({N, Nk, D});

    switch (spec.kind) {
        case LayerKind::local_attention: {
            const AttentionWeights w = attention_weights(input, spec, params);
            const detail::WindowIndex win(input, spec.geometry);
            for (std::size_t wi = 0; wi < w.windows; ++wi)
                for (std::size_t q = 0; q < Nk; ++q) {
                    std::size_t qy, qx;
                    win.position(wi, q, qy, qx);
                    for (std::size_t k = 0; k < Nk; ++k)
                        for (std::size_t d = 0; d < D; ++d)
                            out[((qy * W + qx) * Nk + k) * D + d] =
                                w.at(batch, wi, d / group, q, k);
                }
            break;
        }
        case LayerKind::static_local_attention: {
            const detail::WindowIndex win(input, spec.geometry);
            const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
            for (std::size_t wi = 0; wi < win.windows(); ++wi)
                for (std::size_t q = 0; q < Nk; ++q) {
                    std::size_t qy, qx;
                    win.position(wi, q, qy, qx);
                    for (std::size_t k = 0; k < Nk; ++k)
                        for (std::size_t d = 0; d < D; ++d)
                            out[((qy * W + qx) * Nk + k) * D + d] =
                                params.window_table[((wi * M + d / group) * Nk + q) * Nk + k];
                }
            break;
        }
        case LayerKind::depthwise_conv:
        case LayerKind::dynamic_depthwise_conv: {
            const Tensor kernel = spec.kind == LayerKind::depthwise_conv
                                      ? params.kernel
                                      : predict_dynamic_kernel(input, batch, spec, params);
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < Nk; ++j)
                    for (std::size_t d = 0; d < D; ++d)
                        out[(i * Nk + j) * D + d] = kernel.at2(d, j);
            break;
        }
        case LayerKind::inhomogeneous_dynamic_conv: {
            const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
            const std::size_t hidden = params.point_reduce.extent(0);
            std::vector<double> h(hidden), wts(M * Nk);
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) {
                    for (std::size_t r = 0; r < hidden; ++r) {
                        double acc = 0.0;
                        for (std::size_t d = 0; d < D; ++d)
                            acc += params.point_reduce.at2(r, d) * input.at4(batch, y, x, d);
                        h[r] = params.predictor_hidden_relu ? std::max(0.0, acc) : acc;
                    }
                    for (std::size_t r = 0; r < M * Nk; ++r) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < hidden; ++c)
                            acc += params.point_expand.at2(r, c) * h[c];
                        wts[r] = acc;
                    }
                    for (std::size_t j = 0; j < Nk; ++j)
                        for (std::size_t d = 0; d < D; ++d)
                            out[((y * W + x) * Nk + j) * D + d] = wts[(d / group) * Nk + j];
                }
            break;
        }
        case LayerKind::pointwise_conv:
        case LayerKind::token_mixing_mlp:
            throw ConfigError("extract_dynamic_weights: kind has no windowed weight vectors");
    }
    return out;
}

}  // namespace layerkit
