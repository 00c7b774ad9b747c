#pragma once

#include <cmath>
#include <vector>

#include "layerkit/layer.hpp"
#include "layerkit/tensor.hpp"

// Window attention over non-overlapping partitions. Two aggregation paths
// are provided: the per-head form and the element-wise form with weights
// replicated across each head's channel group; they must agree to fp64
// round-off.

namespace layerkit {

// a[b][w][m][q][k]: per image, window, head, query slot, key slot.
struct AttentionWeights {
    std::size_t batches = 0, windows = 0, heads = 0, slots = 0;
    std::vector<double> a;
    std::vector<double> z;  // softmax normalizers, [b][w][m][q]

    double& at(std::size_t b, std::size_t w, std::size_t m, std::size_t q, std::size_t k) {
        return a[(((b * windows + w) * heads + m) * slots + q) * slots + k];
    }
    double at(std::size_t b, std::size_t w, std::size_t m, std::size_t q, std::size_t k) const {
        return a[(((b * windows + w) * heads + m) * slots + q) * slots + k];
    }
    double& norm(std::size_t b, std::size_t w, std::size_t m, std::size_t q) {
        return z[((b * windows + w) * heads + m) * slots + q];
    }
};

namespace detail {

// Window partition bookkeeping for a (B,H,W,C) map.
struct WindowIndex {
    std::size_t H, W, Kh, Kw, wy, wx;
    explicit WindowIndex(const Tensor& input, const WindowGeometry& g)
        : H(input.extent(1)),
          W(input.extent(2)),
          Kh(static_cast<std::size_t>(g.window_h)),
          Kw(static_cast<std::size_t>(g.window_w)) {
        g.validate(H, W);
        wy = H / Kh;
        wx = W / Kw;
    }
    std::size_t windows() const { return wy * wx; }
    // (y, x) of slot q inside window w
    void position(std::size_t w, std::size_t q, std::size_t& y, std::size_t& x) const {
        y = (w / wx) * Kh + q / Kw;
        x = (w % wx) * Kw + q % Kw;
    }
};

inline Tensor maybe_project(const Tensor& input, const Tensor& weight) {
    if (weight.empty()) return input;
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      C = input.extent(3);
    if (weight.rank() != 2 || weight.extent(1) != C || weight.extent(0) != C)
        throw ShapeError("projection matrix must be DxD");
    Tensor out = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t r = 0; r < C; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < C; ++c)
                        acc += weight.at2(r, c) * input.at4(b, y, x, c);
                    out.at4(b, y, x, r) = acc;
                }
    return out;
}

}  // namespace detail

// Softmax attention weights per window and head. Per head the dot product
// is scaled by 1/sqrt(D/M); with M=1 this is the plain 1/sqrt(D) scaling.
inline AttentionWeights attention_weights(const Tensor& query_map, const LayerSpec& spec,
                                          const LayerParams& params) {
    spec.validate();
    if (query_map.rank() != 4) throw ShapeError("attention: expected (B,H,W,C)");
    if (query_map.extent(3) != static_cast<std::size_t>(spec.channels))
        throw ShapeError("attention: channel extent != spec.channels");
    if (spec.geometry.mode != WindowMode::non_overlapping_partition)
        throw GeometryError("attention requires non-overlapping window partition");
    const detail::WindowIndex win(query_map, spec.geometry);

    const std::size_t B = query_map.extent(0);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = win.Kh * win.Kw;
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(group));

    if (spec.use_relative_position_bias) {
        if (params.position_bias.empty() ||
            params.position_bias.extent(0) != M ||
            params.position_bias.extent(1) !=
                static_cast<std::size_t>(spec.geometry.offset_table_size()))
            throw ShapeError("attention: position_bias table missing or mis-sized");
    }

    const Tensor& queries = params.query_proj.empty()
                                ? query_map
                                : detail::maybe_project(query_map, params.query_proj);
    const Tensor& keys = params.key_proj.empty()
                             ? query_map
                             : detail::maybe_project(query_map, params.key_proj);

    AttentionWeights w;
    w.batches = B;
    w.windows = win.windows();
    w.heads = M;
    w.slots = Nk;
    w.a.assign(B * w.windows * M * Nk * Nk, 0.0);
    w.z.assign(B * w.windows * M * Nk, 0.0);

    std::vector<double> logits(Nk);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t wi = 0; wi < w.windows; ++wi)
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t q = 0; q < Nk; ++q) {
                    std::size_t qy, qx;
                    win.position(wi, q, qy, qx);
                    double peak = -1e300;
                    for (std::size_t k = 0; k < Nk; ++k) {
                        std::size_t ky, kx;
                        win.position(wi, k, ky, kx);
                        double dot = 0.0;
                        for (std::size_t d = 0; d < group; ++d)
                            dot += queries.at4(b, qy, qx, m * group + d) *
                                   keys.at4(b, ky, kx, m * group + d);
                        double s = scale * dot;
                        if (spec.use_relative_position_bias) {
                            const int dy = static_cast<int>(k / win.Kw) - static_cast<int>(q / win.Kw);
                            const int dx = static_cast<int>(k % win.Kw) - static_cast<int>(q % win.Kw);
                            s += params.position_bias.at2(
                                m, static_cast<std::size_t>(spec.geometry.offset_index(dy, dx)));
                        }
                        logits[k] = s;
                        peak = std::max(peak, s);
                    }
                    double zsum = 0.0;
                    for (std::size_t k = 0; k < Nk; ++k) {
                        const double e = std::exp(logits[k] - peak);
                        w.at(b, wi, m, q, k) = e;
                        zsum += e;
                    }
                    w.norm(b, wi, m, q) = zsum;
                    for (std::size_t k = 0; k < Nk; ++k) w.at(b, wi, m, q, k) /= zsum;
                }
    return w;
}

// Per-head aggregation: y_im = sum_j a_ijm x_ijm, heads concatenated.
inline Tensor local_attention_forward(const Tensor& input, const LayerSpec& spec,
                                      const LayerParams& params) {
    const AttentionWeights w = attention_weights(input, spec, params);
    const detail::WindowIndex win(input, spec.geometry);
    const std::size_t B = input.extent(0), M = w.heads, Nk = w.slots;
    const std::size_t group = static_cast<std::size_t>(spec.group_size());

    const Tensor& values = params.value_proj.empty()
                               ? input
                               : detail::maybe_project(input, params.value_proj);
    Tensor out = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t wi = 0; wi < w.windows; ++wi)
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t q = 0; q < Nk; ++q) {
                    std::size_t qy, qx;
                    win.position(wi, q, qy, qx);
                    for (std::size_t k = 0; k < Nk; ++k) {
                        std::size_t ky, kx;
                        win.position(wi, k, ky, kx);
                        const double aij = w.at(b, wi, m, q, k);
                        for (std::size_t d = 0; d < group; ++d)
                            out.at4(b, qy, qx, m * group + d) +=
                                aij * values.at4(b, ky, kx, m * group + d);
                    }
                }
    if (!params.output_proj.empty()) out = detail::maybe_project(out, params.output_proj);
    return out;
}

// Element-wise aggregation: y_i = sum_j w_ij (*) x_ij, with w_ij expanded
// from the head weights by channel-group replication.
inline Tensor elementwise_attention_forward(const Tensor& input, const LayerSpec& spec,
                                            const LayerParams& params) {
    const AttentionWeights w = attention_weights(input, spec, params);
    const detail::WindowIndex win(input, spec.geometry);
    const std::size_t B = input.extent(0), Nk = w.slots;
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t group = static_cast<std::size_t>(spec.group_size());

    const Tensor& values = params.value_proj.empty()
                               ? input
                               : detail::maybe_project(input, params.value_proj);
    Tensor out = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t wi = 0; wi < w.windows; ++wi)
            for (std::size_t q = 0; q < Nk; ++q) {
                std::size_t qy, qx;
                win.position(wi, q, qy, qx);
                for (std::size_t k = 0; k < Nk; ++k) {
                    std::size_t ky, kx;
                    win.position(wi, k, ky, kx);
                    for (std::size_t d = 0; d < D; ++d) {
                        const double wijd = w.at(b, wi, d / group, q, k);
                        out.at4(b, qy, qx, d) += wijd * values.at4(b, ky, kx, d);
                    }
                }
            }
    if (!params.output_proj.empty()) out = detail::maybe_project(out, params.output_proj);
    return out;
}

// Stored per-window weight tables used directly, no softmax.
inline Tensor static_local_attention_forward(const Tensor& input, const LayerSpec& spec,
                                             const LayerParams& params) {
    spec.validate();
    if (input.rank() != 4) throw ShapeError("static attention: expected (B,H,W,C)");
    const detail::WindowIndex win(input, spec.geometry);
    const std::size_t B = input.extent(0);
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = win.Kh * win.Kw;
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const Tensor& table = params.window_table;
    if (table.rank() != 4 || table.extent(0) != win.windows() || table.extent(1) != M ||
        table.extent(2) != Nk || table.extent(3) != Nk)
        throw ShapeError("static attention: window_table has wrong shape");

    Tensor out = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t wi = 0; wi < win.windows(); ++wi)
            for (std::size_t q = 0; q < Nk; ++q) {
                std::size_t qy, qx;
                win.position(wi, q, qy, qx);
                for (std::size_t k = 0; k < Nk; ++k) {
                    std::size_t ky, kx;
                    win.position(wi, k, ky, kx);
                    for (std::size_t d = 0; d < D; ++d)
                        out.at4(b, qy, qx, d) +=
                            table[((wi * M + d / group) * Nk + q) * Nk + k] *
                            input.at4(b, ky, kx, d);
                }
            }
    return out;
}

}  // namespace layerkit
