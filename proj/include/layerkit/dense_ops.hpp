#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "layerkit/attention.hpp"
#include "layerkit/conv.hpp"
#include "layerkit/layer.hpp"
#include "layerkit/tensor.hpp"

// Explicit dense connection matrices. These are the brute-force oracles:
// every structured layer must match a plain matrix-vector product against
// the operator built here.

namespace layerkit {

enum class OperatorLayout {
    channel_major,   // x = [x_1^T ... x_C^T]^T, one block per channel
    position_major,  // x = [x_1^T ... x_N^T]^T, one block per position
};

struct DenseOperator {
    std::size_t rows = 0, cols = 0;
    std::vector<double> m;  // row-major
    OperatorLayout layout = OperatorLayout::channel_major;
    std::string provenance;

    double at(std::size_t r, std::size_t c) const { return m[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return m[r * cols + c]; }

    std::size_t nonzeros() const {
        std::size_t n = 0;
        for (double v : m)
            if (v != 0.0) ++n;
        return n;
    }
};

inline std::vector<double> dense_apply(const DenseOperator& op, const std::vector<double>& x) {
    if (x.size() != op.cols) throw ShapeError("dense_apply: vector length != column count");
    std::vector<double> y(op.rows, 0.0);
    for (std::size_t r = 0; r < op.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < op.cols; ++c) acc += op.m[r * op.cols + c] * x[c];
        y[r] = acc;
    }
    return y;
}

// n x n circulant with wrap-around boundary: row i holds kernel tap
// k[off + (K-1)/2] at column i+off (mod n).
inline DenseOperator circulant_from_kernel(const std::vector<double>& kernel, std::size_t n) {
    const std::size_t K = kernel.size();
    if (K % 2 == 0) throw GeometryError("circulant: kernel length must be odd");
    if (K > n) throw GeometryError("circulant: kernel longer than position count");
    const int c = static_cast<int>(K - 1) / 2;
    DenseOperator op;
    op.rows = op.cols = n;
    op.m.assign(n * n, 0.0);
    op.layout = OperatorLayout::channel_major;
    op.provenance = "circulant";
    for (std::size_t i = 0; i < n; ++i)
        for (int off = -c; off <= c; ++off) {
            const std::size_t j =
                static_cast<std::size_t>((static_cast<long>(i) + off + static_cast<long>(n)) %
                                         static_cast<long>(n));
            op.at(i, j) += kernel[static_cast<std::size_t>(off + c)];
        }
    return op;
}

// Full 1-D convolution: channel-major block matrix with a circulant block
// per (output channel, input channel) pair. kernels: (C_out, C_in, K).
inline DenseOperator conv_dense_operator(const Tensor& kernels, std::size_t n) {
    if (kernels.rank() != 3) throw ShapeError("conv operator: kernels must be (C_out, C_in, K)");
    const std::size_t Co = kernels.extent(0), Ci = kernels.extent(1), K = kernels.extent(2);
    DenseOperator op;
    op.rows = Co * n;
    op.cols = Ci * n;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::channel_major;
    op.provenance = "conv";
    for (std::size_t co = 0; co < Co; ++co)
        for (std::size_t ci = 0; ci < Ci; ++ci) {
            std::vector<double> k(K);
            for (std::size_t t = 0; t < K; ++t) k[t] = kernels[(co * Ci + ci) * K + t];
            const DenseOperator block = circulant_from_kernel(k, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    op.at(co * n + i, ci * n + j) = block.at(i, j);
        }
    return op;
}

// Depth-wise 1-D convolution: block-diagonal, one circulant per channel.
// kernels: (C, K).
inline DenseOperator depthwise_dense_operator(const Tensor& kernels, std::size_t n) {
    if (kernels.rank() != 2) throw ShapeError("depthwise operator: kernels must be (C, K)");
    const std::size_t C = kernels.extent(0), K = kernels.extent(1);
    DenseOperator op;
    op.rows = op.cols = C * n;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::channel_major;
    op.provenance = "depthwise";
    for (std::size_t d = 0; d < C; ++d) {
        std::vector<double> k(K);
        for (std::size_t t = 0; t < K; ++t) k[t] = kernels.at2(d, t);
        const DenseOperator block = circulant_from_kernel(k, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) op.at(d * n + i, d * n + j) = block.at(i, j);
    }
    return op;
}

// 2-D depth-wise convolution on an HxW map, built from offset arithmetic
// (independent of the sliding-window loop in conv.hpp). kernels: (C, Nk).
inline DenseOperator depthwise_dense_operator_2d(const Tensor& kernels, const WindowGeometry& g,
                                                 std::size_t H, std::size_t W) {
    if (kernels.rank() != 2) throw ShapeError("depthwise 2d operator: kernels must be (C, Nk)");
    const std::size_t C = kernels.extent(0);
    const std::size_t Nk = static_cast<std::size_t>(g.slots());
    if (kernels.extent(1) != Nk) throw ShapeError("depthwise 2d operator: kernel taps != Nk");
    const std::size_t N = H * W;
    DenseOperator op;
    op.rows = op.cols = C * N;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::channel_major;
    op.provenance = "depthwise2d";
    for (std::size_t d = 0; d < C; ++d)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t j = 0; j < Nk; ++j) {
                    int dy, dx;
                    g.slot_offset(static_cast<int>(j), dy, dx);
                    long py = static_cast<long>(y) + dy, px = static_cast<long>(x) + dx;
                    if (g.padding == Padding::circular) {
                        py = ((py % static_cast<long>(H)) + static_cast<long>(H)) %
                             static_cast<long>(H);
                        px = ((px % static_cast<long>(W)) + static_cast<long>(W)) %
                             static_cast<long>(W);
                    } else if (py < 0 || py >= static_cast<long>(H) || px < 0 ||
                               px >= static_cast<long>(W)) {
                        continue;
                    }
                    op.at(d * N + y * W + x,
                          d * N + static_cast<std::size_t>(py) * W + static_cast<std::size_t>(px)) +=
                        kernels.at2(d, j);
                }
    return op;
}

// Token-mixing block structure: identical NxN blocks down the diagonal,
// input organized channel by channel.
inline DenseOperator sepmlp_channel_operator(const Tensor& w_c, std::size_t channels) {
    if (w_c.rank() != 2 || w_c.extent(0) != w_c.extent(1))
        throw ShapeError("sepmlp channel operator: w_c must be square");
    const std::size_t N = w_c.extent(0);
    DenseOperator op;
    op.rows = op.cols = channels * N;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::channel_major;
    op.provenance = "sepmlp_channel";
    for (std::size_t d = 0; d < channels; ++d)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) op.at(d * N + i, d * N + j) = w_c.at2(i, j);
    return op;
}

// 1x1 convolution structure: identical CxC blocks down the diagonal, input
// organized position by position.
inline DenseOperator sepmlp_spatial_operator(const Tensor& w_p, std::size_t positions) {
    if (w_p.rank() != 2 || w_p.extent(0) != w_p.extent(1))
        throw ShapeError("sepmlp spatial operator: w_p must be square");
    const std::size_t C = w_p.extent(0);
    DenseOperator op;
    op.rows = op.cols = positions * C;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::position_major;
    op.provenance = "sepmlp_spatial";
    for (std::size_t p = 0; p < positions; ++p)
        for (std::size_t i = 0; i < C; ++i)
            for (std::size_t j = 0; j < C; ++j) op.at(p * C + i, p * C + j) = w_p.at2(i, j);
    return op;
}

// vec(A mat(x) B) with mat(x) in C x N form (column j = channels at
// position j, so x is flattened position-major). Equals (B^T (x) A) x.
inline Tensor kronecker_apply(const Tensor& a, const Tensor& b, const Tensor& x) {
    if (a.rank() != 2 || b.rank() != 2 || x.rank() != 1)
        throw ShapeError("kronecker_apply: expected 2-D A, B and 1-D x");
    const std::size_t Co = a.extent(0), Ci = a.extent(1);
    const std::size_t Ni = b.extent(0), No = b.extent(1);
    if (x.size() != Ci * Ni) throw ShapeError("kronecker_apply: x length != C*N");
    // mat(x): Ci x Ni, column-major flattening of x
    Tensor mx = Tensor::zeros({Ci, Ni});
    for (std::size_t j = 0; j < Ni; ++j)
        for (std::size_t i = 0; i < Ci; ++i) mx.at2(i, j) = x[j * Ci + i];
    const Tensor y = matmul(matmul(a, mx), b);  // Co x No
    Tensor out = Tensor::zeros({Co * No});
    for (std::size_t j = 0; j < No; ++j)
        for (std::size_t i = 0; i < Co; ++i) out[j * Co + i] = y.at2(i, j);
    return out;
}

// Explicit Kronecker product B^T (x) A as a dense operator; the test-side
// counterpart of kronecker_apply.
inline DenseOperator kronecker_operator(const Tensor& a, const Tensor& b) {
    const std::size_t Co = a.extent(0), Ci = a.extent(1);
    const std::size_t Ni = b.extent(0), No = b.extent(1);
    DenseOperator op;
    op.rows = No * Co;
    op.cols = Ni * Ci;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::position_major;
    op.provenance = "kronecker";
    for (std::size_t jo = 0; jo < No; ++jo)
        for (std::size_t ji = 0; ji < Ni; ++ji)
            for (std::size_t io = 0; io < Co; ++io)
                for (std::size_t ii = 0; ii < Ci; ++ii)
                    op.at(jo * Co + io, ji * Ci + ii) = b.at2(ji, jo) * a.at2(io, ii);
    return op;
}

struct LowRankFactors {
    Tensor left;   // D_out x r
    Tensor right;  // r x D_in
};

inline Tensor lowrank_apply(const LowRankFactors& f, const Tensor& x) {
    if (x.rank() != 1) throw ShapeError("lowrank_apply: x must be 1-D");
    if (f.left.extent(1) != f.right.extent(0)) throw ShapeError("lowrank_apply: rank mismatch");
    const Tensor xr = x.reshape({x.size(), 1});
    return matmul(f.left, matmul(f.right, xr)).reshape({f.left.extent(0)});
}

// Per-instance dense operator for window attention: channel-major block
// diagonal; block d carries the window-structured weights of head d/group.
// Entries outside window support stay exactly zero.
inline DenseOperator local_attention_dense_operator(const Tensor& input, const LayerSpec& spec,
                                                    const LayerParams& params,
                                                    std::size_t batch = 0) {
    const AttentionWeights w = attention_weights(input, spec, params);
    const detail::WindowIndex win(input, spec.geometry);
    const std::size_t N = win.H * win.W;
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t Nk = w.slots;
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    DenseOperator op;
    op.rows = op.cols = N * D;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::channel_major;
    op.provenance = "local_attention";
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t wi = 0; wi < w.windows; ++wi)
            for (std::size_t q = 0; q < Nk; ++q) {
                std::size_t qy, qx;
                win.position(wi, q, qy, qx);
                for (std::size_t k = 0; k < Nk; ++k) {
                    std::size_t ky, kx;
                    win.position(wi, k, ky, kx);
                    op.at(d * N + qy * win.W + qx, d * N + ky * win.W + kx) =
                        w.at(batch, wi, d / group, q, k);
                }
            }
    return op;
}

// Same structure for the static variant, filled from the stored tables.
inline DenseOperator static_attention_dense_operator(const LayerSpec& spec,
                                                     const LayerParams& params, std::size_t H,
                                                     std::size_t W) {
    spec.geometry.validate(H, W);
    const std::size_t Kh = static_cast<std::size_t>(spec.geometry.window_h);
    const std::size_t Kw = static_cast<std::size_t>(spec.geometry.window_w);
    const std::size_t wx = W / Kw;
    const std::size_t windows = (H / Kh) * wx;
    const std::size_t Nk = Kh * Kw;
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t group = static_cast<std::size_t>(spec.group_size());
    const std::size_t N = H * W;
    DenseOperator op;
    op.rows = op.cols = N * D;
    op.m.assign(op.rows * op.cols, 0.0);
    op.layout = OperatorLayout::channel_major;
    op.provenance = "static_local_attention";
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t wi = 0; wi < windows; ++wi)
            for (std::size_t q = 0; q < Nk; ++q) {
                const std::size_t qy = (wi / wx) * Kh + q / Kw;
                const std::size_t qx = (wi % wx) * Kw + q % Kw;
                for (std::size_t k = 0; k < Nk; ++k) {
                    const std::size_t ky = (wi / wx) * Kh + k / Kw;
                    const std::size_t kx = (wi % wx) * Kw + k % Kw;
                    op.at(d * N + qy * W + qx, d * N + ky * W + kx) =
                        params.window_table[((wi * M + d / group) * Nk + q) * Nk + k];
                }
            }
    return op;
}

// Flatten an (1,H,W,C) map per operator layout.
inline std::vector<double> flatten_for(const DenseOperator& op, const Tensor& input,
                                       std::size_t batch = 0) {
    const std::size_t H = input.extent(1), W = input.extent(2), C = input.extent(3);
    std::vector<double> x(H * W * C);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx)
            for (std::size_t c = 0; c < C; ++c) {
                const double v = input.at4(batch, y, xx, c);
                if (op.layout == OperatorLayout::channel_major)
                    x[c * H * W + y * W + xx] = v;
                else
                    x[(y * W + xx) * C + c] = v;
            }
    return x;
}

inline Tensor unflatten_from(const DenseOperator& op, const std::vector<double>& y, std::size_t H,
                             std::size_t W, std::size_t C) {
    Tensor out = Tensor::zeros({1, H, W, C});
    for (std::size_t yy = 0; yy < H; ++yy)
        for (std::size_t xx = 0; xx < W; ++xx)
            for (std::size_t c = 0; c < C; ++c)
                out.at4(0, yy, xx, c) = op.layout == OperatorLayout::channel_major
                                            ? y[c * H * W + yy * W + xx]
                                            : y[(yy * W + xx) * C + c];
    return out;
}

}  // namespace layerkit
