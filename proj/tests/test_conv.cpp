#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "layerkit/conv.hpp"

using namespace layerkit;

namespace {

LayerSpec conv_spec(int channels, int k = 3, Padding pad = Padding::zero, int groups = 1,
                    LayerKind kind = LayerKind::depthwise_conv) {
    LayerSpec s;
    s.kind = kind;
    s.channels = channels;
    s.heads_or_groups = groups;
    s.geometry.window_h = k;
    s.geometry.window_w = k;
    s.geometry.mode = WindowMode::dense_sliding;
    s.geometry.padding = pad;
    return s;
}

}  // namespace

TEST_CASE("delta kernel reproduces the input") {
    Rng rng(1);
    const LayerSpec spec = conv_spec(3, 3, Padding::zero);
    const Tensor input = tensor_random({1, 5, 5, 3}, rng, 1.0);
    Tensor kernel = Tensor::zeros({3, 9});
    for (std::size_t d = 0; d < 3; ++d) kernel.at2(d, 4) = 1.0;  // center tap
    LayerParams params;
    params.kernel = kernel;
    CHECK(max_abs_diff(depthwise_conv_forward(input, spec, params), input) == 0.0);
}

TEST_CASE("all-ones 3x3 kernel on constant input with circular padding") {
    const LayerSpec spec = conv_spec(2, 3, Padding::circular);
    const Tensor input = tensor_filled({1, 4, 4, 2}, 1.5);
    LayerParams params;
    params.kernel = tensor_filled({2, 9}, 1.0);
    const Tensor out = depthwise_conv_forward(input, spec, params);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out[i] == doctest::Approx(13.5).epsilon(1e-14));
}

TEST_CASE("channel sparsity: zeroed channel stays isolated") {
    Rng rng(2);
    const LayerSpec spec = conv_spec(4, 3, Padding::zero);
    LayerParams params;
    params.kernel = tensor_random({4, 9}, rng, 1.0);
    Tensor input = tensor_random({1, 6, 6, 4}, rng, 1.0);
    Tensor zeroed = input;
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 6; ++x) zeroed.at4(0, y, x, 2) = 0.0;
    const Tensor a = depthwise_conv_forward(input, spec, params);
    const Tensor b = depthwise_conv_forward(zeroed, spec, params);
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 6; ++x)
            for (std::size_t c = 0; c < 4; ++c)
                if (c != 2) CHECK(a.at4(0, y, x, c) == b.at4(0, y, x, c));  // bitwise
}

TEST_CASE("sliding geometry rejects even windows and missing padding") {
    Rng rng(3);
    LayerParams params;
    params.kernel = tensor_random({2, 4}, rng, 1.0);
    const Tensor input = tensor_filled({1, 4, 4, 2}, 0.0);
    LayerSpec even = conv_spec(2, 2, Padding::zero);
    CHECK_THROWS_AS(depthwise_conv_forward(input, even, params), GeometryError);
    LayerSpec nopad = conv_spec(2, 3, Padding::none);
    params.kernel = tensor_random({2, 9}, rng, 1.0);
    CHECK_THROWS_AS(depthwise_conv_forward(input, nopad, params), GeometryError);
}

TEST_CASE("dynamic depthwise maps zero input to zero output") {
    Rng rng(4);
    const LayerSpec spec = conv_spec(4, 3, Padding::zero, 1, LayerKind::dynamic_depthwise_conv);
    const LayerParams params = make_random_params(spec, 4, 4, rng);
    const Tensor input = Tensor::zeros({1, 4, 4, 4});
    const Tensor out = dynamic_depthwise_forward(input, spec, params);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("dynamic depthwise kernels are invariant to spatial permutation") {
    Rng rng(5);
    const LayerSpec spec = conv_spec(4, 3, Padding::zero, 1, LayerKind::dynamic_depthwise_conv);
    const LayerParams params = make_random_params(spec, 4, 4, rng);
    const Tensor input = tensor_random({1, 4, 4, 4}, rng, 1.0);
    // reverse the spatial order, a permutation that GAP cannot see
    Tensor permuted = Tensor::zeros(input.shape());
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            for (std::size_t c = 0; c < 4; ++c)
                permuted.at4(0, y, x, c) = input.at4(0, 3 - y, 3 - x, c);
    const Tensor ka = predict_dynamic_kernel(input, 0, spec, params);
    const Tensor kb = predict_dynamic_kernel(permuted, 0, spec, params);
    CHECK(max_abs_diff(ka, kb) < 1e-15);
}

TEST_CASE("dynamic depthwise regression snapshot") {
    Rng rng(123);
    const LayerSpec spec = conv_spec(4, 3, Padding::zero, 1, LayerKind::dynamic_depthwise_conv);
    const LayerParams params = make_random_params(spec, 4, 4, rng);
    const Tensor input = tensor_random({1, 4, 4, 4}, rng, 1.0);
    const Tensor out = dynamic_depthwise_forward(input, spec, params);
    double checksum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) checksum += out[i] * static_cast<double>(i + 1);
    // frozen from the first fp64 run
    CHECK(checksum == doctest::Approx(0.69631251059259947).epsilon(1e-12));
}

TEST_CASE("inhomogeneous dynamic on constant input reduces to a depthwise conv") {
    Rng rng(6);
    const LayerSpec spec = conv_spec(4, 3, Padding::zero, 2, LayerKind::inhomogeneous_dynamic_conv);
    const LayerParams params = make_random_params(spec, 4, 4, rng);
    const Tensor input = tensor_filled({1, 4, 4, 4}, 0.8);
    const Tensor out = inhomogeneous_dynamic_forward(input, spec, params);
    // with constant input the predicted weights are position-independent
    const Tensor w = extract_dynamic_weights(input, spec, params);
    Tensor kernel = Tensor::zeros({4, 9});
    for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t j = 0; j < 9; ++j) kernel.at2(d, j) = w[j * 4 + d];
    const LayerSpec dws = conv_spec(4, 3, Padding::zero);
    CHECK(max_abs_diff(out, depthwise_conv_with_kernel(input, dws, kernel)) < 1e-12);
}

TEST_CASE("inhomogeneous dynamic matches a literal per-position loop") {
    Rng rng(7);
    const LayerSpec spec = conv_spec(4, 3, Padding::zero, 2, LayerKind::inhomogeneous_dynamic_conv);
    const LayerParams params = make_random_params(spec, 5, 5, rng);
    const Tensor input = tensor_random({1, 5, 5, 4}, rng, 1.0);
    const Tensor out = inhomogeneous_dynamic_forward(input, spec, params);

    // naive reference: predict weights at every position, then aggregate
    const std::size_t H = 5, W = 5, D = 4, Nk = 9;
    Tensor ref = Tensor::zeros(input.shape());
    const Tensor w = extract_dynamic_weights(input, spec, params);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t j = 0; j < Nk; ++j) {
                const long sy = static_cast<long>(y) + static_cast<long>(j / 3) - 1;
                const long sx = static_cast<long>(x) + static_cast<long>(j % 3) - 1;
                if (sy < 0 || sy >= 5 || sx < 0 || sx >= 5) continue;
                for (std::size_t d = 0; d < D; ++d)
                    ref.at4(0, y, x, d) += w[((y * W + x) * Nk + j) * D + d] *
                                           input.at4(0, static_cast<std::size_t>(sy),
                                                     static_cast<std::size_t>(sx), d);
            }
    CHECK(max_abs_diff(out, ref) < 1e-12);
}

TEST_CASE("pointwise identity and spatial equivariance") {
    Rng rng(8);
    LayerSpec spec = conv_spec(3, 1, Padding::none, 1, LayerKind::pointwise_conv);
    spec.geometry.mode = WindowMode::dense_sliding;
    const Tensor input = tensor_random({1, 3, 3, 3}, rng, 1.0);
    LayerParams eye;
    eye.projection = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(max_abs_diff(pointwise_conv_forward(input, spec, eye), input) == 0.0);

    LayerParams params;
    params.projection = tensor_random({3, 3}, rng, 1.0);
    const Tensor shifted = cyclic_shift(input, 1, 2);
    const Tensor a = pointwise_conv_forward(shifted, spec, params);
    const Tensor b = cyclic_shift(pointwise_conv_forward(input, spec, params), 1, 2);
    CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("token mixing identity and channel permutation equivariance") {
    Rng rng(9);
    LayerSpec spec = conv_spec(3, 1, Padding::none, 1, LayerKind::token_mixing_mlp);
    const Tensor input = tensor_random({1, 2, 3, 3}, rng, 1.0);
    LayerParams eye;
    eye.spatial_mix = Tensor::zeros({6, 6});
    for (std::size_t i = 0; i < 6; ++i) eye.spatial_mix.at2(i, i) = 1.0;
    CHECK(max_abs_diff(token_mixing_mlp_forward(input, spec, eye), input) == 0.0);

    LayerParams params;
    params.spatial_mix = tensor_random({6, 6}, rng, 1.0);
    Tensor swapped = input;  // swap channels 0 and 2
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x) {
            swapped.at4(0, y, x, 0) = input.at4(0, y, x, 2);
            swapped.at4(0, y, x, 2) = input.at4(0, y, x, 0);
        }
    const Tensor a = token_mixing_mlp_forward(swapped, spec, params);
    const Tensor b = token_mixing_mlp_forward(input, spec, params);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x) {
            CHECK(a.at4(0, y, x, 0) == b.at4(0, y, x, 2));
            CHECK(a.at4(0, y, x, 2) == b.at4(0, y, x, 0));
            CHECK(a.at4(0, y, x, 1) == b.at4(0, y, x, 1));
        }
}

TEST_CASE("depthwise weight vectors are position independent") {
    Rng rng(10);
    const LayerSpec spec = conv_spec(3, 3, Padding::zero);
    LayerParams params;
    params.kernel = tensor_random({3, 9}, rng, 1.0);
    const Tensor input = tensor_random({1, 4, 4, 3}, rng, 1.0);
    const Tensor w = extract_dynamic_weights(input, spec, params);
    for (std::size_t i = 1; i < w.extent(0); ++i)
        for (std::size_t j = 0; j < 9; ++j)
            for (std::size_t d = 0; d < 3; ++d)
                CHECK(w[(i * 9 + j) * 3 + d] == w[(j)*3 + d]);
}
