#pragma once

#include <cstddef>
#include <string>

#include "layerkit/tensor.hpp"

namespace layerkit {

enum class WindowMode {
    non_overlapping_partition,  // attention-style: disjoint Kh x Kw tiles
    dense_sliding,              // convolution-style: one window per position
};

enum class Padding { zero, circular, none };

// Window size, partition mode and padding. For dense_sliding windows the
// slot index j maps to a relative offset from the center position.
struct WindowGeometry {
    int window_h = 7;
    int window_w = 7;
    WindowMode mode = WindowMode::non_overlapping_partition;
    Padding padding = Padding::none;

    int slots() const { return window_h * window_w; }

    // relative offset of slot j from the window center, row-major over the
    // window; requires odd extents in dense_sliding mode
    void slot_offset(int j, int& dy, int& dx) const {
        dy = j / window_w - (window_h - 1) / 2;
        dx = j % window_w - (window_w - 1) / 2;
    }

    // index into a (2Kh-1)(2Kw-1) relative-offset table
    int offset_index(int dy, int dx) const {
        return (dy + window_h - 1) * (2 * window_w - 1) + (dx + window_w - 1);
    }

    int offset_table_size() const { return (2 * window_h - 1) * (2 * window_w - 1); }

    void validate(std::size_t height, std::size_t width) const {
        if (window_h < 1 || window_w < 1) throw GeometryError("window extents must be positive");
        if (mode == WindowMode::non_overlapping_partition) {
            if (height % static_cast<std::size_t>(window_h) != 0 ||
                width % static_cast<std::size_t>(window_w) != 0)
                throw GeometryError("partition windows require H, W divisible by window size");
        } else {
            if (window_h % 2 == 0 || window_w % 2 == 0)
                throw GeometryError("sliding windows require odd window extents");
            if (padding == Padding::none)
                throw GeometryError("sliding windows need a padding mode");
        }
    }
};

// Cyclic shift of a (B,H,W,C) map; positive shift moves content down/right.
inline Tensor cyclic_shift(const Tensor& input, int shift_y, int shift_x) {
    if (input.rank() != 4) throw ShapeError("cyclic_shift: expected (B,H,W,C)");
    const std::size_t B = input.extent(0), H = input.extent(1), W = input.extent(2),
                      C = input.extent(3);
    Tensor out = Tensor::zeros(input.shape());
    const auto wrap = [](long v, std::size_t n) {
        long m = v % static_cast<long>(n);
        return static_cast<std::size_t>(m < 0 ? m + static_cast<long>(n) : m);
    };
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const std::size_t sy = wrap(static_cast<long>(y) - shift_y, H);
                const std::size_t sx = wrap(static_cast<long>(x) - shift_x, W);
                for (std::size_t c = 0; c < C; ++c)
                    out.at4(b, y, x, c) = input.at4(b, sy, sx, c);
            }
    return out;
}

}  // namespace layerkit
