#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Dense row-major tensors in fp64. Axis order for feature maps is
// (batch, height, width, channel) throughout the library.

namespace layerkit {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnimplementedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (element_count(shape_) != data_.size())
            throw ShapeError("tensor: data length does not match shape");
    }

    static Tensor filled(const std::vector<std::size_t>& shape, double value) {
        return Tensor(shape, std::vector<double>(element_count(shape), value));
    }

    static Tensor zeros(const std::vector<std::size_t>& shape) { return filled(shape, 0.0); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    const double* data() const { return data_.data(); }
    double* data() { return data_.data(); }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    const std::vector<double>& values() const { return data_; }

    // 2-D access
    double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

    // (batch, height, width, channel) access
    double at4(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[((b * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    double& at4(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
        return data_[((b * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    Tensor reshape(const std::vector<std::size_t>& shape) const {
        if (element_count(shape) != data_.size())
            throw ShapeError("reshape: element count mismatch");
        return Tensor(shape, data_);
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::size_t element_count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t e : shape) {
            if (e == 0) throw ShapeError("tensor: zero extent");
            n *= e;
        }
        return n;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Deterministic generator: mt19937_64 with an explicit 53-bit mapping to
// doubles, so the stream is identical on every platform (the stdlib
// distributions are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform in [-scale, +scale]
    double uniform(double scale) { return (2.0 * next_unit() - 1.0) * scale; }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

inline Tensor tensor_filled(const std::vector<std::size_t>& shape, double value) {
    return Tensor::filled(shape, value);
}

inline Tensor tensor_random(const std::vector<std::size_t>& shape, Rng& rng, double scale) {
    if (!(scale > 0.0)) throw ConfigError("tensor_random: scale must be positive");
    std::vector<double> data(Tensor::element_count(shape));
    for (double& v : data) v = rng.uniform(scale);
    return Tensor(shape, std::move(data));
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: operands must be 2-D");
    if (a.extent(1) != b.extent(0)) throw ShapeError("matmul: inner extents differ");
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.at2(i, p);
            for (std::size_t j = 0; j < n; ++j) out.at2(i, j) += av * b.at2(p, j);
        }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: operand must be 2-D");
    Tensor out = Tensor::zeros({a.extent(1), a.extent(0)});
    for (std::size_t i = 0; i < a.extent(0); ++i)
        for (std::size_t j = 0; j < a.extent(1); ++j) out.at2(j, i) = a.at2(i, j);
    return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace layerkit
