#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerkit/tensor.hpp"

// fp32 micro-benchmarks for the two competing aggregations at one matched
// shape. Timings support ordering claims only; absolute numbers depend
// entirely on the host.

namespace layerkit {

struct BenchShape {
    std::size_t H = 56, W = 56, C = 96;
    std::size_t window = 7;
};

struct BenchReport {
    std::string kind;
    BenchShape shape;
    std::size_t reps = 0;
    double median_ms = 0.0;
    double p10_ms = 0.0;
    double p90_ms = 0.0;
    double inputs_per_second = 0.0;
};

namespace detail {

// depthwise KxK, zero padding, one kernel per channel
inline void bench_depthwise(const std::vector<float>& in, const std::vector<float>& kernel,
                            std::vector<float>& out, const BenchShape& s) {
    const int H = (int)s.H, W = (int)s.W, C = (int)s.C, K = (int)s.window;
    const int r = (K - 1) / 2;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                float acc = 0.0f;
                for (int dy = -r; dy <= r; ++dy) {
                    const int py = y + dy;
                    if (py < 0 || py >= H) continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        const int px = x + dx;
                        if (px < 0 || px >= W) continue;
                        acc += kernel[(std::size_t)c * K * K + (dy + r) * K + (dx + r)] *
                               in[((std::size_t)py * W + px) * C + c];
                    }
                }
                out[((std::size_t)y * W + x) * C + c] = acc;
            }
}

// single-head window attention on KxK partitions, no projections
inline void bench_window_attention(const std::vector<float>& in, std::vector<float>& out,
                                   std::vector<float>& logits, const BenchShape& s) {
    const int W = (int)s.W, C = (int)s.C, K = (int)s.window;
    const int wy = (int)s.H / K, wx = W / K, Nk = K * K;
    const float scale = 1.0f / std::sqrt((float)C);
    for (int w = 0; w < wy * wx; ++w) {
        const int oy = (w / wx) * K, ox = (w % wx) * K;
        for (int q = 0; q < Nk; ++q) {
            const std::size_t qoff =
                (((std::size_t)(oy + q / K)) * W + (ox + q % K)) * C;
            float maxv = -1e30f;
            for (int k = 0; k < Nk; ++k) {
                const std::size_t koff =
                    (((std::size_t)(oy + k / K)) * W + (ox + k % K)) * C;
                float dot = 0.0f;
                for (int c = 0; c < C; ++c) dot += in[qoff + c] * in[koff + c];
                logits[k] = dot * scale;
                maxv = std::max(maxv, logits[k]);
            }
            float z = 0.0f;
            for (int k = 0; k < Nk; ++k) {
                logits[k] = std::exp(logits[k] - maxv);
                z += logits[k];
            }
            for (int c = 0; c < C; ++c) {
                float acc = 0.0f;
                for (int k = 0; k < Nk; ++k) {
                    const std::size_t koff =
                        (((std::size_t)(oy + k / K)) * W + (ox + k % K)) * C;
                    acc += logits[k] * in[koff + c];
                }
                out[qoff + c] = acc / z;
            }
        }
    }
}

inline double percentile(std::vector<double> sorted, double p) {
    const double idx = p * (sorted.size() - 1);
    const std::size_t lo = (std::size_t)idx;
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - lo;
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline BenchReport run_bench(const std::string& kind, const BenchShape& shape, std::size_t reps,
                             std::size_t warmup, std::uint64_t seed) {
    if (reps < 30) throw ConfigError("run_bench: at least 30 repetitions required");
    if (kind != "depthwise_conv" && kind != "local_attention")
        throw ConfigError("run_bench: unknown kind " + kind);
    Rng rng(seed);
    std::vector<float> in(shape.H * shape.W * shape.C);
    for (float& v : in) v = (float)rng.uniform(1.0);
    std::vector<float> kernel(shape.C * shape.window * shape.window);
    for (float& v : kernel) v = (float)rng.uniform(0.5);
    std::vector<float> out(in.size(), 0.0f);
    std::vector<float> logits(shape.window * shape.window, 0.0f);

    const auto once = [&] {
        if (kind == "depthwise_conv")
            detail::bench_depthwise(in, kernel, out, shape);
        else
            detail::bench_window_attention(in, out, logits, shape);
    };
    for (std::size_t i = 0; i < warmup; ++i) once();
    std::vector<double> times;
    times.reserve(reps);
    volatile float sink = 0.0f;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        once();
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink + out[i % out.size()];
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    (void)sink;
    std::sort(times.begin(), times.end());
    BenchReport r;
    r.kind = kind;
    r.shape = shape;
    r.reps = reps;
    r.median_ms = detail::percentile(times, 0.5);
    r.p10_ms = detail::percentile(times, 0.1);
    r.p90_ms = detail::percentile(times, 0.9);
    r.inputs_per_second = r.median_ms > 0.0 ? 1000.0 / r.median_ms : 0.0;
    return r;
}

inline nlohmann::json bench_report_json(const BenchReport& r) {
    return {{"kind", r.kind},
            {"shape", {{"h", r.shape.H}, {"w", r.shape.W}, {"c", r.shape.C},
                       {"window", r.shape.window}}},
            {"reps", r.reps},
            {"median_ms", r.median_ms},
            {"p10_ms", r.p10_ms},
            {"p90_ms", r.p90_ms},
            {"inputs_per_second", r.inputs_per_second}};
}

inline std::string bench_csv_header() {
    return "kind,h,w,c,window,reps,median_ms,p10_ms,p90_ms,inputs_per_second";
}

inline std::string bench_csv_row(const BenchReport& r) {
    std::ostringstream os;
    os << r.kind << ',' << r.shape.H << ',' << r.shape.W << ',' << r.shape.C << ','
       << r.shape.window << ',' << r.reps << ',' << r.median_ms << ',' << r.p10_ms << ','
       << r.p90_ms << ',' << r.inputs_per_second;
    return os.str();
}

}  // namespace layerkit
