#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerkit/verify.hpp"

// Named batches of property checks over seeded random instances. Each suite
// returns plain CheckReports; the aggregate JSON document is what the CLI
// writes out.

namespace layerkit {

namespace detail {

inline LayerSpec attention_instance(int channels, int window, int heads, bool bias = false) {
    LayerSpec s;
    s.kind = LayerKind::local_attention;
    s.channels = channels;
    s.heads_or_groups = heads;
    s.geometry.window_h = window;
    s.geometry.window_w = window;
    s.geometry.mode = WindowMode::non_overlapping_partition;
    s.use_relative_position_bias = bias;
    return s;
}

inline LayerSpec sliding_instance(LayerKind kind, int channels, int k, Padding pad,
                                  int groups = 1) {
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

}  // namespace detail

// Eq. 1 aggregation against the element-wise Eq. 4 path with head-replicated
// weights; > 100 instances across head counts including M == D.
inline std::vector<CheckReport> suite_dual_path(std::uint64_t seed) {
    std::vector<CheckReport> out;
    struct Shape {
        std::size_t H, W;
        int window;
    };
    const Shape shapes[] = {{4, 4, 2}, {8, 8, 2}, {6, 6, 3}, {16, 16, 4}, {8, 12, 4}};
    const int channels[] = {6, 12, 48, 96};
    int instance = 0;
    for (const Shape& sh : shapes)
        for (int D : channels)
            for (int M : {1, 2, 3, D}) {
                for (int rep = 0; rep < 2; ++rep) {
                    Rng rng(seed + 1000 * instance + rep);
                    LayerSpec spec = detail::attention_instance(D, sh.window, M);
                    const LayerParams params = make_random_params(spec, sh.H, sh.W, rng);
                    const Tensor input =
                        tensor_random({1, sh.H, sh.W, (std::size_t)D}, rng, 1.0);
                    const Tensor head_path = local_attention_forward(input, spec, params);
                    const Tensor elem_path = elementwise_attention_forward(input, spec, params);
                    std::ostringstream tag;
                    tag << sh.H << "x" << sh.W << " D=" << D << " M=" << M << " rep=" << rep;
                    out.push_back(CheckReport::make("dual_path/local_attention",
                                                    max_abs_diff(head_path, elem_path), 1e-12,
                                                    tag.str()));
                }
                ++instance;
            }
    return out;
}

// Layer forwards against their dense connection matrices; >= 50 instances
// plus a corrupted-operator negative control per kind family.
inline std::vector<CheckReport> suite_oracle(std::uint64_t seed) {
    std::vector<CheckReport> out;
    struct Instance {
        LayerSpec spec;
        std::size_t H, W;
    };
    std::vector<Instance> instances;
    for (int k : {3, 5})
        for (Padding pad : {Padding::zero, Padding::circular}) {
            instances.push_back(
                {detail::sliding_instance(LayerKind::depthwise_conv, 4, k, pad), 8, 8});
            instances.push_back(
                {detail::sliding_instance(LayerKind::dynamic_depthwise_conv, 8, k, pad), 8, 8});
        }
    for (int heads : {1, 2, 4}) {
        instances.push_back({detail::attention_instance(8, 2, heads), 8, 8});
        instances.push_back({detail::attention_instance(8, 4, heads), 8, 8});
        LayerSpec st = detail::attention_instance(8, 4, heads);
        st.kind = LayerKind::static_local_attention;
        instances.push_back({st, 8, 8});
    }
    {
        LayerSpec s;
        s.kind = LayerKind::pointwise_conv;
        s.channels = 6;
        instances.push_back({s, 6, 6});
        s.kind = LayerKind::token_mixing_mlp;
        instances.push_back({s, 6, 6});
    }
    int n = 0;
    for (const Instance& inst : instances)
        for (int rep = 0; rep < 4; ++rep) {
            Rng rng(seed + 977 * n + rep);
            const LayerParams params =
                make_random_params(inst.spec, inst.H, inst.W, rng);
            const Tensor input = tensor_random(
                {1, inst.H, inst.W, (std::size_t)inst.spec.channels}, rng, 1.0);
            std::ostringstream tag;
            tag << inst.H << "x" << inst.W << " rep=" << rep;
            out.push_back(check_oracle_equivalence(inst.spec, params, input, 1e-10, tag.str()));
            ++n;
        }

    // negative control: one corrupted operator entry must be detected
    {
        Rng rng(seed + 31337);
        const LayerSpec spec =
            detail::sliding_instance(LayerKind::depthwise_conv, 3, 3, Padding::circular);
        const LayerParams params = make_random_params(spec, 6, 6, rng);
        const Tensor input = tensor_random({1, 6, 6, 3}, rng, 1.0);
        DenseOperator op = dense_operator_for(spec, params, input);
        op.m[op.cols + 2] += 0.5;
        const Tensor direct = layer_forward(input, spec, params);
        const Tensor via =
            unflatten_from(op, dense_apply(op, flatten_for(op, input)), 6, 6, 3);
        CheckReport r;
        r.name = "oracle/negative_control";
        r.metric = max_abs_diff(direct, via);
        r.tolerance = 1e-10;
        r.pass = r.metric > r.tolerance;  // the corruption must be visible
        r.instance = "corrupted depthwise operator entry";
        out.push_back(r);
    }
    return out;
}

inline std::vector<CheckReport> suite_grad(std::uint64_t seed,
                                           const std::string& only_kind = "") {
    std::vector<CheckReport> out;
    struct Instance {
        LayerSpec spec;
        std::size_t H, W;
    };
    std::vector<Instance> instances;
    instances.push_back({detail::sliding_instance(LayerKind::depthwise_conv, 3, 3, Padding::zero), 4, 4});
    instances.push_back(
        {detail::sliding_instance(LayerKind::depthwise_conv, 2, 3, Padding::circular), 4, 4});
    instances.push_back(
        {detail::sliding_instance(LayerKind::dynamic_depthwise_conv, 4, 3, Padding::zero), 4, 4});
    instances.push_back({detail::sliding_instance(LayerKind::inhomogeneous_dynamic_conv, 4, 3,
                                                  Padding::zero, 2),
                         4, 4});
    instances.push_back({detail::attention_instance(4, 2, 2), 4, 4});
    instances.push_back({detail::attention_instance(4, 2, 2, true), 4, 4});
    {
        LayerSpec st = detail::attention_instance(4, 2, 2);
        st.kind = LayerKind::static_local_attention;
        instances.push_back({st, 4, 4});
        LayerSpec s;
        s.kind = LayerKind::pointwise_conv;
        s.channels = 4;
        instances.push_back({s, 3, 3});
        s.kind = LayerKind::token_mixing_mlp;
        instances.push_back({s, 3, 3});
    }
    int n = 0;
    for (const Instance& inst : instances) {
        ++n;
        if (!only_kind.empty() && layer_kind_name(inst.spec.kind) != only_kind) continue;
        Rng rng(seed + 131 * n);
        const LayerParams params = make_random_params(inst.spec, inst.H, inst.W, rng);
        const Tensor input =
            tensor_random({1, inst.H, inst.W, (std::size_t)inst.spec.channels}, rng, 1.0);
        const Tensor g = tensor_random(input.shape(), rng, 1.0);
        out.push_back(check_gradients(inst.spec, params, input, g, 1e-4, 1e-5,
                                      "seeded instance " + std::to_string(n)));
    }
    return out;
}

inline std::vector<CheckReport> suite_equivariance(std::uint64_t seed) {
    std::vector<CheckReport> out;
    Rng rng(seed);

    // circular depth-wise: exact for every cyclic shift of an 8x8 map
    {
        const LayerSpec spec =
            detail::sliding_instance(LayerKind::depthwise_conv, 3, 3, Padding::circular);
        const LayerParams params = make_random_params(spec, 8, 8, rng);
        const Tensor input = tensor_random({1, 8, 8, 3}, rng, 1.0);
        for (int sy = 0; sy < 8; ++sy)
            for (int sx = 0; sx < 8; ++sx)
                out.push_back(
                    check_translation_equivariance(spec, params, input, sy, sx));
    }
    // zero padding: interior agreement only
    {
        const LayerSpec spec =
            detail::sliding_instance(LayerKind::depthwise_conv, 3, 3, Padding::zero);
        const LayerParams params = make_random_params(spec, 8, 8, rng);
        const Tensor input = tensor_random({1, 8, 8, 3}, rng, 1.0);
        for (auto [sy, sx] : {std::pair<int, int>{1, 0}, {0, 1}, {2, 3}})
            out.push_back(check_translation_equivariance(spec, params, input, sy, sx));
    }
    // partitioned attention: window-multiple shifts commute, unit shifts do not
    {
        const LayerSpec spec = detail::attention_instance(4, 2, 2);
        const LayerParams params = make_random_params(spec, 8, 8, rng);
        const Tensor input = tensor_random({1, 8, 8, 4}, rng, 1.0);
        for (auto [sy, sx] : {std::pair<int, int>{2, 0}, {0, 2}, {4, 6}, {2, 2}})
            out.push_back(check_translation_equivariance(spec, params, input, sy, sx));
        EquivarianceVerdict verdict;
        CheckReport unit =
            check_translation_equivariance(spec, params, input, 1, 0, &verdict);
        CheckReport witness;
        witness.name = "equivariance/unit_shift_violation";
        witness.metric = unit.metric;
        witness.tolerance = 1e-8;
        witness.pass = verdict == EquivarianceVerdict::inapplicable || unit.metric > 1e-8;
        witness.instance = "shift=(1,0) must break block-wise equivariance";
        out.push_back(witness);
    }
    return out;
}

inline std::vector<CheckReport> suite_structure(std::uint64_t seed) {
    std::vector<CheckReport> out;
    struct Instance {
        LayerSpec spec;
        std::size_t H, W;
    };
    std::vector<Instance> instances;
    instances.push_back({detail::attention_instance(96, 4, 3), 8, 8});
    instances.push_back({detail::attention_instance(8, 2, 2), 4, 4});
    {
        LayerSpec st = detail::attention_instance(8, 2, 2);
        st.kind = LayerKind::static_local_attention;
        instances.push_back({st, 4, 4});
    }
    instances.push_back({detail::sliding_instance(LayerKind::depthwise_conv, 4, 3, Padding::zero), 6, 6});
    instances.push_back(
        {detail::sliding_instance(LayerKind::dynamic_depthwise_conv, 8, 3, Padding::zero), 6, 6});
    instances.push_back({detail::sliding_instance(LayerKind::inhomogeneous_dynamic_conv, 8, 3,
                                                  Padding::zero, 2),
                         6, 6});
    int n = 0;
    for (const Instance& inst : instances) {
        Rng rng(seed + 57 * ++n);
        const LayerParams params = make_random_params(inst.spec, inst.H, inst.W, rng);
        const Tensor input =
            tensor_random({1, inst.H, inst.W, (std::size_t)inst.spec.channels}, rng, 1.0);
        out.push_back(check_sharing_structure(inst.spec, params, input,
                                              layer_kind_name(inst.spec.kind)));
        out.push_back(check_locality(inst.spec, params, input, inst.H / 2, inst.W / 2,
                                     layer_kind_name(inst.spec.kind)));
    }
    // 1x1 conv and token-mixing rows: sparsity read off the dense operators
    {
        Rng rng(seed + 999);
        const std::size_t C = 4, N = 9;
        const Tensor proj = tensor_random({C, C}, rng, 0.5);
        const DenseOperator point = sepmlp_spatial_operator(proj, N);
        double cross_position = 0.0;
        for (std::size_t r = 0; r < point.rows; ++r)
            for (std::size_t c = 0; c < point.cols; ++c)
                if (r / C != c / C) cross_position = std::max(cross_position, std::abs(point.at(r, c)));
        out.push_back(CheckReport::make("sharing/pointwise_conv_position_local", cross_position,
                                        0.0, "dense operator off-block mass"));

        const Tensor mix = tensor_random({N, N}, rng, 0.5);
        const DenseOperator token = sepmlp_channel_operator(mix, C);
        double cross_channel = 0.0;
        for (std::size_t r = 0; r < token.rows; ++r)
            for (std::size_t c = 0; c < token.cols; ++c)
                if (r / N != c / N) cross_channel = std::max(cross_channel, std::abs(token.at(r, c)));
        out.push_back(CheckReport::make("sharing/token_mixing_channel_sparse", cross_channel,
                                        0.0, "dense operator off-block mass"));
    }
    // dynamic vs static weight column of the relation table
    {
        Rng rng(seed + 1234);
        for (LayerKind kind : {LayerKind::local_attention, LayerKind::dynamic_depthwise_conv,
                               LayerKind::inhomogeneous_dynamic_conv,
                               LayerKind::static_local_attention, LayerKind::depthwise_conv}) {
            LayerSpec spec;
            if (kind == LayerKind::local_attention || kind == LayerKind::static_local_attention) {
                spec = detail::attention_instance(8, 2, 2);
                spec.kind = kind;
            } else {
                spec = detail::sliding_instance(kind, 8, 3, Padding::zero,
                                                kind == LayerKind::inhomogeneous_dynamic_conv ? 2
                                                                                              : 1);
            }
            const LayerParams params = make_random_params(spec, 4, 4, rng);
            const Tensor a = tensor_random({1, 4, 4, 8}, rng, 1.0);
            const Tensor b = tensor_random({1, 4, 4, 8}, rng, 1.0);
            out.push_back(check_dynamic_vs_static(spec, params, a, b, "random input pair"));
        }
    }
    return out;
}

inline std::vector<CheckReport> suite_permutation(std::uint64_t seed) {
    std::vector<CheckReport> out;
    for (int rep = 0; rep < 5; ++rep) {
        Rng rng(seed + rep);
        const Tensor input = tensor_random({1, 2, 2, 4}, rng, 1.0);
        Tensor permuted = input;
        for (std::size_t x = 0; x < 2; ++x)
            for (std::size_t c = 0; c < 4; ++c) {
                permuted.at4(0, 0, x, c) = input.at4(0, 1, x, c);
                permuted.at4(0, 1, x, c) = input.at4(0, 0, x, c);
            }
        const auto swapped_diff = [&](const LayerSpec& spec, const LayerParams& params) {
            const Tensor out_base = local_attention_forward(input, spec, params);
            const Tensor out_perm = local_attention_forward(permuted, spec, params);
            double worst = 0.0;
            for (std::size_t x = 0; x < 2; ++x)
                for (std::size_t c = 0; c < 4; ++c) {
                    worst = std::max(worst, std::abs(out_perm.at4(0, 0, x, c) -
                                                     out_base.at4(0, 1, x, c)));
                    worst = std::max(worst, std::abs(out_perm.at4(0, 1, x, c) -
                                                     out_base.at4(0, 0, x, c)));
                }
            return worst;
        };
        out.push_back(CheckReport::make(
            "permutation/set_invariance",
            swapped_diff(detail::attention_instance(4, 2, 2), LayerParams{}), 1e-12,
            "rep=" + std::to_string(rep)));
        LayerSpec biased = detail::attention_instance(4, 2, 2, true);
        const LayerParams params = make_random_params(biased, 2, 2, rng);
        CheckReport counter;
        counter.name = "permutation/bias_counterexample";
        counter.metric = swapped_diff(biased, params);
        counter.tolerance = 1e-6;
        counter.pass = counter.metric > 1e-6;  // bias must reintroduce order
        counter.instance = "rep=" + std::to_string(rep);
        out.push_back(counter);
    }
    return out;
}

inline std::vector<CheckReport> suite_kronecker(std::uint64_t seed) {
    std::vector<CheckReport> out;
    for (int rep = 0; rep < 24; ++rep) {
        Rng rng(seed + rep);
        const std::size_t Ci = 2 + rep % 7, Ni = 2 + (rep / 2) % 7;
        const std::size_t Co = 2 + (rep / 3) % 7, No = 2 + (rep / 4) % 7;
        const Tensor a = tensor_random({Co, Ci}, rng, 1.0);
        const Tensor b = tensor_random({Ni, No}, rng, 1.0);
        const Tensor x = tensor_random({Ci * Ni}, rng, 1.0);
        const Tensor via_mat = kronecker_apply(a, b, x);
        const DenseOperator op = kronecker_operator(a, b);
        std::vector<double> xv(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) xv[i] = x[i];
        const std::vector<double> via_dense = dense_apply(op, xv);
        double worst = 0.0;
        for (std::size_t i = 0; i < via_mat.size(); ++i)
            worst = std::max(worst, std::abs(via_mat[i] - via_dense[i]));
        std::ostringstream tag;
        tag << "C " << Ci << "->" << Co << ", N " << Ni << "->" << No;
        out.push_back(CheckReport::make("kronecker/vec_identity", worst, 1e-12, tag.str()));
    }
    return out;
}

using SuiteFn = std::function<std::vector<CheckReport>(std::uint64_t)>;

inline const std::map<std::string, SuiteFn>& suite_registry() {
    static const std::map<std::string, SuiteFn> suites = {
        {"dual-path", [](std::uint64_t s) { return suite_dual_path(s); }},
        {"oracle", [](std::uint64_t s) { return suite_oracle(s); }},
        {"grad", [](std::uint64_t s) { return suite_grad(s); }},
        {"equivariance", [](std::uint64_t s) { return suite_equivariance(s); }},
        {"structure", [](std::uint64_t s) { return suite_structure(s); }},
        {"permutation", [](std::uint64_t s) { return suite_permutation(s); }},
        {"kronecker", [](std::uint64_t s) { return suite_kronecker(s); }},
    };
    return suites;
}

inline nlohmann::json reports_json(const std::string& suite, std::uint64_t seed,
                                   const std::vector<CheckReport>& reports) {
    nlohmann::json checks = nlohmann::json::array();
    std::size_t failed = 0;
    for (const CheckReport& r : reports) {
        if (!r.pass) ++failed;
        checks.push_back({{"name", r.name},
                          {"status", r.pass ? "pass" : "fail"},
                          {"metric", r.metric},
                          {"tolerance", r.tolerance},
                          {"instance", r.instance}});
    }
    return {{"suite", suite},
            {"seed", seed},
            {"total", reports.size()},
            {"failed", failed},
            {"checks", checks}};
}

}  // namespace layerkit
