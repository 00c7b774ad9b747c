#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerkit/tensor.hpp"

// Network variants from the four-stage architecture table, described as
// declarative specs, plus parameter and multiply-accumulate counters.
// Conventions: 1 MAC = 1 FLOP; normalizations carry 2D affine parameters and
// zero FLOPs; softmax and activations are free.

namespace layerkit {

enum class BlockKind {
    window_attention,
    depthwise,
    dynamic_depthwise,
};

struct StageSpec {
    std::size_t channels = 0;
    std::size_t depth = 0;
    std::size_t heads = 0;  // attention only; 0 for conv stages
};

struct ArchSpec {
    std::string name;
    BlockKind block = BlockKind::window_attention;
    std::array<StageSpec, 4> stages{};
    std::size_t window = 7;
    std::size_t mlp_ratio = 4;
    std::size_t patch = 4;
    std::size_t in_channels = 3;
    std::size_t num_classes = 1000;
    bool qkv_projections = true;        // q/k/v input projections in attention blocks
    bool relative_position_bias = true;  // per-block bias tables in attention blocks
    bool predictor_per_group = false;    // dynamic predictor emits per-group kernels
};

struct CountEntry {
    std::string stage;  // "embed", "stage1".."stage4", "head"
    std::string kind;   // parameter/flop bucket within the stage
    std::uint64_t params = 0;
    std::uint64_t flops = 0;
};

struct CountReport {
    std::string arch;
    std::size_t input_size = 0;
    std::uint64_t params_total = 0;
    std::uint64_t flops_total = 0;
    std::vector<CountEntry> breakdown;
};

inline ArchSpec build_arch(const std::string& name) {
    ArchSpec s;
    s.name = name;
    const bool tiny = name == "swin-t" || name == "dwconv-t" || name == "d-dwconv-t";
    const bool base = name == "swin-b" || name == "dwconv-b" || name == "d-dwconv-b";
    if (!tiny && !base) throw ConfigError("build_arch: unknown arch " + name);
    const std::size_t c0 = tiny ? 96 : 128;
    const std::size_t stage3 = tiny ? 6 : 18;
    const bool attention = name == "swin-t" || name == "swin-b";
    const bool dynamic = name == "d-dwconv-t" || name == "d-dwconv-b";
    s.block = attention ? BlockKind::window_attention
                        : (dynamic ? BlockKind::dynamic_depthwise : BlockKind::depthwise);
    for (std::size_t i = 0; i < 4; ++i) {
        s.stages[i].channels = c0 << i;
        s.stages[i].depth = i == 2 ? stage3 : 2;
        s.stages[i].heads = attention ? (tiny ? 3 : 4) << i : 0;
    }
    return s;
}

namespace detail {

inline void push_entry(CountReport& r, const std::string& stage, const std::string& kind,
                       std::uint64_t params, std::uint64_t flops) {
    r.breakdown.push_back({stage, kind, params, flops});
    r.params_total += params;
    r.flops_total += flops;
}

}  // namespace detail

// Parameters and MACs in one pass; count_params / count_flops below are the
// spec-facing views of the same report.
inline CountReport count_arch(const ArchSpec& spec, std::size_t input_size = 224) {
    if (input_size % (spec.patch * 8) != 0)
        throw GeometryError("count_arch: input must be divisible by patch size times 8");
    CountReport r;
    r.arch = spec.name;
    r.input_size = input_size;

    const std::size_t Nk = spec.window * spec.window;
    std::size_t res = input_size / spec.patch;  // stage-1 resolution

    // patch embedding: concat patch^2 x in_channels, linear to stage-1 width, LN
    {
        const std::uint64_t in_dim = spec.patch * spec.patch * spec.in_channels;
        const std::uint64_t D = spec.stages[0].channels;
        const std::uint64_t N = static_cast<std::uint64_t>(res) * res;
        detail::push_entry(r, "embed", "projection", in_dim * D + D, N * in_dim * D);
        detail::push_entry(r, "embed", "norm", 2 * D, 0);
    }

    for (std::size_t i = 0; i < 4; ++i) {
        const StageSpec& st = spec.stages[i];
        const std::uint64_t D = st.channels;
        if (res % spec.window != 0)
            throw GeometryError("count_arch: stage resolution not divisible by the window");
        const std::uint64_t N = static_cast<std::uint64_t>(res) * res;
        const std::string tag = "stage" + std::to_string(i + 1);

        std::uint64_t mix_p = 0, mix_f = 0;      // attention or conv path
        std::uint64_t norm_p = 0;                // LN/BN affine
        std::uint64_t bias_p = 0;                // relative-position tables
        std::uint64_t pred_p = 0, pred_f = 0;    // dynamic kernel predictor
        if (spec.block == BlockKind::window_attention) {
            if (spec.qkv_projections) {
                mix_p += 3 * (D * D + D);
                mix_f += N * 3 * D * D;
            }
            mix_p += D * D + D;  // output projection
            mix_f += N * D * D;
            mix_f += 2 * N * Nk * D;  // QK^T and AV, window count folded in
            norm_p += 2 * 2 * D;      // pre-attention and pre-MLP LN
            if (spec.relative_position_bias)
                bias_p += (2 * spec.window - 1) * (2 * spec.window - 1) * st.heads;
        } else {
            // linear D, BN, ReLU; depthwise KxK, BN, ReLU; linear D, BN
            mix_p += 2 * (D * D + D) + Nk * D + D;
            mix_f += N * (2 * D * D + Nk * D);
            norm_p += 3 * 2 * D + 2 * D;  // three BNs plus the pre-MLP LN
            if (spec.block == BlockKind::dynamic_depthwise) {
                const std::uint64_t hidden = D / 4;
                const std::uint64_t out =
                    (spec.predictor_per_group ? std::max<std::uint64_t>(1, st.heads) : D) * Nk;
                pred_p = D * hidden + hidden * out;
                pred_f = pred_p;  // runs once per image on the pooled vector
            }
        }
        const std::uint64_t mlp_p = 2 * spec.mlp_ratio * D * D + (spec.mlp_ratio + 1) * D;
        const std::uint64_t mlp_f = N * 2 * spec.mlp_ratio * D * D;

        const std::uint64_t depth = st.depth;
        detail::push_entry(r, tag, "mixing", depth * mix_p, depth * mix_f);
        detail::push_entry(r, tag, "mlp", depth * mlp_p, depth * mlp_f);
        detail::push_entry(r, tag, "norm", depth * norm_p, 0);
        if (bias_p) detail::push_entry(r, tag, "position_bias", depth * bias_p, 0);
        if (pred_p) detail::push_entry(r, tag, "predictor", depth * pred_p, depth * pred_f);

        if (i < 3) {
            // patch merging: LN on the 4D concat, then linear 4D -> 2D
            const std::uint64_t merged = (N / 4) * (8 * D * D);
            detail::push_entry(r, tag, "patch_merging", 8 * D * D + 8 * D, merged);
            res /= 2;
        }
    }

    {
        const std::uint64_t D = spec.stages[3].channels;
        detail::push_entry(r, "head", "norm", 2 * D, 0);
        detail::push_entry(r, "head", "classifier", D * spec.num_classes + spec.num_classes,
                           D * spec.num_classes);
    }
    return r;
}

inline CountReport count_params(const ArchSpec& spec) { return count_arch(spec); }

inline CountReport count_flops(const ArchSpec& spec, std::size_t input_size) {
    return count_arch(spec, input_size);
}

// Head counts so that `channels_per_group` channels share one set of
// attention weights. 6 does not divide the stage widths; the documented
// mapping fixes stage-1 grouping at 6 and doubles per stage.
inline ArchSpec sharing_group_variant(const ArchSpec& base, std::size_t channels_per_group) {
    if (base.block != BlockKind::window_attention)
        throw ConfigError("sharing_group_variant: base must be an attention arch");
    ArchSpec out = base;
    out.name = base.name + "-g" + std::to_string(channels_per_group);
    if (channels_per_group == 6) {
        const std::size_t heads[4] = {16, 32, 64, 128};
        for (std::size_t i = 0; i < 4; ++i) out.stages[i].heads = heads[i];
        return out;
    }
    for (std::size_t i = 0; i < 4; ++i) {
        if (base.stages[i].channels % channels_per_group != 0)
            throw ConfigError("sharing_group_variant: group size does not divide stage channels");
        out.stages[i].heads = base.stages[i].channels / channels_per_group;
    }
    return out;
}

inline std::vector<ArchSpec> sharing_group_sweep(const ArchSpec& base,
                                                 const std::vector<std::size_t>& group_sizes) {
    std::vector<ArchSpec> out;
    out.reserve(group_sizes.size());
    for (std::size_t g : group_sizes) out.push_back(sharing_group_variant(base, g));
    return out;
}

inline nlohmann::json count_report_json(const CountReport& r) {
    nlohmann::json j;
    j["arch"] = r.arch;
    j["input_size"] = r.input_size;
    j["params_total"] = r.params_total;
    j["flops_total"] = r.flops_total;
    j["breakdown"] = nlohmann::json::array();
    for (const CountEntry& e : r.breakdown)
        j["breakdown"].push_back(
            {{"stage", e.stage}, {"kind", e.kind}, {"params", e.params}, {"flops", e.flops}});
    return j;
}

}  // namespace layerkit
