#pragma once

#include <string>
#include <utility>
#include <vector>

#include "layerkit/geometry.hpp"
#include "layerkit/tensor.hpp"

namespace layerkit {

enum class LayerKind {
    local_attention,
    static_local_attention,
    depthwise_conv,
    dynamic_depthwise_conv,
    inhomogeneous_dynamic_conv,
    pointwise_conv,
    token_mixing_mlp,
};

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::local_attention: return "local_attention";
        case LayerKind::static_local_attention: return "static_local_attention";
        case LayerKind::depthwise_conv: return "depthwise_conv";
        case LayerKind::dynamic_depthwise_conv: return "dynamic_depthwise_conv";
        case LayerKind::inhomogeneous_dynamic_conv: return "inhomogeneous_dynamic_conv";
        case LayerKind::pointwise_conv: return "pointwise_conv";
        case LayerKind::token_mixing_mlp: return "token_mixing_mlp";
    }
    return "?";
}

inline LayerKind layer_kind_from_name(const std::string& name) {
    for (LayerKind k : {LayerKind::local_attention, LayerKind::static_local_attention,
                        LayerKind::depthwise_conv, LayerKind::dynamic_depthwise_conv,
                        LayerKind::inhomogeneous_dynamic_conv, LayerKind::pointwise_conv,
                        LayerKind::token_mixing_mlp})
        if (name == layer_kind_name(k)) return k;
    throw ConfigError("unknown layer kind: " + name);
}

struct LayerSpec {
    LayerKind kind = LayerKind::depthwise_conv;
    int channels = 0;          // D
    int heads_or_groups = 1;   // M; channels per group = D/M
    WindowGeometry geometry;
    bool use_qkv_projections = false;
    bool use_relative_position_bias = false;

    int group_size() const { return channels / heads_or_groups; }

    void validate() const {
        if (channels < 1) throw ConfigError("layer: channels must be positive");
        if (heads_or_groups < 1) throw ConfigError("layer: heads_or_groups must be >= 1");
        if (channels % heads_or_groups != 0)
            throw ConfigError("layer: channels must be divisible by heads_or_groups");
    }
};

// Every parameter a layer kind can carry; unused tensors stay empty.
struct LayerParams {
    Tensor kernel;            // depthwise: (D, Nk), one kernel row per channel
    Tensor window_table;      // static attention: (windows, M, Nk, Nk)
    Tensor query_proj;        // (D, D)
    Tensor key_proj;          // (D, D)
    Tensor value_proj;        // (D, D)
    Tensor output_proj;       // (D, D)
    Tensor position_bias;     // (M, (2Kh-1)(2Kw-1)), indexed by relative offset
    Tensor predictor_reduce;  // homogeneous dynamic: (D/4, D)
    Tensor predictor_expand;  // homogeneous dynamic: (D*Nk, D/4) or (M*Nk, D/4)
    Tensor point_reduce;      // inhomogeneous dynamic: (D/4, D)
    Tensor point_expand;      // inhomogeneous dynamic: (M*Nk, D/4)
    Tensor projection;        // pointwise: (D_out, D_in)
    Tensor spatial_mix;       // token-mixing MLP: (N, N)

    bool predictor_hidden_relu = true;  // rectifier between the two projections
    bool predictor_per_group = false;   // predict M*Nk instead of D*Nk weights
};

// Named list of the trainable tensors a spec actually uses; shared by the
// analytic backward pass and the finite-difference oracle.
inline std::vector<std::pair<std::string, Tensor*>> trainable_params(const LayerSpec& spec,
                                                                     LayerParams& params) {
    std::vector<std::pair<std::string, Tensor*>> out;
    switch (spec.kind) {
        case LayerKind::local_attention:
            if (spec.use_relative_position_bias) out.emplace_back("position_bias", &params.position_bias);
            break;
        case LayerKind::static_local_attention:
            out.emplace_back("window_table", &params.window_table);
            break;
        case LayerKind::depthwise_conv:
            out.emplace_back("kernel", &params.kernel);
            break;
        case LayerKind::dynamic_depthwise_conv:
            out.emplace_back("predictor_reduce", &params.predictor_reduce);
            out.emplace_back("predictor_expand", &params.predictor_expand);
            break;
        case LayerKind::inhomogeneous_dynamic_conv:
            out.emplace_back("point_reduce", &params.point_reduce);
            out.emplace_back("point_expand", &params.point_expand);
            break;
        case LayerKind::pointwise_conv:
            out.emplace_back("projection", &params.projection);
            break;
        case LayerKind::token_mixing_mlp:
            out.emplace_back("spatial_mix", &params.spatial_mix);
            break;
    }
    return out;
}

// Random parameters sized for `spec` applied to an (B,H,W,D) map of the
// given spatial extents.
inline LayerParams make_random_params(const LayerSpec& spec, std::size_t height, std::size_t width,
                                      Rng& rng, double scale = 0.5,
                                      bool predictor_per_group = false) {
    spec.validate();
    const std::size_t D = static_cast<std::size_t>(spec.channels);
    const std::size_t M = static_cast<std::size_t>(spec.heads_or_groups);
    const std::size_t Nk = static_cast<std::size_t>(spec.geometry.slots());
    const std::size_t hidden = std::max<std::size_t>(1, D / 4);
    LayerParams p;
    p.predictor_per_group = predictor_per_group;
    switch (spec.kind) {
        case LayerKind::local_attention:
            if (spec.use_qkv_projections) {
                p.query_proj = tensor_random({D, D}, rng, scale);
                p.key_proj = tensor_random({D, D}, rng, scale);
                p.value_proj = tensor_random({D, D}, rng, scale);
                p.output_proj = tensor_random({D, D}, rng, scale);
            }
            if (spec.use_relative_position_bias)
                p.position_bias = tensor_random(
                    {M, static_cast<std::size_t>(spec.geometry.offset_table_size())}, rng, scale);
            break;
        case LayerKind::static_local_attention: {
            spec.geometry.validate(height, width);
            const std::size_t windows = (height / spec.geometry.window_h) *
                                        (width / spec.geometry.window_w);
            p.window_table = tensor_random({windows, M, Nk, Nk}, rng, scale);
            break;
        }
        case LayerKind::depthwise_conv:
            p.kernel = tensor_random({D, Nk}, rng, scale);
            break;
        case LayerKind::dynamic_depthwise_conv: {
            p.predictor_reduce = tensor_random({hidden, D}, rng, scale);
            const std::size_t out_rows = (p.predictor_per_group ? M : D) * Nk;
            p.predictor_expand = tensor_random({out_rows, hidden}, rng, scale);
            break;
        }
        case LayerKind::inhomogeneous_dynamic_conv:
            p.point_reduce = tensor_random({hidden, D}, rng, scale);
            p.point_expand = tensor_random({M * Nk, hidden}, rng, scale);
            break;
        case LayerKind::pointwise_conv:
            p.projection = tensor_random({D, D}, rng, scale);
            break;
        case LayerKind::token_mixing_mlp:
            p.spatial_mix = tensor_random({height * width, height * width}, rng, scale);
            break;
    }
    return p;
}

}  // namespace layerkit
