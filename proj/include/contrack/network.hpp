#pragma once

#include <contrack/autodiff.hpp>
#include <contrack/types.hpp>

#include <cstdint>
#include <vector>

namespace contrack {

/// Strided-conv pyramid with top-down lateral fusion back to input size.
struct EncoderConfig {
    std::vector<int> stage_channels{8, 16, 32};
    int fpn_channels = 16;
    int image_size = 128;
    std::uint64_t seed = 0;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct TrackerConfig {
    EncoderConfig encoder;
    int pos_dim = 32;  // sin/cos pairs over point order index
    int model_dim = 64;
    int heads = 4;
    int head_hidden = 64;
    /// Start from zero motion: the last offset layer is zero-initialized.
    bool zero_init_head = true;

    int point_feature_dim() const { return encoder.fpn_channels + pos_dim + 2; }
    friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

/// Throws Error(ConfigError) on inconsistent sizes.
void validate(const TrackerConfig& cfg);

struct TrackerWeights {
    TrackerConfig config;
    ad::ParameterSet params;
    std::uint64_t iteration = 0;

    friend bool operator==(const TrackerWeights&, const TrackerWeights&) = default;
};

/// He-uniform init for conv and linear weights, zero biases.
TrackerWeights init_weights(const TrackerConfig& cfg);

enum class Direction { Forward, Backward };

struct OffsetField {
    Direction direction = Direction::Forward;
    std::vector<Vec2> offsets;

    std::size_t size() const { return offsets.size(); }
};

/// Image [H, W] in [0, 1] -> feature map [fpn_channels, H, W].
ad::Var encode(const Image& image, const TrackerConfig& cfg, const ad::Binding& params);
ad::Tensor encode(const Image& image, const TrackerWeights& weights);

/// Sinusoidal embedding of point order indices 0..count-1: [count, dim] with
/// interleaved (sin, cos) pairs.
ad::Tensor positional_embedding(std::size_t count, int dim);

/// [N, C + pos_dim + 2]: sampled features, order embedding, (x, y) scaled to [0, 1].
ad::Var sample_point_features(const ad::Var& feature_map, const Contour& contour, int pos_dim);

struct AttentionResult {
    ad::Var output;                    // [Nq, model_dim]
    std::vector<ad::Tensor> weights;  // per head [Nq, Nk]
};

/// Multi-head cross attention of query points over key/value points.
AttentionResult cross_attend(const ad::Var& query, const ad::Var& keyvalue, const TrackerConfig& cfg,
                             const ad::Binding& params, Direction direction);

/// Shared 3-layer offset head: [N, model_dim] -> [N, 2] pixel offsets.
ad::Var regress_offsets(const ad::Var& fused, const ad::Binding& params);

struct ForwardOutputs {
    ad::Var features_t;    // encoder maps
    ad::Var features_t1;
    ad::Var offsets_forward;   // [N_t, 2]
    ad::Var offsets_backward;  // [N_t1, 2]
};

ForwardOutputs forward_pass(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                            const Contour& contour_t1, const TrackerConfig& cfg, const ad::Binding& params);

/// Inference path: forward attention only.
OffsetField predict_forward_offsets(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                                    const Contour& contour_t1, const TrackerWeights& weights);

OffsetField to_offset_field(const ad::Tensor& offsets, Direction direction);

}  // namespace contrack
