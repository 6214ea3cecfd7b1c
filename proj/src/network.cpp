#include <contrack/errors.hpp>
#include <contrack/network.hpp>
#include <contrack/rng.hpp>

#include <cmath>
#include <string>
#include <utility>

namespace contrack {

namespace {

std::string dir_prefix(Direction d) { return d == Direction::Forward ? "fwd" : "bwd"; }

ad::Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    ad::Tensor t(std::move(shape));
    double bound = std::sqrt(6.0 / fan_in);
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

void validate(const TrackerConfig& cfg) {
    const auto& e = cfg.encoder;
    if (e.stage_channels.size() < 2) throw Error(ErrorKind::ConfigError, "encoder needs at least 2 stages");
    for (int c : e.stage_channels)
        if (c <= 0) throw Error(ErrorKind::ConfigError, "stage channel widths must be positive");
    if (e.fpn_channels <= 0 || e.image_size < 8) throw Error(ErrorKind::ConfigError, "bad encoder sizes");
    if (cfg.pos_dim <= 0 || cfg.pos_dim % 2 != 0) throw Error(ErrorKind::ConfigError, "pos_dim must be even and positive");
    if (cfg.heads <= 0 || cfg.model_dim % cfg.heads != 0)
        throw Error(ErrorKind::ConfigError, "model_dim must be divisible by heads");
    if (cfg.head_hidden <= 0) throw Error(ErrorKind::ConfigError, "head_hidden must be positive");
}

TrackerWeights init_weights(const TrackerConfig& cfg) {
    validate(cfg);
    TrackerWeights w;
    w.config = cfg;
    Rng rng(cfg.encoder.seed);
    auto& p = w.params;
    const auto& stages = cfg.encoder.stage_channels;
    int in = 1;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        std::string n = "enc.s" + std::to_string(s);
        p.add(n + ".w", he_uniform({stages[s], in, 3, 3}, in * 9, rng));
        p.add(n + ".b", ad::Tensor({stages[s]}, 0.0));
        in = stages[s];
    }
    for (std::size_t s = 0; s < stages.size(); ++s) {
        std::string n = "enc.lat" + std::to_string(s);
        p.add(n + ".w", he_uniform({cfg.encoder.fpn_channels, stages[s], 1, 1}, stages[s], rng));
        p.add(n + ".b", ad::Tensor({cfg.encoder.fpn_channels}, 0.0));
    }
    const int F = cfg.point_feature_dim(), D = cfg.model_dim;
    // Both attention instances start from the same draw so that symmetric
    // inputs give symmetric offsets at initialization.
    const std::vector<std::pair<std::string, ad::Tensor>> attention{
        {"wq", he_uniform({F, D}, F, rng)}, {"bq", ad::Tensor({D}, 0.0)},
        {"wk", he_uniform({F, D}, F, rng)}, {"bk", ad::Tensor({D}, 0.0)},
        {"wv", he_uniform({F, D}, F, rng)}, {"bv", ad::Tensor({D}, 0.0)},
        {"wo", he_uniform({D, D}, D, rng)}, {"bo", ad::Tensor({D}, 0.0)},
        {"ws", he_uniform({F, D}, F, rng)}, {"bs", ad::Tensor({D}, 0.0)},
    };
    for (Direction d : {Direction::Forward, Direction::Backward})
        for (const auto& [name, value] : attention) p.add(dir_prefix(d) + "." + name, value);
    const int Hd = cfg.head_hidden;
    p.add("head.w1", he_uniform({D, Hd}, D, rng));
    p.add("head.b1", ad::Tensor({Hd}, 0.0));
    p.add("head.w2", he_uniform({Hd, Hd}, Hd, rng));
    p.add("head.b2", ad::Tensor({Hd}, 0.0));
    p.add("head.w3", cfg.zero_init_head ? ad::Tensor({Hd, 2}, 0.0) : he_uniform({Hd, 2}, Hd, rng));
    p.add("head.b3", ad::Tensor({2}, 0.0));
    return w;
}

ad::Var encode(const Image& image, const TrackerConfig& cfg, const ad::Binding& params) {
    const int size = cfg.encoder.image_size;
    if (image.height != size || image.width != size)
        throw Error(ErrorKind::ShapeMismatch, "image is " + std::to_string(image.height) + "x" +
                                                  std::to_string(image.width) + ", encoder expects " +
                                                  std::to_string(size) + "x" + std::to_string(size));
    ad::Var x = ad::constant(ad::Tensor({1, image.height, image.width}, image.data));
    const auto& stages = cfg.encoder.stage_channels;
    std::vector<ad::Var> levels;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        std::string n = "enc.s" + std::to_string(s);
        x = ad::relu(ad::conv2d(x, params(n + ".w"), params(n + ".b"), 2));
        levels.push_back(x);
    }
    ad::Var top;
    for (std::size_t s = stages.size(); s-- > 0;) {
        std::string n = "enc.lat" + std::to_string(s);
        ad::Var lateral = ad::conv2d(levels[s], params(n + ".w"), params(n + ".b"), 1);
        if (top) {
            top = ad::add(lateral, ad::resize_bilinear(top, lateral->value.dim(1), lateral->value.dim(2)));
        } else {
            top = lateral;
        }
    }
    return ad::resize_bilinear(top, image.height, image.width);
}

ad::Tensor encode(const Image& image, const TrackerWeights& weights) {
    ad::Binding params(weights.params, false);
    return encode(image, weights.config, params)->value;
}

ad::Tensor positional_embedding(std::size_t count, int dim) {
    ad::Tensor t({static_cast<int>(count), dim});
    const int pairs = dim / 2;
    for (std::size_t i = 0; i < count; ++i)
        for (int k = 0; k < pairs; ++k) {
            double freq = std::pow(10000.0, -2.0 * k / dim);
            t[i * dim + 2 * k] = std::sin(static_cast<double>(i) * freq);
            t[i * dim + 2 * k + 1] = std::cos(static_cast<double>(i) * freq);
        }
    return t;
}

ad::Var sample_point_features(const ad::Var& feature_map, const Contour& contour, int pos_dim) {
    if (contour.empty()) throw Error(ErrorKind::EmptyContour, "cannot sample features on an empty contour");
    const int H = feature_map->value.dim(1), W = feature_map->value.dim(2);
    const int n = static_cast<int>(contour.size());
    ad::Tensor coords({n, 2}), normalized({n, 2});
    for (int i = 0; i < n; ++i) {
        coords[2 * i] = contour.points[i].x;
        coords[2 * i + 1] = contour.points[i].y;
        normalized[2 * i] = contour.points[i].x / std::max(W - 1, 1);
        normalized[2 * i + 1] = contour.points[i].y / std::max(H - 1, 1);
    }
    ad::Var sampled = ad::sample_points(feature_map, ad::constant(std::move(coords)));
    std::vector<ad::Var> parts{sampled, ad::constant(positional_embedding(contour.size(), pos_dim)),
                               ad::constant(std::move(normalized))};
    return ad::concat_cols(parts);
}

AttentionResult cross_attend(const ad::Var& query, const ad::Var& keyvalue, const TrackerConfig& cfg,
                             const ad::Binding& params, Direction direction) {
    if (query->value.rows() == 0 || keyvalue->value.rows() == 0)
        throw Error(ErrorKind::EmptyContour, "cross attention needs nonempty query and key/value sets");
    const std::string n = dir_prefix(direction);
    ad::Var q = ad::linear(query, params(n + ".wq"), params(n + ".bq"));
    ad::Var k = ad::linear(keyvalue, params(n + ".wk"), params(n + ".bk"));
    ad::Var v = ad::linear(keyvalue, params(n + ".wv"), params(n + ".bv"));
    const int dh = cfg.model_dim / cfg.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    AttentionResult result;
    std::vector<ad::Var> heads;
    for (int h = 0; h < cfg.heads; ++h) {
        ad::Var qh = ad::slice_cols(q, h * dh, (h + 1) * dh);
        ad::Var kh = ad::slice_cols(k, h * dh, (h + 1) * dh);
        ad::Var vh = ad::slice_cols(v, h * dh, (h + 1) * dh);
        ad::Var attn = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt));
        result.weights.push_back(attn->value);
        heads.push_back(ad::matmul(attn, vh));
    }
    result.output = ad::linear(ad::concat_cols(heads), params(n + ".wo"), params(n + ".bo"));
    return result;
}

ad::Var regress_offsets(const ad::Var& fused, const ad::Binding& params) {
    ad::Var h = ad::relu(ad::linear(fused, params("head.w1"), params("head.b1")));
    h = ad::relu(ad::linear(h, params("head.w2"), params("head.b2")));
    ad::Var out = ad::linear(h, params("head.w3"), params("head.b3"));
    for (double v : out->value.data)
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteOutput, "offset head produced a non-finite value");
    return out;
}

namespace {

ad::Var fuse(const ad::Var& query, const ad::Var& keyvalue, const TrackerConfig& cfg, const ad::Binding& params,
             Direction d) {
    const std::string n = dir_prefix(d);
    ad::Var skip = ad::linear(query, params(n + ".ws"), params(n + ".bs"));
    return ad::add(skip, cross_attend(query, keyvalue, cfg, params, d).output);
}

}  // namespace

ForwardOutputs forward_pass(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                            const Contour& contour_t1, const TrackerConfig& cfg, const ad::Binding& params) {
    ForwardOutputs out;
    out.features_t = encode(image_t, cfg, params);
    out.features_t1 = encode(image_t1, cfg, params);
    ad::Var pf_t = sample_point_features(out.features_t, contour_t, cfg.pos_dim);
    ad::Var pf_t1 = sample_point_features(out.features_t1, contour_t1, cfg.pos_dim);
    out.offsets_forward = regress_offsets(fuse(pf_t, pf_t1, cfg, params, Direction::Forward), params);
    out.offsets_backward = regress_offsets(fuse(pf_t1, pf_t, cfg, params, Direction::Backward), params);
    return out;
}

OffsetField to_offset_field(const ad::Tensor& offsets, Direction direction) {
    OffsetField f;
    f.direction = direction;
    f.offsets.resize(offsets.rows());
    for (int i = 0; i < offsets.rows(); ++i) f.offsets[i] = {offsets[2 * i], offsets[2 * i + 1]};
    return f;
}

OffsetField predict_forward_offsets(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                                    const Contour& contour_t1, const TrackerWeights& weights) {
    ad::Binding params(weights.params, false);
    const auto& cfg = weights.config;
    ad::Var pf_t = sample_point_features(encode(image_t, cfg, params), contour_t, cfg.pos_dim);
    ad::Var pf_t1 = sample_point_features(encode(image_t1, cfg, params), contour_t1, cfg.pos_dim);
    ad::Var offsets = regress_offsets(fuse(pf_t, pf_t1, cfg, params, Direction::Forward), params);
    return to_offset_field(offsets->value, Direction::Forward);
}

}  // namespace contrack
