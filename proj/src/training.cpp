#include <contrack/config.hpp>
#include <contrack/errors.hpp>
#include <contrack/labels.hpp>
#include <contrack/rng.hpp>
#include <contrack/training.hpp>

#include <cmath>
#include <cstring>
#include <sstream>
#include <utility>

namespace contrack {

using nlohmann::json;

TrainConfig desk_profile() { return TrainConfig{}; }

TrainConfig paper_profile() {
    TrainConfig c;
    c.lr_init = 1e-4;
    c.image_size = 512;
    c.total_iters = 50000;
    c.decay_start_iter = 10000;
    c.batch_size = 8;
    c.checkpoint_every = 5000;
    return c;
}

TrainConfig train_profile(const std::string& name) {
    if (name == "desk") return desk_profile();
    if (name == "paper") return paper_profile();
    throw Error(ErrorKind::ConfigError, "unknown training profile '" + name + "' (expected desk or paper)");
}

void validate(const TrainConfig& c) {
    if (!(c.lr_init > 0.0) || !std::isfinite(c.lr_init)) throw Error(ErrorKind::ConfigError, "lr_init must be > 0");
    if (c.decay_start_iter < 0) throw Error(ErrorKind::ConfigError, "decay_start_iter must be >= 0");
    if (c.total_iters < c.decay_start_iter)
        throw Error(ErrorKind::ConfigError, "total_iters must be >= decay_start_iter");
    if (c.batch_size < 1) throw Error(ErrorKind::ConfigError, "batch_size must be >= 1");
    if (c.image_size < 8) throw Error(ErrorKind::ConfigError, "image_size must be >= 8");
    if (c.checkpoint_every < 0) throw Error(ErrorKind::ConfigError, "checkpoint_every must be >= 0");
    if (!(c.grad_clip_norm > 0.0)) throw Error(ErrorKind::ConfigError, "grad_clip_norm must be > 0");
    if (!c.enabled_losses.any()) throw Error(ErrorKind::ConfigError, "no loss component enabled");
}

double lr_schedule(int iter, const TrainConfig& cfg) {
    if (iter < 0 || iter > cfg.total_iters)
        throw Error(ErrorKind::ConfigError, "iteration " + std::to_string(iter) + " outside [0, total_iters]");
    if (iter < cfg.decay_start_iter) return cfg.lr_init;
    const int span = cfg.total_iters - cfg.decay_start_iter;
    if (span == 0) return 0.0;
    return cfg.lr_init * (1.0 - static_cast<double>(iter - cfg.decay_start_iter) / span);
}

Adam::Adam(const ad::ParameterSet& params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_.emplace_back(params[i].shape);
        v_.emplace_back(params[i].shape);
    }
}

void Adam::step(ad::ParameterSet& params, const std::vector<ad::Tensor>& grads, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (grads.size() != params.size()) throw Error(ErrorKind::ShapeMismatch, "gradient count differs from parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].data;
        const auto& g = grads[i].data;
        auto& m = m_[i].data;
        auto& v = v_[i].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1 - b1) * g[k];
            v[k] = b2 * v[k] + (1 - b2) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
    }
}

double clip_global_norm(std::vector<ad::Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads)
        for (double v : g.data) sq += v * v;
    const double n = std::sqrt(sq);
    if (n > max_norm) {
        const double s = max_norm / n;
        for (auto& g : grads)
            for (double& v : g.data) v *= s;
    }
    return n;
}

std::string format_train_log_csv(const std::vector<TrainLogRow>& log) {
    std::string out = "iteration,cycle,mech_normal,mech_linear,photometric,total,lr\n";
    for (const auto& r : log) {
        out += std::to_string(r.iteration) + "," + format_double(r.losses.cycle) + "," +
               format_double(r.losses.mech_normal) + "," + format_double(r.losses.mech_linear) + "," +
               format_double(r.losses.photometric) + "," + format_double(r.losses.total) + "," + format_double(r.lr) +
               "\n";
    }
    return out;
}

namespace {

struct PairRef {
    std::size_t video = 0;
    std::size_t t = 0;
};

struct PairLoss {
    LossBundle values;
    ad::Var total;
};

// Enabled components carry gradients; disabled ones are still evaluated for
// the log.
PairLoss pair_loss(const PreparedVideo& v, std::size_t t, const TrackerConfig& cfg, const ad::Binding& params,
                   const LossFlags& enabled) {
    ForwardOutputs fp = forward_pass(v.frames[t], v.frames[t + 1], v.contours[t], v.contours[t + 1], cfg, params);
    PairLossInputs in{v.frames[t],    v.frames[t + 1],   v.contours[t], v.contours[t + 1],
                      v.normals[t], fp.offsets_forward, fp.offsets_backward};
    LossTerms terms = total_loss(in, enabled);
    PairLoss out{terms.values, terms.total};
    OffsetField fwd = to_offset_field(fp.offsets_forward->value, Direction::Forward);
    OffsetField bwd = to_offset_field(fp.offsets_backward->value, Direction::Backward);
    if (!enabled.cycle) out.values.cycle = cycle_loss(v.contours[t], v.contours[t + 1], fwd, bwd);
    if (!enabled.mech_normal) out.values.mech_normal = mech_normal_loss(fwd, v.normals[t]);
    if (!enabled.mech_linear) out.values.mech_linear = mech_linear_loss(v.contours[t], v.contours[t + 1], fp.offsets_forward)->value[0];
    if (!enabled.photometric)
        out.values.photometric = photometric_loss(v.frames[t], v.frames[t + 1], v.contours[t], v.contours[t + 1], fwd, bwd);
    return out;
}

bool all_finite(const std::vector<ad::Tensor>& grads) {
    for (const auto& g : grads)
        for (double v : g.data)
            if (!std::isfinite(v)) return false;
    return true;
}

std::string checkpoint_name(int iteration) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "ckpt_%06d.bin", iteration);
    return buf;
}

}  // namespace

TrainResult train(const std::vector<PreparedVideo>& videos, const TrackerConfig& tracker, const TrainConfig& cfg,
                  const TrainOptions& options) {
    validate(cfg);
    TrackerConfig tc = tracker;
    tc.encoder.image_size = cfg.image_size;
    validate(tc);

    std::vector<PairRef> pairs;
    for (std::size_t v = 0; v < videos.size(); ++v) {
        const auto& pv = videos[v];
        if (pv.contours.size() != pv.size() || pv.normals.size() != pv.size())
            throw Error(ErrorKind::ShapeMismatch, "video '" + pv.name + "' is not fully prepared");
        for (std::size_t t = 0; t + 1 < pv.size(); ++t) {
            if (pv.frames[t].height != cfg.image_size || pv.frames[t].width != cfg.image_size)
                throw Error(ErrorKind::ShapeMismatch, "video '" + pv.name + "' frames are not " +
                                                          std::to_string(cfg.image_size) + " px square");
            pairs.push_back({v, t});
        }
    }
    if (pairs.empty()) throw Error(ErrorKind::EmptyDataset, "training needs at least one video with two frames");

    TrainResult result;
    if (options.initial) {
        if (options.initial->config != tc)
            throw Error(ErrorKind::VersionMismatch, "initial weights were built for a different tracker config");
        result.weights = *options.initial;
    } else {
        result.weights = init_weights(tc);
    }
    TrackerWeights& w = result.weights;
    Adam adam(w.params);
    Rng rng(cfg.seed);

    auto save_last_good = [&]() {
        if (!options.checkpoint_dir.empty()) {
            std::filesystem::create_directories(options.checkpoint_dir);
            save_checkpoint(w, options.checkpoint_dir / "last_good.bin");
        }
    };

    for (int it = 0; it < cfg.total_iters; ++it) {
        const double lr = lr_schedule(it, cfg);
        ad::Binding params(w.params, true);
        std::vector<ad::Var> totals;
        LossBundle mean;
        try {
            for (int b = 0; b < cfg.batch_size; ++b) {
                const PairRef& p = pairs[rng.index(pairs.size())];
                PairLoss pl = pair_loss(videos[p.video], p.t, tc, params, cfg.enabled_losses);
                totals.push_back(pl.total);
                mean.cycle += pl.values.cycle;
                mean.mech_normal += pl.values.mech_normal;
                mean.mech_linear += pl.values.mech_linear;
                mean.photometric += pl.values.photometric;
                mean.total += pl.values.total;
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NonFiniteLoss && e.kind() != ErrorKind::NonFiniteOutput) throw;
            save_last_good();
            throw Error(ErrorKind::NonFiniteLoss, "iteration " + std::to_string(it) + ": " + e.what());
        }
        const double inv = 1.0 / cfg.batch_size;
        mean.cycle *= inv;
        mean.mech_normal *= inv;
        mean.mech_linear *= inv;
        mean.photometric *= inv;
        mean.total *= inv;

        ad::Var loss = ad::scale(ad::sum_all(totals), inv);
        ad::backward(loss);
        std::vector<ad::Tensor> grads = params.gradients();
        if (!std::isfinite(loss->value[0]) || !all_finite(grads)) {
            save_last_good();
            throw Error(ErrorKind::NonFiniteLoss, "iteration " + std::to_string(it) + ": non-finite loss or gradient");
        }
        clip_global_norm(grads, cfg.grad_clip_norm);
        adam.step(w.params, grads, lr);
        w.iteration += 1;

        TrainLogRow row{it, mean, lr};
        result.log.push_back(row);
        if (options.on_iteration) options.on_iteration(row);
        if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 && !options.checkpoint_dir.empty()) {
            std::filesystem::create_directories(options.checkpoint_dir);
            save_checkpoint(w, options.checkpoint_dir / checkpoint_name(it + 1));
        }
    }
    return result;
}

LossBundle evaluate_pair(const PreparedVideo& video, std::size_t t, const TrackerWeights& weights,
                         const LossFlags& enabled) {
    if (t + 1 >= video.size()) throw Error(ErrorKind::ConfigError, "frame pair index out of range");
    ad::Binding params(weights.params, false);
    return pair_loss(video, t, weights.config, params, enabled).values;
}

namespace {

constexpr char kMagic[4] = {'C', 'T', 'R', 'K'};

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw Error(ErrorKind::CorruptFile, "checkpoint is truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const TrackerWeights& weights) {
    std::string out(kMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    const std::string cfg = json(weights.config).dump();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    put<std::uint64_t>(out, weights.iteration);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(weights.params.size()));
    for (std::size_t i = 0; i < weights.params.size(); ++i) {
        const std::string& name = weights.params.name(i);
        const ad::Tensor& t = weights.params[i];
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put<std::int32_t>(out, d);
        for (double v : t.data) put<double>(out, v);
    }
    put<std::uint64_t>(out, fnv1a(out));
    return out;
}

TrackerWeights decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw Error(ErrorKind::CorruptFile, "not a checkpoint file");
    Reader r(bytes);
    r.take(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw Error(ErrorKind::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                    " (expected " + std::to_string(kCheckpointVersion) + ")");
    if (bytes.size() < 16) throw Error(ErrorKind::CorruptFile, "checkpoint is truncated");
    const std::string_view body(bytes.data(), bytes.size() - 8);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (stored != fnv1a(body)) throw Error(ErrorKind::CorruptFile, "checkpoint checksum mismatch");

    Reader br(body);
    br.take(8);
    TrackerWeights w;
    const auto cfg_len = br.get<std::uint32_t>();
    try {
        json::parse(br.take(cfg_len)).get_to(w.config);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptFile, std::string("checkpoint config: ") + e.what());
    }
    w.iteration = br.get<std::uint64_t>();
    const auto count = br.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = br.get<std::uint32_t>();
        std::string name(br.take(name_len));
        const auto ndim = br.get<std::uint32_t>();
        if (ndim > 8) throw Error(ErrorKind::CorruptFile, "tensor '" + name + "' has too many dimensions");
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            const auto v = br.get<std::int32_t>();
            if (v < 0) throw Error(ErrorKind::CorruptFile, "negative tensor dimension");
            shape.push_back(v);
        }
        ad::Tensor t(shape);
        for (double& v : t.data) v = br.get<double>();
        w.params.add(std::move(name), std::move(t));
    }
    if (br.pos() != body.size()) throw Error(ErrorKind::CorruptFile, "trailing bytes in checkpoint");

    // The stored tensors must be exactly what this config builds.
    const TrackerWeights ref = init_weights(w.config);
    bool same = ref.params.names() == w.params.names();
    for (std::size_t i = 0; same && i < ref.params.size(); ++i) same = ref.params[i].shape == w.params[i].shape;
    if (!same) throw Error(ErrorKind::CorruptFile, "checkpoint tensors do not match its tracker config");
    return w;
}

void save_checkpoint(const TrackerWeights& weights, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(weights));
}

TrackerWeights load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

TrackerWeights load_checkpoint(const std::filesystem::path& path, const TrackerConfig& expected) {
    TrackerWeights w = load_checkpoint(path);
    if (w.config != expected)
        throw Error(ErrorKind::VersionMismatch, "checkpoint " + path.string() + " was trained with config " +
                                                    json(w.config).dump() + ", expected " + json(expected).dump());
    return w;
}

}  // namespace contrack
