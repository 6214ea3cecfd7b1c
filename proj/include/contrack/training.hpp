#pragma once

#include <contrack/dataio.hpp>
#include <contrack/losses.hpp>
#include <contrack/network.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace contrack {

struct TrainConfig {
    double lr_init = 1e-3;
    int decay_start_iter = 400;
    int total_iters = 2000;
    int batch_size = 2;
    std::uint64_t seed = 0;
    LossFlags enabled_losses;
    int image_size = 128;
    int checkpoint_every = 0;  // 0 disables periodic checkpoints
    double grad_clip_norm = 10.0;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// 128 px, 2000 iterations, lr 1e-3 decaying from 400, batch 2.
TrainConfig desk_profile();
/// 512 px, 50k iterations, lr 1e-4 decaying from 10k, batch 8.
TrainConfig paper_profile();
/// Looks up "desk" or "paper"; throws Error(ConfigError) otherwise.
TrainConfig train_profile(const std::string& name);

/// Throws Error(ConfigError).
void validate(const TrainConfig& cfg);

/// Constant lr_init before decay_start_iter, then linear down to 0 at total_iters.
double lr_schedule(int iter, const TrainConfig& cfg);

/// Adam with beta1 0.9, beta2 0.999, eps 1e-8.
class Adam {
public:
    explicit Adam(const ad::ParameterSet& params);
    void step(ad::ParameterSet& params, const std::vector<ad::Tensor>& grads, double lr);
    std::uint64_t steps() const { return t_; }

private:
    std::vector<ad::Tensor> m_, v_;
    std::uint64_t t_ = 0;
};

/// Rescales gradients in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::vector<ad::Tensor>& grads, double max_norm);

struct TrainLogRow {
    int iteration = 0;
    LossBundle losses;  // mean over the batch
    double lr = 0.0;
};

/// iteration,cycle,mech_normal,mech_linear,photometric,total,lr
std::string format_train_log_csv(const std::vector<TrainLogRow>& log);

struct TrainOptions {
    /// Checkpoints go here as ckpt_NNNNNN.bin when checkpoint_every > 0, plus
    /// last_good.bin when training halts on a non-finite loss.
    std::filesystem::path checkpoint_dir;
    std::function<void(const TrainLogRow&)> on_iteration;
    /// Start from these weights instead of a fresh initialization.
    std::optional<TrackerWeights> initial;
};

struct TrainResult {
    TrackerWeights weights;
    std::vector<TrainLogRow> log;
};

/// Adam on the mean total loss of batch_size frame pairs drawn uniformly with
/// the seeded generator. The tracker image size is taken from cfg.image_size
/// and every frame must match it. Throws Error(EmptyDataset) without pairs and
/// Error(NonFiniteLoss) after saving the last good weights.
TrainResult train(const std::vector<PreparedVideo>& videos, const TrackerConfig& tracker, const TrainConfig& cfg,
                  const TrainOptions& options = {});

/// Loss components of one frame pair under given weights, without gradients.
LossBundle evaluate_pair(const PreparedVideo& video, std::size_t t, const TrackerWeights& weights,
                         const LossFlags& enabled);

/// Binary checkpoint: "CTRK", format version, tracker config JSON, iteration,
/// named tensors and an FNV-1a checksum. Written atomically.
void save_checkpoint(const TrackerWeights& weights, const std::filesystem::path& path);
std::string encode_checkpoint(const TrackerWeights& weights);
/// Throws Error(CorruptFile) for truncated or damaged files and
/// Error(VersionMismatch) for an unknown format version.
TrackerWeights load_checkpoint(const std::filesystem::path& path);
TrackerWeights decode_checkpoint(const std::string& bytes);
/// Also throws Error(VersionMismatch) when the stored tracker config differs
/// from the expected one.
TrackerWeights load_checkpoint(const std::filesystem::path& path, const TrackerConfig& expected);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace contrack
