#pragma once

#include <contrack/geometry.hpp>
#include <contrack/labels.hpp>
#include <contrack/tracking.hpp>

#include <map>
#include <string>
#include <vector>

namespace contrack {

/// Predicted positions of the labeled points in normalized coordinates,
/// keyed by (frame, point_id).
class Predictions {
public:
    void set(int frame, int point_id, Vec2 normalized);
    std::optional<Vec2> find(int frame, int point_id) const;
    std::size_t size() const { return points_.size(); }

private:
    std::map<std::pair<int, int>, Vec2> points_;
};

/// Scored pairs are labels on frames >= 1. Throws Error(NoLabels) when there
/// are none and Error(ConfigError) when a scored label has no prediction.
/// SA counts ||p - g|| < tau in normalized coordinates.
double spatial_accuracy(const Predictions& predicted, const SparseLabels& labels, double tau);

/// Prediction and label are both mapped to their nearest contour index of the
/// frame; a pair counts when |index gap| / N_t < tau.
double contour_accuracy(const Predictions& predicted, const SparseLabels& labels,
                        const std::vector<Contour>& contours, int width, int height, double tau);

/// Per-frame accuracies for frames 1..T-1 (frames without labels skipped).
std::vector<std::pair<int, double>> spatial_accuracy_per_frame(const Predictions& predicted,
                                                               const SparseLabels& labels, double tau);
std::vector<std::pair<int, double>> contour_accuracy_per_frame(const Predictions& predicted,
                                                               const SparseLabels& labels,
                                                               const std::vector<Contour>& contours, int width,
                                                               int height, double tau);

/// Prefix means: out[t] = mean(series[0..t]).
std::vector<double> cumulative_mean_accuracy(const std::vector<double>& series);

struct VelocityBin {
    int bin = 0;  // floor of |normal speed| in px/frame
    std::size_t count = 0;
    double sa = 0.0;  // SA at tau 0.02 within the bin
};

/// Ground-truth normal speed of a labeled pair: label displacement from
/// frame t-1 to t, projected on the outward normal of the frame t-1 contour
/// point nearest the earlier label.
std::vector<VelocityBin> accuracy_by_velocity(const Predictions& predicted, const SparseLabels& labels,
                                              const std::vector<Contour>& contours,
                                              const std::vector<NormalField>& normals, int width, int height);

/// Follows each labeled point from its frame-0 label: the frame-0 contour
/// point nearest the label starts the trajectory whose positions become the
/// predictions for every later frame.
Predictions predictions_from_tracks(const TrackSet& tracks, const SparseLabels& labels,
                                    const std::vector<Contour>& contours, int width, int height);

inline constexpr double kSpatialTaus[3] = {0.02, 0.04, 0.06};
inline constexpr double kContourTaus[3] = {0.01, 0.02, 0.03};

struct VideoScores {
    std::string name;
    std::size_t scored_pairs = 0;
    double sa[3] = {0, 0, 0};
    double ca[3] = {0, 0, 0};
    std::vector<double> cma_sa;  // CMA of per-frame SA at tau 0.02
    std::vector<double> cma_ca;  // CMA of per-frame CA at tau 0.01
    std::vector<VelocityBin> by_velocity;
};

struct EvalReport {
    std::vector<VideoScores> videos;
    /// Pooled over every scored pair of every video.
    double sa[3] = {0, 0, 0};
    double ca[3] = {0, 0, 0};
};

struct EvalInput {
    std::string name;
    const TrackSet* tracks = nullptr;
    const SparseLabels* labels = nullptr;
    const std::vector<Contour>* contours = nullptr;
    const std::vector<NormalField>* normals = nullptr;
    int width = 0;
    int height = 0;
};

EvalReport evaluate(const std::vector<EvalInput>& inputs);

std::string report_to_json(const EvalReport& report);
/// Table with columns SA_.02 SA_.04 SA_.06 CA_.01 CA_.02 CA_.03.
std::string report_to_markdown(const EvalReport& report);

}  // namespace contrack
