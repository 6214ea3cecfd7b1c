#pragma once

#include <contrack/geometry.hpp>
#include <contrack/labels.hpp>
#include <contrack/types.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace contrack {

/// Frames and masks of one video after subsampling and resizing.
struct VideoDataset {
    std::string name;
    std::vector<Image> frames;
    std::vector<Mask> masks;
    /// Position of every kept frame in the original sequence.
    std::vector<int> source_frames;
    /// Label frames are renumbered to positions in `frames`.
    std::optional<SparseLabels> labels;
    int stride = 1;
    int resize = 0;  // 0 keeps the stored resolution

    std::size_t size() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
};

/// Throws Error(EmptyVideo, MissingMask, ResolutionMismatch, ConfigError).
void validate(const VideoDataset& dataset);

/// Reads `root/frames/*.png`, `root/masks/*.png` (same file names) and the
/// optional `root/labels.csv`, whose frame column counts original frames.
/// Keeps every stride-th frame; a positive resize gives square frames of that
/// side (bilinear for frames, nearest neighbor for masks).
VideoDataset load_dataset(const std::filesystem::path& root, int stride = 1, int resize = 0);

/// Writes the dataset in the layout load_dataset reads, numbering frames
/// 0000, 0001, ... in their current order.
void save_dataset(const std::filesystem::path& root, const VideoDataset& dataset);

/// Half-pixel-centered bilinear resampling.
Image resize_bilinear(const Image& image, int height, int width);
Mask resize_nearest(const Mask& mask, int height, int width);

/// Pixels strictly above the threshold, reduced to the largest 8-connected
/// component with interior holes filled. Throws Error(NoForeground).
Mask threshold_segment(const Image& frame, double threshold);

/// Per-frame contours and oriented normals ready for training and tracking.
struct PreparedVideo {
    std::string name;
    std::vector<Image> frames;
    std::vector<Mask> masks;
    std::vector<Contour> contours;
    std::vector<NormalField> normals;

    std::size_t size() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
};

/// Extracts every frame's contour. Throws Error(EmptyMask) naming the frame
/// when one mask has no foreground.
PreparedVideo prepare_video(const VideoDataset& dataset, AnchorRule rule = AnchorRule::LeftmostTop);

/// One cosine mode of the radial deformation; its amplitude swings
/// sinusoidally in time.
struct SyntheticLobe {
    int mode = 3;
    double amplitude = 3.0;
    double swing = 0.0;          // amplitude(t) = amplitude + swing * sin(2 pi t / swing_period + swing_phase)
    double swing_period = 8.0;   // frames
    double swing_phase = 0.0;
    double phase = 0.0;          // angular offset of the lobe pattern

    friend bool operator==(const SyntheticLobe&, const SyntheticLobe&) = default;
};

/// Star-shaped blob r(theta, t) = base + pulse * sin(2 pi t / period) + sum of
/// lobes, centered at the image center plus t * drift.
struct SyntheticSpec {
    std::string name = "synthetic";
    int image_size = 128;
    int frame_count = 10;
    double base_radius = 30.0;
    double pulse_amplitude = 4.0;
    double pulse_period = 8.0;
    std::vector<SyntheticLobe> lobes;
    Vec2 drift{0.0, 0.0};  // pixels per frame
    std::uint64_t texture_seed = 7;
    int label_points = 5;

    double radius(double theta, double t) const;
    Vec2 center(double t) const;
    /// Point of the analytic boundary at a given angle and time.
    Vec2 boundary_point(double theta, double t) const;

    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Throws Error(InvalidSpec) for non-positive radii, shapes leaving the
/// image (with a 2 pixel margin) or bad counts.
void validate(const SyntheticSpec& spec);

struct SyntheticVideo {
    VideoDataset dataset;
    PreparedVideo prepared;
    /// Ground truth for pair (t, t+1): every contour point of frame t follows
    /// its polar angle to frame t+1 and is snapped onto that frame's contour.
    std::vector<CorrespondenceMap> correspondences;
};

/// Renders textured frames and analytic masks. Labels follow
/// `label_points` equally spaced frame-0 contour points along their polar
/// angle through every frame.
SyntheticVideo generate_synthetic(const SyntheticSpec& spec);

/// Per-point polar angle of contour points about a center.
std::vector<double> polar_angles(const Contour& contour, Vec2 center);

/// {"pairs": [{"source": t, "target": t + 1, "match": [...]}, ...]}
std::string correspondences_to_json(const std::vector<CorrespondenceMap>& maps);
std::vector<CorrespondenceMap> correspondences_from_json(const std::string& text);

/// {"frame": t, "points": [[x, y], ...]}
std::string contour_to_json(const Contour& contour);
Contour contour_from_json(const std::string& text);

/// Zero-padded frame file name, e.g. 0007.png.
std::string frame_file_name(int index);

}  // namespace contrack
