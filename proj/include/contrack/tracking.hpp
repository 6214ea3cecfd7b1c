#pragma once

#include <contrack/dataio.hpp>
#include <contrack/geometry.hpp>
#include <contrack/mechanical.hpp>
#include <contrack/network.hpp>
#include <contrack/png_io.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace contrack {

/// Learned forward offsets, then snapped onto the next contour.
CorrespondenceMap track_pair(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                             const Contour& contour_t1, const TrackerWeights& weights);

struct TrackStep {
    int frame = 0;
    std::size_t index = 0;
    Vec2 point;

    friend bool operator==(const TrackStep&, const TrackStep&) = default;
};

struct Trajectory {
    int birth = 0;
    std::vector<TrackStep> path;  // consecutive frames from birth to the last frame

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct TrackSet {
    std::vector<Trajectory> trajectories;

    /// Position of a trajectory at a frame; throws when it does not cover it.
    const TrackStep& at(std::size_t trajectory, int frame) const;
    friend bool operator==(const TrackSet&, const TrackSet&) = default;
};

/// Chains pair correspondences into trajectories. Frame 0 starts one
/// trajectory per contour point; a later contour point no trajectory reached
/// starts a new one there. Needs one map per consecutive pair.
TrackSet chain_correspondences(const std::vector<Contour>& contours, const std::vector<CorrespondenceMap>& maps);

enum class TrackMethod { Learned, Mechanical };

TrackMethod parse_track_method(const std::string& name);
std::string to_string(TrackMethod method);

struct TrackOptions {
    TrackMethod method = TrackMethod::Learned;
    const TrackerWeights* weights = nullptr;  // required for Learned
    MechEnergyConfig mechanical;
};

/// Throws Error(ConfigError) when fewer than two frames are given or learned
/// tracking has no weights.
TrackSet track_sequence(const std::vector<Image>& frames, const std::vector<Contour>& contours,
                        const TrackOptions& options);
/// Per-pair correspondences used by track_sequence.
std::vector<CorrespondenceMap> track_pairs(const std::vector<Image>& frames, const std::vector<Contour>& contours,
                                           const TrackOptions& options);

/// {"trajectories": [{"birth": t, "path": [[frame, index, x, y], ...]}]}
std::string trackset_to_json(const TrackSet& tracks);
TrackSet trackset_from_json(const std::string& text);

/// Throws Error(ParseError) naming the first broken invariant: paths start
/// at their birth, frames are consecutive, and indices and coordinates name
/// real contour points.
void check_trackset(const TrackSet& tracks, const std::vector<Contour>& contours);

/// Signed outward normal speed, rows = frame-0 window positions, columns =
/// steps t -> t+1.
struct VelocityMap {
    std::size_t window_begin = 0;
    std::size_t window_end = 0;  // inclusive
    int steps = 0;
    std::vector<double> values;  // rows x steps

    std::size_t rows() const { return window_end - window_begin + 1; }
    double at(std::size_t row, int step) const { return values[row * steps + step]; }
};

/// Follows the trajectories born on frame-0 indices [begin, end] and
/// projects every step's displacement onto the outward normal at its start.
/// Throws Error(WindowOutOfRange).
VelocityMap quantify_velocity(const TrackSet& tracks, const std::vector<Contour>& contours,
                              const std::vector<NormalField>& normals, std::size_t window_begin,
                              std::size_t window_end);

/// Header "position,t0,t1,..." then one row per window position.
std::string velocity_to_csv(const VelocityMap& map);
/// Diverging map: red outward, blue inward, white zero; scaled by the largest
/// magnitude. Each cell is scale x scale pixels.
RgbImage render_velocity(const VelocityMap& map, int scale = 4);

/// Frame t with arrows from every contour point to its match on frame t+1.
RgbImage render_correspondence(const Image& frame, const Contour& contour_t, const Contour& contour_t1,
                               const CorrespondenceMap& map, int arrow_stride = 1);

}  // namespace contrack
