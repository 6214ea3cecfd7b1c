#pragma once

#include <contrack/types.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace contrack {

/// Where an extracted contour starts.
enum class AnchorRule {
    LeftmostTop,  // smallest column first, then smallest row
    TopmostLeft,  // smallest row first, then smallest column
};

struct ContourExtraction {
    Contour contour;
    /// Set when border removal split the boundary into several chains; the
    /// longest chain is returned.
    bool fragmented = false;
    std::size_t chain_count = 1;
};

/// Traces the outer boundary of the largest foreground component, drops
/// pixels on the image border and orders the remainder from the anchor.
/// Throws Error(EmptyMask) when the mask has no foreground.
ContourExtraction extract_contour(const Mask& mask, int frame = 0, AnchorRule rule = AnchorRule::LeftmostTop);

/// Unit outward normals for interior points 1..N-2. Entries 0 and N-1 are
/// left as (0, 0) so the field can be indexed with contour indices.
struct NormalField {
    std::vector<Vec2> normals;
    std::vector<std::size_t> degenerate;  // indices where a neighbor's normal was reused

    std::size_t size() const { return normals.size(); }
    const Vec2& operator[](std::size_t i) const { return normals[i]; }
    bool is_interior(std::size_t i) const { return i >= 1 && i + 1 < normals.size(); }
};

/// Probe distance used to orient normals towards the background.
inline constexpr double kNormalProbeDistance = 2.0;

NormalField compute_normals(const Contour& contour, const Mask& mask);

/// Orientation-free normals (tangent rotated by +90 degrees); used where no
/// mask is available.
NormalField compute_normals_unoriented(const Contour& contour);

/// Result of snapping a set of query points onto a target contour.
struct CorrespondenceMap {
    int source_frame = 0;
    int target_frame = 0;
    std::vector<std::size_t> match;
    std::vector<double> snap_distance;

    std::size_t size() const { return match.size(); }
};

/// Nearest target point for each query; ties go to the lowest index.
CorrespondenceMap snap_phi(std::span<const Vec2> queries, const Contour& target);

std::size_t contour_index_of(const Contour& contour, Vec2 point);

/// Uniform-grid bucket index over a point set answering exact nearest
/// neighbor queries with lowest-index tie breaking.
class NearestPointIndex {
public:
    explicit NearestPointIndex(std::span<const Vec2> points);

    std::size_t nearest(Vec2 q, double* dist = nullptr) const;
    std::size_t size() const { return points_.size(); }

private:
    std::vector<Vec2> points_;
    double min_x_ = 0, min_y_ = 0, cell_ = 1;
    int cols_ = 1, rows_ = 1;
    std::vector<std::vector<std::size_t>> buckets_;
};

/// Linear interpolation that returns a or b exactly at t = 0, t = 1 and when
/// a == b, and propagates NaN from either end.
inline double lerp_exact(double a, double b, double t) {
    if (t == 0.0) return a + 0.0 * b;
    if (t == 1.0) return b + 0.0 * a;
    if (a == b) return a;
    return a + t * (b - a);
}

/// Four-neighbor stencil of a bilinear lookup.
struct BilinearTap {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double wx = 0, wy = 0;  // fractional offsets inside the cell
    bool clamped = false;

    double w00() const { return (1 - wx) * (1 - wy); }
    double w10() const { return wx * (1 - wy); }
    double w01() const { return (1 - wx) * wy; }
    double w11() const { return wx * wy; }

    /// Interpolated value of the four cell corners, exact when they agree.
    double blend(double v00, double v10, double v01, double v11) const {
        return lerp_exact(lerp_exact(v00, v10, wx), lerp_exact(v01, v11, wx), wy);
    }
};

/// Clamps (x, y) to [0, W-1] x [0, H-1] and returns the interpolation cell.
BilinearTap bilinear_tap(double x, double y, int width, int height);

struct SampleOutput {
    int channels = 1;
    std::vector<double> values;  // coords.size() x channels
    std::vector<double> d_dx;    // partial derivative of each value w.r.t. x
    std::vector<double> d_dy;
    std::size_t clamped = 0;
    bool has_nan = false;

    double value(std::size_t point, int channel = 0) const { return values[point * channels + channel]; }
};

/// Bilinear lookup of every channel at each coordinate, with coordinate
/// derivatives. Out-of-range coordinates are clamped (zero coordinate
/// derivative) and counted.
SampleOutput bilinear_sample(const GridView& field, std::span<const Vec2> coords);

/// Largest 8-connected foreground component (ties: first in raster order).
Mask largest_component_mask(const Mask& mask);
/// Foreground plus every background region not 4-connected to the border.
Mask fill_holes(const Mask& mask);

/// Double-valued copy of a mask for bilinear probing.
Image mask_to_image(const Mask& mask);

}  // namespace contrack
