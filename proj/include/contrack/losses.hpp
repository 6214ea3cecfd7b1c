#pragma once

#include <contrack/autodiff.hpp>
#include <contrack/geometry.hpp>
#include <contrack/network.hpp>
#include <contrack/types.hpp>

#include <span>

namespace contrack {

/// Below this norm an offset has no direction.
inline constexpr double kZeroOffsetNorm = 1e-9;

struct LossFlags {
    bool cycle = true;
    bool mech_normal = true;
    bool mech_linear = false;
    bool photometric = false;

    bool any() const { return cycle || mech_normal || mech_linear || photometric; }
    friend bool operator==(const LossFlags&, const LossFlags&) = default;
};

struct LossBundle {
    double cycle = 0.0;
    double mech_normal = 0.0;
    double mech_linear = 0.0;
    double photometric = 0.0;
    double total = 0.0;
};

// Differentiable forms. Offsets are [N, 2] variables; the snap operator is
// evaluated on their current values and contributes no derivative.

/// Forward and backward consistency through the snap operator.
ad::Var cycle_loss(const Contour& contour_t, const Contour& contour_t1, const ad::Var& offsets_forward,
                   const ad::Var& offsets_backward);
/// L1 distance between unit outward normals and unit offsets, interior points only.
ad::Var mech_normal_loss(const ad::Var& offsets_forward, const NormalField& normals);
/// Spacing regularity of the snapped forward-displaced points (constant in the offsets).
ad::Var mech_linear_loss(const Contour& contour_t, const Contour& contour_t1, const ad::Var& offsets_forward);
/// Brightness constancy between each point and its displaced position in the other frame.
ad::Var photometric_loss(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                         const Contour& contour_t1, const ad::Var& offsets_forward, const ad::Var& offsets_backward);

// Plain-value forms over offset fields.

double cycle_loss(const Contour& contour_t, const Contour& contour_t1, const OffsetField& forward,
                  const OffsetField& backward);
double mech_normal_loss(const OffsetField& forward, const NormalField& normals);
/// Sum of |d_i - mean(d)| over adjacent distances; 0 for fewer than 2 points.
double mech_linear_loss(std::span<const Vec2> displaced);
double photometric_loss(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                        const Contour& contour_t1, const OffsetField& forward, const OffsetField& backward);

/// Everything one frame pair contributes to the objective.
struct PairLossInputs {
    const Image& image_t;
    const Image& image_t1;
    const Contour& contour_t;
    const Contour& contour_t1;
    const NormalField& normals_t;
    ad::Var offsets_forward;
    ad::Var offsets_backward;
};

struct LossTerms {
    LossBundle values;
    ad::Var total;
};

/// Sum of the enabled components. Throws Error(ConfigError) when none is enabled.
LossTerms total_loss(const PairLossInputs& in, const LossFlags& enabled);

/// Sum of precomputed component values under the given flags.
LossBundle combine(const LossBundle& components, const LossFlags& enabled);

}  // namespace contrack
