#pragma once

#include <contrack/geometry.hpp>
#include <contrack/network.hpp>
#include <contrack/types.hpp>

#include <vector>

namespace contrack {

/// Normal-torsion plus linear-spring energy, pinned to the target contour.
struct MechEnergyConfig {
    double spring_weight = 1.0;
    int max_iterations = 100;
    double lm_damping_init = 1e-3;
    double convergence_tol = 1e-10;  // stop once an accepted step gains less

    friend bool operator==(const MechEnergyConfig&, const MechEnergyConfig&) = default;
};

/// Throws Error(ConfigError).
void validate(const MechEnergyConfig& cfg);

struct MechResiduals {
    std::vector<double> torsion;     // interior points: sine of angle between offset and normal
    std::vector<double> spring;      // every segment: sqrt(w) * (d_i - mean d)
    std::vector<double> attachment;  // every point: distance to the target polyline

    std::vector<double> all() const;
    /// Sum of squared residuals.
    double energy() const;
};

MechResiduals mech_residuals(const OffsetField& offsets, const Contour& contour_t, const Contour& contour_t1,
                             const NormalField& normals, const MechEnergyConfig& cfg);

/// Closest point on the polyline through the contour's points.
Vec2 nearest_on_polyline(const Contour& contour, Vec2 q);

struct MechSolution {
    OffsetField offsets;
    CorrespondenceMap correspondence;
    double final_energy = 0.0;
    int iterations_used = 0;
    /// Energy after the start and after every accepted step.
    std::vector<double> energy_trace;
};

/// Levenberg-Marquardt from zero offsets; the result is snapped onto contour_t1.
MechSolution solve_mechanical(const Contour& contour_t, const Contour& contour_t1, const MechEnergyConfig& cfg = {});

}  // namespace contrack
