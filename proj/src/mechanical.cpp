#include <contrack/errors.hpp>
#include <contrack/losses.hpp>
#include <contrack/mechanical.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace contrack {

namespace {

struct PolylineHit {
    Vec2 point;
    double distance = 0.0;
};

PolylineHit closest_on_polyline(const std::vector<Vec2>& pts, Vec2 q) {
    PolylineHit best{pts[0], distance(pts[0], q)};
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        Vec2 a = pts[k], ab = pts[k + 1] - pts[k];
        double len2 = dot(ab, ab);
        double t = len2 > 0 ? std::clamp(dot(q - a, ab) / len2, 0.0, 1.0) : 0.0;
        Vec2 c = a + t * ab;
        double d = distance(c, q);
        if (d < best.distance) best = {c, d};
    }
    return best;
}

struct Problem {
    const Contour& from;
    const Contour& to;
    const NormalField& normals;
    const MechEnergyConfig& cfg;

    std::size_t n() const { return from.size(); }
    std::size_t interior() const { return n() >= 2 ? n() - 2 : 0; }
    std::size_t segments() const { return n() >= 1 ? n() - 1 : 0; }
    std::size_t rows() const { return interior() + segments() + n(); }

    std::vector<Vec2> displaced(const Eigen::VectorXd& x) const {
        std::vector<Vec2> q(n());
        for (std::size_t i = 0; i < n(); ++i) q[i] = from.points[i] + Vec2{x[2 * i], x[2 * i + 1]};
        return q;
    }

    Eigen::VectorXd residuals(const Eigen::VectorXd& x, Eigen::MatrixXd* jac) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows()));
        if (jac) jac->setZero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(2 * n()));
        Eigen::Index row = 0;

        for (std::size_t i = 1; i + 1 < n(); ++i, ++row) {
            Vec2 o{x[2 * i], x[2 * i + 1]};
            double len = norm(o);
            if (len < kZeroOffsetNorm) continue;
            Vec2 nv = normals[i];
            double nl = norm(nv);
            if (nl > 0) nv = (1.0 / nl) * nv;
            double c = cross(nv, o);
            r[row] = c / len;
            if (jac) {
                double l3 = len * len * len;
                (*jac)(row, 2 * i) = -nv.y / len - c * o.x / l3;
                (*jac)(row, 2 * i + 1) = nv.x / len - c * o.y / l3;
            }
        }

        const std::vector<Vec2> q = displaced(x);
        const double sw = std::sqrt(cfg.spring_weight);
        const std::size_t S = segments();
        if (S > 0) {
            std::vector<double> d(S);
            std::vector<Vec2> u(S);
            double mean = 0.0;
            for (std::size_t i = 0; i < S; ++i) {
                Vec2 diff = q[i + 1] - q[i];
                d[i] = norm(diff);
                u[i] = d[i] > 0 ? (1.0 / d[i]) * diff : Vec2{0, 0};
                mean += d[i];
            }
            mean /= static_cast<double>(S);
            // derivative of the mean spacing with respect to every coordinate
            std::vector<double> dmean(2 * n(), 0.0);
            for (std::size_t i = 0; i < S; ++i) {
                dmean[2 * i] -= u[i].x / S;
                dmean[2 * i + 1] -= u[i].y / S;
                dmean[2 * (i + 1)] += u[i].x / S;
                dmean[2 * (i + 1) + 1] += u[i].y / S;
            }
            for (std::size_t i = 0; i < S; ++i, ++row) {
                r[row] = sw * (d[i] - mean);
                if (!jac || sw == 0.0) continue;
                for (std::size_t k = 0; k < 2 * n(); ++k) (*jac)(row, static_cast<Eigen::Index>(k)) = -sw * dmean[k];
                (*jac)(row, 2 * i) += -sw * u[i].x;
                (*jac)(row, 2 * i + 1) += -sw * u[i].y;
                (*jac)(row, 2 * (i + 1)) += sw * u[i].x;
                (*jac)(row, 2 * (i + 1) + 1) += sw * u[i].y;
            }
        }

        for (std::size_t i = 0; i < n(); ++i, ++row) {
            PolylineHit hit = closest_on_polyline(to.points, q[i]);
            r[row] = hit.distance;
            if (jac && hit.distance > 1e-12) {
                (*jac)(row, 2 * i) = (q[i].x - hit.point.x) / hit.distance;
                (*jac)(row, 2 * i + 1) = (q[i].y - hit.point.y) / hit.distance;
            }
        }
        return r;
    }
};

void require_valid(const Contour& c, const char* what) {
    if (c.size() < 3) throw Error(ErrorKind::TooFewPoints, std::string(what) + " needs at least 3 points");
}

}  // namespace

void validate(const MechEnergyConfig& cfg) {
    if (!(cfg.spring_weight >= 0.0)) throw Error(ErrorKind::ConfigError, "spring_weight must be >= 0");
    if (cfg.max_iterations < 1) throw Error(ErrorKind::ConfigError, "max_iterations must be >= 1");
    if (!(cfg.lm_damping_init > 0.0)) throw Error(ErrorKind::ConfigError, "lm_damping_init must be > 0");
    if (!(cfg.convergence_tol > 0.0)) throw Error(ErrorKind::ConfigError, "convergence_tol must be > 0");
}

std::vector<double> MechResiduals::all() const {
    std::vector<double> out(torsion);
    out.insert(out.end(), spring.begin(), spring.end());
    out.insert(out.end(), attachment.begin(), attachment.end());
    return out;
}

double MechResiduals::energy() const {
    double e = 0.0;
    for (double v : all()) e += v * v;
    return e;
}

Vec2 nearest_on_polyline(const Contour& contour, Vec2 q) {
    if (contour.empty()) throw Error(ErrorKind::EmptyContour, "polyline is empty");
    return closest_on_polyline(contour.points, q).point;
}

MechResiduals mech_residuals(const OffsetField& offsets, const Contour& contour_t, const Contour& contour_t1,
                             const NormalField& normals, const MechEnergyConfig& cfg) {
    if (offsets.size() != contour_t.size() || normals.size() != contour_t.size())
        throw Error(ErrorKind::ShapeMismatch, "offsets and normals must match the source contour");
    if (contour_t1.empty()) throw Error(ErrorKind::EmptyContour, "target contour is empty");
    Problem p{contour_t, contour_t1, normals, cfg};
    Eigen::VectorXd x(2 * contour_t.size());
    for (std::size_t i = 0; i < contour_t.size(); ++i) {
        x[2 * i] = offsets.offsets[i].x;
        x[2 * i + 1] = offsets.offsets[i].y;
    }
    Eigen::VectorXd r = p.residuals(x, nullptr);
    MechResiduals out;
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.interior(); ++i) out.torsion.push_back(r[k++]);
    for (std::size_t i = 0; i < p.segments(); ++i) out.spring.push_back(r[k++]);
    for (std::size_t i = 0; i < p.n(); ++i) out.attachment.push_back(r[k++]);
    return out;
}

MechSolution solve_mechanical(const Contour& contour_t, const Contour& contour_t1, const MechEnergyConfig& cfg) {
    validate(cfg);
    require_valid(contour_t, "source contour");
    require_valid(contour_t1, "target contour");
    // The torsion term is a squared sine, so the normal's sign does not matter.
    NormalField normals = compute_normals_unoriented(contour_t);
    Problem p{contour_t, contour_t1, normals, cfg};

    const auto dim = static_cast<Eigen::Index>(2 * p.n());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd J;
    Eigen::VectorXd r = p.residuals(x, &J);
    double energy = r.squaredNorm();
    if (!std::isfinite(energy)) throw Error(ErrorKind::NonFiniteEnergy, "initial mechanical energy is not finite");

    MechSolution sol;
    sol.energy_trace.push_back(energy);
    double lambda = cfg.lm_damping_init;
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        Eigen::MatrixXd A = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;
        A.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success) step = ldlt.solve(-g);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            lambda *= 10.0;  // singular system: damp harder and retry
            continue;
        }
        Eigen::VectorXd candidate = x + step;
        Eigen::MatrixXd J_new;
        Eigen::VectorXd r_new = p.residuals(candidate, &J_new);
        double e_new = r_new.squaredNorm();
        if (!std::isfinite(e_new)) throw Error(ErrorKind::NonFiniteEnergy, "mechanical energy became non-finite");
        if (e_new < energy) {
            double gain = energy - e_new;
            x = std::move(candidate);
            r = std::move(r_new);
            J = std::move(J_new);
            energy = e_new;
            sol.energy_trace.push_back(energy);
            lambda = std::max(lambda / 10.0, 1e-12);
            if (gain < cfg.convergence_tol) {
                ++it;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                ++it;
                break;
            }
        }
    }

    sol.iterations_used = it;
    sol.final_energy = energy;
    sol.offsets.direction = Direction::Forward;
    sol.offsets.offsets.resize(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) sol.offsets.offsets[i] = {x[2 * i], x[2 * i + 1]};
    sol.correspondence = snap_phi(p.displaced(x), contour_t1);
    sol.correspondence.source_frame = contour_t.frame;
    sol.correspondence.target_frame = contour_t1.frame;
    return sol;
}

}  // namespace contrack
