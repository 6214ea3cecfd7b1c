#include <contrack/errors.hpp>
#include <contrack/losses.hpp>

#include <cmath>

namespace contrack {

namespace {

ad::Tensor points_as_rows(std::span<const Vec2> pts) {
    ad::Tensor t({static_cast<int>(pts.size()), 2});
    for (std::size_t i = 0; i < pts.size(); ++i) {
        t[2 * i] = pts[i].x;
        t[2 * i + 1] = pts[i].y;
    }
    return t;
}

void require_rows(const ad::Var& offsets, const Contour& contour, const char* what) {
    if (offsets->value.shape.size() != 2 || offsets->value.cols() != 2 ||
        offsets->value.rows() != static_cast<int>(contour.size()))
        throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": offsets must be [N, 2] for the source contour");
}

std::vector<std::size_t> snap_displaced(const Contour& source, const ad::Tensor& offsets, const Contour& target) {
    std::vector<Vec2> moved(source.size());
    for (std::size_t i = 0; i < source.size(); ++i)
        moved[i] = source.points[i] + Vec2{offsets[2 * i], offsets[2 * i + 1]};
    return snap_phi(moved, target).match;
}

// One direction of the cycle: origin points, their partner contour and the
// partner's offsets evaluated at the snapped indices.
ad::Var one_way(const Contour& origin, const ad::Tensor& origin_offsets, const Contour& partner,
                const ad::Var& partner_offsets) {
    std::vector<std::size_t> match = snap_displaced(origin, origin_offsets, partner);
    ad::Tensor diff({static_cast<int>(origin.size()), 2});
    for (std::size_t i = 0; i < origin.size(); ++i) {
        Vec2 d = origin.points[i] - partner.points[match[i]];
        diff[2 * i] = d.x;
        diff[2 * i + 1] = d.y;
    }
    ad::Var residual = ad::sub(ad::constant(std::move(diff)), ad::gather_rows(partner_offsets, match));
    return ad::sum(ad::row_norm(residual));
}

}  // namespace

ad::Var cycle_loss(const Contour& contour_t, const Contour& contour_t1, const ad::Var& offsets_forward,
                   const ad::Var& offsets_backward) {
    if (contour_t.empty() || contour_t1.empty()) throw Error(ErrorKind::EmptyContour, "cycle loss on an empty contour");
    require_rows(offsets_forward, contour_t, "cycle_loss");
    require_rows(offsets_backward, contour_t1, "cycle_loss");
    ad::Var fwd = one_way(contour_t, offsets_forward->value, contour_t1, offsets_backward);
    ad::Var bwd = one_way(contour_t1, offsets_backward->value, contour_t, offsets_forward);
    return ad::add(fwd, bwd);
}

ad::Var mech_normal_loss(const ad::Var& offsets_forward, const NormalField& normals) {
    if (offsets_forward->value.rows() != static_cast<int>(normals.size()))
        throw Error(ErrorKind::ShapeMismatch, "mech_normal_loss: offsets and normals differ in length");
    std::vector<std::size_t> interior;
    for (std::size_t i = 1; i + 1 < normals.size(); ++i) interior.push_back(i);
    if (interior.empty()) return ad::constant(ad::Tensor({1}, 0.0));
    ad::Tensor unit_normals({static_cast<int>(interior.size()), 2});
    for (std::size_t k = 0; k < interior.size(); ++k) {
        Vec2 n = normals[interior[k]];
        // same arithmetic as normalize_rows, so aligned offsets cancel exactly
        double len = std::sqrt(n.x * n.x + n.y * n.y);
        unit_normals[2 * k] = len > 0 ? n.x / len : 0.0;
        unit_normals[2 * k + 1] = len > 0 ? n.y / len : 0.0;
    }
    ad::Var unit_offsets = ad::normalize_rows(ad::gather_rows(offsets_forward, interior), kZeroOffsetNorm);
    return ad::sum(ad::abs(ad::sub(ad::constant(std::move(unit_normals)), unit_offsets)));
}

double mech_linear_loss(std::span<const Vec2> displaced) {
    if (displaced.size() < 2) return 0.0;
    std::vector<double> d(displaced.size() - 1);
    double mean = 0.0;
    for (std::size_t i = 0; i + 1 < displaced.size(); ++i) {
        d[i] = distance(displaced[i + 1], displaced[i]);
        mean += d[i];
    }
    mean /= static_cast<double>(d.size());
    double loss = 0.0;
    for (double v : d) loss += std::fabs(v - mean);
    return loss;
}

ad::Var mech_linear_loss(const Contour& contour_t, const Contour& contour_t1, const ad::Var& offsets_forward) {
    require_rows(offsets_forward, contour_t, "mech_linear_loss");
    std::vector<std::size_t> match = snap_displaced(contour_t, offsets_forward->value, contour_t1);
    std::vector<Vec2> snapped(match.size());
    for (std::size_t i = 0; i < match.size(); ++i) snapped[i] = contour_t1.points[match[i]];
    // Leaf without gradient: the snap operator cuts the derivative path.
    return ad::constant(ad::Tensor({1}, {mech_linear_loss(snapped)}));
}

namespace {

ad::Var brightness_term(const Image& source_img, const Image& target_img, const Contour& source,
                        const ad::Var& offsets) {
    ad::Var src_grid = ad::constant(ad::Tensor({1, source_img.height, source_img.width}, source_img.data));
    ad::Var dst_grid = ad::constant(ad::Tensor({1, target_img.height, target_img.width}, target_img.data));
    ad::Var origin = ad::constant(points_as_rows(source.points));
    ad::Var at_origin = ad::sample_points(src_grid, origin);
    ad::Var at_moved = ad::sample_points(dst_grid, ad::add(origin, offsets));
    return ad::sum(ad::abs(ad::sub(at_origin, at_moved)));
}

}  // namespace

ad::Var photometric_loss(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                         const Contour& contour_t1, const ad::Var& offsets_forward, const ad::Var& offsets_backward) {
    require_rows(offsets_forward, contour_t, "photometric_loss");
    require_rows(offsets_backward, contour_t1, "photometric_loss");
    return ad::add(brightness_term(image_t, image_t1, contour_t, offsets_forward),
                   brightness_term(image_t1, image_t, contour_t1, offsets_backward));
}

namespace {

ad::Var offsets_var(const OffsetField& f) { return ad::constant(points_as_rows(f.offsets)); }

}  // namespace

double cycle_loss(const Contour& contour_t, const Contour& contour_t1, const OffsetField& forward,
                  const OffsetField& backward) {
    return cycle_loss(contour_t, contour_t1, offsets_var(forward), offsets_var(backward))->value[0];
}

double mech_normal_loss(const OffsetField& forward, const NormalField& normals) {
    return mech_normal_loss(offsets_var(forward), normals)->value[0];
}

double photometric_loss(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                        const Contour& contour_t1, const OffsetField& forward, const OffsetField& backward) {
    return photometric_loss(image_t, image_t1, contour_t, contour_t1, offsets_var(forward), offsets_var(backward))
        ->value[0];
}

LossBundle combine(const LossBundle& c, const LossFlags& enabled) {
    if (!enabled.any()) throw Error(ErrorKind::ConfigError, "no loss component enabled");
    LossBundle out = c;
    out.total = (enabled.cycle ? c.cycle : 0.0) + (enabled.mech_normal ? c.mech_normal : 0.0) +
                (enabled.mech_linear ? c.mech_linear : 0.0) + (enabled.photometric ? c.photometric : 0.0);
    return out;
}

LossTerms total_loss(const PairLossInputs& in, const LossFlags& enabled) {
    if (!enabled.any()) throw Error(ErrorKind::ConfigError, "no loss component enabled");
    LossTerms out;
    std::vector<ad::Var> parts;
    if (enabled.cycle) {
        parts.push_back(cycle_loss(in.contour_t, in.contour_t1, in.offsets_forward, in.offsets_backward));
        out.values.cycle = parts.back()->value[0];
    }
    if (enabled.mech_normal) {
        parts.push_back(mech_normal_loss(in.offsets_forward, in.normals_t));
        out.values.mech_normal = parts.back()->value[0];
    }
    if (enabled.mech_linear) {
        parts.push_back(mech_linear_loss(in.contour_t, in.contour_t1, in.offsets_forward));
        out.values.mech_linear = parts.back()->value[0];
    }
    if (enabled.photometric) {
        parts.push_back(photometric_loss(in.image_t, in.image_t1, in.contour_t, in.contour_t1, in.offsets_forward,
                                         in.offsets_backward));
        out.values.photometric = parts.back()->value[0];
    }
    out.total = ad::sum_all(parts);
    out.values.total = out.total->value[0];
    for (double v : {out.values.cycle, out.values.mech_normal, out.values.mech_linear, out.values.photometric})
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteLoss, "loss component is not finite");
    return out;
}

}  // namespace contrack
