#include <contrack/config.hpp>
#include <contrack/dataio.hpp>
#include <contrack/errors.hpp>
#include <contrack/evaluation.hpp>
#include <contrack/geometry.hpp>
#include <contrack/losses.hpp>
#include <contrack/mechanical.hpp>
#include <contrack/tracking.hpp>
#include <contrack/training.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace contrack;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Grid = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskGrid = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

std::vector<Vec2> to_vec2(const Points& a, const char* what) {
    if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error(std::string(what) + " must have shape (N, 2)");
    auto r = a.unchecked<2>();
    std::vector<Vec2> out(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1)};
    return out;
}

Contour to_contour(const Points& a, const char* what, int frame = 0) {
    Contour c;
    c.frame = frame;
    c.points = to_vec2(a, what);
    return c;
}

Points from_vec2(const std::vector<Vec2>& v) {
    Points out({static_cast<py::ssize_t>(v.size()), py::ssize_t{2}});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < v.size(); ++i) {
        w(static_cast<py::ssize_t>(i), 0) = v[i].x;
        w(static_cast<py::ssize_t>(i), 1) = v[i].y;
    }
    return out;
}

Image to_image(const Grid& a) {
    if (a.ndim() != 2) throw py::value_error("image must be 2-dimensional");
    Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

Grid from_image(const Image& img) {
    Grid out({img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

Mask to_mask(const MaskGrid& a) {
    if (a.ndim() != 2) throw py::value_error("mask must be 2-dimensional");
    Mask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    for (py::ssize_t i = 0; i < a.size(); ++i) m.pixels[static_cast<std::size_t>(i)] = a.data()[i] ? 1 : 0;
    return m;
}

MaskGrid from_mask(const Mask& m) {
    MaskGrid out({m.height, m.width});
    std::copy(m.pixels.begin(), m.pixels.end(), out.mutable_data());
    return out;
}

py::array_t<std::int64_t> from_indices(const std::vector<std::size_t>& v) {
    py::array_t<std::int64_t> out(static_cast<py::ssize_t>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out.mutable_data()[i] = static_cast<std::int64_t>(v[i]);
    return out;
}

OffsetField to_offsets(const Points& a, Direction d, const char* what) {
    OffsetField f;
    f.direction = d;
    f.offsets = to_vec2(a, what);
    return f;
}

// Rows of (frame, point_id, x, y) with normalized coordinates.
std::vector<LabelPoint> to_label_rows(const Points& a, const char* what) {
    if (a.ndim() != 2 || a.shape(1) != 4) throw py::value_error(std::string(what) + " must have shape (K, 4)");
    auto r = a.unchecked<2>();
    std::vector<LabelPoint> out;
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        out.push_back({static_cast<int>(r(i, 0)), static_cast<int>(r(i, 1)), r(i, 2), r(i, 3)});
    return out;
}

Predictions to_predictions(const Points& a) {
    Predictions p;
    for (const auto& row : to_label_rows(a, "predictions")) p.set(row.frame, row.point_id, {row.x, row.y});
    return p;
}

std::vector<Contour> to_contours(const std::vector<Points>& list) {
    std::vector<Contour> out;
    for (std::size_t t = 0; t < list.size(); ++t) out.push_back(to_contour(list[t], "contour", static_cast<int>(t)));
    return out;
}

std::string track_json(const std::vector<Grid>& frames, const std::vector<Points>& contours, const std::string& method,
                       const std::optional<std::string>& checkpoint) {
    std::vector<Image> images;
    for (const auto& f : frames) images.push_back(to_image(f));
    const std::vector<Contour> cs = to_contours(contours);
    TrackOptions opt;
    opt.method = parse_track_method(method);
    TrackerWeights weights;
    if (opt.method == TrackMethod::Learned) {
        if (checkpoint) {
            weights = load_checkpoint(*checkpoint);
        } else {
            // untrained zero-offset head: plain nearest-point snapping
            TrackerConfig cfg;
            cfg.encoder.image_size = images.empty() ? cfg.encoder.image_size : images.front().width;
            weights = init_weights(cfg);
        }
        opt.weights = &weights;
    }
    TrackSet ts;
    {
        py::gil_scoped_release release;
        ts = track_sequence(images, cs, opt);
    }
    return trackset_to_json(ts);
}

}  // namespace

PYBIND11_MODULE(_contrack, m) {
    m.doc() = "Contour extraction, losses, mechanical and learned tracking, accuracy metrics";

    static py::exception<Error> error(m, "ContrackError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = error;
            py::object instance = err(e.what());
            instance.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(error.ptr(), instance.ptr());
        }
    });

    m.def(
        "extract_contour",
        [](const MaskGrid& mask) {
            const ContourExtraction ex = extract_contour(to_mask(mask));
            py::dict out;
            out["points"] = from_vec2(ex.contour.points);
            out["fragmented"] = ex.fragmented;
            out["chain_count"] = ex.chain_count;
            return out;
        },
        py::arg("mask"));
    m.def(
        "compute_normals",
        [](const Points& points, const MaskGrid& mask) {
            return from_vec2(compute_normals(to_contour(points, "points"), to_mask(mask)).normals);
        },
        py::arg("points"), py::arg("mask"));
    m.def(
        "snap",
        [](const Points& queries, const Points& target) {
            const CorrespondenceMap cm = snap_phi(to_vec2(queries, "queries"), to_contour(target, "target"));
            py::array_t<double> dist(static_cast<py::ssize_t>(cm.snap_distance.size()));
            std::copy(cm.snap_distance.begin(), cm.snap_distance.end(), dist.mutable_data());
            return py::make_tuple(from_indices(cm.match), dist);
        },
        py::arg("queries"), py::arg("target"));

    m.def(
        "cycle_loss",
        [](const Points& a, const Points& b, const Points& fwd, const Points& bwd) {
            return cycle_loss(to_contour(a, "contour_t"), to_contour(b, "contour_t1"),
                              to_offsets(fwd, Direction::Forward, "forward"),
                              to_offsets(bwd, Direction::Backward, "backward"));
        },
        py::arg("contour_t"), py::arg("contour_t1"), py::arg("forward"), py::arg("backward"));
    m.def(
        "mech_normal_loss",
        [](const Points& fwd, const Points& normals) {
            NormalField n;
            n.normals = to_vec2(normals, "normals");
            return mech_normal_loss(to_offsets(fwd, Direction::Forward, "forward"), n);
        },
        py::arg("forward"), py::arg("normals"));
    m.def(
        "mech_linear_loss", [](const Points& displaced) { return mech_linear_loss(to_vec2(displaced, "points")); },
        py::arg("displaced"));
    m.def(
        "photometric_loss",
        [](const Grid& i0, const Grid& i1, const Points& a, const Points& b, const Points& fwd, const Points& bwd) {
            return photometric_loss(to_image(i0), to_image(i1), to_contour(a, "contour_t"),
                                    to_contour(b, "contour_t1"), to_offsets(fwd, Direction::Forward, "forward"),
                                    to_offsets(bwd, Direction::Backward, "backward"));
        },
        py::arg("image_t"), py::arg("image_t1"), py::arg("contour_t"), py::arg("contour_t1"), py::arg("forward"),
        py::arg("backward"));

    m.def(
        "solve_mechanical",
        [](const Points& a, const Points& b, double spring_weight, int max_iterations) {
            MechEnergyConfig cfg;
            cfg.spring_weight = spring_weight;
            cfg.max_iterations = max_iterations;
            const Contour ca = to_contour(a, "contour_t"), cb = to_contour(b, "contour_t1", 1);
            MechSolution sol;
            {
                py::gil_scoped_release release;
                sol = solve_mechanical(ca, cb, cfg);
            }
            py::dict out;
            out["offsets"] = from_vec2(sol.offsets.offsets);
            out["match"] = from_indices(sol.correspondence.match);
            out["energy_trace"] = sol.energy_trace;
            out["iterations"] = sol.iterations_used;
            return out;
        },
        py::arg("contour_t"), py::arg("contour_t1"), py::arg("spring_weight") = 1.0, py::arg("max_iterations") = 100);

    m.def(
        "spatial_accuracy",
        [](const Points& predictions, const Points& labels, double tau) {
            return spatial_accuracy(to_predictions(predictions), SparseLabels(to_label_rows(labels, "labels")), tau);
        },
        py::arg("predictions"), py::arg("labels"), py::arg("tau"));
    m.def(
        "contour_accuracy",
        [](const Points& predictions, const Points& labels, const std::vector<Points>& contours, int width, int height,
           double tau) {
            return contour_accuracy(to_predictions(predictions), SparseLabels(to_label_rows(labels, "labels")),
                                    to_contours(contours), width, height, tau);
        },
        py::arg("predictions"), py::arg("labels"), py::arg("contours"), py::arg("width"), py::arg("height"),
        py::arg("tau"));

    m.def(
        "generate_synthetic",
        [](const std::string& config_json) {
            const SyntheticVideo sv = generate_synthetic(parse_run_config(config_json).synthetic);
            py::list frames, masks, contours, correspondences;
            for (const auto& f : sv.prepared.frames) frames.append(from_image(f));
            for (const auto& mk : sv.prepared.masks) masks.append(from_mask(mk));
            for (const auto& c : sv.prepared.contours) contours.append(from_vec2(c.points));
            for (const auto& cm : sv.correspondences) correspondences.append(from_indices(cm.match));
            py::dict out;
            out["frames"] = frames;
            out["masks"] = masks;
            out["contours"] = contours;
            out["correspondences"] = correspondences;
            return out;
        },
        py::arg("config_json") = "{}");

    m.def("track_json", &track_json, py::arg("frames"), py::arg("contours"), py::arg("method") = "learned",
          py::arg("checkpoint") = py::none());
}
