#include <contrack/dataio.hpp>
#include <contrack/errors.hpp>
#include <contrack/png_io.hpp>
#include <contrack/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace contrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> png_names(const fs::path& dir) {
    std::vector<std::string> names;
    if (!fs::is_directory(dir)) return names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::string frame_tag(int index) { return "frame " + std::to_string(index); }

struct TextureWave {
    int angular = 1;
    double radial = 0.0;
    double phase = 0.0;
    double weight = 0.0;
};

// Smooth noise in material coordinates (angle, normalized radius), so it
// moves with the deforming shape.
class MaterialTexture {
public:
    explicit MaterialTexture(std::uint64_t seed) {
        Rng rng(seed);
        for (int k = 0; k < 14; ++k) {
            TextureWave w;
            w.angular = 1 + static_cast<int>(rng.index(12));
            w.radial = rng.uniform(0.5, 4.0) * std::numbers::pi;
            w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            w.weight = rng.uniform(0.4, 1.0);
            total_ += w.weight;
            waves_.push_back(w);
        }
        for (int k = 0; k < 6; ++k) {
            background_.push_back({rng.uniform(0.05, 0.25), rng.uniform(0.05, 0.25), rng.uniform(0.0, 6.3)});
        }
    }

    // in [-1, 1]
    double inside(double theta, double rho) const {
        double v = 0.0;
        for (const auto& w : waves_) v += w.weight * std::cos(w.angular * theta + w.radial * rho + w.phase);
        return v / total_;
    }

    double outside(double x, double y) const {
        double v = 0.0;
        for (const auto& b : background_) v += std::sin(b[0] * x + b[2]) * std::cos(b[1] * y - b[2]);
        return v / static_cast<double>(background_.size());
    }

private:
    std::vector<TextureWave> waves_;
    std::vector<std::array<double, 3>> background_;
    double total_ = 0.0;
};

}  // namespace

std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d.png", index);
    return buf;
}

void validate(const VideoDataset& ds) {
    if (ds.frames.empty()) throw Error(ErrorKind::EmptyVideo, "video '" + ds.name + "' has no frames");
    if (ds.masks.size() != ds.frames.size())
        throw Error(ErrorKind::MissingMask, "video '" + ds.name + "' has " + std::to_string(ds.frames.size()) +
                                                " frames but " + std::to_string(ds.masks.size()) + " masks");
    if (ds.stride < 1) throw Error(ErrorKind::ConfigError, "stride must be >= 1");
    const int h = ds.frames.front().height, w = ds.frames.front().width;
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        const Image& f = ds.frames[i];
        const Mask& m = ds.masks[i];
        if (f.height != h || f.width != w || m.height != h || m.width != w)
            throw Error(ErrorKind::ResolutionMismatch, "video '" + ds.name + "': " + frame_tag(static_cast<int>(i)) +
                                                           " differs in resolution from frame 0");
    }
}

Image resize_bilinear(const Image& image, int height, int width) {
    if (height < 1 || width < 1) throw Error(ErrorKind::ConfigError, "resize target must be positive");
    if (image.height < 1 || image.width < 1) throw Error(ErrorKind::ShapeMismatch, "cannot resize an empty image");
    Image out(height, width);
    const double sy = static_cast<double>(image.height) / height, sx = static_cast<double>(image.width) / width;
    std::vector<Vec2> coords;
    coords.reserve(static_cast<std::size_t>(height) * width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) coords.push_back({(c + 0.5) * sx - 0.5, (r + 0.5) * sy - 0.5});
    SampleOutput s = bilinear_sample(view(image), coords);
    out.data = std::move(s.values);
    return out;
}

Mask resize_nearest(const Mask& mask, int height, int width) {
    if (height < 1 || width < 1) throw Error(ErrorKind::ConfigError, "resize target must be positive");
    Mask out(height, width);
    for (int r = 0; r < height; ++r) {
        int sr = std::min(mask.height - 1, static_cast<int>(std::floor((r + 0.5) * mask.height / height)));
        for (int c = 0; c < width; ++c) {
            int sc = std::min(mask.width - 1, static_cast<int>(std::floor((c + 0.5) * mask.width / width)));
            out.at(r, c) = mask.at(sr, sc);
        }
    }
    return out;
}

VideoDataset load_dataset(const fs::path& root, int stride, int resize) {
    if (stride < 1) throw Error(ErrorKind::ConfigError, "stride must be >= 1");
    if (resize < 0) throw Error(ErrorKind::ConfigError, "resize must be >= 0");
    VideoDataset ds;
    ds.name = root.filename().string();
    if (ds.name.empty()) ds.name = root.parent_path().filename().string();
    ds.stride = stride;
    ds.resize = resize;

    const auto frame_names = png_names(root / "frames");
    if (frame_names.empty()) throw Error(ErrorKind::EmptyVideo, "no frames under " + (root / "frames").string());
    const auto mask_names = png_names(root / "masks");
    if (mask_names.size() != frame_names.size())
        throw Error(ErrorKind::MissingMask, std::to_string(frame_names.size()) + " frames but " +
                                                std::to_string(mask_names.size()) + " masks under " + root.string());

    for (std::size_t i = 0; i < frame_names.size(); i += static_cast<std::size_t>(stride)) {
        const fs::path mask_path = root / "masks" / frame_names[i];
        if (!fs::exists(mask_path)) throw Error(ErrorKind::MissingMask, "no mask for " + frame_names[i]);
        Image frame = read_png_gray(root / "frames" / frame_names[i]);
        Mask mask = read_png_mask(mask_path);
        if (frame.height != mask.height || frame.width != mask.width)
            throw Error(ErrorKind::ResolutionMismatch, "mask and frame sizes differ for " + frame_names[i]);
        if (resize > 0) {
            frame = resize_bilinear(frame, resize, resize);
            mask = resize_nearest(mask, resize, resize);
        }
        ds.frames.push_back(std::move(frame));
        ds.masks.push_back(std::move(mask));
        ds.source_frames.push_back(static_cast<int>(i));
    }

    const fs::path labels_path = root / "labels.csv";
    if (fs::exists(labels_path)) {
        SparseLabels raw = read_labels_csv(labels_path);
        std::vector<LabelPoint> kept;
        for (LabelPoint p : raw.points()) {
            if (p.frame % stride != 0) continue;
            p.frame /= stride;
            if (p.frame >= static_cast<int>(ds.frames.size())) continue;
            kept.push_back(p);
        }
        ds.labels = SparseLabels(std::move(kept));
    }
    validate(ds);
    return ds;
}

void save_dataset(const fs::path& root, const VideoDataset& ds) {
    validate(ds);
    fs::create_directories(root / "frames");
    fs::create_directories(root / "masks");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string name = frame_file_name(static_cast<int>(i));
        write_png_gray(root / "frames" / name, ds.frames[i]);
        write_png_mask(root / "masks" / name, ds.masks[i]);
    }
    if (ds.labels) write_labels_csv(root / "labels.csv", *ds.labels);
}

Mask threshold_segment(const Image& frame, double threshold) {
    Mask fg(frame.height, frame.width);
    for (std::size_t i = 0; i < frame.data.size(); ++i) fg.pixels[i] = frame.data[i] > threshold ? 1 : 0;
    if (fg.count() == 0) throw Error(ErrorKind::NoForeground, "no pixel above threshold " + std::to_string(threshold));
    return fill_holes(largest_component_mask(fg));
}

PreparedVideo prepare_video(const VideoDataset& ds, AnchorRule rule) {
    validate(ds);
    PreparedVideo pv;
    pv.name = ds.name;
    pv.frames = ds.frames;
    pv.masks = ds.masks;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int t = static_cast<int>(i);
        if (ds.masks[i].count() == 0)
            throw Error(ErrorKind::EmptyMask, "video '" + ds.name + "': " + frame_tag(t) + " has an empty mask");
        Contour c = extract_contour(ds.masks[i], t, rule).contour;
        pv.normals.push_back(compute_normals(c, ds.masks[i]));
        pv.contours.push_back(std::move(c));
    }
    return pv;
}

double SyntheticSpec::radius(double theta, double t) const {
    double r = base_radius + pulse_amplitude * std::sin(2.0 * std::numbers::pi * t / pulse_period);
    for (const auto& l : lobes) {
        double a = l.amplitude + l.swing * std::sin(2.0 * std::numbers::pi * t / l.swing_period + l.swing_phase);
        r += a * std::cos(l.mode * theta + l.phase);
    }
    return r;
}

Vec2 SyntheticSpec::center(double t) const {
    const double c = 0.5 * (image_size - 1);
    return Vec2{c, c} + t * drift;
}

Vec2 SyntheticSpec::boundary_point(double theta, double t) const {
    return center(t) + radius(theta, t) * Vec2{std::cos(theta), std::sin(theta)};
}

void validate(const SyntheticSpec& spec) {
    if (spec.image_size < 16) throw Error(ErrorKind::InvalidSpec, "image_size must be >= 16");
    if (spec.frame_count < 1) throw Error(ErrorKind::InvalidSpec, "frame_count must be >= 1");
    if (!(spec.pulse_period > 0)) throw Error(ErrorKind::InvalidSpec, "pulse_period must be > 0");
    if (spec.label_points < 0) throw Error(ErrorKind::InvalidSpec, "label_points must be >= 0");
    for (const auto& l : spec.lobes) {
        if (l.mode < 1) throw Error(ErrorKind::InvalidSpec, "lobe mode must be >= 1");
        if (!(l.swing_period > 0)) throw Error(ErrorKind::InvalidSpec, "lobe swing_period must be > 0");
    }
    const double margin = 2.0;
    constexpr int kAngles = 720;
    for (int t = 0; t < spec.frame_count; ++t) {
        for (int k = 0; k < kAngles; ++k) {
            double theta = 2.0 * std::numbers::pi * k / kAngles;
            double r = spec.radius(theta, t);
            if (!(r > 1.0))
                throw Error(ErrorKind::InvalidSpec, "radius drops to " + std::to_string(r) + " at " + frame_tag(t));
            Vec2 p = spec.boundary_point(theta, t);
            if (p.x < margin || p.y < margin || p.x > spec.image_size - 1 - margin ||
                p.y > spec.image_size - 1 - margin)
                throw Error(ErrorKind::InvalidSpec, "shape leaves the image at " + frame_tag(t));
        }
    }
}

std::vector<double> polar_angles(const Contour& contour, Vec2 center) {
    std::vector<double> out;
    out.reserve(contour.size());
    for (Vec2 p : contour.points) out.push_back(std::atan2(p.y - center.y, p.x - center.x));
    return out;
}

SyntheticVideo generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    const int n = spec.image_size;
    MaterialTexture texture(spec.texture_seed);
    SyntheticVideo out;
    VideoDataset& ds = out.dataset;
    ds.name = spec.name;

    for (int t = 0; t < spec.frame_count; ++t) {
        Image img(n, n);
        Mask mask(n, n);
        const Vec2 c = spec.center(t);
        for (int row = 0; row < n; ++row) {
            for (int col = 0; col < n; ++col) {
                const double dx = col - c.x, dy = row - c.y;
                const double theta = std::atan2(dy, dx);
                const double dist = std::hypot(dx, dy), radius = spec.radius(theta, t);
                const double rho = dist / radius;
                double v;
                // inside when the pixel center is within half a pixel of the
                // shape, so traced boundary pixels straddle the analytic curve
                if (dist < radius + 0.5) {
                    mask.at(row, col) = 1;
                    // bright rim fading into a textured interior
                    double rim = std::exp(-std::pow(std::max(1.0 - rho, 0.0) * 8.0, 2));
                    v = 0.55 + 0.22 * texture.inside(theta, rho) + 0.2 * rim;
                } else {
                    v = 0.18 + 0.06 * texture.outside(col, row);
                }
                img.at(row, col) = std::clamp(v, 0.0, 1.0);
            }
        }
        ds.frames.push_back(std::move(img));
        ds.masks.push_back(std::move(mask));
        ds.source_frames.push_back(t);
    }

    out.prepared = prepare_video(ds);
    const auto& contours = out.prepared.contours;

    for (int t = 0; t + 1 < spec.frame_count; ++t) {
        std::vector<Vec2> targets;
        for (double theta : polar_angles(contours[t], spec.center(t)))
            targets.push_back(spec.boundary_point(theta, t + 1));
        CorrespondenceMap m = snap_phi(targets, contours[t + 1]);
        m.source_frame = t;
        m.target_frame = t + 1;
        out.correspondences.push_back(std::move(m));
    }

    std::vector<LabelPoint> labels;
    const Contour& c0 = contours.front();
    const double w = n, h = n;
    for (int i = 0; i < spec.label_points; ++i) {
        std::size_t idx = c0.size() * static_cast<std::size_t>(2 * i + 1) / static_cast<std::size_t>(2 * spec.label_points);
        Vec2 p0 = c0.points[idx];
        const Vec2 c = spec.center(0);
        const double theta = std::atan2(p0.y - c.y, p0.x - c.x);
        for (int t = 0; t < spec.frame_count; ++t) {
            Vec2 p = t == 0 ? p0 : spec.boundary_point(theta, t);
            labels.push_back({t, i, p.x / w, p.y / h});
        }
    }
    ds.labels = SparseLabels(std::move(labels));
    return out;
}

std::string correspondences_to_json(const std::vector<CorrespondenceMap>& maps) {
    json pairs = json::array();
    for (const auto& m : maps) pairs.push_back({{"source", m.source_frame}, {"target", m.target_frame}, {"match", m.match}});
    return json{{"pairs", pairs}}.dump() + "\n";
}

std::vector<CorrespondenceMap> correspondences_from_json(const std::string& text) {
    std::vector<CorrespondenceMap> out;
    try {
        json j = json::parse(text);
        for (const auto& p : j.at("pairs")) {
            CorrespondenceMap m;
            m.source_frame = p.at("source").get<int>();
            m.target_frame = p.at("target").get<int>();
            m.match = p.at("match").get<std::vector<std::size_t>>();
            out.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("correspondence JSON: ") + e.what());
    }
    return out;
}

std::string contour_to_json(const Contour& contour) {
    json pts = json::array();
    for (Vec2 p : contour.points) pts.push_back({p.x, p.y});
    return json{{"frame", contour.frame}, {"points", pts}}.dump() + "\n";
}

Contour contour_from_json(const std::string& text) {
    Contour c;
    try {
        json j = json::parse(text);
        c.frame = j.at("frame").get<int>();
        for (const auto& p : j.at("points")) c.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("contour JSON: ") + e.what());
    }
    return c;
}

}  // namespace contrack
