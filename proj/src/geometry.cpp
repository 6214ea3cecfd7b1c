#include <contrack/errors.hpp>
#include <contrack/geometry.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

namespace contrack {

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

struct Pixel {
    int x;
    int y;
    friend bool operator==(Pixel, Pixel) = default;
};

// Clockwise in image coordinates (y grows downwards), starting west.
constexpr std::array<Pixel, 8> kRing = {{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int ring_index(Pixel from, Pixel to) {
    Pixel d{to.x - from.x, to.y - from.y};
    for (int k = 0; k < 8; ++k)
        if (kRing[k] == d) return k;
    return -1;
}

// 8-connected component labelling; returns the label image and the label of
// the largest component (ties: first in raster order).
std::pair<std::vector<int>, int> largest_component(const Mask& mask) {
    std::vector<int> labels(mask.pixels.size(), -1);
    int best = -1;
    std::size_t best_size = 0;
    int next = 0;
    std::vector<Pixel> stack;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            std::size_t idx = static_cast<std::size_t>(r) * mask.width + c;
            if (!mask.pixels[idx] || labels[idx] >= 0) continue;
            std::size_t size = 0;
            stack.push_back({c, r});
            labels[idx] = next;
            while (!stack.empty()) {
                Pixel p = stack.back();
                stack.pop_back();
                ++size;
                for (Pixel d : kRing) {
                    int nx = p.x + d.x, ny = p.y + d.y;
                    if (!mask.inside(ny, nx)) continue;
                    std::size_t nidx = static_cast<std::size_t>(ny) * mask.width + nx;
                    if (mask.pixels[nidx] && labels[nidx] < 0) {
                        labels[nidx] = next;
                        stack.push_back({nx, ny});
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                best = next;
            }
            ++next;
        }
    }
    return {std::move(labels), best};
}

// Moore-neighbor tracing of the outer boundary of one component.
std::vector<Pixel> trace_outer(const Mask& mask, const std::vector<int>& labels, int label) {
    auto fg = [&](Pixel p) {
        return mask.inside(p.y, p.x) && labels[static_cast<std::size_t>(p.y) * mask.width + p.x] == label;
    };
    Pixel start{-1, -1};
    for (int r = 0; r < mask.height && start.x < 0; ++r)
        for (int c = 0; c < mask.width; ++c)
            if (fg({c, r})) {
                start = {c, r};
                break;
            }

    std::vector<Pixel> trace{start};
    Pixel current = start;
    Pixel backtrack{start.x - 1, start.y};
    std::optional<std::pair<Pixel, Pixel>> first_move;
    const std::size_t limit = 4 * mask.pixels.size() + 8;
    while (trace.size() < limit) {
        int k = ring_index(current, backtrack);
        Pixel next{-1, -1};
        Pixel prev = backtrack;
        for (int step = 1; step <= 8; ++step) {
            Pixel d = kRing[(k + step) % 8];
            Pixel cand{current.x + d.x, current.y + d.y};
            if (fg(cand)) {
                next = cand;
                break;
            }
            prev = cand;
        }
        if (next.x < 0) break;  // isolated pixel
        if (!first_move) {
            first_move = {current, next};
        } else if (first_move->first == current && first_move->second == next) {
            break;
        }
        backtrack = prev;
        current = next;
        trace.push_back(current);
    }
    // The loop closes on the start pixel; drop the repeat.
    if (trace.size() > 1 && trace.back() == trace.front()) trace.pop_back();
    return trace;
}

std::pair<int, int> anchor_key(Pixel p, AnchorRule rule) {
    return rule == AnchorRule::LeftmostTop ? std::pair{p.x, p.y} : std::pair{p.y, p.x};
}

}  // namespace

ContourExtraction extract_contour(const Mask& mask, int frame, AnchorRule rule) {
    if (mask.height <= 0 || mask.width <= 0 || mask.count() == 0)
        throw Error(ErrorKind::EmptyMask, "mask has no foreground");

    auto [labels, label] = largest_component(mask);
    std::vector<Pixel> loop = trace_outer(mask, labels, label);

    auto on_border = [&](Pixel p) { return p.x == 0 || p.y == 0 || p.x == mask.width - 1 || p.y == mask.height - 1; };

    std::vector<std::vector<Pixel>> chains;
    const std::size_t n = loop.size();
    auto first_border = std::find_if(loop.begin(), loop.end(), on_border);
    if (first_border == loop.end()) {
        // Closed boundary: open it at the anchor pixel, keep trace direction.
        auto anchor = std::min_element(loop.begin(), loop.end(), [&](Pixel a, Pixel b) {
            return anchor_key(a, rule) < anchor_key(b, rule);
        });
        std::rotate(loop.begin(), anchor, loop.end());
        chains.push_back(std::move(loop));
    } else {
        std::size_t offset = static_cast<std::size_t>(first_border - loop.begin());
        std::vector<Pixel> run;
        for (std::size_t k = 1; k <= n; ++k) {
            Pixel p = loop[(offset + k) % n];
            if (on_border(p)) {
                if (!run.empty()) chains.push_back(std::move(run));
                run.clear();
            } else {
                run.push_back(p);
            }
        }
        if (!run.empty()) chains.push_back(std::move(run));
        for (auto& chain : chains) {
            if (anchor_key(chain.back(), rule) < anchor_key(chain.front(), rule))
                std::reverse(chain.begin(), chain.end());
        }
    }

    ContourExtraction out;
    out.contour.frame = frame;
    out.chain_count = chains.size();
    out.fragmented = chains.size() > 1;
    if (chains.empty()) return out;  // every boundary pixel lies on the border

    auto longest = std::max_element(chains.begin(), chains.end(), [&](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return anchor_key(a.front(), rule) > anchor_key(b.front(), rule);
    });
    out.contour.points.reserve(longest->size());
    for (Pixel p : *longest) out.contour.points.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
    return out;
}

Mask largest_component_mask(const Mask& mask) {
    Mask out(mask.height, mask.width);
    auto [labels, label] = largest_component(mask);
    if (label < 0) return out;
    for (std::size_t i = 0; i < labels.size(); ++i) out.pixels[i] = labels[i] == label ? 1 : 0;
    return out;
}

Mask fill_holes(const Mask& mask) {
    // Background reachable from the image border through 4-connected steps
    // stays background; everything else becomes foreground.
    Mask outside(mask.height, mask.width);
    std::vector<Pixel> stack;
    auto seed = [&](int r, int c) {
        if (!mask.at(r, c) && !outside.at(r, c)) {
            outside.at(r, c) = 1;
            stack.push_back({c, r});
        }
    };
    for (int c = 0; c < mask.width; ++c) {
        seed(0, c);
        seed(mask.height - 1, c);
    }
    for (int r = 0; r < mask.height; ++r) {
        seed(r, 0);
        seed(r, mask.width - 1);
    }
    constexpr std::array<Pixel, 4> kCross = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    while (!stack.empty()) {
        Pixel p = stack.back();
        stack.pop_back();
        for (Pixel d : kCross) {
            int nx = p.x + d.x, ny = p.y + d.y;
            if (mask.inside(ny, nx)) seed(ny, nx);
        }
    }
    Mask out(mask.height, mask.width);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = outside.pixels[i] ? 0 : 1;
    return out;
}

Image mask_to_image(const Mask& mask) {
    Image img(mask.height, mask.width);
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) img.data[i] = mask.pixels[i] ? 1.0 : 0.0;
    return img;
}

namespace {

NormalField raw_normals(const Contour& contour) {
    const std::size_t n = contour.size();
    if (n < 3) throw Error(ErrorKind::TooFewPoints, "normals need at least 3 contour points");
    NormalField field;
    field.normals.assign(n, Vec2{});
    std::vector<bool> ok(n, false);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        Vec2 t = 0.5 * (contour.points[i + 1] - contour.points[i - 1]);
        double len = norm(t);
        if (len == 0.0) {
            field.degenerate.push_back(i);
            continue;
        }
        field.normals[i] = {-t.y / len, t.x / len};
        ok[i] = true;
    }
    for (std::size_t i : field.degenerate) {
        // nearest well-defined neighbor, searching outwards
        for (std::size_t d = 1; d < n; ++d) {
            if (i >= d + 1 && ok[i - d]) {
                field.normals[i] = field.normals[i - d];
                break;
            }
            if (i + d + 1 < n && ok[i + d]) {
                field.normals[i] = field.normals[i + d];
                break;
            }
        }
    }
    return field;
}

}  // namespace

NormalField compute_normals_unoriented(const Contour& contour) { return raw_normals(contour); }

NormalField compute_normals(const Contour& contour, const Mask& mask) {
    NormalField field = raw_normals(contour);
    const Image probe_img = mask_to_image(mask);
    const GridView grid = view(probe_img);

    std::vector<Vec2> probes;
    probes.reserve(2 * contour.size());
    for (std::size_t i = 1; i + 1 < contour.size(); ++i) {
        probes.push_back(contour.points[i] + kNormalProbeDistance * field.normals[i]);
        probes.push_back(contour.points[i] - kNormalProbeDistance * field.normals[i]);
    }
    SampleOutput s = bilinear_sample(grid, probes);
    // Majority vote keeps the orientation consistent along the whole contour.
    long votes = 0;
    for (std::size_t k = 0; k + 1 < probes.size(); k += 2) {
        double ahead = s.values[k], behind = s.values[k + 1];
        if (ahead < behind) ++votes;
        else if (ahead > behind) --votes;
    }
    if (votes < 0)
        for (auto& v : field.normals) v = -1.0 * v;
    for (auto& v : field.normals) {
        // -0.0 would break bitwise comparisons of otherwise equal fields
        if (v.x == 0.0) v.x = 0.0;
        if (v.y == 0.0) v.y = 0.0;
    }
    return field;
}

NearestPointIndex::NearestPointIndex(std::span<const Vec2> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) throw Error(ErrorKind::EmptyContour, "nearest-point index over an empty point set");
    double max_x = points_[0].x, max_y = points_[0].y;
    min_x_ = points_[0].x;
    min_y_ = points_[0].y;
    for (const auto& p : points_) {
        min_x_ = std::min(min_x_, p.x);
        min_y_ = std::min(min_y_, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    double extent = std::max({max_x - min_x_, max_y - min_y_, 1e-9});
    double cells_per_side = std::max(1.0, std::ceil(std::sqrt(static_cast<double>(points_.size())) / 2.0));
    cell_ = extent / cells_per_side;
    cols_ = static_cast<int>(std::floor((max_x - min_x_) / cell_)) + 1;
    rows_ = static_cast<int>(std::floor((max_y - min_y_) / cell_)) + 1;
    buckets_.resize(static_cast<std::size_t>(cols_) * rows_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        int cx = std::clamp(static_cast<int>(std::floor((points_[i].x - min_x_) / cell_)), 0, cols_ - 1);
        int cy = std::clamp(static_cast<int>(std::floor((points_[i].y - min_y_) / cell_)), 0, rows_ - 1);
        buckets_[static_cast<std::size_t>(cy) * cols_ + cx].push_back(i);
    }
}

std::size_t NearestPointIndex::nearest(Vec2 q, double* dist) const {
    int cx = std::clamp(static_cast<int>(std::floor((q.x - min_x_) / cell_)), 0, cols_ - 1);
    int cy = std::clamp(static_cast<int>(std::floor((q.y - min_y_) / cell_)), 0, rows_ - 1);
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    auto visit = [&](int bx, int by) {
        if (bx < 0 || by < 0 || bx >= cols_ || by >= rows_) return;
        for (std::size_t i : buckets_[static_cast<std::size_t>(by) * cols_ + bx]) {
            double dx = q.x - points_[i].x, dy = q.y - points_[i].y;
            double d2 = dx * dx + dy * dy;
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                best_d2 = d2;
                best = i;
            }
        }
    };
    const int max_ring = std::max(cols_, rows_);
    for (int ring = 0; ring <= max_ring; ++ring) {
        if (ring == 0) {
            visit(cx, cy);
        } else {
            for (int d = -ring; d <= ring; ++d) {
                visit(cx + d, cy - ring);
                visit(cx + d, cy + ring);
            }
            for (int d = -ring + 1; d <= ring - 1; ++d) {
                visit(cx - ring, cy + d);
                visit(cx + ring, cy + d);
            }
        }
        // Cells in the next ring are at least ring * cell_ away; strict
        // comparison keeps equidistant lower indices reachable.
        double bound = ring * cell_;
        if (std::isfinite(best_d2) && best_d2 < bound * bound) break;
    }
    if (dist) *dist = std::sqrt(best_d2);
    return best;
}

CorrespondenceMap snap_phi(std::span<const Vec2> queries, const Contour& target) {
    if (target.empty()) throw Error(ErrorKind::EmptyContour, "snap target contour is empty");
    NearestPointIndex index(target.points);
    CorrespondenceMap out;
    out.target_frame = target.frame;
    out.source_frame = target.frame - 1;
    out.match.resize(queries.size());
    out.snap_distance.resize(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) out.match[i] = index.nearest(queries[i], &out.snap_distance[i]);
    return out;
}

std::size_t contour_index_of(const Contour& contour, Vec2 point) {
    if (contour.empty()) throw Error(ErrorKind::EmptyContour, "index lookup on an empty contour");
    NearestPointIndex index(contour.points);
    return index.nearest(point);
}

BilinearTap bilinear_tap(double x, double y, int width, int height) {
    BilinearTap tap;
    double cx = std::clamp(x, 0.0, static_cast<double>(width - 1));
    double cy = std::clamp(y, 0.0, static_cast<double>(height - 1));
    tap.clamped = cx != x || cy != y;
    tap.x0 = width >= 2 ? std::min(static_cast<int>(std::floor(cx)), width - 2) : 0;
    tap.y0 = height >= 2 ? std::min(static_cast<int>(std::floor(cy)), height - 2) : 0;
    tap.x1 = std::min(tap.x0 + 1, width - 1);
    tap.y1 = std::min(tap.y0 + 1, height - 1);
    tap.wx = width >= 2 ? cx - tap.x0 : 0.0;
    tap.wy = height >= 2 ? cy - tap.y0 : 0.0;
    return tap;
}

SampleOutput bilinear_sample(const GridView& field, std::span<const Vec2> coords) {
    SampleOutput out;
    out.channels = field.channels;
    const std::size_t total = coords.size() * field.channels;
    out.values.resize(total);
    out.d_dx.resize(total);
    out.d_dy.resize(total);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        BilinearTap t = bilinear_tap(coords[i].x, coords[i].y, field.width, field.height);
        if (t.clamped || std::isnan(coords[i].x) || std::isnan(coords[i].y)) ++out.clamped;
        const bool slope_x = !(coords[i].x < 0.0 || coords[i].x > field.width - 1.0);
        const bool slope_y = !(coords[i].y < 0.0 || coords[i].y > field.height - 1.0);
        for (int c = 0; c < field.channels; ++c) {
            double a = field.at(c, t.y0, t.x0), b = field.at(c, t.y0, t.x1);
            double d = field.at(c, t.y1, t.x0), e = field.at(c, t.y1, t.x1);
            double v = t.blend(a, b, d, e);
            std::size_t k = i * field.channels + c;
            out.values[k] = v;
            out.d_dx[k] = slope_x ? (1 - t.wy) * (b - a) + t.wy * (e - d) : 0.0;
            out.d_dy[k] = slope_y ? (1 - t.wx) * (d - a) + t.wx * (e - b) : 0.0;
            if (std::isnan(v)) out.has_nan = true;
        }
    }
    return out;
}

}  // namespace contrack
