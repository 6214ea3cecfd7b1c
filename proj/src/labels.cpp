#include <contrack/errors.hpp>
#include <contrack/labels.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace contrack {

namespace {

bool key_less(const LabelPoint& a, const LabelPoint& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.point_id < b.point_id;
}

void check_point(const LabelPoint& p) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(p.x) || !in_unit(p.y))
        throw Error(ErrorKind::ParseError, "label coordinates must be normalized to [0, 1] (frame " +
                                               std::to_string(p.frame) + ", point " + std::to_string(p.point_id) + ")");
    if (p.frame < 0 || p.point_id < 0) throw Error(ErrorKind::ParseError, "label frame and point_id must be >= 0");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_field(std::string_view s, std::size_t line) {
    s = trim(s);
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorKind::ParseError, "labels line " + std::to_string(line) + ": bad field '" + std::string(s) + "'");
    return value;
}

}  // namespace

SparseLabels::SparseLabels(std::vector<LabelPoint> points) : points_(std::move(points)) {
    for (const auto& p : points_) check_point(p);
    std::stable_sort(points_.begin(), points_.end(), key_less);
    for (std::size_t i = 1; i < points_.size(); ++i)
        if (!key_less(points_[i - 1], points_[i]))
            throw Error(ErrorKind::ParseError, "duplicate label for frame " + std::to_string(points_[i].frame) +
                                                   ", point " + std::to_string(points_[i].point_id));
}

std::optional<Vec2> SparseLabels::find(int frame, int point_id) const {
    LabelPoint key{frame, point_id, 0, 0};
    auto it = std::lower_bound(points_.begin(), points_.end(), key, key_less);
    if (it == points_.end() || it->frame != frame || it->point_id != point_id) return std::nullopt;
    return Vec2{it->x, it->y};
}

std::vector<LabelPoint> SparseLabels::frame_points(int frame) const {
    std::vector<LabelPoint> out;
    for (const auto& p : points_)
        if (p.frame == frame) out.push_back(p);
    return out;
}

std::vector<int> SparseLabels::frames() const {
    std::vector<int> out;
    for (const auto& p : points_)
        if (out.empty() || out.back() != p.frame) out.push_back(p.frame);
    return out;
}

std::vector<int> SparseLabels::point_ids() const {
    std::set<int> ids;
    for (const auto& p : points_) ids.insert(p.point_id);
    return {ids.begin(), ids.end()};
}

void SparseLabels::set_frame(int frame, std::vector<LabelPoint> points) {
    for (auto& p : points) p.frame = frame;
    std::vector<LabelPoint> rest;
    for (const auto& p : points_)
        if (p.frame != frame) rest.push_back(p);
    rest.insert(rest.end(), points.begin(), points.end());
    *this = SparseLabels(std::move(rest));
}

SparseLabels parse_labels_csv(std::string_view text) {
    std::vector<LabelPoint> pts;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line == "frame,point_id,x,y") continue;
            if (line.find_first_not_of("0123456789.,-+eE ") != std::string_view::npos)
                throw Error(ErrorKind::ParseError, "labels header must be 'frame,point_id,x,y'");
        }
        std::vector<std::string_view> f;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i)
            if (i == line.size() || line[i] == ',') {
                f.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        if (f.size() != 4)
            throw Error(ErrorKind::ParseError, "labels line " + std::to_string(line_no) + ": expected 4 fields");
        pts.push_back({parse_field<int>(f[0], line_no), parse_field<int>(f[1], line_no),
                       parse_field<double>(f[2], line_no), parse_field<double>(f[3], line_no)});
    }
    return SparseLabels(std::move(pts));
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_labels_csv(const SparseLabels& labels) {
    std::string out = "frame,point_id,x,y\n";
    for (const auto& p : labels.points())
        out += std::to_string(p.frame) + "," + std::to_string(p.point_id) + "," + format_double(p.x) + "," +
               format_double(p.y) + "\n";
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorKind::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

SparseLabels read_labels_csv(const std::filesystem::path& path) { return parse_labels_csv(read_file(path)); }

void write_labels_csv(const std::filesystem::path& path, const SparseLabels& labels) {
    write_file_atomic(path, format_labels_csv(labels));
}

}  // namespace contrack
