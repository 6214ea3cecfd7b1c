#pragma once

#include <contrack/types.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace contrack {

/// One hand-labeled tracking point; x and y are normalized by image width
/// and height.
struct LabelPoint {
    int frame = 0;
    int point_id = 0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const LabelPoint&, const LabelPoint&) = default;
};

/// Sparse ground truth for one video. Points are kept sorted by
/// (frame, point_id); a (frame, id) pair appears at most once.
class SparseLabels {
public:
    SparseLabels() = default;
    /// Throws Error(ParseError) on duplicates or coordinates outside [0, 1].
    explicit SparseLabels(std::vector<LabelPoint> points);

    const std::vector<LabelPoint>& points() const { return points_; }
    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }

    std::optional<Vec2> find(int frame, int point_id) const;
    std::vector<LabelPoint> frame_points(int frame) const;
    std::vector<int> frames() const;
    std::vector<int> point_ids() const;
    /// Replaces every point of one frame.
    void set_frame(int frame, std::vector<LabelPoint> points);

    friend bool operator==(const SparseLabels&, const SparseLabels&) = default;

private:
    std::vector<LabelPoint> points_;
};

/// CSV with header "frame,point_id,x,y".
SparseLabels parse_labels_csv(std::string_view text);
std::string format_labels_csv(const SparseLabels& labels);

SparseLabels read_labels_csv(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it over the target.
void write_labels_csv(const std::filesystem::path& path, const SparseLabels& labels);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Writes bytes to a temporary sibling file, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace contrack
