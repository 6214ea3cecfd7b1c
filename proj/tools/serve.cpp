#include "cli.hpp"

#include <contrack/errors.hpp>
#include <contrack/png_io.hpp>

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <mutex>
#include <set>

namespace contrack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Response = LabelService::Response;

Response error_response(int status, const std::string& kind, const std::string& message) {
    return {status, "application/json", json{{"error", kind}, {"message", message}}.dump()};
}

std::string labels_body(const std::vector<LabelPoint>& pts, int frame) {
    json points = json::array();
    for (const auto& p : pts) points.push_back({{"id", p.point_id}, {"x", p.x}, {"y", p.y}});
    return json{{"frame", frame}, {"version", LabelService::version_of(pts)}, {"points", points}}.dump();
}

bool is_video_dir(const fs::path& dir) { return fs::is_directory(dir / "frames"); }

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

LabelService::LabelService(const fs::path& root) {
    std::vector<fs::path> dirs;
    if (is_video_dir(root)) {
        dirs.push_back(root);
    } else if (fs::is_directory(root)) {
        for (const auto& e : fs::directory_iterator(root))
            if (e.is_directory() && is_video_dir(e.path())) dirs.push_back(e.path());
    } else {
        throw Error(ErrorKind::IoError, "cannot serve '" + root.string() + "': not a directory");
    }
    if (dirs.empty()) throw Error(ErrorKind::EmptyDataset, "no video directories under '" + root.string() + "'");
    for (const auto& dir : dirs) {
        auto v = std::make_unique<Video>();
        v->dir = dir;
        v->frames = sorted_pngs(dir / "frames");
        if (v->frames.empty()) throw Error(ErrorKind::EmptyVideo, "no frames in '" + dir.string() + "'");
        const Image first = read_png_gray(v->frames.front());
        v->width = first.width;
        v->height = first.height;
        if (fs::exists(dir / "labels.csv")) v->labels = read_labels_csv(dir / "labels.csv");
        std::string name = fs::absolute(dir).lexically_normal().filename().string();
        if (name.empty()) name = fs::absolute(dir).lexically_normal().parent_path().filename().string();
        videos_.emplace(name, std::move(v));
    }
}

const LabelService::Video* LabelService::find(const std::string& name) const {
    auto it = videos_.find(name);
    return it == videos_.end() ? nullptr : it->second.get();
}

std::string LabelService::version_of(const std::vector<LabelPoint>& frame_points) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& p : frame_points) {
        const std::string row = std::to_string(p.point_id) + "," + format_double(p.x) + "," + format_double(p.y) + ";";
        for (unsigned char c : row) {
            h ^= c;
            h *= 1099511628211ull;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

Response LabelService::list_videos() const {
    json out = json::array();
    for (const auto& [name, v] : videos_)
        out.push_back({{"name", name}, {"frames", v->frames.size()}, {"width", v->width}, {"height", v->height}});
    return {200, "application/json", out.dump()};
}

Response LabelService::frame_png(const std::string& video, int frame) const {
    const Video* v = find(video);
    if (!v) return error_response(404, "NotFound", "unknown video '" + video + "'");
    if (frame < 0 || frame >= static_cast<int>(v->frames.size()))
        return error_response(404, "NotFound", "frame " + std::to_string(frame) + " out of range");
    return {200, "image/png", read_file(v->frames[static_cast<std::size_t>(frame)])};
}

Response LabelService::contour(const std::string& video, int frame) const {
    const Video* v = find(video);
    if (!v) return error_response(404, "NotFound", "unknown video '" + video + "'");
    if (frame < 0 || frame >= static_cast<int>(v->frames.size()))
        return error_response(404, "NotFound", "frame " + std::to_string(frame) + " out of range");
    const fs::path p = contour_path(v->dir, frame);
    if (!fs::exists(p)) return error_response(404, "NotFound", "frame " + std::to_string(frame) + " has no contour");
    return {200, "application/json", read_file(p)};
}

Response LabelService::get_labels(const std::string& video, int frame) const {
    const Video* v = find(video);
    if (!v) return error_response(404, "NotFound", "unknown video '" + video + "'");
    if (frame < 0 || frame >= static_cast<int>(v->frames.size()))
        return error_response(404, "NotFound", "frame " + std::to_string(frame) + " out of range");
    std::shared_lock lock(v->lock);
    return {200, "application/json", labels_body(v->labels.frame_points(frame), frame)};
}

Response LabelService::put_labels(const std::string& video, int frame, const std::string& body) {
    auto it = videos_.find(video);
    if (it == videos_.end()) return error_response(404, "NotFound", "unknown video '" + video + "'");
    Video& v = *it->second;
    if (frame < 0 || frame >= static_cast<int>(v.frames.size()))
        return error_response(404, "NotFound", "frame " + std::to_string(frame) + " out of range");

    std::string version;
    std::vector<LabelPoint> points;
    try {
        const json j = json::parse(body);
        if (!j.is_object() || !j.contains("version") || !j.contains("points") || !j["points"].is_array())
            return error_response(400, "BadRequest", "expected {\"version\": ..., \"points\": [...]}");
        version = j["version"].get<std::string>();
        std::set<int> ids;
        for (const auto& p : j["points"]) {
            LabelPoint lp{frame, p.at("id").get<int>(), p.at("x").get<double>(), p.at("y").get<double>()};
            if (!(lp.x >= 0.0 && lp.x <= 1.0 && lp.y >= 0.0 && lp.y <= 1.0))
                return error_response(400, "BadRequest", "coordinates must be normalized to [0, 1]");
            if (lp.point_id < 0 || !ids.insert(lp.point_id).second)
                return error_response(400, "BadRequest", "point ids must be distinct and non-negative");
            points.push_back(lp);
        }
    } catch (const json::exception& e) {
        return error_response(400, "BadRequest", e.what());
    }

    std::unique_lock lock(v.lock);
    const std::string current = version_of(v.labels.frame_points(frame));
    if (version != current)
        return {409, "application/json",
                json{{"error", "Conflict"}, {"message", "labels changed since they were read"}, {"version", current}}
                    .dump()};
    SparseLabels updated = v.labels;
    updated.set_frame(frame, points);
    write_labels_csv(v.dir / "labels.csv", updated);
    v.labels = std::move(updated);
    return {200, "application/json", labels_body(v.labels.frame_points(frame), frame)};
}

void mount(httplib::Server& server, LabelService& service) {
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    auto guarded = [send](auto fn) {
        return [send, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                send(res, fn(req));
            } catch (const Error& e) {
                send(res, error_response(500, std::string(to_string(e.kind())), e.what()));
            }
        };
    };
    auto frame_of = [](const httplib::Request& req) { return std::stoi(req.matches[2].str()); };

    server.Get("/api/videos", guarded([&service](const httplib::Request&) { return service.list_videos(); }));
    server.Get(R"(/api/videos/([^/]+)/frames/(\d{1,9}))", guarded([&service, frame_of](const httplib::Request& req) {
                   return service.frame_png(req.matches[1].str(), frame_of(req));
               }));
    server.Get(R"(/api/videos/([^/]+)/contours/(\d{1,9}))",
               guarded([&service, frame_of](const httplib::Request& req) {
                   return service.contour(req.matches[1].str(), frame_of(req));
               }));
    server.Get(R"(/api/videos/([^/]+)/labels/(\d{1,9}))", guarded([&service, frame_of](const httplib::Request& req) {
                   return service.get_labels(req.matches[1].str(), frame_of(req));
               }));
    server.Put(R"(/api/videos/([^/]+)/labels/(\d{1,9}))", guarded([&service, frame_of](const httplib::Request& req) {
                   return service.put_labels(req.matches[1].str(), frame_of(req), req.body);
               }));
}

}  // namespace contrack::cli
