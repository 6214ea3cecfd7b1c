#pragma once

// Command implementations behind the `contrack` binary, exposed as a library
// so tests can drive them in-process.

#include <contrack/dataio.hpp>
#include <contrack/labels.hpp>
#include <contrack/tracking.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace contrack::cli {

/// Parses argv, runs one subcommand and returns the process exit code:
/// 0 on success, 1 for library errors, 2 for usage errors and 3 otherwise.
/// Failures are reported on `err` as one JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// A video directory after `extract`: frames/, masks/, contours/ and an
/// optional labels.csv.
struct Workspace {
    std::filesystem::path root;
    VideoDataset dataset;
    PreparedVideo prepared;
};

std::filesystem::path contour_path(const std::filesystem::path& video, int frame);
/// Throws Error(EmptyContour) naming the first frame without a contour file.
Workspace load_workspace(const std::filesystem::path& video);

/// Label storage and file access for the HTTP service. Every method is safe
/// to call from several threads; label writes of one video are serialized.
class LabelService {
public:
    /// `root` is one video directory or a directory of video directories.
    explicit LabelService(const std::filesystem::path& root);

    struct Response {
        int status = 200;
        std::string content_type = "application/json";
        std::string body;
    };

    Response list_videos() const;
    Response frame_png(const std::string& video, int frame) const;
    Response contour(const std::string& video, int frame) const;
    Response get_labels(const std::string& video, int frame) const;
    /// Body {"version": token, "points": [{"id", "x", "y"}]}. A token that
    /// does not match the stored frame gives 409 and leaves the file alone.
    Response put_labels(const std::string& video, int frame, const std::string& body);

    /// Token identifying the current label content of one frame.
    static std::string version_of(const std::vector<LabelPoint>& frame_points);

private:
    struct Video {
        std::filesystem::path dir;
        std::vector<std::filesystem::path> frames;
        int width = 0;
        int height = 0;
        SparseLabels labels;
        mutable std::shared_mutex lock;
    };

    const Video* find(const std::string& name) const;

    std::map<std::string, std::unique_ptr<Video>> videos_;
};

/// Registers the /api routes on a server.
void mount(httplib::Server& server, LabelService& service);

}  // namespace contrack::cli
