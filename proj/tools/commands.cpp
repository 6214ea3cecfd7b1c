#include "cli.hpp"

#include <contrack/config.hpp>
#include <contrack/errors.hpp>
#include <contrack/evaluation.hpp>
#include <contrack/png_io.hpp>
#include <contrack/training.hpp>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <optional>

namespace contrack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path contour_path(const fs::path& video, int frame) {
    std::string name = frame_file_name(frame);
    return video / "contours" / (name.substr(0, name.size() - 4) + ".json");
}

Workspace load_workspace(const fs::path& video) {
    Workspace ws;
    ws.root = video;
    ws.dataset = load_dataset(video);
    ws.prepared.name = ws.dataset.name;
    ws.prepared.frames = ws.dataset.frames;
    ws.prepared.masks = ws.dataset.masks;
    for (std::size_t t = 0; t < ws.dataset.size(); ++t) {
        const fs::path p = contour_path(video, static_cast<int>(t));
        if (!fs::exists(p))
            throw Error(ErrorKind::EmptyContour,
                        "frame " + std::to_string(t) + " of '" + video.string() + "' has no contour; run extract first");
        Contour c = contour_from_json(read_file(p));
        c.frame = static_cast<int>(t);
        ws.prepared.normals.push_back(compute_normals(c, ws.dataset.masks[t]));
        ws.prepared.contours.push_back(std::move(c));
    }
    return ws;
}

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
};

RunConfig run_config(const GlobalFlags& g) {
    RunConfig rc = g.config.empty() ? RunConfig{} : load_run_config(g.config);
    if (g.seed) rc.train.seed = *g.seed;
    return rc;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, text);
}

TrackSet read_tracks(const fs::path& path) {
    if (!fs::exists(path))
        throw Error(ErrorKind::IoError, "no tracks at '" + path.string() + "'; run track first");
    return trackset_from_json(read_file(path));
}

/// Pair correspondences recovered from a TrackSet: every trajectory present
/// on frame t names the successor of its index there.
std::vector<CorrespondenceMap> maps_from_tracks(const TrackSet& tracks, const std::vector<Contour>& contours) {
    std::vector<CorrespondenceMap> maps;
    for (std::size_t t = 0; t + 1 < contours.size(); ++t) {
        CorrespondenceMap m;
        m.source_frame = static_cast<int>(t);
        m.target_frame = static_cast<int>(t + 1);
        m.match.assign(contours[t].size(), 0);
        m.snap_distance.assign(contours[t].size(), 0.0);
        for (const auto& tr : tracks.trajectories) {
            const int k = static_cast<int>(t) - tr.birth;
            if (k < 0 || k + 1 >= static_cast<int>(tr.path.size())) continue;
            m.match[tr.path[k].index] = tr.path[k + 1].index;
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

void cmd_synth(const GlobalFlags& g, const fs::path& out, std::ostream& os) {
    SyntheticSpec spec = run_config(g).synthetic;
    if (g.seed) spec.texture_seed = *g.seed;
    SyntheticVideo sv = generate_synthetic(spec);
    save_dataset(out, sv.dataset);
    write_text(out / "ground_truth.json", correspondences_to_json(sv.correspondences));
    write_text(out / "spec.json", json(spec).dump(2) + "\n");
    os << "wrote " << sv.dataset.size() << " frames to " << out.string() << "\n";
}

void cmd_extract(const fs::path& video, fs::path out, int stride, int image_size, std::ostream& os,
                 std::ostream& es) {
    VideoDataset ds = load_dataset(video, stride, image_size);
    if (out.empty()) {
        if (stride != 1 || image_size != 0)
            throw Error(ErrorKind::ConfigError, "--stride and --image-size write a resampled copy and need --out");
        out = video;
    } else {
        save_dataset(out, ds);
    }
    fs::remove_all(out / "contours");
    fs::create_directories(out / "contours");
    std::size_t written = 0;
    for (std::size_t t = 0; t < ds.size(); ++t) {
        try {
            ContourExtraction ex = extract_contour(ds.masks[t], static_cast<int>(t));
            write_text(contour_path(out, static_cast<int>(t)), contour_to_json(ex.contour));
            ++written;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EmptyMask) throw;
            es << json{{"warning", "EmptyMask"}, {"frame", t}, {"message", "frame skipped"}}.dump() << "\n";
        }
    }
    os << "extracted " << written << " contours into " << (out / "contours").string() << "\n";
}

void cmd_train(const GlobalFlags& g, const std::vector<std::string>& videos, const fs::path& out, int image_size,
               const std::string& resume, std::ostream& os) {
    RunConfig rc = run_config(g);
    if (image_size > 0) rc.train.image_size = image_size;
    validate(rc.train);
    std::vector<PreparedVideo> prepared;
    for (const auto& v : videos) prepared.push_back(load_workspace(v).prepared);
    fs::create_directories(out);
    TrainOptions opt;
    opt.checkpoint_dir = out;
    if (!resume.empty()) opt.initial = load_checkpoint(resume);
    opt.on_iteration = [&](const TrainLogRow& r) {
        if (r.iteration % 100 == 0 || r.iteration + 1 == rc.train.total_iters) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "iter %d total %.4f cycle %.4f lr %.3g\n", r.iteration, r.losses.total,
                          r.losses.cycle, r.lr);
            os << buf << std::flush;
        }
    };
    TrainResult res = train(prepared, rc.tracker, rc.train, opt);
    save_checkpoint(res.weights, out / "model.bin");
    write_text(out / "train_log.csv", format_train_log_csv(res.log));
    write_text(out / "config.json", json(rc).dump(2) + "\n");
    os << "saved " << (out / "model.bin").string() << "\n";
}

void cmd_track(const GlobalFlags& g, const fs::path& video, const std::string& method, const std::string& checkpoint,
               fs::path out, std::ostream& os) {
    TrackOptions opt;
    opt.method = parse_track_method(method);
    opt.mechanical = run_config(g).mechanical;
    std::optional<TrackerWeights> weights;
    if (opt.method == TrackMethod::Learned) {
        if (checkpoint.empty()) throw Error(ErrorKind::ConfigError, "--method learned needs --checkpoint");
        weights = load_checkpoint(checkpoint);
        opt.weights = &*weights;
    }
    Workspace ws = load_workspace(video);
    TrackSet tracks = track_sequence(ws.prepared.frames, ws.prepared.contours, opt);
    check_trackset(tracks, ws.prepared.contours);
    if (out.empty()) out = video / "tracks.json";
    write_text(out, trackset_to_json(tracks));
    os << "wrote " << tracks.trajectories.size() << " trajectories to " << out.string() << "\n";
}

void cmd_eval(const std::vector<std::string>& videos, const std::string& tracks_flag, fs::path out, std::ostream& os) {
    if (!tracks_flag.empty() && videos.size() != 1)
        throw Error(ErrorKind::ConfigError, "--tracks names one file and needs exactly one video");
    std::vector<Workspace> ws;
    std::vector<TrackSet> tracks;
    std::vector<SparseLabels> labels;
    for (const auto& v : videos) {
        ws.push_back(load_workspace(v));
        if (!ws.back().dataset.labels) throw Error(ErrorKind::NoLabels, "'" + v + "' has no labels.csv");
        labels.push_back(*ws.back().dataset.labels);
        tracks.push_back(read_tracks(tracks_flag.empty() ? fs::path(v) / "tracks.json" : fs::path(tracks_flag)));
        check_trackset(tracks.back(), ws.back().prepared.contours);
    }
    std::vector<EvalInput> inputs;
    for (std::size_t k = 0; k < ws.size(); ++k) {
        const PreparedVideo& p = ws[k].prepared;
        inputs.push_back({p.name, &tracks[k], &labels[k], &p.contours, &p.normals, p.width(), p.height()});
    }
    EvalReport report = evaluate(inputs);
    if (out.empty()) out = videos.front();
    write_text(out / "report.json", report_to_json(report));
    const std::string md = report_to_markdown(report);
    write_text(out / "report.md", md);
    os << md;
}

std::pair<std::size_t, std::size_t> parse_window(const std::string& text, std::size_t n) {
    if (text.empty()) return {0, n == 0 ? 0 : n - 1};
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(text);
        std::size_t used = 0;
        const long b = std::stol(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(text);
        const long e = std::stol(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument(text);
        if (b < 0 || e < 0) throw Error(ErrorKind::WindowOutOfRange, "window bounds must be non-negative");
        return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::ConfigError, "--window expects BEGIN:END, got '" + text + "'");
    }
}

void cmd_quantify(const fs::path& video, const std::string& tracks_flag, const std::string& window, fs::path out,
                  std::ostream& os) {
    Workspace ws = load_workspace(video);
    TrackSet tracks = read_tracks(tracks_flag.empty() ? video / "tracks.json" : fs::path(tracks_flag));
    check_trackset(tracks, ws.prepared.contours);
    auto [b, e] = parse_window(window, ws.prepared.contours.front().size());
    VelocityMap vm = quantify_velocity(tracks, ws.prepared.contours, ws.prepared.normals, b, e);
    if (out.empty()) out = video;
    fs::create_directories(out);
    write_text(out / "velocity.csv", velocity_to_csv(vm));
    write_png_rgb(out / "velocity.png", render_velocity(vm));
    os << "wrote " << (out / "velocity.csv").string() << " and velocity.png\n";
}

void cmd_viz(const fs::path& video, const std::string& tracks_flag, fs::path out, int arrow_stride,
             std::ostream& os) {
    Workspace ws = load_workspace(video);
    TrackSet tracks = read_tracks(tracks_flag.empty() ? video / "tracks.json" : fs::path(tracks_flag));
    check_trackset(tracks, ws.prepared.contours);
    const auto& c = ws.prepared.contours;
    std::vector<CorrespondenceMap> maps = maps_from_tracks(tracks, c);
    if (out.empty()) out = video / "viz";
    fs::create_directories(out);
    for (std::size_t t = 0; t < maps.size(); ++t) {
        std::string name = frame_file_name(static_cast<int>(t));
        write_png_rgb(out / ("pair_" + name),
                      render_correspondence(ws.prepared.frames[t], c[t], c[t + 1], maps[t], arrow_stride));
    }
    os << "wrote " << maps.size() << " images to " << out.string() << "\n";
}

void cmd_serve(const fs::path& root, const std::string& host, int port, std::ostream& os) {
    LabelService service(root);
    httplib::Server server;
    mount(server, service);
    int bound = port;
    if (port == 0) {
        bound = server.bind_to_any_port(host);
    } else if (!server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw Error(ErrorKind::IoError, "cannot listen on " + host + ":" + std::to_string(port));
    os << "serving " << root.string() << " on http://" << host << ":" << bound << "\n" << std::flush;
    server.listen_after_bind();
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Contour tracking of live cells"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalFlags g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Seed for training, or texture seed for synth");

    fs::path out_path;
    std::string video, method = "learned", checkpoint, tracks, window, host = "127.0.0.1";
    std::vector<std::string> videos;
    int stride = 1, image_size = 0, port = 8080, arrow_stride = 1;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic pulsing blob video");
    synth->add_option("--out", out_path, "Output video directory")->required();

    auto* extract = app.add_subcommand("extract", "Extract one contour per frame");
    extract->add_option("video", video, "Video directory")->required()->check(CLI::ExistingDirectory);
    extract->add_option("--out", out_path, "Write a resampled copy with contours here");
    extract->add_option("--stride", stride, "Keep every n-th frame")->check(CLI::PositiveNumber);
    extract->add_option("--image-size", image_size, "Resize frames to a square of this side")
        ->check(CLI::NonNegativeNumber);

    auto* train_cmd = app.add_subcommand("train", "Train the tracker on extracted videos");
    train_cmd->add_option("videos", videos, "Video directories")->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--out", out_path, "Output directory for model.bin and train_log.csv")->required();
    train_cmd->add_option("--image-size", image_size, "Training image size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--checkpoint", checkpoint, "Resume from this checkpoint")->check(CLI::ExistingFile);

    auto* track = app.add_subcommand("track", "Track contour points through a video");
    track->add_option("video", video, "Video directory")->required()->check(CLI::ExistingDirectory);
    track->add_option("--method", method, "learned or mechanical");
    track->add_option("--checkpoint", checkpoint, "Trained model for --method learned")->check(CLI::ExistingFile);
    track->add_option("--out", out_path, "TrackSet JSON path (default VIDEO/tracks.json)");

    auto* eval = app.add_subcommand("eval", "Score tracks against labels");
    eval->add_option("videos", videos, "Video directories")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--tracks", tracks, "TrackSet JSON (default VIDEO/tracks.json)")->check(CLI::ExistingFile);
    eval->add_option("--out", out_path, "Directory for report.json and report.md (default first VIDEO)");

    auto* quantify = app.add_subcommand("quantify", "Normal velocity along a window of frame-0 points");
    quantify->add_option("video", video, "Video directory")->required()->check(CLI::ExistingDirectory);
    quantify->add_option("--tracks", tracks, "TrackSet JSON (default VIDEO/tracks.json)")->check(CLI::ExistingFile);
    quantify->add_option("--window", window, "Frame-0 index range BEGIN:END (default all)");
    quantify->add_option("--out", out_path, "Directory for velocity.csv and velocity.png (default VIDEO)");

    auto* viz = app.add_subcommand("viz", "Draw correspondence arrows for every frame pair");
    viz->add_option("video", video, "Video directory")->required()->check(CLI::ExistingDirectory);
    viz->add_option("--tracks", tracks, "TrackSet JSON (default VIDEO/tracks.json)")->check(CLI::ExistingFile);
    viz->add_option("--out", out_path, "Output directory (default VIDEO/viz)");
    viz->add_option("--arrow-stride", arrow_stride, "Draw every n-th arrow")->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "HTTP API for the labeling UI");
    serve->add_option("root", video, "Video directory or directory of videos")->required()->check(CLI::ExistingDirectory);
    serve->add_option("--port", port, "Port, 0 picks a free one")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Interface to bind");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        report_error(err, "UsageError", e.what());
        return 2;
    }
    if (*seed_opt) g.seed = seed;

    try {
        if (*synth) cmd_synth(g, out_path, out);
        else if (*extract) cmd_extract(video, out_path, stride, image_size, out, err);
        else if (*train_cmd) cmd_train(g, videos, out_path, image_size, checkpoint, out);
        else if (*track) cmd_track(g, video, method, checkpoint, out_path, out);
        else if (*eval) cmd_eval(videos, tracks, out_path, out);
        else if (*quantify) cmd_quantify(video, tracks, window, out_path, out);
        else if (*viz) cmd_viz(video, tracks, out_path, arrow_stride, out);
        else if (*serve) cmd_serve(video, host, port, out);
    } catch (const Error& e) {
        report_error(err, std::string(to_string(e.kind())), e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error(err, "InternalError", e.what());
        return 3;
    }
    return 0;
}

}  // namespace contrack::cli
