#include <contrack/config.hpp>
#include <contrack/errors.hpp>
#include <contrack/labels.hpp>

#include <initializer_list>
#include <string>

namespace contrack {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> keys, const char* section) {
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, std::string(section) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* k : keys) known = known || key == k;
        if (!known) throw Error(ErrorKind::ConfigError, "unknown key '" + key + "' in " + section);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

void to_json(json& j, const Vec2& v) { j = json::array({v.x, v.y}); }

void from_json(const json& j, Vec2& v) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::ConfigError, "expected a [x, y] pair");
    v = {j[0].get<double>(), j[1].get<double>()};
}

void to_json(json& j, const EncoderConfig& c) {
    j = {{"stage_channels", c.stage_channels}, {"fpn_channels", c.fpn_channels}, {"image_size", c.image_size},
         {"seed", c.seed}};
}

void from_json(const json& j, EncoderConfig& c) {
    check_keys(j, {"stage_channels", "fpn_channels", "image_size", "seed"}, "encoder");
    read(j, "stage_channels", c.stage_channels);
    read(j, "fpn_channels", c.fpn_channels);
    read(j, "image_size", c.image_size);
    read(j, "seed", c.seed);
}

void to_json(json& j, const TrackerConfig& c) {
    j = {{"encoder", c.encoder},     {"pos_dim", c.pos_dim},         {"model_dim", c.model_dim},
         {"heads", c.heads},         {"head_hidden", c.head_hidden}, {"zero_init_head", c.zero_init_head}};
}

void from_json(const json& j, TrackerConfig& c) {
    check_keys(j, {"encoder", "pos_dim", "model_dim", "heads", "head_hidden", "zero_init_head"}, "tracker");
    read(j, "encoder", c.encoder);
    read(j, "pos_dim", c.pos_dim);
    read(j, "model_dim", c.model_dim);
    read(j, "heads", c.heads);
    read(j, "head_hidden", c.head_hidden);
    read(j, "zero_init_head", c.zero_init_head);
}

void to_json(json& j, const LossFlags& c) {
    j = {{"cycle", c.cycle}, {"mech_normal", c.mech_normal}, {"mech_linear", c.mech_linear},
         {"photometric", c.photometric}};
}

void from_json(const json& j, LossFlags& c) {
    check_keys(j, {"cycle", "mech_normal", "mech_linear", "photometric"}, "enabled_losses");
    read(j, "cycle", c.cycle);
    read(j, "mech_normal", c.mech_normal);
    read(j, "mech_linear", c.mech_linear);
    read(j, "photometric", c.photometric);
}

void to_json(json& j, const TrainConfig& c) {
    j = {{"lr_init", c.lr_init},
         {"decay_start_iter", c.decay_start_iter},
         {"total_iters", c.total_iters},
         {"batch_size", c.batch_size},
         {"seed", c.seed},
         {"enabled_losses", c.enabled_losses},
         {"image_size", c.image_size},
         {"checkpoint_every", c.checkpoint_every},
         {"grad_clip_norm", c.grad_clip_norm}};
}

void from_json(const json& j, TrainConfig& c) {
    check_keys(j,
               {"profile", "lr_init", "decay_start_iter", "total_iters", "batch_size", "seed", "enabled_losses",
                "image_size", "checkpoint_every", "grad_clip_norm"},
               "train");
    if (auto it = j.find("profile"); it != j.end()) c = train_profile(it->get<std::string>());
    read(j, "lr_init", c.lr_init);
    read(j, "decay_start_iter", c.decay_start_iter);
    read(j, "total_iters", c.total_iters);
    read(j, "batch_size", c.batch_size);
    read(j, "seed", c.seed);
    read(j, "enabled_losses", c.enabled_losses);
    read(j, "image_size", c.image_size);
    read(j, "checkpoint_every", c.checkpoint_every);
    read(j, "grad_clip_norm", c.grad_clip_norm);
}

void to_json(json& j, const MechEnergyConfig& c) {
    j = {{"spring_weight", c.spring_weight},
         {"max_iterations", c.max_iterations},
         {"lm_damping_init", c.lm_damping_init},
         {"convergence_tol", c.convergence_tol}};
}

void from_json(const json& j, MechEnergyConfig& c) {
    check_keys(j, {"spring_weight", "max_iterations", "lm_damping_init", "convergence_tol"}, "mechanical");
    read(j, "spring_weight", c.spring_weight);
    read(j, "max_iterations", c.max_iterations);
    read(j, "lm_damping_init", c.lm_damping_init);
    read(j, "convergence_tol", c.convergence_tol);
}

void to_json(json& j, const SyntheticLobe& c) {
    j = {{"mode", c.mode},
         {"amplitude", c.amplitude},
         {"swing", c.swing},
         {"swing_period", c.swing_period},
         {"swing_phase", c.swing_phase},
         {"phase", c.phase}};
}

void from_json(const json& j, SyntheticLobe& c) {
    check_keys(j, {"mode", "amplitude", "swing", "swing_period", "swing_phase", "phase"}, "lobe");
    read(j, "mode", c.mode);
    read(j, "amplitude", c.amplitude);
    read(j, "swing", c.swing);
    read(j, "swing_period", c.swing_period);
    read(j, "swing_phase", c.swing_phase);
    read(j, "phase", c.phase);
}

void to_json(json& j, const SyntheticSpec& c) {
    j = {{"name", c.name},
         {"image_size", c.image_size},
         {"frame_count", c.frame_count},
         {"base_radius", c.base_radius},
         {"pulse_amplitude", c.pulse_amplitude},
         {"pulse_period", c.pulse_period},
         {"lobes", c.lobes},
         {"drift", c.drift},
         {"texture_seed", c.texture_seed},
         {"label_points", c.label_points}};
}

void from_json(const json& j, SyntheticSpec& c) {
    check_keys(j,
               {"name", "image_size", "frame_count", "base_radius", "pulse_amplitude", "pulse_period", "lobes",
                "drift", "texture_seed", "label_points"},
               "synthetic");
    read(j, "name", c.name);
    read(j, "image_size", c.image_size);
    read(j, "frame_count", c.frame_count);
    read(j, "base_radius", c.base_radius);
    read(j, "pulse_amplitude", c.pulse_amplitude);
    read(j, "pulse_period", c.pulse_period);
    read(j, "lobes", c.lobes);
    read(j, "drift", c.drift);
    read(j, "texture_seed", c.texture_seed);
    read(j, "label_points", c.label_points);
}

void to_json(json& j, const RunConfig& c) {
    j = {{"tracker", c.tracker}, {"train", c.train}, {"mechanical", c.mechanical}, {"synthetic", c.synthetic}};
}

void from_json(const json& j, RunConfig& c) {
    check_keys(j, {"tracker", "train", "mechanical", "synthetic"}, "config");
    read(j, "tracker", c.tracker);
    read(j, "train", c.train);
    read(j, "mechanical", c.mechanical);
    read(j, "synthetic", c.synthetic);
}

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, std::string("config: ") + e.what());
    }
    RunConfig c;
    try {
        j.get_to(c);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

SyntheticSpec default_synthetic_spec() {
    SyntheticSpec s;
    s.name = "blob";
    s.image_size = 128;
    s.frame_count = 16;
    s.base_radius = 30.0;
    s.pulse_amplitude = 8.0;
    s.pulse_period = 9.0;
    s.lobes = {{3, 6.0, 6.0, 8.0, 0.0, 0.0}};
    return s;
}

}  // namespace contrack
