#pragma once

// JSON mapping of every configuration struct. Missing keys keep their
// defaults; unknown keys are rejected with Error(ConfigError).

#include <contrack/dataio.hpp>
#include <contrack/losses.hpp>
#include <contrack/mechanical.hpp>
#include <contrack/network.hpp>
#include <contrack/training.hpp>

#include <json.hpp>

#include <filesystem>

namespace contrack {

void to_json(nlohmann::json& j, const Vec2& v);
void from_json(const nlohmann::json& j, Vec2& v);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const TrackerConfig& c);
void from_json(const nlohmann::json& j, TrackerConfig& c);
void to_json(nlohmann::json& j, const LossFlags& c);
void from_json(const nlohmann::json& j, LossFlags& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const MechEnergyConfig& c);
void from_json(const nlohmann::json& j, MechEnergyConfig& c);
void to_json(nlohmann::json& j, const SyntheticLobe& c);
void from_json(const nlohmann::json& j, SyntheticLobe& c);
void to_json(nlohmann::json& j, const SyntheticSpec& c);
void from_json(const nlohmann::json& j, SyntheticSpec& c);

/// Default blob used by `synth` and the end-to-end checks.
SyntheticSpec default_synthetic_spec();

/// Top-level config file: optional "tracker", "train", "mechanical" and
/// "synthetic" sections.
struct RunConfig {
    TrackerConfig tracker;
    TrainConfig train = desk_profile();
    MechEnergyConfig mechanical;
    SyntheticSpec synthetic = default_synthetic_spec();
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Parses JSON text; throws Error(ParseError) on syntax errors and
/// Error(ConfigError) on unknown keys or wrong types.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace contrack
