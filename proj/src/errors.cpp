#include <contrack/errors.hpp>

namespace contrack {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyMask: return "EmptyMask";
        case ErrorKind::EmptyContour: return "EmptyContour";
        case ErrorKind::TooFewPoints: return "TooFewPoints";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFiniteOutput: return "NonFiniteOutput";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::NonFiniteEnergy: return "NonFiniteEnergy";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::CorruptFile: return "CorruptFile";
        case ErrorKind::MissingMask: return "MissingMask";
        case ErrorKind::ResolutionMismatch: return "ResolutionMismatch";
        case ErrorKind::EmptyVideo: return "EmptyVideo";
        case ErrorKind::NoForeground: return "NoForeground";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::NoLabels: return "NoLabels";
        case ErrorKind::WindowOutOfRange: return "WindowOutOfRange";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

}  // namespace contrack
