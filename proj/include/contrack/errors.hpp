#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace contrack {

enum class ErrorKind {
    EmptyMask,
    EmptyContour,
    TooFewPoints,
    ShapeMismatch,
    NonFiniteOutput,
    NonFiniteLoss,
    NonFiniteEnergy,
    ConfigError,
    EmptyDataset,
    VersionMismatch,
    CorruptFile,
    MissingMask,
    ResolutionMismatch,
    EmptyVideo,
    NoForeground,
    InvalidSpec,
    NoLabels,
    WindowOutOfRange,
    IoError,
    ParseError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace contrack
