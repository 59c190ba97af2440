#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matef {

enum class ErrorCode {
    InvalidSample,
    StorageError,
    ManifestCorrupt,
    NotFound,
    ContainerUnreadable,
    SchemaError,
    UnknownSample,
    DuplicateRecord,
    NoOracleData,
    InvalidProfile,
    UnsupportedLogFormat,
    UnknownTool,
    DuplicateExperiment,
    UnknownExperiment,
    ExecutorError,
    ParseError,
    InvalidAdapter,
    MissingExpected,
    InsufficientData,
    UnsupportedLevel,
    InvalidThresholds,
    IncompleteAnalysis,
};

std::string_view error_code_name(ErrorCode code);

/// Domain error carrying one of the fixed error codes. The CLI maps any
/// MatefError to exit code 1 with the message on stderr.
class MatefError : public std::runtime_error {
public:
    MatefError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw MatefError(code, message);
}

} // namespace matef
