#pragma once

#include <stdexcept>
#include <string>

namespace skinstack {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kData = 2,
    kTraining = 3,
};

/// Base of every error the pipeline raises on purpose. Each subclass maps onto
/// one CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Bad configuration, bad arguments, unknown selector.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ExitCode::kUsage, what) {}
};

/// Missing, malformed or inconsistent input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

/// Model construction or optimisation failed.
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error(ExitCode::kTraining, what) {}
};

}  // namespace skinstack
