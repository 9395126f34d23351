#pragma once

#include <stdexcept>
#include <string>

namespace placeharvest {

// Exit codes shared by the CLI and run_pipeline.
enum class ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kData = 2,
  kInvariant = 3,
};

// Base class for every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Bad configuration or command line.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::kUsage) {}
};

// Unreadable / malformed input, or input violating an operation's precondition.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, ExitCode::kData) {}
};

// Geometry that cannot support the requested construction (too few points,
// collinear or coincident input). Callers typically degrade to MultiPoint.
class DegenerateGeometry : public DataError {
 public:
  explicit DegenerateGeometry(const std::string& what) : DataError(what) {}
};

// A postcondition the library guarantees turned out false.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(what, ExitCode::kInvariant) {}
};

}  // namespace placeharvest
