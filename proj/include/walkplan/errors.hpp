#pragma once

#include <stdexcept>
#include <string>

namespace walkplan {

// Step displacement too small to define a heading direction.
struct DegenerateStep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deadbeat linear system is numerically singular.
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solver produced a NaN/Inf iterate.
struct NonFiniteIterate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PoseOutOfMap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line_number)
      : std::runtime_error(msg + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  int line;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoFreeSpace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllNodesClosed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NodeNotInTree : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PathTooShort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent scenario configuration; `key` is the dotted
// config key that failed.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& config_key, const std::string& msg)
      : std::runtime_error(config_key + ": " + msg), key(config_key) {}
  std::string key;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace walkplan
