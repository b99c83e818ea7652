#pragma once

#include <stdexcept>
#include <string>

namespace fsnde {

// Evaluation outside a function's domain (wrong sign, boundary parameter, ...).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Gamma evaluated at a nonpositive integer.
struct PoleError : DomainError {
  explicit PoleError(const std::string& msg) : DomainError(msg) {}
};

// Result (or an intermediate term) left the representable double range.
struct OverflowError : std::runtime_error {
  explicit OverflowError(const std::string& msg) : std::runtime_error(msg) {}
};

// A truncated series hit its term cap before reaching tolerance.
struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrices of a triple disagree in size, or are not square.
struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

// Picard iteration exhausted max_iter without contracting below tolerance.
struct NoConvergence : std::runtime_error {
  explicit NoConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

// A simulated path exceeded the configured magnitude cap.
struct PathExplosion : std::runtime_error {
  explicit PathExplosion(const std::string& msg) : std::runtime_error(msg) {}
};

// Config file rejected; carries a 1-based line number (0 = whole file).
struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

}  // namespace fsnde
