#pragma once

#include <stdexcept>
#include <string>

namespace tether {

/// The cable pulls the human off the ground: f_c.z >= m_H * g. The model is
/// only valid while the human stays ground-constrained, so simulation aborts.
class LiftOffError : public std::runtime_error {
 public:
  explicit LiftOffError(double vertical_force, double weight, double time = -1.0)
      : std::runtime_error(format(vertical_force, weight, time)),
        vertical_force_(vertical_force),
        weight_(weight),
        time_(time) {}

  double vertical_force() const { return vertical_force_; }
  double weight() const { return weight_; }
  /// Simulation time at which the violation occurred, -1 if outside a run.
  double time() const { return time_; }

 private:
  static std::string format(double fz, double w, double t);
  double vertical_force_;
  double weight_;
  double time_;
};

class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(double time)
      : std::runtime_error("state left finite range at t=" + std::to_string(time)),
        time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class ZeroForceRefError : public std::runtime_error {
 public:
  ZeroForceRefError()
      : std::runtime_error("reference cable force is zero; robot reference offset undefined") {}
};

class NoConvergenceError : public std::runtime_error {
 public:
  explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

class InfeasibleForceError : public std::runtime_error {
 public:
  explicit InfeasibleForceError(const std::string& what) : std::runtime_error(what) {}
};

class OutOfRangeError : public std::out_of_range {
 public:
  explicit OutOfRangeError(const std::string& what) : std::out_of_range(what) {}
};

class DegenerateTangentError : public std::runtime_error {
 public:
  explicit DegenerateTangentError(double s)
      : std::runtime_error("path gradient vanishes near s=" + std::to_string(s)) {}
};

class PathGeometryError : public std::runtime_error {
 public:
  explicit PathGeometryError(const std::string& what) : std::runtime_error(what) {}
};

class EmptyTrajectoryError : public std::runtime_error {
 public:
  EmptyTrajectoryError() : std::runtime_error("trajectory has no samples") {}
};

class InsufficientRunsError : public std::runtime_error {
 public:
  explicit InsufficientRunsError(std::size_t n)
      : std::runtime_error("statistics require at least 2 runs, got " + std::to_string(n)) {}
};

class MissingLogsError : public std::runtime_error {
 public:
  explicit MissingLogsError(const std::string& channel)
      : std::runtime_error("trajectory log is missing required channel: " + channel) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tether
