#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "tether/control.hpp"
#include "tether/model.hpp"
#include "tether/params.hpp"
#include "tether/path.hpp"

namespace tether {

// ---------------------------------------------------------------------------
// Human behavior policies: the extra handle force u_H the synthetic human
// applies on top of passively following the cable. All policies keep the
// vertical component at zero — a vertical handle force would only shift load
// between the ground and the cable, and letting it through would entangle the
// tests with lift-off edge cases.

struct NominalPolicy {};  // u_H = 0: the human just follows the pull

/// Inside [t_start, t_end) the human plants their feet: the applied force
/// cancels the horizontal cable pull, so the net horizontal force is the
/// damping alone and the human brakes to rest and stays put.
struct StopWindowPolicy {
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Constant extra force inside [t_start, t_end) — e.g. the human drifting
/// sideways to avoid something.
struct LateralPulsePolicy {
  double t_start = 0.0;
  double t_end = 0.0;
  Vec3 force;
};

/// Piecewise-linear force profile through (time, force) points, clamped to
/// the first/last values outside the listed range. Keeping the profile
/// continuous also keeps the logged power integrands quadrature-friendly.
struct SchedulePolicy {
  std::vector<std::pair<double, Vec3>> points;  // sorted by time
};

using HumanPolicy = std::variant<NominalPolicy, StopWindowPolicy, LateralPulsePolicy,
                                 SchedulePolicy>;

/// Force the policy applies at time t given the current cable force. The
/// vertical component is always zero.
Vec3 policy_force(const HumanPolicy& policy, double t, const SystemState& state, const Vec3& f_c);

// ---------------------------------------------------------------------------
// Tasks

struct PointTask {
  GuidanceRefs refs;
};

struct PathTask {
  Maneuver maneuver;
};

using GuidanceTask = std::variant<PointTask, PathTask>;

/// References the task converges to: the task refs for point regulation, the
/// s = 1 refs for a path. These are what the storage function and the
/// time-varying input decomposition are anchored to.
GuidanceRefs task_terminal_refs(const GuidanceTask& task, const CableParams& cable);

// ---------------------------------------------------------------------------
// Scenario and trajectory

struct Scenario {
  SystemParams params;
  SystemState initial;
  GuidanceTask task;
  HumanPolicy policy;
  double dt = 0.001;       // s
  double duration = 60.0;  // s
  std::uint64_t seed = 1;  // consumed by campaign-level randomization only

  /// Throws ConfigError (or InfeasibleForceError) when the scenario cannot
  /// run: non-positive dt, duration < dt, initial state off the ground plane
  /// or non-finite, parameter invariants violated.
  void validate() const;
};

enum class ExitFlag { Completed, LiftOff, NonFinite };
const char* to_string(ExitFlag flag);

struct TrajectoryRecord {
  double t = 0.0;
  SystemState state;
  Vec3 f_c;        // cable force on the human
  Vec3 u_a;        // guidance force command
  Vec3 u_a_shift;  // u_a minus the terminal-refs law at the current state
  Vec3 u_h;        // human policy force
  double f_g = 0.0;
  double s_star = 0.0;  // NaN for point tasks
  CableMode mode = CableMode::Slack;
  double storage = 0.0;       // V anchored at the terminal refs
  double storage_rate = 0.0;  // expected dV/dt from the dissipation terms
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  bool has_s_star = false;
  ExitFlag flag = ExitFlag::Completed;
  double abort_time = -1.0;  // meaningful when flag != Completed
  std::string abort_reason;
  double dt = 0.0;

  std::vector<Vec3> human_positions() const;
};

// ---------------------------------------------------------------------------
// Integration

using Controller = std::function<Vec3(const SystemState&, double)>;
using Policy = std::function<Vec3(const SystemState&, double, const Vec3&)>;

/// One classic 4th-order Runge-Kutta step of the coupled dynamics, with the
/// controller and policy evaluated at every substep. The human's vertical
/// coordinates are re-pinned to zero afterwards. LiftOffError is rethrown
/// carrying the offending substep time.
SystemState step_rk4(const SystemState& state, const Controller& controller,
                     const Policy& policy, const SystemParams& params, double t, double dt);

/// Integrate a scenario from t = 0 to its duration on the fixed grid, logging
/// every channel at every sample. A LiftOff or non-finite state ends the run
/// early with the partial trajectory and the corresponding flag. Identical
/// scenarios produce bit-identical trajectories.
Trajectory run(const Scenario& scenario);

// ---------------------------------------------------------------------------
// Trajectory CSV (exact column set; `sstar` is left empty for point tasks)

extern const char* const kTrajectoryCsvHeader;

void write_trajectory_csv(const Trajectory& trajectory, const std::string& file_path);

/// Parse a trajectory CSV produced by write_trajectory_csv. Throws
/// MissingLogsError when a required column is absent and ConfigError on
/// malformed content. The u_a_shift channel is not part of the CSV schema;
/// analysis re-derives it from u_a and the state.
Trajectory read_trajectory_csv(const std::string& file_path);

}  // namespace tether
