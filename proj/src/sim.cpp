#include "tether/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tether/analysis.hpp"
#include "tether/errors.hpp"

namespace tether {

Vec3 policy_force(const HumanPolicy& policy, double t, const SystemState& state,
                  const Vec3& f_c) {
  (void)state;  // policies are currently time/force driven only
  struct Visitor {
    double t;
    const Vec3& f_c;

    Vec3 operator()(const NominalPolicy&) const { return Vec3{}; }
    Vec3 operator()(const StopWindowPolicy& p) const {
      if (t >= p.t_start && t < p.t_end) {
        // Cancel the horizontal pull: the human holds their ground.
        return Vec3{-f_c.x, -f_c.y, 0.0};
      }
      return Vec3{};
    }
    Vec3 operator()(const LateralPulsePolicy& p) const {
      if (t >= p.t_start && t < p.t_end) {
        return p.force.horizontal();
      }
      return Vec3{};
    }
    Vec3 operator()(const SchedulePolicy& p) const {
      if (p.points.empty()) return Vec3{};
      if (t <= p.points.front().first) return p.points.front().second.horizontal();
      if (t >= p.points.back().first) return p.points.back().second.horizontal();
      auto upper = std::upper_bound(
          p.points.begin(), p.points.end(), t,
          [](double value, const auto& entry) { return value < entry.first; });
      const auto& hi = *upper;
      const auto& lo = *(upper - 1);
      const double span = hi.first - lo.first;
      if (span <= 0.0) return hi.second.horizontal();
      const double w = (t - lo.first) / span;
      return (lo.second * (1.0 - w) + hi.second * w).horizontal();
    }
  };
  return std::visit(Visitor{t, f_c}, policy);
}

GuidanceRefs task_terminal_refs(const GuidanceTask& task, const CableParams& cable) {
  if (const auto* point = std::get_if<PointTask>(&task)) {
    return point->refs;
  }
  return std::get<PathTask>(task).maneuver.terminal_refs(cable);
}

void Scenario::validate() const {
  params.validate();
  if (!(dt > 0.0)) throw ConfigError("time step dt must be > 0");
  if (!(duration >= dt)) throw ConfigError("duration must be at least one time step");
  if (!initial.is_finite()) throw ConfigError("initial state must be finite");
  if (initial.human_pos.z != 0.0 || initial.human_vel.z != 0.0) {
    throw ConfigError("initial human state must lie on the ground plane (z = 0)");
  }
  if (const auto* path_task = std::get_if<PathTask>(&task)) {
    path_task->maneuver.profile.validate();
    if (!(path_task->maneuver.fz_des > 0.0 &&
          path_task->maneuver.fz_des < params.human.weight())) {
      throw InfeasibleForceError("maneuver vertical force must lie in (0, m_H*g)");
    }
  } else {
    const auto& refs = std::get<PointTask>(task).refs;
    if (refs.force_ref.x != 0.0 || refs.force_ref.y != 0.0) {
      throw InfeasibleForceError(
          "point-regulation reference force must be vertical: a horizontal "
          "component leaves the human with no rest state");
    }
    if (!(refs.force_ref.z > 0.0 && refs.force_ref.z < params.human.weight())) {
      throw InfeasibleForceError("reference vertical cable force must lie in (0, m_H*g)");
    }
  }
}

std::vector<Vec3> Trajectory::human_positions() const {
  std::vector<Vec3> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.state.human_pos);
  return out;
}

const char* to_string(ExitFlag flag) {
  switch (flag) {
    case ExitFlag::Completed:
      return "completed";
    case ExitFlag::LiftOff:
      return "liftoff";
    case ExitFlag::NonFinite:
      return "nonfinite";
  }
  return "unknown";
}

namespace {

StateDerivative rhs_at(const SystemState& state, const Controller& controller,
                       const Policy& policy, const SystemParams& params, double t) {
  try {
    const Vec3 f_c = cable_force(state, params.cable);
    const Vec3 u_a = controller(state, t);
    const Vec3 u_h = policy(state, t, f_c);
    return system_rhs(state, u_a, u_h, params);
  } catch (const LiftOffError& e) {
    throw LiftOffError(e.vertical_force(), e.weight(), t);
  }
}

}  // namespace

SystemState step_rk4(const SystemState& state, const Controller& controller,
                     const Policy& policy, const SystemParams& params, double t, double dt) {
  const auto advance = [](const SystemState& x, const StateDerivative& k, double h) {
    SystemState out;
    out.human_pos = x.human_pos + k.human_vel * h;
    out.human_vel = x.human_vel + k.human_acc * h;
    out.robot_pos = x.robot_pos + k.robot_vel * h;
    out.robot_vel = x.robot_vel + k.robot_acc * h;
    return out;
  };

  const StateDerivative k1 = rhs_at(state, controller, policy, params, t);
  const StateDerivative k2 =
      rhs_at(advance(state, k1, 0.5 * dt), controller, policy, params, t + 0.5 * dt);
  const StateDerivative k3 =
      rhs_at(advance(state, k2, 0.5 * dt), controller, policy, params, t + 0.5 * dt);
  const StateDerivative k4 = rhs_at(advance(state, k3, dt), controller, policy, params, t + dt);

  SystemState next;
  const double h6 = dt / 6.0;
  next.human_pos =
      state.human_pos + (k1.human_vel + (k2.human_vel + k3.human_vel) * 2.0 + k4.human_vel) * h6;
  next.human_vel =
      state.human_vel + (k1.human_acc + (k2.human_acc + k3.human_acc) * 2.0 + k4.human_acc) * h6;
  next.robot_pos =
      state.robot_pos + (k1.robot_vel + (k2.robot_vel + k3.robot_vel) * 2.0 + k4.robot_vel) * h6;
  next.robot_vel =
      state.robot_vel + (k1.robot_acc + (k2.robot_acc + k3.robot_acc) * 2.0 + k4.robot_acc) * h6;

  // Ground-constraint guard: the human's vertical channels are structurally
  // zero and must stay exactly zero.
  next.human_pos.z = 0.0;
  next.human_vel.z = 0.0;
  return next;
}

Trajectory run(const Scenario& scenario) {
  scenario.validate();

  const SystemParams& params = scenario.params;
  const GuidanceRefs refs_terminal = task_terminal_refs(scenario.task, params.cable);
  const StorageFunction storage(refs_terminal, params);
  const bool is_path_task = std::holds_alternative<PathTask>(scenario.task);

  const Controller controller = [&](const SystemState& state, double t) -> Vec3 {
    (void)t;
    if (is_path_task) {
      return maneuver_controller(state, std::get<PathTask>(scenario.task).maneuver,
                                 params.guidance, params.cable)
          .u_a;
    }
    return guidance_input(state.robot_pos, std::get<PointTask>(scenario.task).refs,
                          params.guidance);
  };
  const Policy policy = [&](const SystemState& state, double t, const Vec3& f_c) -> Vec3 {
    return policy_force(scenario.policy, t, state, f_c);
  };

  const auto steps = static_cast<long long>(std::llround(scenario.duration / scenario.dt));
  Trajectory trajectory;
  trajectory.dt = scenario.dt;
  trajectory.has_s_star = is_path_task;
  trajectory.records.reserve(static_cast<std::size_t>(steps) + 1);

  SystemState state = scenario.initial;
  for (long long i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * scenario.dt;
    if (!state.is_finite()) {
      trajectory.flag = ExitFlag::NonFinite;
      trajectory.abort_time = t;
      trajectory.abort_reason = NonFiniteError(t).what();
      break;
    }

    TrajectoryRecord rec;
    rec.t = t;
    rec.state = state;
    rec.f_c = cable_force(state, params.cable);
    rec.mode = cable_mode(state, params.cable);
    try {
      rec.f_g = ground_reaction(rec.f_c, params.human);
    } catch (const LiftOffError& e) {
      trajectory.flag = ExitFlag::LiftOff;
      trajectory.abort_time = t;
      trajectory.abort_reason = LiftOffError(e.vertical_force(), e.weight(), t).what();
      break;
    }
    if (is_path_task) {
      const ManeuverCommand cmd = maneuver_controller(
          state, std::get<PathTask>(scenario.task).maneuver, params.guidance, params.cable);
      rec.u_a = cmd.u_a;
      rec.s_star = cmd.s_star;
    } else {
      rec.u_a = guidance_input(state.robot_pos, std::get<PointTask>(scenario.task).refs,
                               params.guidance);
      rec.s_star = std::numeric_limits<double>::quiet_NaN();
    }
    rec.u_a_shift = rec.u_a - guidance_input(state.robot_pos, refs_terminal, params.guidance);
    rec.u_h = policy_force(scenario.policy, t, state, rec.f_c);
    rec.storage = storage.evaluate(state).total;
    rec.storage_rate = lyapunov_rate_expected(state, params);
    trajectory.records.push_back(rec);

    if (i == steps) break;
    try {
      state = step_rk4(state, controller, policy, params, t, scenario.dt);
    } catch (const LiftOffError& e) {
      trajectory.flag = ExitFlag::LiftOff;
      trajectory.abort_time = e.time();
      trajectory.abort_reason = e.what();
      break;
    }
  }
  return trajectory;
}

// ---------------------------------------------------------------------------
// CSV

const char* const kTrajectoryCsvHeader =
    "t,pHx,pHy,pHz,vHx,vHy,vHz,pRx,pRy,pRz,vRx,vRy,vRz,fcx,fcy,fcz,uAx,uAy,uAz,"
    "uHx,uHy,uHz,fg,sstar,mode,V,Vdot";

namespace {

void append_double(std::string& out, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, res.ptr);
}

void append_vec3(std::string& out, const Vec3& v) {
  append_double(out, v.x);
  out.push_back(',');
  append_double(out, v.y);
  out.push_back(',');
  append_double(out, v.z);
}

double parse_double(const std::string& cell, const char* column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ConfigError("trajectory CSV: cannot parse value '" + cell + "' in column " + column);
  }
  return value;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

}  // namespace

void write_trajectory_csv(const Trajectory& trajectory, const std::string& file_path) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open trajectory output file: " + file_path);
  }
  std::string buffer;
  buffer.reserve(1 << 16);
  buffer.append(kTrajectoryCsvHeader);
  buffer.push_back('\n');
  for (const auto& r : trajectory.records) {
    append_double(buffer, r.t);
    buffer.push_back(',');
    append_vec3(buffer, r.state.human_pos);
    buffer.push_back(',');
    append_vec3(buffer, r.state.human_vel);
    buffer.push_back(',');
    append_vec3(buffer, r.state.robot_pos);
    buffer.push_back(',');
    append_vec3(buffer, r.state.robot_vel);
    buffer.push_back(',');
    append_vec3(buffer, r.f_c);
    buffer.push_back(',');
    append_vec3(buffer, r.u_a);
    buffer.push_back(',');
    append_vec3(buffer, r.u_h);
    buffer.push_back(',');
    append_double(buffer, r.f_g);
    buffer.push_back(',');
    if (trajectory.has_s_star) {
      append_double(buffer, r.s_star);
    }
    buffer.push_back(',');
    buffer.push_back(r.mode == CableMode::Taut ? '1' : '0');
    buffer.push_back(',');
    append_double(buffer, r.storage);
    buffer.push_back(',');
    append_double(buffer, r.storage_rate);
    buffer.push_back('\n');
    if (buffer.size() > (1 << 20)) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) {
    throw ConfigError("failed while writing trajectory CSV: " + file_path);
  }
}

Trajectory read_trajectory_csv(const std::string& file_path) {
  std::ifstream in(file_path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open trajectory CSV: " + file_path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("trajectory CSV is empty: " + file_path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> expected = split_line(kTrajectoryCsvHeader);
  const std::vector<std::string> header = split_line(line);
  std::vector<int> column_of(expected.size(), -1);
  for (std::size_t h = 0; h < header.size(); ++h) {
    bool known = false;
    for (std::size_t e = 0; e < expected.size(); ++e) {
      if (header[h] == expected[e]) {
        column_of[e] = static_cast<int>(h);
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("trajectory CSV has unknown column: " + header[h]);
    }
  }
  for (std::size_t e = 0; e < expected.size(); ++e) {
    if (column_of[e] < 0) {
      throw MissingLogsError(expected[e]);
    }
  }

  Trajectory trajectory;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ConfigError("trajectory CSV row " + std::to_string(row_index + 1) +
                        " has wrong field count");
    }
    const auto cell = [&](std::size_t e) -> const std::string& {
      return cells[static_cast<std::size_t>(column_of[e])];
    };
    const auto value = [&](std::size_t e) { return parse_double(cell(e), expected[e].c_str()); };

    TrajectoryRecord r;
    r.t = value(0);
    r.state.human_pos = {value(1), value(2), value(3)};
    r.state.human_vel = {value(4), value(5), value(6)};
    r.state.robot_pos = {value(7), value(8), value(9)};
    r.state.robot_vel = {value(10), value(11), value(12)};
    r.f_c = {value(13), value(14), value(15)};
    r.u_a = {value(16), value(17), value(18)};
    r.u_h = {value(19), value(20), value(21)};
    r.f_g = value(22);
    if (cell(23).empty()) {
      r.s_star = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.s_star = value(23);
      trajectory.has_s_star = true;
    }
    const std::string& mode = cell(24);
    if (mode == "0") {
      r.mode = CableMode::Slack;
    } else if (mode == "1") {
      r.mode = CableMode::Taut;
    } else {
      throw ConfigError("trajectory CSV: mode must be 0 or 1, got '" + mode + "'");
    }
    r.storage = value(25);
    r.storage_rate = value(26);
    r.u_a_shift = Vec3{std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN()};
    trajectory.records.push_back(r);
    ++row_index;
  }
  if (trajectory.records.size() >= 2) {
    trajectory.dt = trajectory.records[1].t - trajectory.records[0].t;
  }
  return trajectory;
}

}  // namespace tether
