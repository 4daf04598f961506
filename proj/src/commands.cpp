#include "tether/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>
#include <variant>

#include "json.hpp"

#include "tether/config.hpp"
#include "tether/errors.hpp"
#include "tether/path.hpp"
#include "tether/random.hpp"
#include "tether/svg.hpp"

namespace tether {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitAbort = 3;
constexpr int kExitCheck = 4;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> unit_grid(int points) {
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = static_cast<double>(i) / (points - 1);
  return grid;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << text;
  if (!out) throw ConfigError("failed while writing: " + path);
}

// Shortest round-trippable decimal text for CSV cells; NaN becomes an empty cell.
void append_cell(std::string& out, double v) {
  if (std::isnan(v)) return;
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

json passivity_json(const PassivityReport& r) {
  json j;
  j["port"] = to_string(r.port);
  j["supply_integral"] = r.supply_integral;
  j["dissipation_integral"] = r.dissipation_integral;
  j["storage_delta"] = r.storage_delta;
  j["margin"] = r.margin;
  j["tolerance"] = r.tolerance;
  j["quadrature_allowance"] = r.quadrature_allowance;
  j["pass"] = r.pass;
  return j;
}

json summary_json(const RunSummary& s) {
  json j;
  j["flag"] = to_string(s.flag);
  if (s.flag != ExitFlag::Completed) {
    j["abort_time"] = s.abort_time;
    j["abort_reason"] = s.abort_reason;
  }
  j["duration"] = s.duration;
  j["samples"] = s.samples;
  j["final_human_error"] = s.final_human_error;
  j["final_state_error"] = s.final_state_error;
  j["max_storage_increment"] = s.max_storage_increment;
  json ports = json::array();
  for (const auto& p : s.ports) ports.push_back(passivity_json(p));
  j["passivity"] = ports;
  if (s.has_path_stats) {
    j["path"] = {{"mean_abs_error", s.path_mean_abs_error},
                 {"max_abs_error", s.path_max_abs_error},
                 {"final_s_star", s.final_s_star}};
  }
  return j;
}

void write_simulate_plots(const Trajectory& traj, const Scenario& scenario,
                          const GuidanceRefs& refs_terminal, const std::string& out_dir) {
  // Top-down view of the run.
  LinePlot xy("Top-down view", "x [m]", "y [m]");
  xy.set_equal_aspect(true);
  if (const auto* pt = std::get_if<PathTask>(&scenario.task)) {
    std::vector<std::pair<double, double>> curve;
    for (int i = 0; i <= 256; ++i) {
      const Vec3 p = pt->maneuver.path.evaluate(i / 256.0);
      curve.emplace_back(p.x, p.y);
    }
    xy.add_series("desired path", "#888888", std::move(curve));
  } else {
    const Vec3 c = refs_terminal.human_pos_ref;
    const double r = 0.05;
    xy.add_series("target", "#2ca02c",
                  {{c.x, c.y + r}, {c.x + r, c.y}, {c.x, c.y - r}, {c.x - r, c.y}, {c.x, c.y + r}});
  }
  std::vector<std::pair<double, double>> human_xy, robot_xy;
  human_xy.reserve(traj.records.size());
  robot_xy.reserve(traj.records.size());
  for (const auto& rec : traj.records) {
    human_xy.emplace_back(rec.state.human_pos.x, rec.state.human_pos.y);
    robot_xy.emplace_back(rec.state.robot_pos.x, rec.state.robot_pos.y);
  }
  xy.add_series("human", "#d62728", std::move(human_xy));
  xy.add_series("robot", "#1f77b4", std::move(robot_xy));
  xy.write(out_dir + "/path_xy.svg");

  // Position error, cable force magnitude, and storage over time.
  LinePlot ts("Tracking and energy", "t [s]", "value");
  std::vector<std::pair<double, double>> err, force, storage;
  const auto* pt = std::get_if<PathTask>(&scenario.task);
  for (const auto& rec : traj.records) {
    Vec3 ref = refs_terminal.human_pos_ref;
    if (pt != nullptr && std::isfinite(rec.s_star)) {
      ref = pt->maneuver.path.evaluate(std::clamp(rec.s_star, 0.0, 1.0));
    }
    err.emplace_back(rec.t, distance(rec.state.human_pos, ref));
    force.emplace_back(rec.t, rec.f_c.norm());
    storage.emplace_back(rec.t, rec.storage);
  }
  ts.add_series("position error [m]", "#d62728", std::move(err));
  ts.add_series("cable force [N]", "#1f77b4", std::move(force));
  ts.add_series("storage [J]", "#2ca02c", std::move(storage));
  ts.write(out_dir + "/timeseries.svg");
}

std::string sanitize_note(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

}  // namespace

RunSummary summarize_run(const Trajectory& trajectory, const Scenario& scenario) {
  RunSummary s;
  s.flag = trajectory.flag;
  s.abort_time = trajectory.abort_time;
  s.abort_reason = trajectory.abort_reason;
  s.samples = trajectory.records.size();
  s.duration = trajectory.records.empty() ? 0.0 : trajectory.records.back().t;

  const GuidanceRefs refs_terminal = task_terminal_refs(scenario.task, scenario.params.cable);
  const SystemState x_e = equilibrium_state(refs_terminal);

  if (!trajectory.records.empty()) {
    const SystemState& last = trajectory.records.back().state;
    s.final_human_error = distance(last.human_pos, refs_terminal.human_pos_ref);
    const Vec3 dh = last.human_pos - x_e.human_pos;
    const Vec3 dr = last.robot_pos - x_e.robot_pos;
    s.final_state_error = std::sqrt(dh.squared_norm() + last.human_vel.squared_norm() +
                                    dr.squared_norm() + last.robot_vel.squared_norm());
  } else {
    s.final_human_error = kNaN;
    s.final_state_error = kNaN;
  }

  s.max_storage_increment = 0.0;
  for (std::size_t i = 1; i < trajectory.records.size(); ++i) {
    s.max_storage_increment = std::max(
        s.max_storage_increment, trajectory.records[i].storage - trajectory.records[i - 1].storage);
  }

  if (trajectory.records.size() >= 2) {
    const double tol = 1e-6 * tolerance_scale();
    for (PassivityPort port :
         {PassivityPort::Robot, PassivityPort::Human, PassivityPort::Combined}) {
      s.ports.push_back(passivity_report(trajectory, port, refs_terminal, scenario.params, tol));
    }
  }

  if (const auto* pt = std::get_if<PathTask>(&scenario.task);
      pt != nullptr && !trajectory.records.empty()) {
    s.has_path_stats = true;
    const std::vector<double> grid = unit_grid(101);
    const std::vector<double> curve =
        error_curve(trajectory.human_positions(), pt->maneuver.path, grid);
    double sum = 0.0, worst = 0.0;
    for (double e : curve) {
      sum += std::abs(e);
      worst = std::max(worst, std::abs(e));
    }
    s.path_mean_abs_error = sum / static_cast<double>(curve.size());
    s.path_max_abs_error = worst;
    s.final_s_star = trajectory.records.back().s_star;
  }
  return s;
}

std::string run_summary_json(const RunSummary& summary) {
  return summary_json(summary).dump(2) + "\n";
}

int cmd_simulate(const SimulateOptions& options, std::ostream& log) {
  Scenario scenario;
  try {
    scenario = load_scenario_file(options.config_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }

  Trajectory traj;
  GuidanceRefs refs_terminal;
  try {
    refs_terminal = task_terminal_refs(scenario.task, scenario.params.cable);
    traj = run(scenario);
  } catch (const std::exception& e) {
    log << "error: simulation failed: " << e.what() << '\n';
    return kExitAbort;
  }

  try {
    fs::create_directories(options.out_dir);
    if (options.write_csv) {
      write_trajectory_csv(traj, options.out_dir + "/trajectory.csv");
    }
    const RunSummary summary = summarize_run(traj, scenario);
    write_text_file(options.out_dir + "/report.json", run_summary_json(summary));
    if (options.write_svg) {
      write_simulate_plots(traj, scenario, refs_terminal, options.out_dir);
    }
    log << "flag: " << to_string(traj.flag) << "  samples: " << traj.records.size()
        << "  final human error: " << summary.final_human_error << " m\n";
    if (traj.flag != ExitFlag::Completed) {
      log << "aborted at t = " << traj.abort_time << " s: " << traj.abort_reason << '\n';
    }
    log << "outputs in " << options.out_dir << '\n';
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }

  return traj.flag == ExitFlag::Completed ? kExitOk : kExitAbort;
}

int cmd_follow(const FollowOptions& options, std::ostream& log) {
  if (options.runs < 1) {
    log << "error: --runs must be at least 1\n";
    return kExitInput;
  }
  Scenario base;
  try {
    base = load_scenario_file(options.config_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }
  const auto* path_task = std::get_if<PathTask>(&base.task);
  if (path_task == nullptr) {
    log << "error: follow requires a config with a path task\n";
    return kExitInput;
  }

  try {
    fs::create_directories(options.out_dir);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }

  const std::vector<double> grid = unit_grid(101);
  std::vector<std::vector<double>> curves;
  json runs_json = json::array();
  bool any_abort = false;

  for (int i = 0; i < options.runs; ++i) {
    Scenario sc = base;
    if (options.randomize_human) {
      Rng rng(mix_seed(base.seed, static_cast<std::uint64_t>(i)));
      const double mass_factor = rng.uniform(0.5, 1.5);
      const double damping_factor = rng.uniform(0.5, 1.5);
      sc.params.human.mass *= mass_factor;
      sc.params.human.damping = Diag3{damping_factor * sc.params.human.damping.d};
      try {
        sc.validate();
      } catch (const std::exception& e) {
        log << "error: randomized run " << i << " is invalid: " << e.what() << '\n';
        return kExitInput;
      }
    }

    Trajectory traj;
    try {
      traj = run(sc);
    } catch (const std::exception& e) {
      log << "error: run " << i << " failed: " << e.what() << '\n';
      return kExitAbort;
    }

    char name[32];
    std::snprintf(name, sizeof(name), "run_%02d.csv", i);
    json entry;
    entry["index"] = i;
    entry["mass"] = sc.params.human.mass;
    entry["damping"] = {sc.params.human.damping.d.x, sc.params.human.damping.d.y,
                        sc.params.human.damping.d.z};
    entry["flag"] = to_string(traj.flag);
    try {
      write_trajectory_csv(traj, options.out_dir + "/" + name);
    } catch (const std::exception& e) {
      log << "error: " << e.what() << '\n';
      return kExitInput;
    }
    if (traj.flag != ExitFlag::Completed) {
      any_abort = true;
      log << "warning: run " << i << " aborted at t = " << traj.abort_time << " s ("
          << traj.abort_reason << ")\n";
    }
    if (!traj.records.empty()) {
      std::vector<double> curve = error_curve(traj.human_positions(), path_task->maneuver.path, grid);
      double worst = 0.0;
      for (double e : curve) worst = std::max(worst, std::abs(e));
      entry["max_abs_error"] = worst;
      entry["final_s_star"] = traj.records.back().s_star;
      entry["errors"] = curve;
      curves.push_back(std::move(curve));
    }
    runs_json.push_back(std::move(entry));
  }

  json report;
  report["s_grid"] = grid;
  report["runs"] = std::move(runs_json);
  const bool have_stats = curves.size() >= 2;
  if (have_stats) {
    const PathErrorReport stats = error_stats(curves, grid);
    report["mean"] = stats.mean;
    report["std_dev"] = stats.std_dev;
    report["max_abs_mean"] = stats.max_abs_mean;
    report["max_abs_any"] = stats.max_abs_any;
    log << "campaign: " << curves.size() << " runs, max |mean error| = " << stats.max_abs_mean
        << " m, max |error| = " << stats.max_abs_any << " m\n";
  } else {
    log << "warning: fewer than two completed runs; aggregate statistics skipped\n";
  }

  try {
    write_text_file(options.out_dir + "/follow_report.json", report.dump(2) + "\n");
    if (options.write_svg) {
      LinePlot overlay("Lateral tracking error", "path parameter s", "error [m]");
      for (std::size_t r = 0; r < curves.size(); ++r) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) pts.emplace_back(grid[i], curves[r][i]);
        overlay.add_series("run " + std::to_string(r), "#9ecae1", std::move(pts));
      }
      if (have_stats) {
        const PathErrorReport stats = error_stats(curves, grid);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < grid.size(); ++i) pts.emplace_back(grid[i], stats.mean[i]);
        overlay.add_series("mean", "#d62728", std::move(pts));
      }
      overlay.write(options.out_dir + "/errors_overlay.svg");
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }

  log << "outputs in " << options.out_dir << '\n';
  return any_abort ? kExitAbort : kExitOk;
}

int cmd_analyze(const AnalyzeOptions& options, std::ostream& log) {
  std::vector<PassivityPort> ports;
  if (options.port == "robot") {
    ports = {PassivityPort::Robot};
  } else if (options.port == "human") {
    ports = {PassivityPort::Human};
  } else if (options.port == "both") {
    ports = {PassivityPort::Robot, PassivityPort::Human, PassivityPort::Combined};
  } else {
    log << "error: --port must be robot, human, or both\n";
    return kExitInput;
  }

  Trajectory traj;
  Scenario scenario;
  GuidanceRefs refs_terminal;
  try {
    traj = read_trajectory_csv(options.csv_path);
    scenario = load_scenario_file(options.config_path);
    refs_terminal = task_terminal_refs(scenario.task, scenario.params.cable);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }

  const double tol = 1e-6 * tolerance_scale();
  bool all_pass = true;
  json out;
  json port_reports = json::array();
  try {
    for (PassivityPort port : ports) {
      const PassivityReport rep = passivity_report(traj, port, refs_terminal, scenario.params, tol);
      all_pass = all_pass && rep.pass;
      port_reports.push_back(passivity_json(rep));
      log << "port " << to_string(port) << ": margin = " << rep.margin << " J ("
          << (rep.pass ? "pass" : "FAIL") << ")\n";
    }
  } catch (const MissingLogsError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }
  out["ports"] = std::move(port_reports);

  // V must be non-increasing only when the references are constant and the
  // human applies no extra force; skip the check otherwise.
  if (std::holds_alternative<PointTask>(scenario.task) &&
      std::holds_alternative<NominalPolicy>(scenario.policy)) {
    const MonotoneReport mono = check_monotone(traj, refs_terminal, scenario.params, tol);
    all_pass = all_pass && mono.pass;
    out["monotone"] = {{"max_increment", mono.max_increment},
                       {"at_time", mono.at_time},
                       {"allowed", mono.allowed},
                       {"pass", mono.pass}};
    log << "storage monotone: max increment = " << mono.max_increment << " J ("
        << (mono.pass ? "pass" : "FAIL") << ")\n";
  }

  try {
    fs::create_directories(options.out_dir);
    write_text_file(options.out_dir + "/analyze_report.json", out.dump(2) + "\n");
    if (options.write_svg) {
      LinePlot plot("Storage along the run", "t [s]", "V [J]");
      std::vector<std::pair<double, double>> pts;
      pts.reserve(traj.records.size());
      for (const auto& rec : traj.records) pts.emplace_back(rec.t, rec.storage);
      plot.add_series("V", "#2ca02c", std::move(pts));
      plot.write(options.out_dir + "/storage.svg");
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }

  return all_pass ? kExitOk : kExitCheck;
}

namespace {

struct SweepRow {
  std::vector<double> values;
  std::string flag;
  std::string note;
  double final_error = kNaN;
  double max_v_increment = kNaN;
  double margin_combined = kNaN;
  double convergence_time = kNaN;
  double final_robot_z = kNaN;
};

SweepRow run_sweep_row(const std::string& config_text,
                       const std::vector<std::pair<std::string, double>>& overrides,
                       std::vector<double> values) {
  SweepRow row;
  row.values = std::move(values);
  Scenario scenario;
  try {
    scenario = scenario_with_overrides(config_text, overrides);
  } catch (const InfeasibleForceError& e) {
    row.flag = "infeasible";
    row.note = sanitize_note(e.what());
    return row;
  } catch (const std::exception& e) {
    row.flag = "invalid";
    row.note = sanitize_note(e.what());
    return row;
  }

  try {
    const Trajectory traj = run(scenario);
    const RunSummary summary = summarize_run(traj, scenario);
    row.flag = to_string(traj.flag);
    row.final_error = summary.final_human_error;
    row.max_v_increment = summary.max_storage_increment;
    for (const auto& p : summary.ports) {
      if (p.port == PassivityPort::Combined) row.margin_combined = p.margin;
    }
    if (!traj.records.empty()) {
      row.final_robot_z = traj.records.back().state.robot_pos.z;
      if (std::holds_alternative<PathTask>(scenario.task)) {
        for (const auto& rec : traj.records) {
          if (rec.s_star >= 0.999) {
            row.convergence_time = rec.t;
            break;
          }
        }
      } else {
        const GuidanceRefs refs = task_terminal_refs(scenario.task, scenario.params.cable);
        std::ptrdiff_t last_bad = -1;
        for (std::size_t i = 0; i < traj.records.size(); ++i) {
          if (distance(traj.records[i].state.human_pos, refs.human_pos_ref) >= 1e-3) {
            last_bad = static_cast<std::ptrdiff_t>(i);
          }
        }
        const std::size_t first_good = static_cast<std::size_t>(last_bad + 1);
        if (first_good < traj.records.size()) {
          row.convergence_time = traj.records[first_good].t;
        }
      }
    }
  } catch (const std::exception& e) {
    row.flag = "error";
    row.note = sanitize_note(e.what());
  }
  return row;
}

}  // namespace

int cmd_sweep(const SweepOptions& options, std::ostream& log) {
  if (options.params.empty() || options.params.size() > 2) {
    log << "error: sweep takes one or two --param names\n";
    return kExitInput;
  }
  if (options.params.size() != options.value_sets.size()) {
    log << "error: each --param needs a matching --values list\n";
    return kExitInput;
  }
  for (const auto& vs : options.value_sets) {
    if (vs.empty()) {
      log << "error: --values lists must be non-empty\n";
      return kExitInput;
    }
  }

  std::string config_text;
  {
    std::ifstream in(options.config_path, std::ios::binary);
    if (!in) {
      log << "error: cannot open config file: " << options.config_path << '\n';
      return kExitInput;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    config_text = ss.str();
  }

  // Validate the parameter paths once up front; a bad path is an input error,
  // while an infeasible first value combination is not.
  {
    std::vector<std::pair<std::string, double>> probe;
    for (std::size_t p = 0; p < options.params.size(); ++p) {
      probe.emplace_back(options.params[p], options.value_sets[p].front());
    }
    try {
      (void)scenario_with_overrides(config_text, probe);
    } catch (const InfeasibleForceError&) {
      // Path resolves; this particular value combination just has no rest state.
    } catch (const std::exception& e) {
      log << "error: " << e.what() << '\n';
      return kExitInput;
    }
  }

  // Cross product of the value lists, row-major in the order given.
  std::vector<std::vector<double>> combos;
  if (options.params.size() == 1) {
    for (double v : options.value_sets[0]) combos.push_back({v});
  } else {
    for (double a : options.value_sets[0]) {
      for (double b : options.value_sets[1]) combos.push_back({a, b});
    }
  }

  std::vector<SweepRow> rows(combos.size());
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < combos.size(); start += jobs) {
    const std::size_t stop = std::min(combos.size(), start + jobs);
    std::vector<std::future<SweepRow>> batch;
    for (std::size_t i = start; i < stop; ++i) {
      std::vector<std::pair<std::string, double>> overrides;
      for (std::size_t p = 0; p < options.params.size(); ++p) {
        overrides.emplace_back(options.params[p], combos[i][p]);
      }
      batch.push_back(std::async(std::launch::async, run_sweep_row, std::cref(config_text),
                                 std::move(overrides), combos[i]));
    }
    for (std::size_t i = start; i < stop; ++i) {
      rows[i] = batch[i - start].get();
    }
  }

  std::string csv;
  for (const auto& name : options.params) {
    csv += name;
    csv += ',';
  }
  csv += "flag,final_error,max_v_increment,margin_combined,convergence_time,final_robot_z,note\n";
  for (const auto& row : rows) {
    for (double v : row.values) {
      append_cell(csv, v);
      csv += ',';
    }
    csv += row.flag;
    csv += ',';
    append_cell(csv, row.final_error);
    csv += ',';
    append_cell(csv, row.max_v_increment);
    csv += ',';
    append_cell(csv, row.margin_combined);
    csv += ',';
    append_cell(csv, row.convergence_time);
    csv += ',';
    append_cell(csv, row.final_robot_z);
    csv += ',';
    csv += row.note;
    csv += '\n';
  }

  try {
    fs::create_directories(options.out_dir);
    write_text_file(options.out_dir + "/sweep.csv", csv);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }

  log << "sweep: " << rows.size() << " rows -> " << options.out_dir << "/sweep.csv\n";
  for (const auto& row : rows) {
    log << " ";
    for (std::size_t p = 0; p < options.params.size(); ++p) {
      log << ' ' << options.params[p] << '=' << row.values[p];
    }
    log << "  " << row.flag;
    if (!std::isnan(row.final_error)) log << "  final_error=" << row.final_error;
    if (!row.note.empty()) log << "  (" << row.note << ')';
    log << '\n';
  }
  return kExitOk;
}

}  // namespace tether
