#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "tether/analysis.hpp"
#include "tether/sim.hpp"

namespace tether {

// Condensed result of one run: final errors, energy bookkeeping, passivity
// margins, and (for path tasks) tracking statistics. Serialized as the
// report JSON next to the trajectory CSV.
struct RunSummary {
  ExitFlag flag = ExitFlag::Completed;
  double abort_time = -1.0;
  std::string abort_reason;
  double duration = 0.0;    // simulated time actually covered
  std::size_t samples = 0;  // number of logged records
  double final_human_error = 0.0;  // distance from human to its terminal reference
  double final_state_error = 0.0;  // full-state distance to the terminal rest state
  double max_storage_increment = 0.0;  // largest per-step increase of V
  std::vector<PassivityReport> ports;  // robot, human, combined (when computable)
  bool has_path_stats = false;
  double path_mean_abs_error = 0.0;
  double path_max_abs_error = 0.0;
  double final_s_star = 0.0;
};

RunSummary summarize_run(const Trajectory& trajectory, const Scenario& scenario);

// Serializes a RunSummary as pretty-printed JSON text.
std::string run_summary_json(const RunSummary& summary);

struct SimulateOptions {
  std::string config_path;
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_svg = false;
};

struct FollowOptions {
  std::string config_path;
  std::string out_dir = "out";
  int runs = 8;
  bool randomize_human = true;
  bool write_svg = false;
};

struct AnalyzeOptions {
  std::string csv_path;
  std::string config_path;
  std::string port = "both";  // robot | human | both
  std::string out_dir = "out";
  bool write_svg = false;
};

struct SweepOptions {
  std::string config_path;
  std::vector<std::string> params;              // one or two dotted parameter paths
  std::vector<std::vector<double>> value_sets;  // values per parameter, crossed
  std::string out_dir = "out";
};

// Each command returns the process exit code:
//   0 success, 2 input/config error, 3 simulation abort, 4 failed analysis check.
int cmd_simulate(const SimulateOptions& options, std::ostream& log);
int cmd_follow(const FollowOptions& options, std::ostream& log);
int cmd_analyze(const AnalyzeOptions& options, std::ostream& log);
int cmd_sweep(const SweepOptions& options, std::ostream& log);

}  // namespace tether
