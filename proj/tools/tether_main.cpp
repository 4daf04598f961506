#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tether/acceptance.hpp"
#include "tether/commands.hpp"

namespace {

bool parse_value_list(const std::string& text, std::vector<double>& out) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) return false;
    const auto b = item.find_last_not_of(" \t");
    item = item.substr(a, b - a + 1);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == nullptr || *end != '\0') return false;
    out.push_back(v);
  }
  return !out.empty();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification toolkit for cable-guided human-robot motion"};
  app.require_subcommand(1);

  tether::SimulateOptions sim_opts;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Run one scenario; write the trajectory CSV, a run report, and optional plots");
  sim->add_option("config", sim_opts.config_path, "Scenario JSON file")->required();
  sim->add_option("--out", sim_opts.out_dir, "Output directory (default: out)");
  sim->add_flag("--csv,!--no-csv", sim_opts.write_csv, "Write the trajectory CSV (default: on)");
  sim->add_flag("--svg", sim_opts.write_svg, "Also write SVG plots");

  tether::FollowOptions follow_opts;
  follow_opts.randomize_human = false;
  CLI::App* follow = app.add_subcommand(
      "follow", "Run a multi-run path-following campaign with per-run and aggregate error reports");
  follow->add_option("config", follow_opts.config_path, "Scenario JSON file (path task)")
      ->required();
  follow->add_option("--out", follow_opts.out_dir, "Output directory (default: out)");
  follow->add_option("--runs", follow_opts.runs, "Number of runs (default: 8)");
  follow->add_flag("--randomize-human", follow_opts.randomize_human,
                   "Randomize human mass and damping within +/-50% (seeded)");
  follow->add_flag("--svg", follow_opts.write_svg, "Also write the error overlay plot");

  tether::AnalyzeOptions analyze_opts;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Verify passivity margins (and storage monotonicity) on a logged trajectory");
  analyze->add_option("csv", analyze_opts.csv_path, "Trajectory CSV file")->required();
  analyze->add_option("config", analyze_opts.config_path, "Scenario JSON the run used")->required();
  analyze->add_option("--port", analyze_opts.port, "robot | human | both (default: both)");
  analyze->add_option("--out", analyze_opts.out_dir, "Output directory (default: out)");
  analyze->add_flag("--svg", analyze_opts.write_svg, "Also write the storage plot");

  std::string sweep_config;
  std::string sweep_out = "out";
  std::vector<std::string> sweep_params;
  std::vector<std::string> sweep_values;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a one- or two-parameter scenario grid and tabulate the results");
  sweep->add_option("config", sweep_config, "Scenario JSON file")->required();
  sweep->add_option("--param", sweep_params,
                    "Dotted parameter path, e.g. guidance.kp (repeat for a 2-D grid)");
  sweep->add_option("--values", sweep_values,
                    "Comma-separated values for the matching --param occurrence");
  sweep->add_option("--out", sweep_out, "Output directory (default: out)");

  bool list_only = false;
  CLI::App* acceptance =
      app.add_subcommand("acceptance", "Run the acceptance criteria suite (exit 1 on any failure)");
  acceptance->add_flag("--list", list_only, "List the criteria without running them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return tether::cmd_simulate(sim_opts, std::cout);
    if (follow->parsed()) return tether::cmd_follow(follow_opts, std::cout);
    if (analyze->parsed()) return tether::cmd_analyze(analyze_opts, std::cout);
    if (sweep->parsed()) {
      tether::SweepOptions opts;
      opts.config_path = sweep_config;
      opts.out_dir = sweep_out;
      opts.params = sweep_params;
      for (const std::string& text : sweep_values) {
        std::vector<double> values;
        if (!parse_value_list(text, values)) {
          std::cerr << "error: cannot parse --values list: " << text << '\n';
          return 2;
        }
        opts.value_sets.push_back(std::move(values));
      }
      return tether::cmd_sweep(opts, std::cout);
    }
    if (acceptance->parsed()) {
      const auto results = tether::run_acceptance(std::cout, list_only);
      if (list_only) return 0;
      return tether::all_passed(results) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
