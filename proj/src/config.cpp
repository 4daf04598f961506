#include "tether/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tether/errors.hpp"

namespace tether {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void require_object(const json& node, const std::string& where) {
  if (!node.is_object()) fail(where, "expected an object");
}

/// Reject keys outside the allowed set, naming the offender.
void check_keys(const json& node, const std::string& where,
                const std::set<std::string>& allowed) {
  require_object(node, where);
  for (const auto& item : node.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      fail(where, "unknown key '" + item.key() + "'");
    }
  }
}

double number_at(const json& node, const std::string& where) {
  if (!node.is_number()) fail(where, "expected a number");
  return node.get<double>();
}

double get_number(const json& parent, const char* key, const std::string& where,
                  double fallback) {
  if (!parent.contains(key)) return fallback;
  return number_at(parent.at(key), where + "." + key);
}

/// A diagonal matrix entry may be written as one number (uniform) or an array
/// of three positive entries.
Diag3 get_diag(const json& parent, const char* key, const std::string& where, Diag3 fallback) {
  if (!parent.contains(key)) return fallback;
  const json& node = parent.at(key);
  const std::string path = where + "." + key;
  if (node.is_number()) return Diag3::uniform(node.get<double>());
  if (node.is_array() && node.size() == 3) {
    return Diag3(number_at(node[0], path), number_at(node[1], path), number_at(node[2], path));
  }
  fail(path, "expected a number or an array of 3 numbers");
}

Vec3 vec3_at(const json& node, const std::string& where) {
  if (!node.is_array() || node.size() != 3) fail(where, "expected an array of 3 numbers");
  return Vec3{number_at(node[0], where), number_at(node[1], where), number_at(node[2], where)};
}

Vec3 get_vec3(const json& parent, const char* key, const std::string& where, Vec3 fallback) {
  if (!parent.contains(key)) return fallback;
  return vec3_at(parent.at(key), where + "." + key);
}

SystemParams parse_params(const json& root) {
  SystemParams params;  // struct defaults are the documented defaults

  if (root.contains("human")) {
    const json& node = root.at("human");
    check_keys(node, "human", {"mass", "damping", "gravity"});
    params.human.mass = get_number(node, "mass", "human", params.human.mass);
    params.human.damping = get_diag(node, "damping", "human", params.human.damping);
    params.human.gravity = get_number(node, "gravity", "human", params.human.gravity);
  }
  if (root.contains("cable")) {
    const json& node = root.at("cable");
    check_keys(node, "cable", {"stiffness", "rest_length"});
    params.cable.stiffness = get_number(node, "stiffness", "cable", params.cable.stiffness);
    params.cable.rest_length =
        get_number(node, "rest_length", "cable", params.cable.rest_length);
  }
  if (root.contains("admittance")) {
    const json& node = root.at("admittance");
    check_keys(node, "admittance", {"inertia", "damping"});
    params.admittance.inertia =
        get_diag(node, "inertia", "admittance", params.admittance.inertia);
    params.admittance.damping =
        get_diag(node, "damping", "admittance", params.admittance.damping);
  }
  if (root.contains("guidance")) {
    const json& node = root.at("guidance");
    check_keys(node, "guidance", {"kp", "fz", "error_saturation"});
    params.guidance.kp = get_number(node, "kp", "guidance", params.guidance.kp);
    params.guidance.fz_des = get_number(node, "fz", "guidance", params.guidance.fz_des);
    params.guidance.error_saturation =
        get_number(node, "error_saturation", "guidance", params.guidance.error_saturation);
  }
  return params;
}

GuidanceTask parse_task(const json& root, const SystemParams& params) {
  const Vec3 vertical_force{0.0, 0.0, params.guidance.fz_des};
  if (!root.contains("task")) {
    return PointTask{make_guidance_refs(Vec3{2.0, 0.0, 0.0}, vertical_force, params.cable)};
  }
  const json& node = root.at("task");
  require_object(node, "task");
  const std::string type = node.contains("type") ? node.at("type").get<std::string>() : "point";

  if (type == "point") {
    check_keys(node, "task", {"type", "target"});
    const Vec3 target = get_vec3(node, "target", "task", Vec3{2.0, 0.0, 0.0});
    if (target.z != 0.0) fail("task.target", "the human target must have z = 0");
    return PointTask{make_guidance_refs(target, vertical_force, params.cable)};
  }
  if (type == "path") {
    check_keys(node, "task", {"type", "waypoints", "profile", "scan_samples"});
    std::vector<Vec3> waypoints{Vec3{-2.0, -0.5, 0.0}, Vec3{2.0, 0.0, 0.0}};
    if (node.contains("waypoints")) {
      const json& list = node.at("waypoints");
      if (!list.is_array() || list.size() < 2) {
        fail("task.waypoints", "expected an array of at least 2 points");
      }
      waypoints.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        waypoints.push_back(
            vec3_at(list[i], "task.waypoints[" + std::to_string(i) + "]"));
      }
    }
    ForceProfile profile;
    if (node.contains("profile")) {
      const json& p = node.at("profile");
      check_keys(p, "task.profile", {"f_start", "f_max", "ramp_up_end", "ramp_down_start"});
      profile.f_start = get_number(p, "f_start", "task.profile", profile.f_start);
      profile.f_max = get_number(p, "f_max", "task.profile", profile.f_max);
      profile.ramp_up_end = get_number(p, "ramp_up_end", "task.profile", profile.ramp_up_end);
      profile.ramp_down_start =
          get_number(p, "ramp_down_start", "task.profile", profile.ramp_down_start);
    }
    profile.validate();
    int scan = 512;
    if (node.contains("scan_samples")) {
      scan = static_cast<int>(number_at(node.at("scan_samples"), "task.scan_samples"));
    }
    return PathTask{
        Maneuver{ParametricPath(std::move(waypoints), scan), profile, params.guidance.fz_des}};
  }
  fail("task.type", "expected 'point' or 'path', got '" + type + "'");
}

HumanPolicy parse_policy(const json& root) {
  if (!root.contains("policy")) return NominalPolicy{};
  const json& node = root.at("policy");
  require_object(node, "policy");
  const std::string type =
      node.contains("type") ? node.at("type").get<std::string>() : "nominal";

  if (type == "nominal") {
    check_keys(node, "policy", {"type"});
    return NominalPolicy{};
  }
  if (type == "stop") {
    check_keys(node, "policy", {"type", "t1", "t2"});
    StopWindowPolicy p;
    p.t_start = get_number(node, "t1", "policy", 0.0);
    p.t_end = get_number(node, "t2", "policy", 0.0);
    if (!(p.t_end > p.t_start)) fail("policy", "stop window needs t2 > t1");
    return p;
  }
  if (type == "lateral_pulse") {
    check_keys(node, "policy", {"type", "t1", "t2", "force"});
    LateralPulsePolicy p;
    p.t_start = get_number(node, "t1", "policy", 0.0);
    p.t_end = get_number(node, "t2", "policy", 0.0);
    p.force = get_vec3(node, "force", "policy", Vec3{});
    if (!(p.t_end > p.t_start)) fail("policy", "pulse window needs t2 > t1");
    return p;
  }
  if (type == "schedule") {
    check_keys(node, "policy", {"type", "points"});
    SchedulePolicy p;
    if (!node.contains("points") || !node.at("points").is_array()) {
      fail("policy.points", "expected an array of [time, [fx, fy, fz]] pairs");
    }
    double previous = -std::numeric_limits<double>::infinity();
    for (const json& entry : node.at("points")) {
      if (!entry.is_array() || entry.size() != 2) {
        fail("policy.points", "each entry must be [time, [fx, fy, fz]]");
      }
      const double time = number_at(entry[0], "policy.points[].time");
      if (!(time >= previous)) fail("policy.points", "times must be non-decreasing");
      previous = time;
      p.points.emplace_back(time, vec3_at(entry[1], "policy.points[].force"));
    }
    return p;
  }
  fail("policy.type",
       "expected 'nominal', 'stop', 'lateral_pulse' or 'schedule', got '" + type + "'");
}

SystemState parse_initial(const json& root, const GuidanceTask& task,
                          const CableParams& cable) {
  // Default template: human at the task start, at rest; robot hovering half a
  // rest length above the handle, cable slack.
  SystemState state;
  if (const auto* path_task = std::get_if<PathTask>(&task)) {
    state.human_pos = path_task->maneuver.path.waypoints().front();
  } else {
    state.human_pos = Vec3{0.0, 0.0, 0.0};
  }
  state.robot_pos = state.human_pos + Vec3{0.0, 0.0, 0.5 * cable.rest_length};

  if (!root.contains("initial")) return state;
  const json& node = root.at("initial");
  check_keys(node, "initial", {"human_pos", "human_vel", "robot_pos", "robot_vel"});
  state.human_pos = get_vec3(node, "human_pos", "initial", state.human_pos);
  state.human_vel = get_vec3(node, "human_vel", "initial", state.human_vel);
  state.robot_pos = get_vec3(node, "robot_pos", "initial", state.robot_pos);
  state.robot_vel = get_vec3(node, "robot_vel", "initial", state.robot_vel);
  return state;
}

Scenario scenario_from_json(const json& root) {
  check_keys(root, "top level",
             {"human", "cable", "admittance", "guidance", "task", "policy", "initial", "sim"});

  Scenario scenario;
  scenario.params = parse_params(root);
  scenario.params.validate();  // fail fast with a clear message before task build
  scenario.task = parse_task(root, scenario.params);
  scenario.policy = parse_policy(root);
  scenario.initial = parse_initial(root, scenario.task, scenario.params.cable);

  if (root.contains("sim")) {
    const json& node = root.at("sim");
    check_keys(node, "sim", {"dt", "duration", "seed"});
    scenario.dt = get_number(node, "dt", "sim", scenario.dt);
    scenario.duration = get_number(node, "duration", "sim", scenario.duration);
    if (node.contains("seed")) {
      const json& seed = node.at("seed");
      if (!seed.is_number_integer() || seed.get<long long>() < 0) {
        fail("sim.seed", "expected a non-negative integer");
      }
      scenario.seed = seed.get<std::uint64_t>();
    }
  }
  scenario.validate();
  return scenario;
}

json parse_text(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) {
    throw ConfigError("config: not valid JSON");
  }
  return root;
}

}  // namespace

Scenario parse_scenario_text(const std::string& json_text) {
  return scenario_from_json(parse_text(json_text));
}

Scenario load_scenario_file(const std::string& file_path) {
  std::ifstream in(file_path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file: " + file_path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

Scenario scenario_with_overrides(
    const std::string& json_text,
    const std::vector<std::pair<std::string, double>>& overrides) {
  json root = parse_text(json_text);
  for (const auto& [path, value] : overrides) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (key.empty()) throw ConfigError("config: empty key in parameter path '" + path + "'");
      if (!node->is_object()) {
        throw ConfigError("config: parameter path '" + path + "' does not name a value");
      }
      if (dot == std::string::npos) {
        // Leaf: the parameter must already exist as a number in the document
        // or be a known defaulted key; creating it is allowed only when the
        // section exists in the schema (checked by the re-parse below).
        (*node)[key] = value;
        break;
      }
      // A section the document leaves at its defaults is created on the fly;
      // the re-parse below still rejects keys the schema does not know.
      json& child = (*node)[key];
      if (child.is_null()) child = json::object();
      node = &child;
      start = dot + 1;
    }
  }
  return scenario_from_json(root);
}

std::string default_config_text() {
  return R"({
  "human": {"mass": 10.0, "damping": 20.0},
  "cable": {"stiffness": 100.0, "rest_length": 1.0},
  "admittance": {"inertia": 0.8, "damping": 2.4},
  "guidance": {"kp": 4.5, "fz": 1.0},
  "task": {"type": "point", "target": [2.0, 0.0, 0.0]},
  "policy": {"type": "nominal"},
  "sim": {"dt": 0.001, "duration": 60.0, "seed": 1}
}
)";
}

}  // namespace tether
