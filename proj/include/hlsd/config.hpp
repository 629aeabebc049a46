#pragma once

// Pipeline configuration: flat "section.key = value" text. Every tunable of
// every stage lives here; module configs are derived from it.

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hlsd/exploration.hpp"
#include "hlsd/hallucination.hpp"
#include "hlsd/mlp.hpp"
#include "hlsd/simworld.hpp"
#include "hlsd/textio.hpp"

namespace hlsd {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  int worlds = 30;
  int trials = 3;
  double fill_min = 0.0;
  double fill_max = 0.42;
  double heading_jitter = 0.1;  // rad, per-trial start heading spread
  int threads = 0;              // 0: hardware concurrency
};

struct VerifyConfig {
  int triples = 20;
  double resolution = 0.025;
};

struct PipelineConfig {
  std::uint64_t seed = 7;
  double duration = 505.0;  // s of exploration

  double robot_length = 0.51;
  double robot_width = 0.43;
  int lidar_beams = 720;
  double lidar_fov_deg = 270.0;
  double lidar_max_range = 1.0;

  ExplorationConfig explore{};
  HallucinationConfig halluc{};
  TrainConfig train{};
  WorldConfig world{};
  DeploymentConfig deploy{};
  BenchConfig bench{};
  VerifyConfig verify{};

  LidarSpec lidar() const { return {lidar_beams, lidar_fov_deg * M_PI / 180.0, lidar_max_range}; }
  RobotShape robot() const { return {robot_length, robot_width}; }

  ExplorationConfig exploration() const {
    ExplorationConfig c = explore;
    c.robot_width = robot_width;
    return c;
  }
  HallucinationConfig hallucination() const {
    HallucinationConfig c = halluc;
    c.robot_width = robot_width;
    c.dt = explore.dt;
    c.omega_eps = explore.omega_eps;
    c.lidar = lidar();
    return c;
  }
  WorldConfig worlds() const {
    WorldConfig c = world;
    c.robot = robot();
    return c;
  }
  DeploymentConfig deployment() const {
    DeploymentConfig c = deploy;
    c.robot = robot();
    c.lidar = lidar();
    c.planner.lethal_radius = robot().inscribed();
    return c;
  }
  OutputScale output_scale() const { return {explore.v_max, explore.w_max}; }
};

namespace detail {

struct ConfigField {
  std::string key;
  std::function<void(std::string_view)> set;
  std::function<void(std::string&)> get;
};

template <class T>
ConfigField field(std::string key, T& ref) {
  ConfigField f;
  f.key = std::move(key);
  T* p = &ref;
  f.set = [p, k = f.key](std::string_view v) {
    textio::Tokens t(v);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        const auto w = t.next();
        if (w == "true" || w == "1") *p = true;
        else if (w == "false" || w == "0") *p = false;
        else throw std::runtime_error("expected true/false");
      } else if constexpr (std::is_same_v<T, Optimizer>) {
        const auto w = t.next();
        if (w == "sgd_momentum") *p = Optimizer::sgd_momentum;
        else if (w == "adam") *p = Optimizer::adam;
        else throw std::runtime_error("expected sgd_momentum or adam");
      } else if constexpr (std::is_floating_point_v<T>) {
        *p = t.number();
      } else {
        *p = t.template integer<T>();
      }
      if (!t.done()) throw std::runtime_error("trailing text");
    } catch (const std::runtime_error& e) {
      throw ConfigError("config: bad value for " + k + ": " + e.what());
    }
  };
  f.get = [p](std::string& out) {
    if constexpr (std::is_same_v<T, bool>) out += *p ? "true" : "false";
    else if constexpr (std::is_same_v<T, Optimizer>) out += *p == Optimizer::adam ? "adam" : "sgd_momentum";
    else if constexpr (std::is_floating_point_v<T>) textio::put(out, static_cast<double>(*p));
    else if constexpr (std::is_signed_v<T>) textio::put(out, static_cast<std::int64_t>(*p));
    else textio::put(out, static_cast<std::uint64_t>(*p));
  };
  return f;
}

inline std::vector<ConfigField> fields(PipelineConfig& c) {
  auto& e = c.explore;
  auto& h = c.halluc;
  auto& t = c.train;
  auto& w = c.world;
  auto& d = c.deploy;
  return {
      field("pipeline.seed", c.seed),
      field("pipeline.duration", c.duration),
      field("robot.length", c.robot_length),
      field("robot.width", c.robot_width),
      field("lidar.beams", c.lidar_beams),
      field("lidar.fov_deg", c.lidar_fov_deg),
      field("lidar.max_range", c.lidar_max_range),
      field("explore.dt", e.dt),
      field("explore.a_max", e.a_max),
      field("explore.alpha_max", e.alpha_max),
      field("explore.v_min", e.v_min),
      field("explore.v_max", e.v_max),
      field("explore.w_max", e.w_max),
      field("explore.keep_prob", e.keep_prob),
      field("explore.goal_radius", e.goal_radius),
      field("explore.omega_eps", e.omega_eps),
      field("explore.goal_distance", e.goal_distance),
      field("explore.window", e.window),
      field("hallucinate.sampling_count", h.sampling_count),
      field("hallucinate.alpha", h.alpha),
      field("hallucinate.delta_max", h.delta_max),
      field("hallucinate.offset_v_lo", h.offset_v_lo),
      field("hallucinate.offset_v_hi", h.offset_v_hi),
      field("hallucinate.offset_max", h.offset_max),
      field("hallucinate.empty_v", h.empty_v),
      field("hallucinate.constrained_v", h.constrained_v),
      field("train.optimizer", t.optimizer),
      field("train.lr", t.lr),
      field("train.halve_every", t.halve_every),
      field("train.momentum", t.momentum),
      field("train.beta2", t.beta2),
      field("train.batch", t.batch),
      field("train.epochs", t.epochs),
      field("train.hidden", t.hidden),
      field("train.seed", t.seed),
      field("world.size", w.size),
      field("world.resolution", w.resolution),
      field("world.fill_prob", w.fill_prob),
      field("world.ca_iterations", w.ca_iterations),
      field("world.pocket_radius", w.pocket_radius),
      field("world.margin", w.margin),
      field("world.max_attempts", w.max_attempts),
      field("deploy.dt", d.dt),
      field("deploy.horizon", d.horizon),
      field("deploy.safety_margin", d.safety_margin),
      field("deploy.time_cap", d.time_cap),
      field("deploy.goal_radius", d.goal_radius),
      field("deploy.stall_window", d.stall_window),
      field("deploy.stall_distance", d.stall_distance),
      field("deploy.rotate_rate", d.rotate_rate),
      field("deploy.align_tolerance", d.align_tolerance),
      field("deploy.backup_speed", d.backup_speed),
      field("deploy.backup_time", d.backup_time),
      field("deploy.lethal_penalty", d.planner.lethal_penalty),
      field("deploy.proximity_radius", d.planner.proximity_radius),
      field("deploy.proximity_weight", d.planner.proximity_weight),
      field("deploy.replan_period", d.planner.replan_period),
      field("deploy.local_goal_distance", d.planner.local_goal_distance),
      field("bench.worlds", c.bench.worlds),
      field("bench.trials", c.bench.trials),
      field("bench.fill_min", c.bench.fill_min),
      field("bench.fill_max", c.bench.fill_max),
      field("bench.heading_jitter", c.bench.heading_jitter),
      field("bench.threads", c.bench.threads),
      field("verify.triples", c.verify.triples),
      field("verify.resolution", c.verify.resolution),
  };
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

}  // namespace detail

inline void validate(const PipelineConfig& c) {
  using detail::require;
  const auto& e = c.explore;
  const auto& h = c.halluc;
  const auto& d = c.deploy;
  require(c.duration >= 0.0, "pipeline.duration must be >= 0");
  require(c.robot_length > 0.0 && c.robot_width > 0.0, "robot dimensions must be > 0");
  require(c.lidar_beams >= 2, "lidar.beams must be >= 2");
  require(c.lidar_fov_deg > 0.0 && c.lidar_fov_deg <= 360.0, "lidar.fov_deg must be in (0, 360]");
  require(c.lidar_max_range > 0.0, "lidar.max_range must be > 0");
  require(e.dt > 0.0 && e.a_max > 0.0 && e.alpha_max > 0.0, "explore.dt, a_max, alpha_max must be > 0");
  require(e.v_min >= 0.0 && e.v_max > e.v_min, "explore speeds need 0 <= v_min < v_max");
  require(e.w_max > 0.0, "explore.w_max must be > 0");
  require(e.keep_prob >= 0.0 && e.keep_prob <= 1.0, "explore.keep_prob must be in [0, 1]");
  require(e.goal_distance > 0.0 && e.window > 0.0 && e.goal_radius > 0.0, "explore goal settings must be > 0");
  require(e.omega_eps >= 0.0, "explore.omega_eps must be >= 0");
  require(h.sampling_count >= 1, "hallucinate.sampling_count must be >= 1");
  require(h.alpha >= 0.0 && h.alpha <= 0.5, "hallucinate.alpha must be in [0, 0.5]");
  require(h.delta_max >= 0.0, "hallucinate.delta_max must be >= 0");
  require(h.offset_v_hi > h.offset_v_lo, "hallucinate offset needs v_lo < v_hi");
  require(h.offset_max >= 0.0, "hallucinate.offset_max must be >= 0");
  try {
    c.train.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
  require(c.world.size >= 20, "world.size must be >= 20");
  require(c.world.resolution > 0.0, "world.resolution must be > 0");
  require(c.world.fill_prob >= 0.0 && c.world.fill_prob <= 1.0, "world.fill_prob must be in [0, 1]");
  require(c.world.ca_iterations >= 0 && c.world.max_attempts >= 1, "world iteration counts out of range");
  require(d.dt > 0.0 && d.horizon >= d.dt && d.time_cap > 0.0, "deploy timing must be positive, horizon >= dt");
  require(d.goal_radius > 0.0 && d.stall_window > 0.0 && d.stall_distance >= 0.0, "deploy goal/stall settings");
  require(d.backup_speed < 0.0, "deploy.backup_speed must be negative");
  require(d.rotate_rate > 0.0 && d.backup_time > 0.0, "deploy recovery settings must be > 0");
  require(c.bench.worlds >= 1 && c.bench.trials >= 1 && c.bench.threads >= 0, "bench counts out of range");
  require(c.bench.fill_min >= 0.0 && c.bench.fill_max <= 1.0 && c.bench.fill_min <= c.bench.fill_max,
          "bench fill range must lie in [0, 1]");
  require(c.verify.triples >= 1 && c.verify.resolution > 0.0, "verify settings out of range");
}

// Lines are "key = value"; '#' starts a comment. Unknown or repeated keys
// are errors.
inline PipelineConfig parse_config(std::istream& is) {
  PipelineConfig c;
  auto fs = detail::fields(c);
  std::vector<bool> seen(fs.size(), false);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": missing '='");
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    std::size_t i = 0;
    while (i < fs.size() && fs[i].key != key) ++i;
    if (i == fs.size()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (seen[i]) throw ConfigError("config line " + std::to_string(lineno) + ": repeated key '" + key + "'");
    seen[i] = true;
    fs[i].set(std::string_view(line).substr(eq + 1));
  }
  validate(c);
  return c;
}

inline void dump_config(std::ostream& os, const PipelineConfig& c) {
  PipelineConfig copy = c;
  std::string s;
  for (const auto& f : detail::fields(copy)) {
    s += f.key;
    s += " = ";
    f.get(s);
    s += '\n';
  }
  os << s;
}

}  // namespace hlsd
