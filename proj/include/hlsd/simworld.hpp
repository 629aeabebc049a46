#pragma once

// Deployment worlds: cellular-automaton occupancy grids, simulated LiDAR, a
// Dijkstra global planner over the perceived map, the MPC collision gate and
// the two-phase recovery behavior.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsd/exploration.hpp"
#include "hlsd/geometry.hpp"
#include "hlsd/hallucination.hpp"
#include "hlsd/lattice.hpp"
#include "hlsd/mlp.hpp"
#include "hlsd/rng.hpp"
#include "hlsd/textio.hpp"

namespace hlsd {

struct OccupancyGrid {
  double resolution = 0.15;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> occupied;
  Pose start;
  Pose goal;

  OccupancyGrid() = default;
  OccupancyGrid(double res, int w, int h) : resolution(res), width(w), height(h), occupied(static_cast<std::size_t>(w) * h, 0) {
    if (!(res > 0.0) || w <= 0 || h <= 0) throw std::invalid_argument("OccupancyGrid: bad dimensions");
  }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width + c.x; }
  bool occ(Cell c) const { return !in_bounds(c) || occupied[index(c)] != 0; }
  void set(Cell c, bool v) {
    if (in_bounds(c)) occupied[index(c)] = v ? 1 : 0;
  }
  Cell cell_of(Point2 p) const {
    return {static_cast<int>(std::floor(p.x / resolution)), static_cast<int>(std::floor(p.y / resolution))};
  }
  Point2 center(Cell c) const { return {(c.x + 0.5) * resolution, (c.y + 0.5) * resolution}; }
  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

struct RobotShape {
  double length = 0.51;
  double width = 0.43;
  double inscribed() const { return 0.5 * std::min(length, width); }
  double circumscribed() const { return 0.5 * std::hypot(length, width); }
};

// Whether the robot rectangle at pose, grown by margin on every side,
// overlaps the closed square of any cell for which is_occ holds.
template <class Pred>
bool footprint_hits(const Pose& p, const RobotShape& shape, double margin, double res, Pred is_occ) {
  const double hl = 0.5 * shape.length + margin, hw = 0.5 * shape.width + margin;
  const double reach = std::hypot(hl, hw);
  const int x0 = static_cast<int>(std::floor((p.x - reach) / res)), x1 = static_cast<int>(std::floor((p.x + reach) / res));
  const int y0 = static_cast<int>(std::floor((p.y - reach) / res)), y1 = static_cast<int>(std::floor((p.y + reach) / res));
  const double c = std::cos(p.psi), s = std::sin(p.psi);
  const Point2 ax{c, s}, ay{-s, c};
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!is_occ(Cell{x, y})) continue;
      // Separating axis test: rectangle axes plus the grid axes.
      const Point2 m{(x + 0.5) * res - p.x, (y + 0.5) * res - p.y};
      const double h = 0.5 * res;
      const double along = std::abs(dot(m, ax)), across = std::abs(dot(m, ay));
      const double proj_sq = h * (std::abs(c) + std::abs(s));  // square's half extent on a rotated axis
      if (along > hl + proj_sq || across > hw + proj_sq) continue;
      const double rx = hl * std::abs(c) + hw * std::abs(s), ry = hl * std::abs(s) + hw * std::abs(c);
      if (std::abs(m.x) > h + rx || std::abs(m.y) > h + ry) continue;
      return true;
    }
  }
  return false;
}

inline bool footprint_collides(const OccupancyGrid& g, const Pose& p, const RobotShape& shape, double margin = 0.0) {
  return footprint_hits(p, shape, margin, g.resolution, [&](Cell c) { return g.occ(c); });
}

namespace detail {

// Cells whose centers lie within radius of an occupied cell's square.
inline std::vector<std::uint8_t> inflate(const OccupancyGrid& g, const std::vector<std::uint8_t>& occ, double radius) {
  std::vector<std::uint8_t> out(occ.size(), 0);
  const int r = static_cast<int>(std::ceil(radius / g.resolution)) + 1;
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (!occ[static_cast<std::size_t>(y) * g.width + x]) continue;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const Cell n{x + dx, y + dy};
          if (!g.in_bounds(n)) continue;
          const double ex = std::max(0.0, (std::abs(dx) - 0.5) * g.resolution);
          const double ey = std::max(0.0, (std::abs(dy) - 0.5) * g.resolution);
          if (std::hypot(ex, ey) < radius) out[g.index(n)] = 1;
        }
      }
    }
  }
  return out;
}

inline bool connected(const OccupancyGrid& g, const std::vector<std::uint8_t>& blocked, Cell a, Cell b) {
  if (!g.in_bounds(a) || !g.in_bounds(b) || blocked[g.index(a)] || blocked[g.index(b)]) return false;
  std::vector<std::uint8_t> seen(blocked.size(), 0);
  std::vector<Cell> stack{a};
  seen[g.index(a)] = 1;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    if (c == b) return true;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const Cell n{c.x + dx, c.y + dy};
        if ((dx == 0 && dy == 0) || !g.in_bounds(n) || blocked[g.index(n)] || seen[g.index(n)]) continue;
        if (dx != 0 && dy != 0 && (blocked[g.index({c.x + dx, c.y})] || blocked[g.index({c.x, c.y + dy})])) continue;
        seen[g.index(n)] = 1;
        stack.push_back(n);
      }
    }
  }
  return false;
}

}  // namespace detail

struct WorldConfig {
  int size = 40;               // cells per side
  double resolution = 0.15;    // m per cell
  double fill_prob = 0.42;
  int ca_iterations = 3;
  double pocket_radius = 0.6;  // cleared around start and goal
  double margin = 0.75;        // start/goal distance from the west/east walls
  int max_attempts = 100;
  RobotShape robot{};
};

struct WorldGenError : std::runtime_error {
  std::uint64_t seed;
  WorldGenError(std::uint64_t s, const std::string& msg) : std::runtime_error(msg), seed(s) {}
};

// Random fill, 4-5 smoothing, walls, start/goal pockets; regenerated with
// the next sub-seed until start and goal are connected for the robot.
inline OccupancyGrid generate_world(std::uint64_t seed, const WorldConfig& cfg) {
  if (cfg.size < 20) throw std::invalid_argument("generate_world: size must be >= 20 cells");
  if (!(cfg.fill_prob >= 0.0 && cfg.fill_prob <= 1.0)) throw std::invalid_argument("generate_world: fill_prob in [0, 1]");
  const double side = cfg.size * cfg.resolution;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    OccupancyGrid g(cfg.resolution, cfg.size, cfg.size);
    g.start = {cfg.margin, 0.5 * side, 0.0};
    g.goal = {side - cfg.margin, 0.5 * side, 0.0};
    auto border = [&](Cell c) { return c.x == 0 || c.y == 0 || c.x == cfg.size - 1 || c.y == cfg.size - 1; };
    for (int y = 0; y < cfg.size; ++y)
      for (int x = 0; x < cfg.size; ++x) g.set({x, y}, border({x, y}) || rng.bernoulli(cfg.fill_prob));
    for (int it = 0; it < cfg.ca_iterations; ++it) {
      OccupancyGrid next = g;
      for (int y = 1; y < cfg.size - 1; ++y) {
        for (int x = 1; x < cfg.size - 1; ++x) {
          int n = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
              if ((dx || dy) && g.occ({x + dx, y + dy})) ++n;
          if (n >= 5) next.set({x, y}, true);
          else if (n <= 3) next.set({x, y}, false);
        }
      }
      g = std::move(next);
    }
    for (const Pose& p : {g.start, g.goal}) {
      for (int y = 1; y < cfg.size - 1; ++y)
        for (int x = 1; x < cfg.size - 1; ++x)
          if (distance(g.center({x, y}), p.position()) <= cfg.pocket_radius) g.set({x, y}, false);
    }
    const auto lethal = detail::inflate(g, g.occupied, cfg.robot.inscribed());
    if (detail::connected(g, lethal, g.cell_of(g.start.position()), g.cell_of(g.goal.position()))) return g;
  }
  throw WorldGenError(seed, "generate_world: no connected world after " + std::to_string(cfg.max_attempts) +
                                " attempts (seed " + std::to_string(seed) + ")");
}

// Per-beam DDA march to the first occupied cell, clipped to max_range.
inline std::vector<double> simulate_lidar(const OccupancyGrid& g, const Pose& pose, const LidarSpec& s) {
  std::vector<double> out(static_cast<std::size_t>(s.beam_count), s.max_range);
  const double r = g.resolution;
  const double ox = pose.x / r, oy = pose.y / r;
  for (int i = 0; i < s.beam_count; ++i) {
    const double a = pose.psi + s.beam_angle(i);
    const double dx = std::cos(a), dy = std::sin(a);
    int cx = static_cast<int>(std::floor(ox)), cy = static_cast<int>(std::floor(oy));
    const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    const double tdx = std::abs(dx) > 1e-15 ? 1.0 / std::abs(dx) : inf;
    const double tdy = std::abs(dy) > 1e-15 ? 1.0 / std::abs(dy) : inf;
    double tx = std::abs(dx) > 1e-15 ? ((dx > 0 ? (cx + 1 - ox) : (ox - cx)) * tdx) : inf;
    double ty = std::abs(dy) > 1e-15 ? ((dy > 0 ? (cy + 1 - oy) : (oy - cy)) * tdy) : inf;
    const double limit = s.max_range / r;
    double t = 0.0;
    if (g.occ({cx, cy})) {
      out[static_cast<std::size_t>(i)] = 0.0;
      continue;
    }
    while (t <= limit) {
      if (tx < ty) {
        t = tx;
        tx += tdx;
        cx += sx;
      } else {
        t = ty;
        ty += tdy;
        cy += sy;
      }
      if (t > limit) break;
      if (g.occ({cx, cy})) {
        out[static_cast<std::size_t>(i)] = std::min(s.max_range, t * r);
        break;
      }
    }
  }
  return out;
}

inline std::vector<Point2> scan_points(const std::vector<double>& scan, const Pose& pose, const LidarSpec& s) {
  std::vector<Point2> pts;
  for (int i = 0; i < s.beam_count; ++i) {
    const double rng = scan[static_cast<std::size_t>(i)];
    if (rng >= s.max_range) continue;
    const double a = pose.psi + s.beam_angle(i);
    pts.push_back({pose.x + rng * std::cos(a), pose.y + rng * std::sin(a)});
  }
  return pts;
}

struct PlannerConfig {
  double lethal_radius = 0.215;     // inscribed radius: cells this close to known obstacles are avoided
  double lethal_penalty = 50.0;     // extra cost per lethal cell entered (m); passable so the robot is never trapped in its own cell
  double proximity_radius = 0.45;
  double proximity_weight = 2.0;    // cost per cell, scaled by closeness
  double replan_period = 1.0;       // s, in addition to replans on new obstacles
  double local_goal_distance = 1.0;
};

// Dijkstra over the robot's known map (unknown cells free). Known occupied
// cells are impassable; diagonal moves may not cut their corners.
class GlobalPlanner {
 public:
  GlobalPlanner(const OccupancyGrid& shape_of, const PlannerConfig& cfg)
      : cfg_(cfg), known_(shape_of.resolution, shape_of.width, shape_of.height) {
    known_.start = shape_of.start;
    known_.goal = shape_of.goal;
  }

  const OccupancyGrid& known() const { return known_; }
  const std::vector<Point2>& path() const { return path_; }
  bool reachable() const { return reachable_; }
  std::size_t replans() const { return replans_; }

  // Marks beam hits occupied; returns the number of newly known cells.
  std::size_t perceive(const std::vector<double>& scan, const Pose& pose, const LidarSpec& s) {
    std::size_t added = 0;
    for (int i = 0; i < s.beam_count; ++i) {
      const double rng = scan[static_cast<std::size_t>(i)];
      if (rng >= s.max_range) continue;
      const double a = pose.psi + s.beam_angle(i);
      const Point2 hit{pose.x + (rng + 1e-6) * std::cos(a), pose.y + (rng + 1e-6) * std::sin(a)};
      const Cell c = known_.cell_of(hit);
      if (known_.in_bounds(c) && !known_.occ(c)) {
        known_.set(c, true);
        ++added;
      }
    }
    if (added) dirty_ = true;
    return added;
  }

  // Replans when the map changed under the current path, the period elapsed,
  // or no path exists yet.
  void update(const Pose& robot, double now) {
    bool blocked = false;
    if (dirty_) {
      for (const Point2& p : path_)
        if (known_.occ(known_.cell_of(p))) blocked = true;
    }
    if (path_.empty() || blocked || now - last_plan_ >= cfg_.replan_period) plan(robot, now);
    dirty_ = false;
  }

  void plan(const Pose& robot, double now) {
    last_plan_ = now;
    ++replans_;
    const auto lethal = detail::inflate(known_, known_.occupied, cfg_.lethal_radius);
    const auto near = detail::inflate(known_, known_.occupied, cfg_.proximity_radius);
    const std::size_t n = known_.occupied.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> next(n, n);
    const Cell goal = known_.cell_of(known_.goal.position());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    if (!known_.occ(goal)) {
      dist[known_.index(goal)] = 0.0;
      open.push({0.0, known_.index(goal)});
    }
    const double r = known_.resolution;
    auto step_cost = [&](Cell to) {
      double c = 0.0;
      if (lethal[known_.index(to)]) c += cfg_.lethal_penalty;
      if (near[known_.index(to)]) c += cfg_.proximity_weight * r;
      return c;
    };
    while (!open.empty()) {
      const auto [d, i] = open.top();
      open.pop();
      if (d > dist[i]) continue;
      const Cell c{static_cast<int>(i % known_.width), static_cast<int>(i / known_.width)};
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy) continue;
          const Cell nb{c.x + dx, c.y + dy};
          if (known_.occ(nb)) continue;
          if (dx && dy && (known_.occ({c.x + dx, c.y}) || known_.occ({c.x, c.y + dy}))) continue;
          // Edge cost charged on the cell being left toward the goal.
          const double nd = d + r * ((dx && dy) ? std::sqrt(2.0) : 1.0) + step_cost(nb);
          const std::size_t j = known_.index(nb);
          if (nd < dist[j]) {
            dist[j] = nd;
            next[j] = i;
            open.push({nd, j});
          }
        }
      }
    }
    path_.clear();
    const Cell rc = known_.cell_of(robot.position());
    reachable_ = known_.in_bounds(rc) && std::isfinite(dist[known_.index(rc)]);
    if (!reachable_) return;
    path_.push_back(robot.position());
    for (std::size_t i = next[known_.index(rc)]; i != n; i = next[i])
      path_.push_back(known_.center({static_cast<int>(i % known_.width), static_cast<int>(i / known_.width)}));
    path_.push_back(known_.goal.position());
    cost_ = dist[known_.index(rc)];
  }

  // Point 1 m along the path from the robot (or the goal when closer); its
  // heading is the path direction there.
  Pose local_goal(const Pose& robot) const {
    if (path_.empty()) return known_.goal;
    std::vector<Point2> pts{robot.position()};
    pts.insert(pts.end(), path_.begin() + 1, path_.end());
    return along(pts, cfg_.local_goal_distance);
  }

  // Path direction a short way ahead of the robot.
  double tangent(const Pose& robot, double ahead = 0.3) const {
    if (path_.size() < 2) return std::atan2(known_.goal.y - robot.y, known_.goal.x - robot.x);
    std::vector<Point2> pts{robot.position()};
    pts.insert(pts.end(), path_.begin() + 1, path_.end());
    const Pose p = along(pts, ahead);
    if (distance(p.position(), robot.position()) < 1e-9) return robot.psi;
    return std::atan2(p.y - robot.y, p.x - robot.x);
  }

 private:
  static Pose along(const std::vector<Point2>& pts, double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double seg = distance(pts[i], pts[i + 1]);
      if (seg <= 0.0) continue;
      const double heading = std::atan2(pts[i + 1].y - pts[i].y, pts[i + 1].x - pts[i].x);
      if (acc + seg >= s) {
        const Point2 p = pts[i] + ((s - acc) / seg) * (pts[i + 1] - pts[i]);
        return {p.x, p.y, heading};
      }
      acc += seg;
    }
    const Point2 e = pts.back();
    double heading = 0.0;
    if (pts.size() >= 2) heading = std::atan2(e.y - pts[pts.size() - 2].y, e.x - pts[pts.size() - 2].x);
    return {e.x, e.y, heading};
  }

  PlannerConfig cfg_;
  OccupancyGrid known_;
  std::vector<Point2> path_;
  double cost_ = 0.0;
  double last_plan_ = -1e9;
  bool dirty_ = false;
  bool reachable_ = false;
  std::size_t replans_ = 0;
};

enum class Mode { normal, recovery_rotate, recovery_backup };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::normal: return "normal";
    case Mode::recovery_rotate: return "recovery_rotate";
    case Mode::recovery_backup: return "recovery_backup";
  }
  return "?";
}

struct DeploymentConfig {
  double dt = 0.05;
  double horizon = 1.0;       // s, MPC look-ahead
  double brake_v = 2.0;       // m/s^2, deceleration assumed after the first step
  double brake_w = 3.14;      // rad/s^2
  double safety_margin = 0.03;  // m added around the footprint in the check
  double time_cap = 50.0;
  double goal_radius = 0.3;
  double stall_window = 5.0;
  double stall_distance = 0.05;
  double rotate_rate = 1.0;   // rad/s in recovery phase 1
  double align_tolerance = 0.15;
  double backup_speed = -0.2;
  double backup_time = 1.0;   // s before phase 2 hands back to phase 1
  RobotShape robot{};
  LidarSpec lidar{};
  PlannerConfig planner{};
};

struct DeploymentState {
  Pose pose;
  Action velocity;
  std::vector<double> scan;
  Mode mode = Mode::normal;
  double mode_time = 0.0;  // s spent in the current mode
};

// Obstacle evidence for the collision gate: the latest scan's points and the
// accumulated known-occupied cells.
struct Perception {
  const std::vector<Point2>* points = nullptr;
  const OccupancyGrid* known = nullptr;
};

inline bool pose_safe(const Pose& p, const Perception& per, const DeploymentConfig& cfg) {
  const double hl = 0.5 * cfg.robot.length + cfg.safety_margin, hw = 0.5 * cfg.robot.width + cfg.safety_margin;
  const double c = std::cos(p.psi), s = std::sin(p.psi);
  if (per.points) {
    for (const Point2& q : *per.points) {
      const Point2 d = q - p.position();
      if (std::abs(c * d.x + s * d.y) <= hl && std::abs(-s * d.x + c * d.y) <= hw) return false;
    }
  }
  if (per.known && footprint_hits(p, cfg.robot, cfg.safety_margin, per.known->resolution,
                                  [&](Cell cell) { return per.known->occ(cell); }))
    return false;
  return true;
}

// Rolls the candidate out over the horizon: applied for one control step,
// then braked to a stop at the deceleration limits with its curvature held.
// Unsafe if the grown footprint meets obstacle evidence at any step.
inline bool mpc_collision_check(const DeploymentState& st, const Action& a, const Perception& per,
                                const DeploymentConfig& cfg) {
  Pose p = step_unicycle(st.pose, a, cfg.dt);
  if (!pose_safe(p, per, cfg)) return false;
  const double t_stop = std::max(std::abs(a.v) / cfg.brake_v, std::abs(a.w) / cfg.brake_w);
  const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
  for (int k = 1; k < steps; ++k) {
    const double f = 1.0 - k * cfg.dt / t_stop;
    if (!(f > 0.0)) break;
    p = step_unicycle(p, {a.v * f, a.w * f}, cfg.dt);
    if (!pose_safe(p, per, cfg)) return false;
  }
  return true;
}

// One step of the two-phase recovery. Phase 1 rotates toward the path
// tangent; phase 2 backs up. Falls back to standing still when neither motion
// is safe.
inline std::pair<Action, Mode> recovery_step(const DeploymentState& st, double tangent, const Perception& per,
                                             const DeploymentConfig& cfg) {
  const double err = wrap_angle(tangent - st.pose.psi);
  const Action rot{0.0, err >= 0.0 ? cfg.rotate_rate : -cfg.rotate_rate};
  const bool backing = st.mode == Mode::recovery_backup && st.mode_time < cfg.backup_time;
  if (!backing && std::abs(err) > cfg.align_tolerance && mpc_collision_check(st, rot, per, cfg))
    return {rot, Mode::recovery_rotate};
  const Action back{cfg.backup_speed, 0.0};
  if (mpc_collision_check(st, back, per, cfg)) return {back, Mode::recovery_backup};
  // Neither is safe over the horizon: a single rotation step is the last resort.
  if (pose_safe(step_unicycle(st.pose, rot, cfg.dt), per, cfg)) return {rot, Mode::recovery_rotate};
  return {Action{0.0, 0.0}, st.mode == Mode::normal ? Mode::recovery_rotate : st.mode};
}

enum class Outcome { success, timeout, stuck };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::timeout: return "timeout";
    case Outcome::stuck: return "stuck";
  }
  return "?";
}

struct EpisodeResult {
  Outcome outcome = Outcome::stuck;
  double traversal_time = 0.0;
  std::size_t collision_count = 0;
  std::size_t recovery_activations = 0;
  std::size_t steps = 0;
  std::size_t replans = 0;
  std::vector<Pose> path;
};

// Sense, local goal, learned action, collision gate, recovery, integrate.
template <class Scalar>
EpisodeResult run_episode(const OccupancyGrid& world, const Mlp<Scalar>& model, const DeploymentConfig& cfg,
                          std::optional<Pose> start = std::nullopt) {
  EpisodeResult res;
  GlobalPlanner planner(world, cfg.planner);
  DeploymentState st;
  st.pose = start.value_or(world.start);
  res.path.push_back(st.pose);
  const int max_steps = static_cast<int>(std::llround(cfg.time_cap / cfg.dt));
  const int stall_steps = static_cast<int>(std::llround(cfg.stall_window / cfg.dt));
  for (int k = 0; k < max_steps; ++k) {
    const double now = k * cfg.dt;
    if (distance(st.pose.position(), world.goal.position()) <= cfg.goal_radius) {
      res.outcome = Outcome::success;
      res.traversal_time = now;
      break;
    }
    st.scan = simulate_lidar(world, st.pose, cfg.lidar);
    planner.perceive(st.scan, st.pose, cfg.lidar);
    planner.update(st.pose, now);
    if (!planner.reachable()) {
      res.outcome = Outcome::stuck;
      res.traversal_time = now;
      break;
    }
    const std::vector<Point2> pts = scan_points(st.scan, st.pose, cfg.lidar);
    const Perception per{&pts, &planner.known()};
    const Pose goal = planner.local_goal(st.pose);
    const Action learned = model.forward(encode_input(st.scan, st.pose, goal, cfg.lidar.max_range));
    Action act;
    if (mpc_collision_check(st, learned, per, cfg)) {
      act = learned;
      st.mode = Mode::normal;
      st.mode_time = 0.0;
    } else {
      if (st.mode == Mode::normal) ++res.recovery_activations;
      auto [a, m] = recovery_step(st, planner.tangent(st.pose), per, cfg);
      act = a;
      st.mode_time = m == st.mode ? st.mode_time + cfg.dt : 0.0;
      st.mode = m;
    }
    st.velocity = act;
    st.pose = step_unicycle(st.pose, act, cfg.dt);
    if (footprint_collides(world, st.pose, cfg.robot)) ++res.collision_count;
    res.path.push_back(st.pose);
    res.steps = static_cast<std::size_t>(k + 1);
    if (k + 1 >= stall_steps &&
        distance(res.path[res.path.size() - 1 - static_cast<std::size_t>(stall_steps)].position(), st.pose.position()) <
            cfg.stall_distance) {
      res.outcome = Outcome::stuck;
      res.traversal_time = (k + 1) * cfg.dt;
      break;
    }
    if (k + 1 == max_steps) {
      res.outcome = Outcome::timeout;
      res.traversal_time = cfg.time_cap;
    }
  }
  res.replans = planner.replans();
  return res;
}

// Mean clearance (m) from the cells of the shortest lattice path to the
// nearest occupied cell; smaller is harder.
inline double difficulty_proxy(const OccupancyGrid& g) {
  LatticeWorld w(g.resolution, g.width, g.height);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) w.set_blocked({x, y}, g.occ({x, y}));
  const LatticePath p = shortest_path(w, g.cell_of(g.start.position()), g.cell_of(g.goal.position()));
  if (!p.ok() || p.cells.empty()) return 0.0;
  double sum = 0.0;
  for (Cell c : p.cells) {
    double best = std::numeric_limits<double>::infinity();
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x)
        if (g.occ({x, y})) best = std::min(best, std::max(0.0, std::hypot(x - c.x, y - c.y) - 0.5) * g.resolution);
    sum += best;
  }
  return sum / static_cast<double>(p.cells.size());
}

// World text: header with resolution, size, start and goal, then one row of
// 0/1 characters per grid row, bottom row (y = 0) first.
inline void write_world(std::ostream& os, const OccupancyGrid& g) {
  std::string s = "hlsd-world 1 resolution ";
  textio::put(s, g.resolution);
  s += " width ";
  textio::put(s, static_cast<std::int64_t>(g.width));
  s += " height ";
  textio::put(s, static_cast<std::int64_t>(g.height));
  for (const auto& [name, p] : {std::pair{" start ", g.start}, std::pair{" goal ", g.goal}}) {
    s += name;
    textio::put(s, p.x);
    s += ' ';
    textio::put(s, p.y);
    s += ' ';
    textio::put(s, p.psi);
  }
  s += '\n';
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) s += g.occ({x, y}) ? '1' : '0';
    s += '\n';
  }
  os << s;
}

inline OccupancyGrid read_world(std::istream& is) {
  const std::string h = textio::read_line(is, "world header");
  textio::Tokens t(h);
  t.expect("hlsd-world");
  t.expect("1");
  t.expect("resolution");
  const double res = t.number();
  t.expect("width");
  const int w = t.integer<int>();
  t.expect("height");
  const int ht = t.integer<int>();
  OccupancyGrid g(res, w, ht);
  t.expect("start");
  g.start = {t.number(), t.number(), t.number()};
  t.expect("goal");
  g.goal = {t.number(), t.number(), t.number()};
  for (int y = 0; y < ht; ++y) {
    const std::string row = textio::read_line(is, "world row");
    if (static_cast<int>(row.size()) < w) throw std::runtime_error("read_world: short row");
    for (int x = 0; x < w; ++x) {
      if (row[static_cast<std::size_t>(x)] != '0' && row[static_cast<std::size_t>(x)] != '1')
        throw std::runtime_error("read_world: bad cell character");
      g.set({x, y}, row[static_cast<std::size_t>(x)] == '1');
    }
  }
  return g;
}

// Episode record: world seed, trial, outcome, time, recoveries, collisions.
inline std::string episode_record(std::uint64_t world_seed, int world_index, int trial, double fill_prob,
                                  double difficulty, const EpisodeResult& r) {
  std::string s = "world ";
  textio::put(s, static_cast<std::int64_t>(world_index));
  s += " seed ";
  textio::put(s, world_seed);
  s += " fill ";
  textio::put_fixed(s, fill_prob, 4);
  s += " difficulty ";
  textio::put_fixed(s, difficulty, 4);
  s += " trial ";
  textio::put(s, static_cast<std::int64_t>(trial));
  s += " outcome ";
  s += to_string(r.outcome);
  s += " time ";
  textio::put_fixed(s, r.traversal_time, 2);
  s += " recoveries ";
  textio::put(s, static_cast<std::uint64_t>(r.recovery_activations));
  s += " collisions ";
  textio::put(s, static_cast<std::uint64_t>(r.collision_count));
  s += '\n';
  return s;
}

// Trajectory overlay as SVG: occupied cells, start, goal and the path.
inline void write_svg(std::ostream& os, const OccupancyGrid& g, const std::vector<std::vector<Pose>>& paths) {
  const double px = 20.0;  // pixels per cell
  const double W = g.width * px, H = g.height * px;
  auto X = [&](double x) { return x / g.resolution * px; };
  auto Y = [&](double y) { return H - y / g.resolution * px; };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  textio::put(s, W);
  s += "\" height=\"";
  textio::put(s, H);
  s += "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (g.occ({x, y})) {
        s += "<rect x=\"";
        textio::put(s, x * px);
        s += "\" y=\"";
        textio::put(s, H - (y + 1) * px);
        s += "\" width=\"";
        textio::put(s, px);
        s += "\" height=\"";
        textio::put(s, px);
        s += "\" fill=\"#444\"/>\n";
      }
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t k = 0; k < paths.size(); ++k) {
    s += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"";
    s += colors[k % 5];
    s += "\" points=\"";
    for (const Pose& p : paths[k]) {
      textio::put_fixed(s, X(p.x), 1);
      s += ',';
      textio::put_fixed(s, Y(p.y), 1);
      s += ' ';
    }
    s += "\"/>\n";
  }
  for (const auto& [p, c] : {std::pair{g.start, "green"}, std::pair{g.goal, "blue"}}) {
    s += "<circle r=\"6\" fill=\"";
    s += c;
    s += "\" cx=\"";
    textio::put_fixed(s, X(p.x), 1);
    s += "\" cy=\"";
    textio::put_fixed(s, Y(p.y), 1);
    s += "\"/>\n";
  }
  s += "</svg>\n";
  os << s;
}

}  // namespace hlsd
