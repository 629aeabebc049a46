#pragma once

// Unicycle kinematics, the random exploration policy and the raw open-space
// dataset it produces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsd/geometry.hpp"
#include "hlsd/rng.hpp"
#include "hlsd/textio.hpp"

namespace hlsd {

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

struct Action {
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s
  friend bool operator==(const Action&, const Action&) = default;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  Point2 position() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

inline Pose step_unicycle(const Pose& p, const Action& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_unicycle: dt must be > 0");
  return {p.x + u.v * std::cos(p.psi) * dt, p.y + u.v * std::sin(p.psi) * dt, wrap_angle(p.psi + u.w * dt)};
}

struct ExplorationConfig {
  double dt = 0.05;
  double a_max = 2.0;        // m/s^2
  double alpha_max = 3.14;   // rad/s^2
  double v_min = 0.0;
  double v_max = 1.0;
  double w_max = 1.57;
  double keep_prob = 0.9;
  double robot_width = 0.43;
  double goal_radius = 0.1;
  double omega_eps = 1e-3;
  double goal_distance = 1.0;  // path length to the local goal
  double window = 10.0;        // s of future trail searched for the local goal
};

// pi_rand: ramps toward a random (v, w) target at bounded rates; once there,
// keeps the target with probability keep_prob per step, else redraws it.
class RandomPolicy {
 public:
  RandomPolicy(const ExplorationConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) { draw_target(); }

  Action current() const { return cur_; }
  Action target() const { return target_; }

  // Test hook: force the state.
  void set_state(Action current, Action target) {
    cur_ = current;
    target_ = target;
  }

  Action step() {
    if (cur_ == target_ && !rng_.bernoulli(cfg_.keep_prob)) draw_target();
    cur_.v = approach(cur_.v, target_.v, cfg_.a_max * cfg_.dt);
    cur_.w = approach(cur_.w, target_.w, cfg_.alpha_max * cfg_.dt);
    cur_.v = std::clamp(cur_.v, cfg_.v_min, cfg_.v_max);
    cur_.w = std::clamp(cur_.w, -cfg_.w_max, cfg_.w_max);
    return cur_;
  }

 private:
  static double approach(double from, double to, double max_step) {
    if (std::abs(to - from) <= max_step) return to;
    return from + (to > from ? max_step : -max_step);
  }

  void draw_target() {
    target_.v = rng_.uniform(cfg_.v_min, cfg_.v_max);
    target_.w = rng_.uniform(-cfg_.w_max, cfg_.w_max);
  }

  ExplorationConfig cfg_;
  Rng rng_;
  Action cur_{};
  Action target_{};
};

struct RawDatum {
  Action plan;                 // action executed at c_c
  Pose c_c;
  Pose c_g;                    // heading recorded, ignorable
  std::vector<Pose> trail;     // c_c ... c_g
  std::vector<Action> trail_actions;  // trail_actions[i] takes trail[i] to trail[i+1]
};

struct CollectResult {
  std::vector<RawDatum> data;
  std::size_t steps = 0;
  std::size_t dropped = 0;
  bool too_short = false;  // duration shorter than the goal search window
};

// Rolls pi_rand out in free space from the origin and emits one datum per
// step whose trail reaches goal_distance of path length within the window.
inline CollectResult collect_raw(RandomPolicy& policy, double duration, const ExplorationConfig& cfg) {
  CollectResult out;
  if (duration < cfg.window) {
    out.too_short = true;
    return out;
  }
  const auto n = static_cast<std::size_t>(std::llround(duration / cfg.dt));
  out.steps = n;
  std::vector<Pose> poses{Pose{}};
  std::vector<Action> actions;
  poses.reserve(n + 1);
  actions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    actions.push_back(policy.step());
    poses.push_back(step_unicycle(poses.back(), actions.back(), cfg.dt));
  }
  std::vector<double> arc(n + 1, 0.0);  // cumulative path length
  for (std::size_t i = 1; i <= n; ++i) arc[i] = arc[i - 1] + distance(poses[i - 1].position(), poses[i].position());

  const auto window = static_cast<std::size_t>(std::llround(cfg.window / cfg.dt));
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t last = std::min(n, t + window);
    const double want = arc[t] + cfg.goal_distance;
    const auto it = std::lower_bound(arc.begin() + t, arc.begin() + last + 1, want);
    if (it == arc.begin() + last + 1) {
      ++out.dropped;
      continue;
    }
    auto k = static_cast<std::size_t>(it - arc.begin());
    if (k > t + 1 && want - arc[k - 1] < arc[k] - want) --k;
    RawDatum d;
    d.plan = actions[t];
    d.c_c = poses[t];
    d.c_g = poses[k];
    d.trail.assign(poses.begin() + t, poses.begin() + k + 1);
    d.trail_actions.assign(actions.begin() + t, actions.begin() + k);
    out.data.push_back(std::move(d));
  }
  return out;
}

struct FootprintPair {
  Point2 left;
  Point2 right;
};

inline FootprintPair footprints(const Pose& p, double robot_width) {
  if (!(robot_width > 0.0)) throw std::invalid_argument("footprints: robot_width must be > 0");
  const double h = 0.5 * robot_width;
  const Point2 n{-std::sin(p.psi), std::cos(p.psi)};
  return {p.position() + h * n, p.position() - h * n};
}

// Same-side footprint triples around every turning pose. The angular rate at
// pose i is the heading change to pose i+1 over dt.
inline std::vector<TurnTriple> extract_turn_triples(const std::vector<Pose>& trail, double dt, double robot_width,
                                                    double omega_eps = 1e-3) {
  if (trail.size() < 3) throw std::invalid_argument("extract_turn_triples: trail needs at least 3 poses");
  std::vector<TurnTriple> out;
  for (std::size_t i = 1; i + 1 < trail.size(); ++i) {
    const double w = wrap_angle(trail[i + 1].psi - trail[i].psi) / dt;
    if (std::abs(w) <= omega_eps) continue;
    const bool left = w > 0.0;
    auto side = [&](const Pose& p) {
      const FootprintPair f = footprints(p, robot_width);
      return left ? f.left : f.right;
    };
    if (auto t = TurnTriple::make(side(trail[i - 1]), side(trail[i]), side(trail[i + 1]))) out.push_back(*t);
  }
  return out;
}

// D_raw text format: a header line, then one line per datum with
// c_c, c_g, v, w, trail length, trail poses, trail actions.
inline void write_raw(std::ostream& os, const std::vector<RawDatum>& data, std::uint64_t seed, double dt) {
  std::string line = "hlsd-raw 1 seed ";
  textio::put(line, seed);
  line += " dt ";
  textio::put(line, dt);
  line += " count ";
  textio::put(line, static_cast<std::uint64_t>(data.size()));
  line += '\n';
  os << line;
  for (const auto& d : data) {
    line.clear();
    auto pose = [&](const Pose& p) {
      textio::put(line, p.x);
      line += ' ';
      textio::put(line, p.y);
      line += ' ';
      textio::put(line, p.psi);
    };
    pose(d.c_c);
    line += ' ';
    pose(d.c_g);
    line += ' ';
    textio::put(line, d.plan.v);
    line += ' ';
    textio::put(line, d.plan.w);
    line += ' ';
    textio::put(line, static_cast<std::uint64_t>(d.trail.size()));
    for (const auto& p : d.trail) {
      line += ' ';
      pose(p);
    }
    for (const auto& a : d.trail_actions) {
      line += ' ';
      textio::put(line, a.v);
      line += ' ';
      textio::put(line, a.w);
    }
    line += '\n';
    os << line;
  }
}

struct RawFile {
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::vector<RawDatum> data;
};

inline RawFile read_raw(std::istream& is) {
  RawFile f;
  {
    const std::string h = textio::read_line(is, "raw header");
    textio::Tokens t(h);
    t.expect("hlsd-raw");
    t.expect("1");
    t.expect("seed");
    f.seed = t.integer<std::uint64_t>();
    t.expect("dt");
    f.dt = t.number();
    t.expect("count");
    f.data.resize(t.integer<std::size_t>());
  }
  for (auto& d : f.data) {
    const std::string line = textio::read_line(is, "raw record");
    textio::Tokens t(line);
    auto pose = [&] {
      Pose p;
      p.x = t.number();
      p.y = t.number();
      p.psi = t.number();
      return p;
    };
    d.c_c = pose();
    d.c_g = pose();
    d.plan.v = t.number();
    d.plan.w = t.number();
    const auto n = t.integer<std::size_t>();
    if (n < 1) throw std::runtime_error("read_raw: empty trail");
    d.trail.resize(n);
    for (auto& p : d.trail) p = pose();
    d.trail_actions.resize(n - 1);
    for (auto& a : d.trail_actions) {
      a.v = t.number();
      a.w = t.number();
    }
    if (!t.done()) throw std::runtime_error("read_raw: trailing fields");
  }
  return f;
}

}  // namespace hlsd
