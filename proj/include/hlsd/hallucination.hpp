#pragma once

// Minimal hallucination: per-beam LiDAR range envelopes from a trail recorded
// in open space, and the scan sampler that fills them.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hlsd/exploration.hpp"
#include "hlsd/geometry.hpp"
#include "hlsd/rng.hpp"
#include "hlsd/lattice.hpp"
#include "hlsd/textio.hpp"

namespace hlsd {

struct LidarSpec {
  int beam_count = 720;
  double fov = 270.0 * M_PI / 180.0;
  double max_range = 1.0;

  void validate() const {
    if (beam_count < 2) throw std::invalid_argument("LidarSpec: beam_count must be >= 2");
    if (!(fov > 0.0 && fov <= 2.0 * M_PI)) throw std::invalid_argument("LidarSpec: fov must be in (0, 2pi]");
    if (!(max_range > 0.0)) throw std::invalid_argument("LidarSpec: max_range must be > 0");
  }
  // Beam angle relative to the heading; beam 0 is the rightmost.
  double beam_angle(int i) const { return -0.5 * fov + fov * i / (beam_count - 1); }
};

struct LidarEnvelope {
  std::vector<double> min;
  std::vector<double> max;
  std::size_t flagged = 0;  // beams whose max was raised to min
};

struct HallucinatedSetUnion {
  std::vector<Segment2> segments;  // one representative set per turn triple
  std::vector<Point2> left;        // footprint boundary, one vertex per trail pose
  std::vector<Point2> right;
};

struct HallucinationConfig {
  double robot_width = 0.43;
  double dt = 0.05;
  double omega_eps = 1e-3;
  int sampling_count = 10;
  double alpha = 0.48;
  double delta_max = 0.05;  // bound of the +-delta continuation step
  double offset_v_lo = 0.3;
  double offset_v_hi = 1.0;
  double offset_max = 1.0;
  double empty_v = 0.8;        // above: empty-space augmentation
  double constrained_v = 0.3;  // below: most-constrained augmentation
  LidarSpec lidar{};
};

// o(p | c_c, c_g): representative minimal sets of every turn triple along the
// trail plus the footprint corridor boundary.
inline HallucinatedSetUnion hallucinate_min(const RawDatum& d, const HallucinationConfig& cfg) {
  HallucinatedSetUnion u;
  for (const auto& p : d.trail) {
    const FootprintPair f = footprints(p, cfg.robot_width);
    u.left.push_back(f.left);
    u.right.push_back(f.right);
  }
  if (d.trail.size() >= 3) {
    for (const auto& t : extract_turn_triples(d.trail, cfg.dt, cfg.robot_width, cfg.omega_eps))
      u.segments.push_back(representative_min_set(t));
  }
  return u;
}

// The swept footprint region as triangles: each step between trail poses i
// and i+1 contributes (l_i, l_i+1, r_i+1) and (l_i, r_i+1, r_i).
inline std::vector<std::array<Point2, 3>> corridor_triangles(const HallucinatedSetUnion& u) {
  std::vector<std::array<Point2, 3>> tris;
  for (std::size_t i = 0; i + 1 < u.left.size(); ++i) {
    tris.push_back({u.left[i], u.left[i + 1], u.right[i + 1]});
    tris.push_back({u.left[i], u.right[i + 1], u.right[i]});
  }
  return tris;
}

// True when p is inside the triangle by more than tol.
inline bool strictly_inside_triangle(Point2 p, const std::array<Point2, 3>& t, double tol = 1e-9) {
  const double area = cross(t[1] - t[0], t[2] - t[0]);
  if (std::abs(area) < 1e-18) return false;
  const double s = area > 0.0 ? 1.0 : -1.0;
  for (int k = 0; k < 3; ++k) {
    const Point2 a = t[k], b = t[(k + 1) % 3];
    const double len = distance(a, b);
    if (len < 1e-15) return false;
    if (s * cross(b - a, p - a) / len <= tol) return false;
  }
  return true;
}

inline bool strictly_inside_corridor(Point2 p, const std::vector<std::array<Point2, 3>>& tris, double tol = 1e-9) {
  return std::any_of(tris.begin(), tris.end(), [&](const auto& t) { return strictly_inside_triangle(p, t, tol); });
}

namespace detail {

// Beam index range [lo, hi] that may see the points pts from the sensor.
// Returns false when none can; all beams when the points surround the sensor.
template <std::size_t N>
bool beam_span(const std::array<Point2, N>& pts, const Pose& sensor, const LidarSpec& s, int& lo, int& hi,
               bool surrounds) {
  if (surrounds) {
    lo = 0;
    hi = s.beam_count - 1;
    return true;
  }
  std::array<double, N> ang;
  for (std::size_t k = 0; k < N; ++k) {
    const Point2 d = pts[k] - sensor.position();
    if (norm(d) < 1e-12) {
      lo = 0;
      hi = s.beam_count - 1;
      return true;
    }
    ang[k] = wrap_angle(std::atan2(d.y, d.x) - sensor.psi);
  }
  std::sort(ang.begin(), ang.end());
  // Smallest arc containing all angles: complement of the largest gap.
  double best_gap = ang[0] + 2.0 * M_PI - ang[N - 1];
  double start = ang[0], end = ang[N - 1];
  for (std::size_t k = 0; k + 1 < N; ++k) {
    const double gap = ang[k + 1] - ang[k];
    if (gap > best_gap) {
      best_gap = gap;
      start = ang[k + 1];
      end = ang[k] + 2.0 * M_PI;
    }
  }
  const double step = s.fov / (s.beam_count - 1);
  const double half = 0.5 * s.fov;
  // The arc may wrap; test both unwrapped copies against the fov.
  lo = s.beam_count;
  hi = -1;
  for (double shift : {-2.0 * M_PI, 0.0, 2.0 * M_PI}) {
    const double a0 = start + shift, a1 = end + shift;
    if (a1 < -half - 1e-12 || a0 > half + 1e-12) continue;
    const int i0 = std::max(0, static_cast<int>(std::floor((a0 + half) / step)));
    const int i1 = std::min(s.beam_count - 1, static_cast<int>(std::ceil((a1 + half) / step)));
    lo = std::min(lo, i0);
    hi = std::max(hi, i1);
  }
  return lo <= hi;
}

// Parameter interval [t0, t1] where origin + t*dir lies in the closed
// triangle, if any.
inline bool ray_triangle_interval(Point2 o, Point2 dir, const std::array<Point2, 3>& tri, double& t0, double& t1) {
  const double area = cross(tri[1] - tri[0], tri[2] - tri[0]);
  if (std::abs(area) < 1e-18) return false;
  const double s = area > 0.0 ? 1.0 : -1.0;
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const Point2 a = tri[k], b = tri[(k + 1) % 3];
    // inside: s * cross(b - a, p - a) >= 0, p = o + t dir
    const double c0 = s * cross(b - a, o - a);
    const double c1 = s * cross(b - a, dir);
    if (std::abs(c1) < 1e-18) {
      if (c0 < 0.0) return false;
      continue;
    }
    const double t = -c0 / c1;
    if (c1 > 0.0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
  }
  return t0 <= t1;
}

}  // namespace detail

// Per-beam [min, max]: min is the farthest range along the beam that is still
// inside the swept footprint corridor (0 if the beam never enters it), max is
// the first hit on a hallucinated set (max_range if none). Where the order is
// reversed max is raised to min and the beam counted in flagged.
inline LidarEnvelope envelope(const HallucinatedSetUnion& u, const LidarSpec& s, const Pose& sensor) {
  s.validate();
  LidarEnvelope e;
  e.min.assign(s.beam_count, 0.0);
  e.max.assign(s.beam_count, s.max_range);
  std::vector<Point2> dirs(s.beam_count);
  for (int i = 0; i < s.beam_count; ++i) {
    const double a = sensor.psi + s.beam_angle(i);
    dirs[i] = {std::cos(a), std::sin(a)};
  }
  const Point2 o = sensor.position();
  for (const auto& tri : corridor_triangles(u)) {
    int lo = 0, hi = 0;
    const bool surrounds = strictly_inside_triangle(o, tri, 0.0);
    if (!detail::beam_span(tri, sensor, s, lo, hi, surrounds)) continue;
    for (int i = lo; i <= hi; ++i) {
      double t0, t1;
      if (detail::ray_triangle_interval(o, dirs[i], tri, t0, t1)) e.min[i] = std::max(e.min[i], std::min(t1, s.max_range));
    }
  }
  for (const auto& seg : u.segments) {
    int lo = 0, hi = 0;
    const std::array<Point2, 2> pts{seg.a(), seg.b()};
    if (!detail::beam_span(pts, sensor, s, lo, hi, false)) continue;
    for (int i = lo; i <= hi; ++i) {
      if (auto t = ray_segment_hit(o, dirs[i], seg.a(), seg.b())) e.max[i] = std::min(e.max[i], *t);
    }
  }
  for (int i = 0; i < s.beam_count; ++i) {
    if (e.max[i] < e.min[i]) {
      e.max[i] = e.min[i];
      ++e.flagged;
    }
  }
  return e;
}

// Linear map of v from [v_lo, v_hi] onto [0, offset_max], saturating.
inline double offset(double v, double v_lo = 0.3, double v_hi = 1.0, double offset_max = 1.0) {
  if (v <= v_lo) return 0.0;
  if (v >= v_hi) return offset_max;
  return offset_max * (v - v_lo) / (v_hi - v_lo);
}

inline double offset(const std::vector<Action>& plan, const HallucinationConfig& cfg) {
  return plan.empty() ? 0.0 : offset(plan.front().v, cfg.offset_v_lo, cfg.offset_v_hi, cfg.offset_max);
}

// Beam-by-beam sampler: fresh uniform draws plus offset, or with probability
// alpha each a +-delta continuation of the previous beam; clamped per beam.
inline std::vector<double> sample_scan(const LidarEnvelope& env, double off, double alpha, double delta_max, Rng& rng) {
  if (!(alpha >= 0.0 && alpha <= 0.5)) throw std::invalid_argument("sample_scan: alpha must be in [0, 0.5]");
  const std::size_t n = env.min.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double l;
    const double r = i == 0 ? 1.0 : rng.uniform();
    if (r < alpha) l = out[i - 1] + rng.uniform(0.0, delta_max);
    else if (r < 2.0 * alpha) l = out[i - 1] - rng.uniform(0.0, delta_max);
    else l = rng.uniform(env.min[i], env.max[i]) + off;
    out[i] = std::clamp(l, env.min[i], env.max[i]);
  }
  return out;
}

// Same, with the offset taken from the plan's speed.
inline std::vector<double> sample_scan(const LidarEnvelope& env, const std::vector<Action>& plan,
                                       const HallucinationConfig& cfg, Rng& rng) {
  return sample_scan(env, offset(plan, cfg), cfg.alpha, cfg.delta_max, rng);
}

struct TrainDatum {
  std::vector<double> scan;
  std::vector<Action> plan;
  Pose c_c;
  Pose c_g;
};

struct AugmentStats {
  std::size_t empty_scans = 0;        // all-max_range augmentations
  std::size_t constrained_scans = 0;  // per-beam min augmentations
  std::size_t flagged_beams = 0;
};

// All training data derived from one raw datum. Slots: sampling_count samples,
// then an empty-space slot and a most-constrained slot, each falling back to a
// fresh sample when its speed condition does not hold.
inline std::vector<TrainDatum> augment_datum(const RawDatum& d, const HallucinationConfig& cfg, std::uint64_t seed,
                                             std::size_t index, AugmentStats* stats = nullptr) {
  Rng rng(derive_seed(seed, index));
  const HallucinatedSetUnion u = hallucinate_min(d, cfg);
  const LidarEnvelope env = envelope(u, cfg.lidar, d.c_c);
  const std::vector<Action> plan{d.plan};
  const double off = offset(plan, cfg);
  std::vector<TrainDatum> out;
  out.reserve(cfg.sampling_count + 2);
  auto emit = [&](std::vector<double> scan) { out.push_back(TrainDatum{std::move(scan), plan, d.c_c, d.c_g}); };
  for (int k = 0; k < cfg.sampling_count; ++k) emit(sample_scan(env, off, cfg.alpha, cfg.delta_max, rng));
  if (d.plan.v > cfg.empty_v) {
    emit(std::vector<double>(env.min.size(), cfg.lidar.max_range));
    if (stats) ++stats->empty_scans;
  } else {
    emit(sample_scan(env, off, cfg.alpha, cfg.delta_max, rng));
  }
  if (d.plan.v < cfg.constrained_v) {
    emit(env.min);
    if (stats) ++stats->constrained_scans;
  } else {
    emit(sample_scan(env, off, cfg.alpha, cfg.delta_max, rng));
  }
  if (stats) stats->flagged_beams += env.flagged;
  return out;
}

// Augments every raw datum; threads split the data into contiguous
// chunks, and per-datum seeds make the result independent of the split.
inline std::vector<TrainDatum> augment_dataset(const std::vector<RawDatum>& raw, const HallucinationConfig& cfg,
                                               std::uint64_t seed, AugmentStats* stats = nullptr,
                                               unsigned threads = 1) {
  if (raw.empty()) throw std::invalid_argument("augment_dataset: empty raw dataset");
  if (cfg.sampling_count < 1) throw std::invalid_argument("augment_dataset: sampling_count must be >= 1");
  const std::size_t per = static_cast<std::size_t>(cfg.sampling_count) + 2;
  std::vector<TrainDatum> out(raw.size() * per);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(raw.size())));
  std::vector<AugmentStats> part(threads);
  auto work = [&](unsigned w) {
    const std::size_t b = raw.size() * w / threads, e = raw.size() * (w + 1) / threads;
    for (std::size_t i = b; i < e; ++i) {
      auto v = augment_datum(raw[i], cfg, seed, i, &part[w]);
      std::move(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (stats) {
    for (const auto& p : part) {
      stats->empty_scans += p.empty_scans;
      stats->constrained_scans += p.constrained_scans;
      stats->flagged_beams += p.flagged_beams;
    }
  }
  return out;
}

// D_train text: header line, then per datum the ranges (4 decimals), v, w,
// c_c and c_g.
inline void write_train(std::ostream& os, const std::vector<TrainDatum>& data) {
  const std::size_t beams = data.empty() ? 0 : data.front().scan.size();
  std::string line = "hlsd-train 1 count ";
  textio::put(line, static_cast<std::uint64_t>(data.size()));
  line += " beams ";
  textio::put(line, static_cast<std::uint64_t>(beams));
  line += '\n';
  os << line;
  for (const auto& d : data) {
    line.clear();
    for (double r : d.scan) {
      textio::put_fixed(line, r, 4);
      line += ' ';
    }
    const Action a = d.plan.empty() ? Action{} : d.plan.front();
    for (double v : {a.v, a.w, d.c_c.x, d.c_c.y, d.c_c.psi, d.c_g.x, d.c_g.y, d.c_g.psi}) {
      textio::put(line, v);
      line += ' ';
    }
    line.back() = '\n';
    os << line;
  }
}

inline std::vector<TrainDatum> read_train(std::istream& is) {
  const std::string h = textio::read_line(is, "train header");
  textio::Tokens t(h);
  t.expect("hlsd-train");
  t.expect("1");
  t.expect("count");
  const auto n = t.integer<std::size_t>();
  t.expect("beams");
  const auto beams = t.integer<std::size_t>();
  std::vector<TrainDatum> data(n);
  std::string line;
  for (auto& d : data) {
    line = textio::read_line(is, "train record");
    textio::Tokens r(line);
    d.scan.resize(beams);
    for (auto& v : d.scan) v = r.number();
    Action a;
    a.v = r.number();
    a.w = r.number();
    d.plan = {a};
    d.c_c = {r.number(), r.number(), r.number()};
    d.c_g = {r.number(), r.number(), r.number()};
    if (!r.done()) throw std::runtime_error("read_train: trailing fields");
  }
  return data;
}

struct TrainManifest {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  int sampling_count = 0;
  double delta_max = 0.0;
  double robot_width = 0.0;
  std::size_t raw_count = 0;
  std::size_t train_count = 0;
  AugmentStats stats;
};

inline void write_manifest(std::ostream& os, const TrainManifest& m) {
  std::string s;
  auto kv = [&](const char* k, auto v) {
    s += k;
    s += " = ";
    if constexpr (std::is_floating_point_v<decltype(v)>) textio::put(s, static_cast<double>(v));
    else textio::put(s, static_cast<std::uint64_t>(v));
    s += '\n';
  };
  kv("seed", m.seed);
  kv("alpha", m.alpha);
  kv("sampling_count", m.sampling_count);
  kv("delta_max", m.delta_max);
  kv("robot_width", m.robot_width);
  kv("raw_count", m.raw_count);
  kv("train_count", m.train_count);
  kv("empty_scans", m.stats.empty_scans);
  kv("constrained_scans", m.stats.constrained_scans);
  kv("flagged_beams", m.stats.flagged_beams);
  os << s;
}

struct WitnessResult {
  bool reachable = false;
  double hausdorff = 0.0;  // m, between the oracle path and the trail
};

inline double distance_to_polyline(Point2 p, const std::vector<Point2>& poly) {
  if (poly.size() == 1) return distance(p, poly.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) best = std::min(best, point_segment_distance(p, poly[i], poly[i + 1]));
  return best;
}

// Near-optimality of the recorded motion under a sampled scan: beam endpoints
// short of max_range become blocked lattice cells (grown by inflate), and the
// oracle's shortest path c_c -> c_g is compared with the trail.
inline WitnessResult optimality_witness(const RawDatum& d, const std::vector<double>& scan, const HallucinationConfig& cfg,
                                        double resolution = 0.025, double inflate = 0.0) {
  double xmin = d.c_c.x, xmax = d.c_c.x, ymin = d.c_c.y, ymax = d.c_c.y;
  for (const Pose& p : d.trail) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double m = cfg.lidar.max_range + 0.3;
  const Point2 origin{xmin - m, ymin - m};
  LatticeWorld w(resolution, static_cast<int>(std::ceil((xmax - xmin + 2 * m) / resolution)),
                 static_cast<int>(std::ceil((ymax - ymin + 2 * m) / resolution)), origin);
  const int r = static_cast<int>(std::ceil(inflate / resolution)) + 1;
  for (int i = 0; i < cfg.lidar.beam_count; ++i) {
    const double range = scan[static_cast<std::size_t>(i)];
    if (range >= cfg.lidar.max_range) continue;
    const double a = d.c_c.psi + cfg.lidar.beam_angle(i);
    const Point2 p{d.c_c.x + range * std::cos(a), d.c_c.y + range * std::sin(a)};
    const Cell c = w.cell_of(p);
    w.set_blocked(c, true);
    for (int dy = -r; dy <= r && inflate > 0.0; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (distance(w.center({c.x + dx, c.y + dy}), p) <= inflate) w.set_blocked({c.x + dx, c.y + dy}, true);
  }
  const Cell s = w.cell_of(d.c_c.position()), g = w.cell_of(d.c_g.position());
  w.set_blocked(s, false);
  w.set_blocked(g, false);
  WitnessResult out;
  const LatticePath path = shortest_path(w, s, g);
  out.reachable = path.ok();
  if (!out.reachable) return out;
  std::vector<Point2> trail, cells;
  for (const Pose& p : d.trail) trail.push_back(p.position());
  for (Cell c : path.cells) cells.push_back(w.center(c));
  for (Point2 p : cells) out.hausdorff = std::max(out.hausdorff, distance_to_polyline(p, trail));
  for (Point2 p : trail) out.hausdorff = std::max(out.hausdorff, distance_to_polyline(p, cells));
  return out;
}

}  // namespace hlsd
