#pragma once

// Brute-force shortest paths on a fine occupancy lattice. Used as the
// independent oracle for the minimal-unreachable-set geometry.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsd/geometry.hpp"

namespace hlsd {

struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

// Exact 8-connected path cost: straight + diagonal * sqrt(2), in cells.
struct LatticeCost {
  std::int64_t straight = 0;
  std::int64_t diagonal = 0;

  double cells() const { return static_cast<double>(straight) + std::sqrt(2.0) * static_cast<double>(diagonal); }

  friend LatticeCost operator+(LatticeCost a, LatticeCost b) {
    return {a.straight + b.straight, a.diagonal + b.diagonal};
  }
  friend bool operator==(const LatticeCost& a, const LatticeCost& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }
  // Exact comparison of a1 + b1*sqrt2 against a2 + b2*sqrt2.
  friend std::strong_ordering operator<=>(const LatticeCost& l, const LatticeCost& r) {
    const std::int64_t da = l.straight - r.straight;
    const std::int64_t db = r.diagonal - l.diagonal;  // compare da with db*sqrt2
    if (da == 0 && db == 0) return std::strong_ordering::equal;
    if (da <= 0 && db >= 0) return std::strong_ordering::less;
    if (da >= 0 && db <= 0) return std::strong_ordering::greater;
    const std::int64_t lhs = da * da, rhs = 2 * db * db;
    if (da > 0) return lhs < rhs ? std::strong_ordering::less : std::strong_ordering::greater;
    return lhs > rhs ? std::strong_ordering::less : std::strong_ordering::greater;
  }
};

inline LatticeCost octile(Cell a, Cell b) {
  const std::int64_t dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
  return {std::max(dx, dy) - std::min(dx, dy), std::min(dx, dy)};
}

class LatticeWorld {
 public:
  LatticeWorld(double resolution, int width, int height, Point2 origin = {})
      : resolution_(resolution), width_(width), height_(height), origin_(origin),
        blocked_(static_cast<std::size_t>(width) * height, 0) {
    if (!(resolution > 0.0)) throw std::invalid_argument("LatticeWorld: resolution must be > 0");
    if (width <= 0 || height <= 0) throw std::invalid_argument("LatticeWorld: empty lattice");
  }

  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }
  Point2 origin() const { return origin_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  Cell cell_at(std::size_t i) const { return {static_cast<int>(i % width_), static_cast<int>(i / width_)}; }

  bool blocked(Cell c) const { return !in_bounds(c) || blocked_[index(c)] != 0; }
  void set_blocked(Cell c, bool value) {
    if (in_bounds(c)) blocked_[index(c)] = value ? 1 : 0;
  }

  Cell cell_of(Point2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }
  Point2 center(Cell c) const {
    return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
  }

 private:
  double resolution_;
  int width_;
  int height_;
  Point2 origin_;
  std::vector<std::uint8_t> blocked_;
};

enum class PathStatus { ok, unreachable, invalid };

inline const char* to_string(PathStatus s) {
  switch (s) {
    case PathStatus::ok: return "ok";
    case PathStatus::unreachable: return "unreachable";
    case PathStatus::invalid: return "invalid";
  }
  return "?";
}

struct LatticePath {
  PathStatus status = PathStatus::invalid;
  std::vector<Cell> cells;
  LatticeCost cost;
  double length = 0.0;  // meters

  bool ok() const { return status == PathStatus::ok; }
  bool passes_near(Cell c, int radius = 1) const {
    return std::any_of(cells.begin(), cells.end(), [&](Cell p) { return chebyshev(p, c) <= radius; });
  }
};

// A* over the 8-connected lattice with the exact octile heuristic. Diagonal
// moves may not cut a blocked corner. Ties are broken by (f, h, cell index)
// so repeated runs agree.
inline LatticePath shortest_path(const LatticeWorld& world, Cell start, Cell goal) {
  LatticePath out;
  if (world.blocked(start) || world.blocked(goal)) {
    out.status = PathStatus::invalid;
    return out;
  }
  const std::size_t n = static_cast<std::size_t>(world.width()) * world.height();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<LatticeCost> g(n);
  std::vector<std::uint8_t> seen(n, 0), closed(n, 0);
  std::vector<std::size_t> parent(n, kNone);

  struct Entry {
    LatticeCost f, h;
    std::size_t idx;
    bool operator>(const Entry& o) const {
      if (auto c = f <=> o.f; c != 0) return c > 0;
      if (auto c = h <=> o.h; c != 0) return c > 0;
      return idx > o.idx;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const std::size_t s = world.index(start), t = world.index(goal);
  seen[s] = 1;
  open.push({octile(start, goal), octile(start, goal), s});
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (closed[e.idx]) continue;
    closed[e.idx] = 1;
    if (e.idx == t) break;
    const Cell c = world.cell_at(e.idx);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const Cell nb{c.x + dx, c.y + dy};
        if (world.blocked(nb)) continue;
        const bool diag = dx != 0 && dy != 0;
        if (diag && (world.blocked({c.x + dx, c.y}) || world.blocked({c.x, c.y + dy}))) continue;
        const std::size_t ni = world.index(nb);
        if (closed[ni]) continue;
        const LatticeCost step = diag ? LatticeCost{0, 1} : LatticeCost{1, 0};
        const LatticeCost cand = g[e.idx] + step;
        if (!seen[ni] || cand < g[ni]) {
          seen[ni] = 1;
          g[ni] = cand;
          parent[ni] = e.idx;
          const LatticeCost h = octile(nb, goal);
          open.push({cand + h, h, ni});
        }
      }
    }
  }
  if (!closed[t]) {
    out.status = PathStatus::unreachable;
    return out;
  }
  for (std::size_t i = t; i != kNone; i = parent[i]) out.cells.push_back(world.cell_at(i));
  std::reverse(out.cells.begin(), out.cells.end());
  out.status = PathStatus::ok;
  out.cost = g[t];
  out.length = g[t].cells() * world.resolution();
  return out;
}

// Thin 8-connected rasterization of a segment: one cell per step along the
// major axis, the minor coordinate rounded to the nearest cell center. The
// first half is rounded from a, the second half from b, with exact ties
// resolved toward the far end, so the result does not depend on the segment
// direction and is symmetric under point reflection through its midpoint.
inline std::vector<Cell> rasterize_segment(const LatticeWorld& world, const Segment2& seg) {
  const double r = world.resolution();
  const Point2 o = world.origin();
  const double ax = (seg.a().x - o.x) / r - 0.5, ay = (seg.a().y - o.y) / r - 0.5;
  const double bx = (seg.b().x - o.x) / r - 0.5, by = (seg.b().y - o.y) / r - 0.5;
  const bool x_major = std::abs(bx - ax) >= std::abs(by - ay);
  const double a_major = x_major ? ax : ay, b_major = x_major ? bx : by;
  const double a_minor = x_major ? ay : ax, b_minor = x_major ? by : bx;
  const int i0 = static_cast<int>(std::lround(a_major)), i1 = static_cast<int>(std::lround(b_major));
  const int n = std::abs(i1 - i0);
  const int step = i1 >= i0 ? 1 : -1;
  const double span = b_major - a_major;

  auto round_toward = [](double v, double dir) {
    const double fl = std::floor(v);
    const double frac = v - fl;
    if (std::abs(frac - 0.5) < 1e-9) return static_cast<int>(dir >= 0.0 ? fl + 1.0 : fl);
    return static_cast<int>(std::lround(v));
  };

  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const int i = i0 + step * k;
    double frac = span != 0.0 ? (i - a_major) / span : 0.0;
    frac = std::clamp(frac, 0.0, 1.0);
    const double v = a_minor + frac * (b_minor - a_minor);
    const double toward = 2 * k <= n ? b_minor - a_minor : a_minor - b_minor;
    const int j = round_toward(v, toward);
    cells.push_back(x_major ? Cell{i, j} : Cell{j, i});
  }
  return cells;
}

inline std::vector<Cell> rasterize_polyline(const LatticeWorld& world, const Polyline& poly) {
  std::vector<Cell> out;
  for (const auto& seg : poly) {
    for (Cell c : rasterize_segment(world, seg)) {
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
  }
  return out;
}

struct CellVerdict {
  Cell cell;
  PathStatus status = PathStatus::invalid;  // of the planner after removal
  double new_length = 0.0;
  bool shorter = false;       // optimum strictly decreased
  bool differs = false;       // cell sequence changed
  bool goes_through = false;  // new optimum within one cell of the removed cell
  bool changed() const { return shorter || differs; }
};

struct Definition1Report {
  PathStatus status = PathStatus::invalid;  // of the baseline plan
  LatticePath baseline;
  std::vector<CellVerdict> verdicts;
  bool passed = false;

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(verdicts.begin(), verdicts.end(), [](const CellVerdict& v) { return !v.changed(); }));
  }
};

inline CellVerdict removal_verdict(LatticeWorld& blocked_world, const LatticePath& baseline, Cell c,
                                   Cell start, Cell goal) {
  CellVerdict v;
  v.cell = c;
  blocked_world.set_blocked(c, false);
  const LatticePath after = shortest_path(blocked_world, start, goal);
  blocked_world.set_blocked(c, true);
  v.status = after.status;
  if (after.ok()) {
    v.new_length = after.length;
    v.shorter = after.cost < baseline.cost;
    v.differs = after.cells != baseline.cells;
    v.goes_through = after.passes_near(c);
  }
  return v;
}

// Checks the minimality condition: removing any single obstacle cell must
// change the optimal plan from start to goal.
inline Definition1Report verify_definition1(const LatticeWorld& world, const std::vector<Cell>& obstacle_cells,
                                            Cell start, Cell goal) {
  LatticeWorld w = world;
  for (Cell c : obstacle_cells) w.set_blocked(c, true);
  Definition1Report report;
  report.baseline = shortest_path(w, start, goal);
  report.status = report.baseline.status;
  if (!report.baseline.ok()) return report;
  for (Cell c : obstacle_cells) report.verdicts.push_back(removal_verdict(w, report.baseline, c, start, goal));
  report.passed = report.failures() == 0;
  return report;
}

// Whether the optimum after removing removed_cell passes within one cell of
// it. Planner failures surface as std::runtime_error.
inline bool verify_goes_through(const LatticeWorld& world, const std::vector<Cell>& obstacle_cells,
                                Cell removed_cell, Cell start, Cell goal) {
  if (std::find(obstacle_cells.begin(), obstacle_cells.end(), removed_cell) == obstacle_cells.end())
    throw std::invalid_argument("verify_goes_through: removed cell is not an obstacle cell");
  LatticeWorld w = world;
  for (Cell c : obstacle_cells) w.set_blocked(c, true);
  w.set_blocked(removed_cell, false);
  const LatticePath after = shortest_path(w, start, goal);
  if (!after.ok()) throw std::runtime_error(std::string("verify_goes_through: planner ") + to_string(after.status));
  return after.passes_near(removed_cell);
}

// Shortest optimal path constrained to pass within one cell of via: the
// baseline itself when it already does, else the cheapest concatenation
// through a free neighbor of via whose cost ties the baseline. Returns a path
// with status unreachable when no optimal path comes that close.
inline LatticePath optimal_path_near(const LatticeWorld& world, Cell start, Cell goal, Cell via) {
  LatticePath base = shortest_path(world, start, goal);
  if (!base.ok() || base.passes_near(via)) return base;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const Cell n{via.x + dx, via.y + dy};
      if (world.blocked(n)) continue;
      const LatticePath a = shortest_path(world, start, n);
      const LatticePath b = shortest_path(world, n, goal);
      if (!a.ok() || !b.ok() || !(a.cost + b.cost == base.cost)) continue;
      LatticePath out = a;
      out.cells.insert(out.cells.end(), b.cells.begin() + 1, b.cells.end());
      out.cost = base.cost;
      out.length = base.length;
      return out;
    }
  }
  LatticePath none;
  none.status = PathStatus::unreachable;
  return none;
}

namespace detail {

// Whether the segment p-q avoids the interior of the union of blocked cells.
// The segment is split where it crosses grid lines; each piece is tested
// against the cell holding it (or both cells, for a piece running along a
// grid line). A grid vertex between two diagonal blocked cells is closed.
inline bool segment_clear(const LatticeWorld& world, Point2 p, Point2 q) {
  const double r = world.resolution();
  const Point2 a{(p.x - world.origin().x) / r, (p.y - world.origin().y) / r};
  const Point2 b{(q.x - world.origin().x) / r, (q.y - world.origin().y) / r};
  const Point2 d = b - a;
  constexpr double eps = 1e-9;
  std::vector<double> ts{0.0, 1.0};
  for (int k = 0; k < 2; ++k) {
    const double a0 = k == 0 ? a.x : a.y, d0 = k == 0 ? d.x : d.y;
    if (std::abs(d0) < eps) continue;
    const double lo = std::min(a0, a0 + d0), hi = std::max(a0, a0 + d0);
    for (double g = std::ceil(lo); g <= hi; g += 1.0) {
      const double t = (g - a0) / d0;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  auto blk = [&](double x, double y) { return world.blocked(Cell{static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y))}); };
  auto on_line = [&](double v) { return std::abs(v - std::round(v)) < eps; };
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i + 1] - ts[i] < eps) continue;
    const Point2 m = a + (0.5 * (ts[i] + ts[i + 1])) * d;
    const bool vx = on_line(m.x), hy = on_line(m.y);
    if (vx && hy) continue;  // degenerate
    if (vx) {
      const double gx = std::round(m.x);
      if (blk(gx - 0.5, m.y) && blk(gx + 0.5, m.y)) return false;
    } else if (hy) {
      const double gy = std::round(m.y);
      if (blk(m.x, gy - 0.5) && blk(m.x, gy + 0.5)) return false;
    } else if (blk(m.x, m.y)) {
      return false;
    }
  }
  // Grid vertices pinched between two diagonal blocked cells are closed.
  for (double t : ts) {
    const Point2 v = a + t * d;
    if (!on_line(v.x) || !on_line(v.y)) continue;
    const double gx = std::round(v.x), gy = std::round(v.y);
    if (blk(gx - 0.5, gy - 0.5) && blk(gx + 0.5, gy + 0.5)) return false;
    if (blk(gx - 0.5, gy + 0.5) && blk(gx + 0.5, gy - 0.5)) return false;
  }
  return true;
}

}  // namespace detail

// Continuous length of a lattice path: the taut string from the first to the
// last cell center that may bend only at corners of blocked cells touching the
// path. Meters.
inline double taut_length(const LatticeWorld& world, const LatticePath& path) {
  if (path.cells.empty()) return 0.0;
  const double r = world.resolution();
  std::vector<Point2> nodes{world.center(path.cells.front())};
  std::vector<Cell> seen;
  for (Cell p : path.cells) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const Cell c{p.x + dx, p.y + dy};
        if (!world.in_bounds(c) || !world.blocked(c)) continue;
        if (std::find(seen.begin(), seen.end(), c) != seen.end()) continue;
        seen.push_back(c);
        const Point2 m = world.center(c);
        for (int sx : {-1, 1}) {
          for (int sy : {-1, 1}) {
            if (world.blocked(Cell{c.x + sx, c.y + sy}) && !world.blocked(Cell{c.x + sx, c.y}) &&
                !world.blocked(Cell{c.x, c.y + sy}))
              continue;  // pinch point between diagonal neighbors
            nodes.push_back({m.x + 0.5 * sx * r, m.y + 0.5 * sy * r});
          }
        }
      }
    }
  }
  nodes.push_back(world.center(path.cells.back()));
  const std::size_t n = nodes.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> done(n, 0);
  dist[0] = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && (u == n || dist[i] < dist[u])) u = i;
    if (u == n || std::isinf(dist[u])) break;
    if (u == n - 1) return dist[u];
    done[u] = 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v]) continue;
      const double nd = dist[u] + distance(nodes[u], nodes[v]);
      if (nd < dist[v] && detail::segment_clear(world, nodes[u], nodes[v])) dist[v] = nd;
    }
  }
  return dist[n - 1];
}

// One line per cell verdict.
inline void write_report(std::ostream& os, const Definition1Report& r, const std::string& label) {
  os << "set " << label << " status " << to_string(r.status) << " cells " << r.verdicts.size()
     << " baseline_length " << r.baseline.length << " verdict " << (r.passed ? "pass" : "fail") << '\n';
  for (const auto& v : r.verdicts) {
    os << "cell " << v.cell.x << ' ' << v.cell.y << " status " << to_string(v.status) << " length "
       << v.new_length << " shorter " << v.shorter << " differs " << v.differs << " through "
       << v.goes_through << ' ' << (v.changed() ? "pass" : "fail") << '\n';
  }
}

}  // namespace hlsd
