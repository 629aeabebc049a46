#pragma once

// Desk check of the minimal-set geometry against the lattice oracle.
//
// The lattice only witnesses minimality when both ends of an obstacle set are
// treated alike: a cell of slack at one tip and not the other decides which
// way the optimum goes around. Triples are therefore drawn on cell centers
// with the chord midpoint on a cell center, and the sets checked are those
// whose ends are swapped by a lattice symmetry: the segment from c_m through
// the chord midpoint (point reflection), and the representative set whenever
// the reflection across the chord is itself a lattice symmetry.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hlsd/geometry.hpp"
#include "hlsd/lattice.hpp"
#include "hlsd/rng.hpp"

namespace hlsd {

struct LatticeTriple {
  TurnTriple triple;
  LatticeWorld world;
  Cell c_c, c_m, c_g;
  bool representative_exact = false;  // reflection across the chord is a lattice symmetry
};

namespace detail {

inline bool chord_is_lattice_axis(Cell a, Cell b) {
  const int dx = b.x - a.x, dy = b.y - a.y;
  return dx == 0 || dy == 0 || std::abs(dx) == std::abs(dy);
}

// The eight lattice symmetries fixing the origin.
inline Cell d4(Cell v, int k) {
  Cell r = v;
  if (k & 4) r = {r.y, r.x};
  for (int i = 0; i < (k & 3); ++i) r = {-r.y, r.x};
  return r;
}

}  // namespace detail

// Draws a lattice-aligned triple with acute base angles (foot of c_m inside
// the middle 70% of the chord) and an apex angle in [30, 130] degrees. Legs
// are 30 to 50 cells.
inline LatticeTriple sample_lattice_triple(Rng& rng, double resolution, int margin = 6) {
  for (;;) {
    const bool isosceles = rng.bernoulli(0.5);
    const int len = 30 + static_cast<int>(rng.below(21));
    const double a = rng.uniform(0.0, 2.0 * M_PI);
    const Cell u{static_cast<int>(std::lround(len * std::cos(a))), static_cast<int>(std::lround(len * std::sin(a)))};
    Cell v;
    if (isosceles) {
      v = detail::d4(u, static_cast<int>(rng.below(8)));
    } else {
      // c_g on a row, column or diagonal through c_c.
      static constexpr Cell dirs[8] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
      const Cell d = dirs[rng.below(8)];
      const int chord = 24 + static_cast<int>(rng.below(60));
      v = {u.x + d.x * chord, u.y + d.y * chord};
    }
    const Cell cc = u, cg = v, cm{0, 0};
    if (((cc.x + cg.x) & 1) != 0 || ((cc.y + cg.y) & 1) != 0) continue;
    const double lv = std::hypot(v.x, v.y);
    if (lv < 30.0 || lv > 50.0 * std::sqrt(2.0) + 1.0) continue;
    const Point2 pc{double(cc.x), double(cc.y)}, pg{double(cg.x), double(cg.y)}, pm{0.0, 0.0};
    if (!TurnTriple::non_colinear(pc, pm, pg)) continue;
    const Point2 chord = pg - pc;
    const double foot = dot(pm - pc, chord) / dot(chord, chord);
    if (foot < 0.15 || foot > 0.85) continue;
    const double apex = std::acos(std::clamp(dot(pc, pg) / (norm(pc) * norm(pg)), -1.0, 1.0)) * 180.0 / M_PI;
    if (apex < 30.0 || apex > 130.0) continue;

    // Bounding box of the triple and both reflections of c_m.
    const Cell refl{cc.x + cg.x, cc.y + cg.y};
    int xmin = std::min({0, cc.x, cg.x, refl.x}), xmax = std::max({0, cc.x, cg.x, refl.x});
    int ymin = std::min({0, cc.y, cg.y, refl.y}), ymax = std::max({0, cc.y, cg.y, refl.y});
    const bool rep_exact = detail::chord_is_lattice_axis(cc, cg) || std::hypot(u.x, u.y) == lv;
    const Point2 r = reflect_across_line(pm, pc, pg);
    xmin = std::min(xmin, static_cast<int>(std::floor(r.x)));
    xmax = std::max(xmax, static_cast<int>(std::ceil(r.x)));
    ymin = std::min(ymin, static_cast<int>(std::floor(r.y)));
    ymax = std::max(ymax, static_cast<int>(std::ceil(r.y)));
    const Cell shift{margin - xmin, margin - ymin};
    const int w = xmax - xmin + 1 + 2 * margin, h = ymax - ymin + 1 + 2 * margin;
    LatticeWorld world(resolution, w, h);
    auto at = [&](Cell c) { return Cell{c.x + shift.x, c.y + shift.y}; };
    const Cell wc = at(cc), wm = at(cm), wg = at(cg);
    TurnTriple t(world.center(wc), world.center(wm), world.center(wg));
    return LatticeTriple{t, world, wc, wm, wg, rep_exact};
  }
}

struct SetCheck {
  std::string label;
  std::size_t cells = 0;
  Definition1Report def1;
  std::size_t outside_g = 0;        // cell centers farther than a cell diagonal from G
  std::size_t not_through = 0;      // removals whose optimum misses the removed cell
  bool passed() const { return def1.passed && outside_g == 0 && not_through == 0; }
};

// Distance tolerance for membership: a point counts as in G if some point of
// G lies within tol. Checked by probing a ring of radius tol.
inline bool in_region_G_within(Point2 p, const TurnTriple& t, double tol) {
  if (in_region_G(p, t)) return true;
  for (int k = 0; k < 64; ++k) {
    const double a = 2.0 * M_PI * k / 64.0;
    for (double f : {0.25, 0.5, 0.75, 1.0}) {
      if (in_region_G(p + Point2{f * tol * std::cos(a), f * tol * std::sin(a)}, t)) return true;
    }
  }
  return false;
}

inline SetCheck check_obstacle_set(const LatticeTriple& lt, const Polyline& poly, const std::string& label) {
  SetCheck out;
  out.label = label;
  const std::vector<Cell> cells = rasterize_polyline(lt.world, poly);
  out.cells = cells.size();
  out.def1 = verify_definition1(lt.world, cells, lt.c_c, lt.c_g);
  const double diag = lt.world.resolution() * std::sqrt(2.0);
  for (Cell c : cells)
    if (!in_region_G_within(lt.world.center(c), lt.triple, diag)) ++out.outside_g;
  for (const auto& v : out.def1.verdicts)
    if (!v.goes_through) ++out.not_through;
  return out;
}

struct AnchorCheck {
  bool near_c_m = false;
  double taut = 0.0;   // meters
  double major = 0.0;  // |c_c c_m| + |c_m c_g|
  double rel_error() const { return std::abs(taut - major) / major; }
};

inline AnchorCheck check_anchor(const LatticeTriple& lt) {
  LatticeWorld w = lt.world;
  for (Cell c : rasterize_segment(w, representative_min_set(lt.triple))) w.set_blocked(c, true);
  AnchorCheck out;
  out.major = lt.triple.major_axis();
  const LatticePath p = optimal_path_near(w, lt.c_c, lt.c_g, lt.c_m);
  out.near_c_m = p.ok() && p.passes_near(lt.c_m);
  if (out.near_c_m) out.taut = taut_length(w, p);
  return out;
}

// Lattice-exact members: the segment from c_m through the chord midpoint,
// requested through a random point c on it, and the representative set.
inline std::vector<std::pair<std::string, Polyline>> symmetric_sets(const LatticeTriple& lt, Rng& rng) {
  std::vector<std::pair<std::string, Polyline>> sets;
  if (lt.representative_exact) sets.emplace_back("representative", Polyline{representative_min_set(lt.triple)});
  const Point2 mid = 0.5 * (lt.triple.c_c() + lt.triple.c_g());
  const Point2 far = 2.0 * mid - lt.triple.c_m();
  const Point2 c = lt.triple.c_m() + rng.uniform(0.05, 0.95) * (far - lt.triple.c_m());
  sets.emplace_back("member", construct_min_member(c, lt.triple));
  return sets;
}

struct TheoremReport {
  std::vector<SetCheck> sets;
  std::vector<AnchorCheck> anchors;
  std::size_t triples = 0;
  bool definition1_ok() const {
    for (const auto& s : sets)
      if (!s.def1.passed) return false;
    return !sets.empty();
  }
  bool containment_ok() const {
    for (const auto& s : sets)
      if (s.outside_g) return false;
    return true;
  }
  bool through_ok() const {
    for (const auto& s : sets)
      if (s.not_through) return false;
    return true;
  }
  bool anchors_ok(double tol = 0.03) const {
    for (const auto& a : anchors)
      if (!a.near_c_m || a.rel_error() > tol) return false;
    return !anchors.empty();
  }
};

inline TheoremReport run_theorem_check(std::uint64_t seed, int triples, double resolution = 0.025) {
  TheoremReport rep;
  Rng rng(derive_seed(seed, 0x7e0));
  int reps = 0;
  // Keep drawing until both kinds of set have been seen triples times.
  while (rep.triples < static_cast<std::size_t>(triples) || reps < triples) {
    const LatticeTriple lt = sample_lattice_triple(rng, resolution);
    if (rep.triples >= static_cast<std::size_t>(triples) && !lt.representative_exact) continue;
    ++rep.triples;
    for (auto& [label, poly] : symmetric_sets(lt, rng)) {
      if (label == "representative") ++reps;
      rep.sets.push_back(check_obstacle_set(lt, poly, label));
    }
    rep.anchors.push_back(check_anchor(lt));
  }
  return rep;
}

inline void write_theorem_report(std::ostream& os, const TheoremReport& r) {
  os << "triples " << r.triples << " sets " << r.sets.size() << '\n';
  for (const auto& s : r.sets) {
    os << s.label << " cells " << s.cells << " def1 " << (s.def1.passed ? "pass" : "fail") << " failures "
       << s.def1.failures() << " outside_g " << s.outside_g << " not_through " << s.not_through << '\n';
  }
  for (const auto& a : r.anchors) {
    os << "anchor near_c_m " << a.near_c_m << " taut " << a.taut << " major " << a.major << " rel_error "
       << a.rel_error() << '\n';
  }
  os << "definition1 " << (r.definition1_ok() ? "pass" : "fail") << '\n';
  os << "containment " << (r.containment_ok() ? "pass" : "fail") << '\n';
  os << "goes_through " << (r.through_ok() ? "pass" : "fail") << '\n';
  os << "anchoring " << (r.anchors_ok() ? "pass" : "fail") << '\n';
}

}  // namespace hlsd
