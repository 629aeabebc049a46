#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hlsd {

// Absolute tolerance for geometric predicates, meters.
inline constexpr double kGeomEps = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }

inline Point2 rotate(Point2 p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// Reflection of p across the infinite line through a and b (a != b).
inline Point2 reflect_across_line(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double t = dot(p - a, d) / dot(d, d);
  const Point2 foot = a + t * d;
  return 2.0 * foot - p;
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * d);
}

class Segment2 {
 public:
  Segment2(Point2 a, Point2 b) : a_(a), b_(b) {
    if (a == b) throw std::invalid_argument("Segment2: degenerate segment");
  }
  Point2 a() const { return a_; }
  Point2 b() const { return b_; }
  double length() const { return distance(a_, b_); }
  Point2 at(double t) const { return a_ + t * (b_ - a_); }

 private:
  Point2 a_;
  Point2 b_;
};

using Polyline = std::vector<Segment2>;

// Distance along the ray origin + t*dir (|dir| = 1) to the segment [a, b], if
// the ray hits it at some t >= 0.
inline std::optional<double> ray_segment_hit(Point2 origin, Point2 dir, Point2 a,
                                             Point2 b) {
  const Point2 e = b - a;
  const double denom = cross(dir, e);
  const Point2 w = a - origin;
  if (std::abs(denom) < 1e-15) {
    // Parallel. Collinear overlap returns the nearest point on the segment.
    if (std::abs(cross(w, dir)) > 1e-12) return std::nullopt;
    const double ta = dot(a - origin, dir);
    const double tb = dot(b - origin, dir);
    const double lo = std::min(ta, tb), hi = std::max(ta, tb);
    if (hi < 0.0) return std::nullopt;
    return std::max(lo, 0.0);
  }
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  return t;
}

// Three non-colinear points: current, turning and goal configurations of a
// point robot whose path is c_c -> c_m -> c_g.
class TurnTriple {
 public:
  TurnTriple(Point2 c_c, Point2 c_m, Point2 c_g) : c_c_(c_c), c_m_(c_m), c_g_(c_g) {
    if (!non_colinear(c_c, c_m, c_g))
      throw std::invalid_argument("TurnTriple: points are colinear");
  }

  static std::optional<TurnTriple> make(Point2 c_c, Point2 c_m, Point2 c_g) {
    if (!non_colinear(c_c, c_m, c_g)) return std::nullopt;
    return TurnTriple(c_c, c_m, c_g);
  }

  static bool non_colinear(Point2 c_c, Point2 c_m, Point2 c_g) {
    const Point2 u = c_m - c_c, v = c_g - c_c;
    const double scale = norm(u) * norm(v);
    return scale > 0.0 && std::abs(cross(u, v)) > 1e-12 * scale && c_c != c_g;
  }

  Point2 c_c() const { return c_c_; }
  Point2 c_m() const { return c_m_; }
  Point2 c_g() const { return c_g_; }

  // |c_c c_m| + |c_m c_g|: major axis length of the ellipse bounding G2.
  double major_axis() const { return distance(c_c_, c_m_) + distance(c_m_, c_g_); }

  // Reflection of c_m across the line through c_c and c_g.
  Point2 c_m_reflected() const { return reflect_across_line(c_m_, c_c_, c_g_); }

  // Signed distance of p from the base line, positive on c_m's side.
  double signed_height(Point2 p) const {
    const Point2 d = c_g_ - c_c_;
    const double s = cross(d, p - c_c_) / norm(d);
    return cross(d, c_m_ - c_c_) > 0.0 ? s : -s;
  }

 private:
  Point2 c_c_, c_m_, c_g_;
};

// |c_c p| + |p c_g|.
inline double ellipse_sum(Point2 p, const TurnTriple& t) {
  return distance(t.c_c(), p) + distance(p, t.c_g());
}

// Closed triangle (c_c, c_m, c_g).
inline bool in_region_G1(Point2 p, const TurnTriple& t) {
  const Point2 v[3] = {t.c_c(), t.c_m(), t.c_g()};
  const double orient = cross(v[1] - v[0], v[2] - v[0]) > 0.0 ? 1.0 : -1.0;
  for (int i = 0; i < 3; ++i) {
    const Point2 a = v[i], b = v[(i + 1) % 3];
    const double d = orient * cross(b - a, p - a) / distance(a, b);
    if (d < -kGeomEps) return false;
  }
  return true;
}

// Closed half-ellipse on the far side of the base line from c_m.
inline bool in_region_G2(Point2 p, const TurnTriple& t) {
  return t.signed_height(p) <= kGeomEps && ellipse_sum(p, t) <= t.major_axis() + kGeomEps;
}

inline bool in_region_G(Point2 p, const TurnTriple& t) {
  return in_region_G1(p, t) || in_region_G2(p, t);
}

// The representative minimal unreachable set: the segment from c_m to its
// mirror image across the base line.
inline Segment2 representative_min_set(const TurnTriple& t) {
  return Segment2(t.c_m(), t.c_m_reflected());
}

namespace detail {

// Largest t >= 0 with origin + t*dir on the ellipse with foci f1, f2 and
// major axis length major. origin must lie inside or on the ellipse.
inline double ellipse_exit(Point2 origin, Point2 dir, Point2 f1, Point2 f2, double major) {
  const Point2 center = 0.5 * (f1 + f2);
  const Point2 axis = (1.0 / distance(f1, f2)) * (f2 - f1);
  const double a = 0.5 * major;
  const double c = 0.5 * distance(f1, f2);
  const double b2 = a * a - c * c;
  const Point2 o = origin - center;
  const double ox = dot(o, axis), oy = cross(axis, o);
  const double dx = dot(dir, axis), dy = cross(axis, dir);
  const double qa = dx * dx / (a * a) + dy * dy / b2;
  const double qb = 2.0 * (ox * dx / (a * a) + oy * dy / b2);
  const double qc = ox * ox / (a * a) + oy * oy / b2 - 1.0;
  const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
  return (-qb + std::sqrt(disc)) / (2.0 * qa);
}

// Intersection parameter of origin + t*dir with the infinite base line.
inline std::optional<double> base_line_crossing(Point2 origin, Point2 dir, const TurnTriple& t) {
  const Point2 e = t.c_g() - t.c_c();
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  return cross(t.c_c() - origin, e) / denom;
}

}  // namespace detail

// A minimal unreachable set containing both c_m and c (c must lie in G).
//
// If the ray from c_m through c crosses the base line within the chord
// [c_c, c_g], the set is the single segment c_m -> c_e where c_e is the exit
// of that ray through the half-ellipse. Otherwise the set bends on the chord:
// c_m -> x -> c_e with x on the chord and c_e the exit of the ray x -> c.
// Both end points lie on the ellipse; every interior point is strictly
// inside it, and the curve separates c_c from c_g inside the ellipse.
inline Polyline construct_min_member(Point2 c, const TurnTriple& t) {
  if (!in_region_G(c, t))
    throw std::invalid_argument("construct_min_member: point outside region G");
  const Point2 c_m = t.c_m();
  if (distance(c, c_m) <= kGeomEps) return {representative_min_set(t)};

  const Point2 dir = (1.0 / distance(c_m, c)) * (c - c_m);
  const Point2 chord = t.c_g() - t.c_c();
  const double chord_len = norm(chord);
  if (auto cross_t = detail::base_line_crossing(c_m, dir, t); cross_t && *cross_t > 0.0) {
    const Point2 x = c_m + *cross_t * dir;
    const double along = dot(x - t.c_c(), chord) / (chord_len * chord_len);
    if (along >= -kGeomEps && along <= 1.0 + kGeomEps) {
      const double te = detail::ellipse_exit(c_m, dir, t.c_c(), t.c_g(), t.major_axis());
      return {Segment2(c_m, c_m + te * dir)};
    }
  }

  // Bend point: foot of c_m on the base line, kept inside the open chord.
  const double foot = dot(c_m - t.c_c(), chord) / (chord_len * chord_len);
  const double s = std::clamp(foot, 0.1, 0.9);
  const Point2 x = t.c_c() + s * chord;
  const Point2 d2 = (1.0 / distance(x, c)) * (c - x);
  const double te = detail::ellipse_exit(x, d2, t.c_c(), t.c_g(), t.major_axis());
  return {Segment2(c_m, x), Segment2(x, x + te * d2)};
}

// Rigid motion: rotate by angle about the origin, then translate.
struct RigidMotion {
  double angle = 0.0;
  Point2 shift{};
  Point2 operator()(Point2 p) const { return rotate(p, angle) + shift; }
  TurnTriple operator()(const TurnTriple& t) const {
    return TurnTriple((*this)(t.c_c()), (*this)(t.c_m()), (*this)(t.c_g()));
  }
};

}  // namespace hlsd
