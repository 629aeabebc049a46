#include <gtest/gtest.h>

#include <cmath>

#include "hlsd/geometry.hpp"
#include "hlsd/lattice.hpp"
#include "hlsd/rng.hpp"

using namespace hlsd;

namespace {

TurnTriple canonical() { return TurnTriple({0, 0}, {1, 1}, {2, 0}); }

void expect_near(Point2 a, Point2 b, double tol = 1e-12) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
}

// Random non-colinear triple with points in [-1, 1]^2.
TurnTriple random_triple(Rng& rng) {
  for (;;) {
    const Point2 a{rng.uniform(-1, 1), rng.uniform(-1, 1)}, b{rng.uniform(-1, 1), rng.uniform(-1, 1)},
        c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (auto t = TurnTriple::make(a, b, c); t && std::abs(cross(b - a, c - a)) > 0.05) return *t;
  }
}

// Uniform point in G by rejection from the bounding box of the full ellipse.
Point2 random_point_in_G(const TurnTriple& t, Rng& rng) {
  const double r = t.major_axis();
  const Point2 mid = 0.5 * (t.c_c() + t.c_g());
  for (;;) {
    const Point2 p{mid.x + rng.uniform(-r, r), mid.y + rng.uniform(-r, r)};
    if (in_region_G(p, t)) return p;
  }
}

}  // namespace

TEST(Segment2, RejectsDegenerate) { EXPECT_THROW(Segment2({1, 1}, {1, 1}), std::invalid_argument); }

TEST(TurnTriple, RejectsColinear) {
  EXPECT_FALSE(TurnTriple::make({0, 0}, {1, 1}, {2, 2}).has_value());
  EXPECT_THROW(TurnTriple({0, 0}, {1, 0}, {2, 0}), std::invalid_argument);
  EXPECT_TRUE(TurnTriple::make({0, 0}, {1, 1}, {2, 0}).has_value());
}

TEST(EllipseSum, Examples) {
  const TurnTriple t = canonical();
  EXPECT_NEAR(ellipse_sum({1, -1}, t), 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(ellipse_sum({1, -1}, t), t.major_axis(), 1e-12);
  EXPECT_NEAR(ellipse_sum({0, 0}, t), 2.0, 1e-12);
  EXPECT_NEAR(ellipse_sum({1, 2}, t), 2.0 * std::sqrt(5.0), 1e-12);
}

TEST(InRegionG, Examples) {
  const TurnTriple t = canonical();
  EXPECT_TRUE(in_region_G({1, 0.5}, t));
  EXPECT_TRUE(in_region_G1({1, 0.5}, t));
  EXPECT_FALSE(in_region_G({1, 2}, t));
  EXPECT_TRUE(in_region_G({1, -1}, t));
  EXPECT_TRUE(in_region_G2({1, -1}, t));
}

TEST(InRegionG, ClosedBoundaryAndDisjointParts) {
  const TurnTriple t = canonical();
  // Vertices and edge midpoints of the triangle are inside.
  for (Point2 p : {Point2{0, 0}, Point2{1, 1}, Point2{2, 0}, Point2{0.5, 0.5}, Point2{1, 0}}) EXPECT_TRUE(in_region_G(p, t));
  // Above the chord but outside the triangle.
  EXPECT_FALSE(in_region_G({0.2, 0.5}, t));
  // G1 and the interior of G2 do not overlap.
  Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    const Point2 p{rng.uniform(-0.5, 2.5), rng.uniform(-1.5, 1.5)};
    if (in_region_G1(p, t) && in_region_G2(p, t)) {
      EXPECT_NEAR(t.signed_height(p), 0.0, 1e-9);
    }
  }
}

TEST(RepresentativeMinSet, Examples) {
  const Segment2 s = representative_min_set(canonical());
  expect_near(s.a(), {1, 1});
  expect_near(s.b(), {1, -1});
  const Segment2 s2 = representative_min_set(TurnTriple({0, 0}, {0.5, 0.2}, {1, 0}));
  expect_near(s2.a(), {0.5, 0.2});
  expect_near(s2.b(), {0.5, -0.2});
}

TEST(RepresentativeMinSet, RotationEquivariant) {
  const RigidMotion rot{M_PI / 2, {}};
  const Segment2 s = representative_min_set(rot(canonical()));
  const Segment2 ref = representative_min_set(canonical());
  expect_near(s.a(), rot(ref.a()));
  expect_near(s.b(), rot(ref.b()));
}

TEST(Reflection, InvolutionAndEllipseBoundary) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const TurnTriple t = random_triple(rng);
    const Point2 back = reflect_across_line(t.c_m_reflected(), t.c_c(), t.c_g());
    expect_near(back, t.c_m(), 1e-12);
    EXPECT_LE(std::abs(ellipse_sum(t.c_m(), t) - t.major_axis()), 1e-12);
    EXPECT_LE(std::abs(ellipse_sum(t.c_m_reflected(), t) - t.major_axis()), 1e-12);
  }
}

TEST(InRegionG, RigidMotionInvariant) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const TurnTriple t = random_triple(rng);
    const RigidMotion m{rng.uniform(-M_PI, M_PI), {rng.uniform(-3, 3), rng.uniform(-3, 3)}};
    const TurnTriple tm = m(t);
    for (int k = 0; k < 50; ++k) {
      const Point2 p{rng.uniform(-2, 2), rng.uniform(-2, 2)};
      // Skip points within the tolerance band of the boundary.
      const bool near_ellipse = std::abs(ellipse_sum(p, t) - t.major_axis()) < 1e-7;
      const bool near_edge = std::abs(t.signed_height(p)) < 1e-7 ||
                             point_segment_distance(p, t.c_c(), t.c_m()) < 1e-7 ||
                             point_segment_distance(p, t.c_m(), t.c_g()) < 1e-7;
      if (near_ellipse || near_edge) continue;
      EXPECT_EQ(in_region_G(p, t), in_region_G(m(p), tm));
    }
  }
}

TEST(EllipseSum, InteriorIsBelowMajorAxis) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const TurnTriple t = random_triple(rng);
    for (int k = 0; k < 50; ++k) {
      // Shrink c_m' toward the chord midpoint: strictly inside the ellipse.
      const Point2 mid = 0.5 * (t.c_c() + t.c_g());
      const double f = rng.uniform(0.0, 0.999);
      const Point2 p = mid + f * (t.c_m_reflected() - mid);
      EXPECT_LT(ellipse_sum(p, t), t.major_axis());
    }
  }
}

TEST(ConstructMinMember, Examples) {
  const TurnTriple t = canonical();
  const Polyline a = construct_min_member({1, -0.5}, t);
  ASSERT_EQ(a.size(), 1u);
  expect_near(a[0].a(), {1, 1});
  expect_near(a[0].b(), {1, -1}, 1e-9);

  const Polyline b = construct_min_member({1, 1}, t);
  ASSERT_EQ(b.size(), 1u);
  expect_near(b[0].b(), t.c_m_reflected());

  EXPECT_THROW(construct_min_member({1, 2}, t), std::invalid_argument);
}

TEST(ConstructMinMember, NearCcInG1IsSingleSegment) {
  // Every point of the closed triangle lies on a ray from c_m that crosses
  // the chord, so the single-segment case applies here.
  const TurnTriple t = canonical();
  const Point2 c{0.1, 0.05};
  ASSERT_TRUE(in_region_G1(c, t));
  const Polyline p = construct_min_member(c, t);
  ASSERT_EQ(p.size(), 1u);
  expect_near(p[0].a(), t.c_m());
  EXPECT_LT(point_segment_distance(c, p[0].a(), p[0].b()), 1e-12);
  EXPECT_NEAR(ellipse_sum(p[0].b(), t), t.major_axis(), 1e-9);
}

TEST(ConstructMinMember, ChordPointCountsAsG1) {
  const TurnTriple t = canonical();
  const Polyline p = construct_min_member({0.5, 0.0}, t);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_LT(point_segment_distance({0.5, 0.0}, p[0].a(), p[0].b()), 1e-12);
}

TEST(ConstructMinMember, BentCaseContainsBothPointsAndEndsOnEllipse) {
  const TurnTriple t = canonical();
  // Far side of the ellipse, near c_c: ray from c_m misses the chord.
  const Point2 c{-0.25, -0.2};
  ASSERT_TRUE(in_region_G(c, t));
  const Polyline p = construct_min_member(c, t);
  ASSERT_EQ(p.size(), 2u);
  expect_near(p[0].a(), t.c_m());
  expect_near(p[0].b(), p[1].a());
  EXPECT_LT(point_segment_distance(c, p[1].a(), p[1].b()), 1e-9);
  EXPECT_NEAR(ellipse_sum(p[1].b(), t), t.major_axis(), 1e-9);
}

TEST(ConstructMinMember, EveryPointInG) {
  Rng rng(14);
  for (int i = 0; i < 150; ++i) {
    const TurnTriple t = random_triple(rng);
    for (int k = 0; k < 4; ++k) {
      const Point2 c = random_point_in_G(t, rng);
      const Polyline poly = construct_min_member(c, t);
      bool has_c = false, has_m = false;
      for (const Segment2& s : poly) {
        has_c = has_c || point_segment_distance(c, s.a(), s.b()) < 1e-9;
        has_m = has_m || point_segment_distance(t.c_m(), s.a(), s.b()) < 1e-12;
        const int n = std::max(2, static_cast<int>(std::ceil(s.length() / 1e-3)));
        for (int j = 0; j <= n; ++j) {
          const Point2 q = s.at(double(j) / n);
          ASSERT_TRUE(in_region_G(q, t)) << "triple " << i << " point " << j;
        }
      }
      EXPECT_TRUE(has_c);
      EXPECT_TRUE(has_m);
    }
  }
}

// A member through the chord midpoint checked with the lattice oracle:
// removing any of its cells changes the optimum. The chord is axis-aligned
// and its midpoint is a cell center, so point reflection through the midpoint
// swaps the two tips on the lattice.
TEST(ConstructMinMember, MemberThroughChordMidpointIsMinimalOnLattice) {
  const double res = 0.025;
  LatticeWorld w(res, 61, 61);
  const Cell cc{10, 30}, cm{22, 50}, cg{50, 30};
  const TurnTriple t(w.center(cc), w.center(cm), w.center(cg));
  const Point2 far = 2.0 * (0.5 * (t.c_c() + t.c_g())) - t.c_m();
  const Point2 c = t.c_m() + 0.4 * (far - t.c_m());
  const Polyline poly = construct_min_member(c, t);
  const auto cells = rasterize_polyline(w, poly);
  const Definition1Report r = verify_definition1(w, cells, cc, cg);
  EXPECT_TRUE(r.passed) << r.failures() << " cells do not matter";
}
