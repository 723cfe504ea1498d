#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "glv/errors.hpp"
#include "glv/geometry.hpp"

using namespace glv;
using namespace glv::geometry;

namespace {

std::vector<Vec2> unit_square() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

std::vector<Vec2> ngon(int n, double r = 1.0) {
  std::vector<Vec2> p;
  for (int k = 0; k < n; ++k) {
    const double t = 2 * std::numbers::pi * k / n;
    p.emplace_back(r * std::cos(t), r * std::sin(t));
  }
  return p;
}

double polygon_area(const std::vector<Vec2>& p) {
  double a = 0;
  for (std::size_t i = 0; i < p.size(); ++i) a += cross(p[i], p[(i + 1) % p.size()]);
  return 0.5 * a;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

void check_mesh_invariants(const Mesh& m, const Domain& d) {
  for (std::size_t t = 0; t < m.triangle_count(); ++t) CHECK(m.triangle_area(t) > 0);
  REQUIRE(m.loops.size() == d.loops.size());
  for (std::size_t k = 0; k < m.loops.size(); ++k) {
    double sum = 0;
    for (const auto& e : m.loops[k].edges) {
      sum += e.length;
      CHECK(std::abs(e.normal.dot(e.tangent)) <= 1e-15);
      CHECK(std::abs(e.normal.norm() - 1) <= 1e-15);
      CHECK(std::abs(e.tangent.norm() - 1) <= 1e-15);
      CHECK(e.tangent.x() == -e.normal.y());
      CHECK(e.tangent.y() == e.normal.x());
    }
    CHECK(std::abs(sum - d.perimeter(k)) <= 1e-12 * d.perimeter(k));
    CHECK(std::abs(m.loops[k].perimeter - d.perimeter(k)) <= 1e-12 * d.perimeter(k));
  }
  CHECK(std::abs(m.total_area() - d.area()) <= 1e-12 * d.area());
}

}  // namespace

TEST_CASE("build_polygon: square corner angle") {
  const Domain d = build_polygon(unit_square());
  CHECK(d.cone_angle == doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));
  CHECK(d.cone_radius == doctest::Approx(0.5));
  CHECK(d.area() == doctest::Approx(1.0));
  CHECK(d.warnings.empty());
}

TEST_CASE("build_polygon: cone apex angle") {
  for (double theta : {std::numbers::pi / 6, std::numbers::pi / 4, std::numbers::pi / 3}) {
    const double w = std::tan(theta / 2);
    const Domain d = build_polygon({{0, 0}, {w, 1}, {-w, 1}});
    CHECK(d.cone_angle == doctest::Approx(theta).epsilon(1e-13));
  }
}

TEST_CASE("build_polygon: reflex corner limits the cone angle") {
  // L-shape: the reflex corner has interior angle 3pi/2, exterior pi/2.
  const Domain d = build_polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  CHECK(d.cone_angle == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("build_polygon: orientation is normalised with a warning") {
  auto outer = unit_square();
  std::reverse(outer.begin(), outer.end());
  std::vector<Vec2> hole = {{0.4, 0.4}, {0.6, 0.4}, {0.6, 0.6}, {0.4, 0.6}};  // counter-clockwise
  const Domain d = build_polygon(outer, {hole});
  CHECK(d.warnings.size() == 2);
  CHECK(polygon_area(d.loops[0]) > 0);
  CHECK(polygon_area(d.loops[1]) < 0);
  CHECK(d.area() == doctest::Approx(1.0 - 0.04));
}

TEST_CASE("build_polygon: errors") {
  SUBCASE("self intersection") {
    try {
      build_polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}});
      FAIL("expected SelfIntersection");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SelfIntersection);
    }
  }
  SUBCASE("repeated vertex") {
    try {
      build_polygon({{0, 0}, {1, 0}, {1, 0}, {0, 1}});
      FAIL("expected DegenerateLoop");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateLoop);
    }
  }
  SUBCASE("too few vertices") {
    try {
      build_polygon({{0, 0}, {1, 0}});
      FAIL("expected DegenerateLoop");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateLoop);
    }
  }
  SUBCASE("hole outside") {
    try {
      build_polygon(unit_square(), {{{2, 2}, {3, 2}, {3, 3}}});
      FAIL("expected GeometryError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GeometryError);
    }
  }
}

TEST_CASE("parse_domain") {
  std::istringstream in(
      "# square with a hole\n"
      "loop = [[0,0],[1,0],\n"
      "        [1,1],[0,1]]\n"
      "hole = [[0.25,0.25],[0.25,0.75],[0.75,0.75],[0.75,0.25]]\n");
  const Domain d = parse_domain(in);
  REQUIRE(d.loops.size() == 2);
  CHECK(d.area() == doctest::Approx(0.75));

  std::istringstream bad("loop = [[0,0],[1,0],[1,1]]\nfoo = 3\n");
  try {
    parse_domain(bad);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("triangulate: unit square") {
  const Domain d = build_polygon(unit_square());
  const Mesh m = triangulate(d, 0.5);
  CHECK(m.triangle_count() >= 8);
  CHECK(std::abs(m.total_area() - 1.0) <= 1e-12);
  CHECK(m.h <= 0.5 * 1.5);
  check_mesh_invariants(m, d);
}

TEST_CASE("triangulate: 64-gon") {
  const Domain d = build_polygon(ngon(64));
  const Mesh m = triangulate(d, 0.1);
  CHECK(std::abs(m.total_area() - polygon_area(ngon(64))) <= 1e-12);
  CHECK(m.h <= 0.15);
  check_mesh_invariants(m, d);
}

TEST_CASE("triangulate: cone boundary nodes lie on the input polylines") {
  const double w = std::tan(std::numbers::pi / 6);
  const Domain d = build_polygon({{0, 0}, {w, 1}, {-w, 1}});
  const Mesh m = triangulate(d, 0.05);
  check_mesh_invariants(m, d);
  CHECK(m.h <= 0.075);
  for (int n : m.boundary_nodes()) {
    double best = 1e9;
    const auto& l = d.loops[0];
    for (std::size_t i = 0; i < l.size(); ++i) {
      best = std::min(best, point_segment_distance(m.nodes[n], l[i], l[(i + 1) % l.size()]));
    }
    CHECK(best <= 1e-14);
  }
}

TEST_CASE("triangulate: square with hole") {
  const Domain d = build_polygon(unit_square(), {{{0.3, 0.3}, {0.3, 0.7}, {0.7, 0.7}, {0.7, 0.3}}});
  const Mesh m = triangulate(d, 0.08);
  check_mesh_invariants(m, d);
  CHECK(m.loops[1].signed_area < 0);
}

TEST_CASE("triangulate: halving the target shrinks h") {
  const Domain d = build_polygon(ngon(48));
  for (double h : {0.2, 0.1, 0.05}) {
    const Mesh a = triangulate(d, h);
    const Mesh b = triangulate(d, h / 2);
    CHECK(b.h <= 0.75 * a.h);
    CHECK(a.h <= 1.5 * h);
  }
}

TEST_CASE("triangulate: graded sizing and required points") {
  const Domain d = build_polygon(unit_square());
  MeshSizing s;
  s.h_default = 0.1;
  s.features.push_back({Vec2(0.5, 0.0), 0.05, 0.01});
  s.required_points.push_back(Vec2(0.3, 0.4));
  const Mesh m = triangulate(d, s);
  check_mesh_invariants(m, d);
  bool found = false;
  for (const auto& p : m.nodes) found = found || (p - Vec2(0.3, 0.4)).norm() == 0.0;
  CHECK(found);
  for (const auto& tri : m.triangles) {
    const Vec2 c = (m.nodes[tri[0]] + m.nodes[tri[1]] + m.nodes[tri[2]]) / 3.0;
    for (int i = 0; i < 3; ++i) {
      const double len = (m.nodes[tri[i]] - m.nodes[tri[(i + 1) % 3]]).norm();
      CHECK(len <= 1.5 * s.size_at(c) + 1e-12);
    }
  }
}

TEST_CASE("triangulate: deterministic") {
  const Domain d = build_polygon(ngon(32));
  const Mesh a = triangulate(d, 0.07);
  const Mesh b = triangulate(d, 0.07);
  REQUIRE(a.node_count() == b.node_count());
  REQUIRE(a.triangles == b.triangles);
  for (std::size_t i = 0; i < a.node_count(); ++i) CHECK(a.nodes[i] == b.nodes[i]);
}

TEST_CASE("mesh dump round trip") {
  const Mesh m = triangulate(build_polygon(unit_square()), 0.25);
  std::stringstream ss;
  write_mesh(ss, m);
  const Mesh r = read_mesh(ss);
  CHECK(r.node_count() == m.node_count());
  CHECK(r.triangles == m.triangles);
  CHECK(r.h == m.h);
  for (std::size_t i = 0; i < m.node_count(); ++i) CHECK(r.nodes[i] == m.nodes[i]);
}

TEST_CASE("point locator") {
  const Mesh m = triangulate(build_polygon(ngon(40)), 0.1);
  PointLocator loc(m);
  for (std::size_t t = 0; t < m.triangle_count(); t += 7) {
    const auto& tri = m.triangles[t];
    const Vec2 c = (m.nodes[tri[0]] + m.nodes[tri[1]] + m.nodes[tri[2]]) / 3.0;
    const auto hit = loc.locate(c);
    REQUIRE(hit.has_value());
    CHECK(hit->triangle == static_cast<int>(t));
    CHECK(hit->bary[0] == doctest::Approx(1.0 / 3));
  }
  CHECK_FALSE(loc.locate(Vec2(2, 2)).has_value());
  const auto near = loc.locate_nearest(Vec2(1.0001, 0.0));
  CHECK(near.triangle >= 0);
}
