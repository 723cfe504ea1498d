#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "glv/diagnostics.hpp"
#include "glv/errors.hpp"
#include "glv/vortex_profile.hpp"
#include "support.hpp"

using namespace glv;
using std::numbers::pi;

namespace {

core::MeshPtr disc_mesh(int sides, double h) {
  return test::share(geometry::triangulate(geometry::build_polygon(test::ngon(sides)), h));
}

core::MeshPtr unit_square(int n) { return test::share(test::structured_square(n)); }

std::vector<Vec2> arc(double r, double a0, double a1, int n) {
  std::vector<Vec2> p;
  for (int k = 0; k <= n; ++k) {
    const double t = a0 + (a1 - a0) * k / n;
    p.emplace_back(r * std::cos(t), r * std::sin(t));
  }
  return p;
}

const profile::ProfileTable& table() {
  static const auto t = profile::solve_profile(40.0, 2000);
  return t;
}

// Product of unit-modulus vortex factors with profile moduli.
core::Field vortex_product(core::MeshPtr mesh, const std::vector<std::pair<Vec2, int>>& centres, double eps) {
  return test::interpolate(mesh, [&](const Vec2& x) {
    std::complex<double> z(1.0, 0.0);
    for (const auto& [P, d] : centres) {
      const Vec2 v = x - P;
      const double rho = v.norm();
      if (rho == 0.0) return Vec2(0.0, 0.0);
      std::complex<double> w(v.x() / rho, d * v.y() / rho);
      z *= table().eval(rho / eps) * w;
    }
    return Vec2(z.real(), z.imag());
  });
}

}  // namespace

TEST_CASE("degree of simple boundary data") {
  auto mesh = disc_mesh(64, 0.2);
  const auto one = core::sample_boundary(mesh, [](const Vec2&) { return Vec2(1.0, 0.0); });
  CHECK(diagnostics::compute_degree(one, 0) == 0);
  const auto id = core::sample_boundary(mesh, [](const Vec2& x) { return Vec2(x / x.norm()); });
  CHECK(diagnostics::compute_degree(id, 0) == 1);
  CHECK(diagnostics::winding_value(id, 0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto conj = core::sample_boundary(mesh, [](const Vec2& x) { return Vec2(x.x(), -x.y()); });
  CHECK(diagnostics::compute_degree(conj, 0) == -1);
  const auto sq = core::sample_boundary(mesh, [](const Vec2& x) {
    const double t = std::atan2(x.y(), x.x());
    return Vec2(std::cos(2 * t), std::sin(2 * t));
  });
  CHECK(diagnostics::total_degree(sq) == 2);
}

TEST_CASE("dipole-type data has zero degree") {
  auto mesh = unit_square(32);
  const double eta = 0.25;
  const auto g = core::sample_boundary(mesh, [&](const Vec2& x) {
    const double s = std::abs(x.x() - 0.5);
    const double phi = (x.y() == 0.0 && s < eta) ? pi * (1 - s / eta) : 0.0;
    return Vec2(std::cos(phi), std::sin(phi));
  });
  CHECK(diagnostics::compute_degree(g, 0) == 0);
}

TEST_CASE("degree is invariant under positive rescaling") {
  auto mesh = disc_mesh(64, 0.2);
  auto g = core::sample_boundary(mesh, [](const Vec2& x) { return Vec2(x.x(), x.y()); });
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> L(0.1, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto scaled = g;
    for (auto& v : scaled.g) v *= L(rng);
    CHECK(diagnostics::compute_degree(scaled, 0) == 1);
  }
}

TEST_CASE("degree refuses vanishing data") {
  auto mesh = disc_mesh(32, 0.3);
  auto g = core::sample_boundary(mesh, [](const Vec2& x) { return Vec2(x.x(), x.y()); });
  g.g[3] = Vec2(0.05, 0.0);
  try {
    diagnostics::compute_degree(g, 0);
    FAIL("expected VanishingData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VanishingData);
  }
}

TEST_CASE("degree on a loop with a hole") {
  auto mesh = test::share(geometry::triangulate(
      geometry::build_polygon(test::ngon(48, 2.0), {test::ngon(24, 1.0)}), 0.25));
  REQUIRE(mesh->loops.size() == 2);
  const auto g = core::sample_boundary(mesh, [](const Vec2& x) { return Vec2(x / x.norm()); });
  CHECK(diagnostics::compute_degree(g, 0) == 1);
  CHECK(diagnostics::compute_degree(g, 1) == -1);
  CHECK(diagnostics::total_degree(g) == 0);
}

TEST_CASE("modulus summaries") {
  auto mesh = unit_square(4);
  CHECK(diagnostics::sup_deviation(core::constant_field(mesh, Vec2(1, 0))) == 0.0);
  CHECK(diagnostics::sup_deviation(core::constant_field(mesh, Vec2(0, 0))) == 1.0);
  const auto u = test::interpolate(mesh, [](const Vec2& x) { return Vec2(x.x(), x.y()); });
  CHECK(diagnostics::min_modulus(u) == 0.0);
  CHECK(diagnostics::max_modulus(u) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("zeros of synthetic vortex fields") {
  const double eps = 0.02;
  const Vec2 P1(-0.2, 0.0), P2(0.2, 0.0);
  geometry::MeshSizing sizing;
  sizing.h_default = 0.06;
  sizing.features = {{P1, 4 * eps, eps / 4}, {P2, 4 * eps, eps / 4}};
  sizing.required_points = {P1, P2};
  auto mesh = test::share(geometry::triangulate(geometry::build_polygon(test::ngon(96)), sizing));

  SUBCASE("no zeros for a constant field") {
    CHECK(diagnostics::find_zeros(core::constant_field(mesh, Vec2(1, 0))).empty());
  }

  SUBCASE("two like vortices add up") {
    const auto u = vortex_product(mesh, {{P1, 1}, {P2, 1}}, eps);
    auto zeros = diagnostics::find_zeros(u);
    REQUIRE(zeros.size() == 2);
    std::sort(zeros.begin(), zeros.end(), [](auto& a, auto& b) { return a.position.x() < b.position.x(); });
    CHECK((zeros[0].position - P1).norm() < 1e-12);
    CHECK((zeros[1].position - P2).norm() < 1e-12);
    int sum = 0;
    for (const auto& z : zeros) {
      REQUIRE(z.winding.has_value());
      CHECK(*z.winding == 1);
      CHECK_FALSE(z.touches_boundary);
      sum += *z.winding;
    }
    CHECK(diagnostics::compute_degree(core::boundary_trace(u), 0) == sum);
  }

  SUBCASE("vortex and antivortex cancel") {
    const auto u = vortex_product(mesh, {{P1, 1}, {P2, -1}}, eps);
    const auto zeros = diagnostics::find_zeros(u);
    REQUIRE(zeros.size() == 2);
    int sum = 0;
    for (const auto& z : zeros) sum += z.winding.value_or(99);
    CHECK(sum == 0);
    CHECK(diagnostics::compute_degree(core::boundary_trace(u), 0) == 0);
  }
}

TEST_CASE("polar decomposition") {
  SUBCASE("constant field") {
    auto mesh = unit_square(6);
    const auto u = core::constant_field(mesh, Vec2(0, 1));
    std::vector<int> all(mesh->node_count());
    std::iota(all.begin(), all.end(), 0);
    const auto p = diagnostics::polar_decompose(u, all);
    for (std::size_t k = 0; k < p.nodes.size(); ++k) {
      CHECK(p.rho[k] == 1.0);
      CHECK(p.phi[k] == doctest::Approx(pi / 2).epsilon(1e-15));
    }
  }

  SUBCASE("phase of e^{i theta} on a half annulus") {
    auto outer = arc(2.0, 0.0, pi, 48);
    auto inner = arc(1.0, pi, 0.0, 24);
    outer.insert(outer.end(), inner.begin(), inner.end());
    auto mesh = test::share(geometry::triangulate(geometry::build_polygon(outer), 0.1));
    const auto u = test::interpolate(mesh, [](const Vec2& x) { return Vec2(x / x.norm()); });
    std::vector<int> all(mesh->node_count());
    std::iota(all.begin(), all.end(), 0);
    const auto p = diagnostics::polar_decompose(u, all);
    const int anchor = p.nodes.front();
    const double shift = p.phi.front() - std::atan2(mesh->nodes[anchor].y(), mesh->nodes[anchor].x());
    double worst = 0.0, worst_recompose = 0.0;
    for (std::size_t k = 0; k < p.nodes.size(); ++k) {
      const Vec2& x = mesh->nodes[p.nodes[k]];
      double theta = std::atan2(x.y(), x.x());
      if (theta < -1e-12) theta += 2 * pi;
      worst = std::max(worst, std::abs(p.phi[k] - shift - theta));
      const Vec2 back(p.rho[k] * std::cos(p.phi[k]), p.rho[k] * std::sin(p.phi[k]));
      worst_recompose = std::max(worst_recompose, (back - u.values[p.nodes[k]]).norm());
    }
    CHECK(worst <= mesh->h);
    CHECK(worst_recompose <= 1e-12);
  }

  SUBCASE("annulus is rejected") {
    auto mesh = test::share(geometry::triangulate(
        geometry::build_polygon(test::ngon(48, 2.0), {test::ngon(24, 1.0)}), 0.25));
    const auto u = test::interpolate(mesh, [](const Vec2& x) { return Vec2(x / x.norm()); });
    std::vector<int> all(mesh->node_count());
    std::iota(all.begin(), all.end(), 0);
    try {
      diagnostics::polar_decompose(u, all);
      FAIL("expected NonSimplyConnected");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonSimplyConnected);
    }
  }

  SUBCASE("vanishing modulus is rejected") {
    auto mesh = unit_square(4);
    const auto u = test::interpolate(mesh, [](const Vec2& x) { return Vec2(x.x(), x.y()); });
    std::vector<int> all(mesh->node_count());
    std::iota(all.begin(), all.end(), 0);
    try {
      diagnostics::polar_decompose(u, all);
      FAIL("expected VanishingModulus");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::VanishingModulus);
    }
  }

  SUBCASE("recomposition of a smooth non-vanishing field") {
    auto mesh = unit_square(12);
    const auto u = test::interpolate(mesh, [](const Vec2& x) {
      const double rho = 0.5 + 0.3 * x.x() * x.y();
      const double phi = 3.0 * x.x() - 2.0 * x.y() * x.y();
      return Vec2(rho * std::cos(phi), rho * std::sin(phi));
    });
    std::vector<int> all(mesh->node_count());
    std::iota(all.begin(), all.end(), 0);
    const auto p = diagnostics::polar_decompose(u, all);
    for (std::size_t k = 0; k < p.nodes.size(); ++k) {
      const Vec2 back(p.rho[k] * std::cos(p.phi[k]), p.rho[k] * std::sin(p.phi[k]));
      CHECK((back - u.values[p.nodes[k]]).norm() <= 1e-12);
    }
  }
}

TEST_CASE("normal derivative energy") {
  auto mesh = test::share(geometry::triangulate(
      geometry::build_polygon({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}), 0.05));
  CHECK(diagnostics::normal_derivative_energy(core::constant_field(mesh, Vec2(1, 0)), 0.1) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  const auto u = test::interpolate(mesh, [](const Vec2& x) { return Vec2(x.x(), 0.0); });
  CHECK(std::abs(diagnostics::normal_derivative_energy(u, 0.1) - 2.0) <= 0.1);
}

TEST_CASE("Pohozaev balance") {
  const Vec2 x0(0.45, 0.5);
  const double r = 0.3;

  SUBCASE("constant unit field") {
    auto mesh = unit_square(16);
    const auto rep = diagnostics::pohozaev_residual(core::constant_field(mesh, Vec2(1, 0)), 0.1, x0, r);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.residual == 0.0);
  }

  SUBCASE("manufactured solutions converge under refinement") {
    const double eps = 0.5;
    struct Case {
      std::function<Vec2(const Vec2&)> u;
      std::function<Vec2(const Vec2&)> minus_laplacian;
      Vec2 x0;
      double r;
    };
    const Case cases[] = {
        {[](const Vec2& x) { return Vec2(x.x(), x.y()); }, [](const Vec2&) { return Vec2(0, 0); }, x0, r},
        {[](const Vec2& x) { return Vec2(0.8 * std::cos(x.x() + x.y()), 0.6 * std::sin(x.x() - x.y())); },
         [](const Vec2& x) { return Vec2(1.6 * std::cos(x.x() + x.y()), 1.2 * std::sin(x.x() - x.y())); },
         Vec2(0.0, 0.5), 0.4},
    };
    for (const auto& c : cases) {
      diagnostics::Source s = [&](const Vec2& x) {
        const Vec2 v = c.u(x);
        return Vec2(c.minus_laplacian(x) - v * (1 - v.squaredNorm()) / (eps * eps));
      };
      std::vector<double> res;
      for (int n : {16, 32, 64}) {
        auto mesh = unit_square(n);
        const auto u = test::interpolate(mesh, c.u);
        const auto rep = diagnostics::pohozaev_residual(u, eps, c.x0, c.r, s);
        CHECK(rep.residual >= 0.0);
        res.push_back(rep.residual);
      }
      CAPTURE(res[0]);
      CAPTURE(res[1]);
      CAPTURE(res[2]);
      CHECK(res[1] <= 0.6 * res[0]);
      CHECK(res[2] <= 0.6 * res[1]);
    }
  }
}

TEST_CASE("localized potential") {
  auto mesh = unit_square(20);
  const Vec2 c(0.5, 0.5);
  const double eps = 0.1, r = 0.3;
  CHECK(diagnostics::localized_potential(core::constant_field(mesh, Vec2(1, 0)), eps, c, r) == 0.0);
  const double zero = diagnostics::localized_potential(core::constant_field(mesh, Vec2(0, 0)), eps, c, r);
  CHECK(zero == doctest::Approx(pi * r * r / (eps * eps)).epsilon(1e-5));
  CHECK(diagnostics::clipped_area(*mesh, Vec2(0, 0), 0.4) == doctest::Approx(pi * 0.16 / 4).epsilon(1e-5));
  CHECK(diagnostics::clipped_area(*mesh, Vec2(3, 3), 0.4) == 0.0);
}

TEST_CASE("energy report of a synthetic vortex") {
  const double eps = 0.05;
  const Vec2 P(0.05, 0.02);
  geometry::MeshSizing sizing;
  sizing.h_default = 0.05;
  sizing.features = {{P, 4 * eps, eps / 4}};
  sizing.required_points = {P};
  auto mesh = test::share(geometry::triangulate(geometry::build_polygon(test::ngon(96)), sizing));
  const auto u = profile::synthesize_vortex(P, eps, table(), mesh);
  const auto g = core::boundary_trace(u);
  const auto rep = diagnostics::energy_report(u, g, eps);
  REQUIRE(rep.degree.has_value());
  CHECK(*rep.degree == 1);
  CHECK(rep.kappa_measured == doctest::Approx(rep.M / std::abs(std::log(eps))));
  CHECK(rep.vortices.size() == 1);
  CHECK(rep.sup_dev == doctest::Approx(1.0));
  CHECK(rep.N == doctest::Approx(core::boundary_energy(g, eps)));

  auto vanishing = g;
  vanishing.g[0] = Vec2(0, 0);
  CHECK_FALSE(diagnostics::energy_report(u, vanishing, eps).degree.has_value());
}

TEST_CASE("Pohozaev row format") {
  diagnostics::PohozaevReport p;
  p.x0 = Vec2(0.5, 0.25);
  p.r = 0.125;
  p.lhs = 1.0;
  p.rhs = 0.5;
  p.residual = 0.5;
  CHECK(diagnostics::pohozaev_header() == "x0x,x0y,r,lhs,rhs,residual");
  CHECK(diagnostics::pohozaev_row(p) == "0.5,0.25,0.125,1,0.5,0.5");
}
