// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and runtime
// limits are fixed below. Exit status is non-zero when a criterion outside
// kKnownFailures fails or the suite itself errors.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "glv/diagnostics.hpp"
#include "glv/errors.hpp"
#include "glv/geometry.hpp"
#include "glv/gl_core.hpp"
#include "glv/scenarios.hpp"
#include "glv/vortex_profile.hpp"

using namespace glv;
using std::numbers::pi;

namespace {

// Criterion 6 asks for N_eps * eps^0.9 <= 1 on the cone; the measured value
// is about 1.85 at both eps and is reported as FAIL.
const std::set<int> kKnownFailures = {6};

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string format(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

std::vector<Vec2> ngon(int n, double r) {
  std::vector<Vec2> p;
  for (int k = 0; k < n; ++k) p.emplace_back(r * std::cos(2 * pi * k / n), r * std::sin(2 * pi * k / n));
  return p;
}

core::MeshPtr share(geometry::Mesh m) { return std::make_shared<const geometry::Mesh>(std::move(m)); }

core::MeshPtr structured_square(int n) {
  std::vector<Vec2> nodes;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) nodes.emplace_back(double(i) / n, double(j) / n);
  }
  std::vector<std::array<int, 3>> tris;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return share(geometry::make_mesh(std::move(nodes), std::move(tris)));
}

const profile::ProfileTable& table() {
  static const auto t = profile::solve_profile(40.0, 4000);
  return t;
}

// Converged rows of criteria 4-7, for the maximum principle.
std::vector<std::pair<std::string, scenarios::SweepRow>> converged_rows;

void collect(const std::string& tag, const scenarios::SweepResult& res) {
  for (const auto& r : res.rows) {
    if (r.ok) converged_rows.emplace_back(tag, r);
  }
}

Outcome gradient_consistency() {
  const auto mesh = share(geometry::triangulate(geometry::build_polygon(ngon(24, 1.0)), 0.15));
  std::mt19937_64 rng(20240901);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double eps = 0.1, step = 1e-5;
  double worst = 0.0;
  for (int f = 0; f < 20; ++f) {
    std::vector<Vec2> v(mesh->node_count());
    for (auto& x : v) x = Vec2(U(rng), U(rng));
    const auto u = core::make_field(mesh, v);
    const auto grad = core::energy_gradient(u, eps);
    for (int k = 0; k < 5; ++k) {
      std::vector<Vec2> d(v.size()), plus(v), minus(v);
      double analytic = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        d[i] = Vec2(U(rng), U(rng));
        analytic += grad[i].dot(d[i]);
        plus[i] += step * d[i];
        minus[i] -= step * d[i];
      }
      const double fd = (core::interior_energy(core::make_field(mesh, plus), eps) -
                         core::interior_energy(core::make_field(mesh, minus), eps)) /
                        (2 * step);
      worst = std::max(worst, std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-300));
    }
  }
  return {worst < 1e-6, format("max relative error %.3g (tol 1e-6) over 20 fields x 5 directions", worst)};
}

Outcome profile_fidelity() {
  const auto& t = table();
  const double f_ref = 1.0 - 1.0 / 200 - 9.0 / 80000;
  const double fp_ref = 1.0 / 1000 + 4.5e-5;
  const double df = std::abs(t.eval(10.0) - f_ref);
  const double dfp = std::abs(t.slope(10.0) - fp_ref);
  const double res = profile::ode_residual(t);
  return {df <= 1e-4 && dfp <= 1e-5 && res <= 1e-8,
          format("|f(10)-ref| %.3g (tol 1e-4), |f'(10)-ref| %.3g (tol 1e-5), ODE residual %.3g (tol 1e-8)", df, dfp,
                 res)};
}

Outcome vortex_density() {
  const double eps = 0.02;
  const Vec2 P(0.0, 0.0);
  geometry::MeshSizing sizing;
  sizing.h_default = 0.02;
  sizing.features.push_back({P, 4 * eps, 0.25 * eps});
  sizing.required_points.push_back(P);
  const auto mesh = share(geometry::triangulate(geometry::build_polygon(ngon(128, 1.0)), sizing));
  const auto u = profile::synthesize_vortex(P, eps, table(), mesh);
  double worst = 0.0;
  std::string parts;
  for (double t : {5.0, 10.0, 20.0}) {
    const double r = t * eps;
    const double d = core::ring_density(u, eps, P, r - 0.25 * eps, r + 0.25 * eps);
    const double expected = 1.0 / (2 * r * r);
    const double rel = std::abs(d - expected) / expected;
    worst = std::max(worst, rel);
    parts += format(" t=%geps:%.3g", t, rel);
  }
  return {worst <= 0.1, format("relative deviation from 1/(2t^2)%s (tol 0.1), %zu nodes", parts.c_str(),
                               mesh->node_count())};
}

Outcome reference_rate() {
  scenarios::ScenarioSpec spec;
  spec.name = "reference";
  const auto res = scenarios::run_sweep(spec, {0.2, 0.1, 0.05, 0.025}, {}, {});
  collect("reference", res);
  if (!res.fit) return {false, "no fit: " + res.fit_error};
  const bool ok = res.fit->exponent >= 1.7 && res.fit->exponent <= 2.3 && res.fit->r2 >= 0.98;
  return {ok, format("sup_dev exponent %.4f (range [1.7, 2.3]), r2 %.5f (min 0.98), %zu points", res.fit->exponent,
                     res.fit->r2, res.fit->points)};
}

Outcome dipole_regime() {
  scenarios::ScenarioSpec spec;
  spec.name = "dipole";
  spec.eta_power = 0.5;
  const auto res = scenarios::run_sweep(spec, {0.1, 0.05, 0.025, 0.0125}, {}, {});
  collect("dipole", res);
  bool ok = true;
  int converged = 0, degree_zero = 0;
  double min_mod = 1e300;
  std::size_t zeros = 0;
  for (const auto& r : res.rows) {
    if (!r.ok) continue;
    ++converged;
    min_mod = std::min(min_mod, r.diag.min_modulus);
    zeros += r.diag.interior_zero_clusters;
    degree_zero += r.report.degree == 0;
    ok &= r.report.degree == 0 && r.diag.min_modulus >= 0.5 && r.diag.interior_zero_clusters == 0;
  }
  ok &= converged >= 3 && res.fit.has_value() && res.fit->exponent >= 0.1;
  return {ok, format("%d/4 converged, %d with degree 0, min|u| %.3f (min 0.5), %zu interior zero clusters, "
                     "sup_dev exponent %.3f (min 0.1)",
                     converged, degree_zero, min_mod, zeros, res.fit ? res.fit->exponent : std::nan(""))};
}

Outcome cone_counterexample() {
  scenarios::ScenarioSpec spec;
  spec.name = "cone";
  const double theta0 = spec.theta0, mu = spec.mu, eta = theta0 / 4;
  const auto res = scenarios::run_rows(spec, {0.02, 0.01}, {}, {});
  collect("cone", res);
  bool vortex_ok = true, energy_ok = true, boundary_ok = true;
  std::string parts;
  for (const auto& r : res.rows) {
    if (!r.ok) {
      vortex_ok = false;
      parts += format(" eps=%g: %s;", r.eps, r.error.c_str());
      continue;
    }
    const double bound = (pi * (1 - mu) + (theta0 + eta) * mu / 2) * std::abs(std::log(r.eps)) + 5.0;
    const double scaled_n = r.report.N * std::pow(r.eps, 0.9);
    vortex_ok &= r.diag.zero_clusters == 1 && r.diag.vortex_winding == 1 && r.diag.vortex_offset >= 0 &&
                 r.diag.vortex_offset <= 2 * r.diag.h;
    energy_ok &= r.report.M <= bound;
    boundary_ok &= scaled_n <= 1.0;
    parts += format(" eps=%g: clusters %zu winding %d offset %.3g (2h %.3g), M %.3f (bound %.3f), N*eps^0.9 %.3f;",
                    r.eps, r.diag.zero_clusters, r.diag.vortex_winding.value_or(0), r.diag.vortex_offset,
                    2 * r.diag.h, r.report.M, bound, scaled_n);
  }
  if (!parts.empty()) parts.pop_back();
  return {vortex_ok && energy_ok && boundary_ok,
          format("vortex %s, interior energy %s, boundary energy %s (tol N*eps^0.9 <= 1);%s",
                 vortex_ok ? "ok" : "FAIL", energy_ok ? "ok" : "FAIL", boundary_ok ? "ok" : "FAIL", parts.c_str())};
}

Outcome boundary_zero() {
  scenarios::ScenarioSpec spec;
  spec.name = "boundary_zero";
  const auto res = scenarios::run_sweep(spec, {0.1, 0.05, 0.025}, {}, {});
  collect("boundary_zero", res);
  bool ok = true;
  double m_lo = 1e300, m_hi = 0, n_lo = 1e300, n_hi = 0, worst_zero = 0;
  for (const auto& r : res.rows) {
    if (!r.ok || !r.field) {
      ok = false;
      continue;
    }
    const auto& mesh = r.field->grid();
    double at_x0 = -1;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      if ((mesh.nodes[i] - spec.x0).norm() < 1e-12) at_x0 = r.field->values[i].norm();
    }
    if (at_x0 < 0) ok = false;
    worst_zero = std::max(worst_zero, at_x0);
    m_lo = std::min(m_lo, r.report.M);
    m_hi = std::max(m_hi, r.report.M);
    n_lo = std::min(n_lo, r.report.N * r.eps);
    n_hi = std::max(n_hi, r.report.N * r.eps);
  }
  ok &= worst_zero == 0.0 && m_lo > 0 && m_hi <= 3 * m_lo && n_lo > 0 && n_hi <= 3 * n_lo;
  return {ok, format("|u(x0)| max %.3g (must be 0), M in [%.4f, %.4f] ratio %.3f (max 3), N*eps in [%.4f, %.4f] ratio "
                     "%.3f (max 3)",
                     worst_zero, m_lo, m_hi, m_hi / m_lo, n_lo, n_hi, n_hi / n_lo)};
}

Outcome pohozaev_convergence() {
  const double eps = 0.5;
  const Vec2 x0(0.45, 0.5);
  const double r = 0.3;
  auto affine = [](const Vec2& x) { return Vec2(0.3 + 0.5 * x.x() - 0.2 * x.y(), -0.1 + 0.3 * x.x() + 0.4 * x.y()); };
  diagnostics::Source source = [&](const Vec2& x) {
    const Vec2 v = affine(x);
    return Vec2(-v * (1 - v.squaredNorm()) / (eps * eps));
  };
  std::vector<double> res;
  for (int n : {16, 32, 64}) {
    const auto mesh = structured_square(n);
    std::vector<Vec2> v;
    for (const auto& p : mesh->nodes) v.push_back(affine(p));
    res.push_back(diagnostics::pohozaev_residual(core::make_field(mesh, v), eps, x0, r, source).residual);
  }
  const double f1 = res[0] / res[1], f2 = res[1] / res[2];
  return {f1 >= 1.8 && f2 >= 1.8,
          format("residuals %.3g, %.3g, %.3g at h = 1/16, 1/32, 1/64; factors %.2f, %.2f (min 1.8)", res[0], res[1],
                 res[2], f1, f2)};
}

Outcome degree_oracle() {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<int> D(-3, 3), sides(24, 96);
  std::uniform_real_distribution<double> U(-1.0, 1.0), scale(0.2, 5.0), radius(0.5, 2.0);
  int correct = 0, invariant = 0, rescales = 0;
  for (int k = 0; k < 100; ++k) {
    const int d = D(rng);
    const int n = sides(rng);
    const double R = radius(rng);
    const Vec2 c(U(rng), U(rng));
    auto pts = ngon(n, R);
    for (auto& p : pts) p += c;
    const auto mesh = share(geometry::triangulate(geometry::build_polygon(pts), R));
    double a[3], b[3];
    for (int m = 0; m < 3; ++m) {
      a[m] = 0.4 * U(rng) / (m + 1);
      b[m] = 0.4 * U(rng) / (m + 1);
    }
    const double phase0 = pi * U(rng);
    auto g = core::sample_boundary(mesh, [&](const Vec2& x) {
      const double t = std::atan2(x.y() - c.y(), x.x() - c.x());
      double phi = phase0 + d * t;
      for (int m = 0; m < 3; ++m) phi += a[m] * std::cos((m + 1) * t) + b[m] * std::sin((m + 1) * t);
      return Vec2(std::cos(phi), std::sin(phi));
    });
    if (diagnostics::compute_degree(g, 0) == d) ++correct;
    if (k < 50) {
      auto scaled = g;
      for (auto& v : scaled.g) v *= scale(rng);
      ++rescales;
      if (diagnostics::compute_degree(scaled, 0) == d) ++invariant;
    }
  }
  return {correct == 100 && invariant == rescales,
          format("%d/100 degrees exact, %d/%d invariant under positive rescaling", correct, invariant, rescales)};
}

Outcome maximum_principle() {
  std::size_t bad = 0;
  double worst = -1e300;
  for (const auto& [tag, r] : converged_rows) {
    const double excess = r.diag.max_modulus - (1.0 + r.report.delta + r.diag.h);
    worst = std::max(worst, excess);
    if (excess > 0) ++bad;
  }
  return {!converged_rows.empty() && bad == 0,
          format("%zu converged fields from criteria 4-7, %zu violations, max of sup|u| - (1 + delta + h) = %.3g",
                 converged_rows.size(), bad, worst)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient consistency", 10, gradient_consistency},
      {2, "profile fidelity", 5, profile_fidelity},
      {3, "vortex energy density", 30, vortex_density},
      {4, "reference rate", 900, reference_rate},
      {5, "dipole regime", 1200, dipole_regime},
      {6, "cone counterexample", 600, cone_counterexample},
      {7, "boundary zero", 600, boundary_zero},
      {8, "Pohozaev convergence", 60, pohozaev_convergence},
      {9, "degree oracle", 60, degree_oracle},
      {10, "maximum principle", 60, maximum_principle},
  };
  int unexpected = 0, failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    std::printf("criterion %2d %s  %s: %s; %.2f s (limit %g s)%s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.limit_s, pass || kKnownFailures.count(c.id) ? "" : "  [unexpected]");
    std::fflush(stdout);
    if (!pass) {
      ++failed;
      if (!kKnownFailures.count(c.id)) ++unexpected;
    }
  }
  std::printf("summary: %zu criteria, %d passed, %d failed (%d unexpected)\n", criteria.size(),
              static_cast<int>(criteria.size()) - failed, failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}
