#include "glv/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <thread>

#include "glv/errors.hpp"
#include "glv/io.hpp"

namespace glv::scenarios {

using std::numbers::pi;

geometry::MeshSizing MeshPolicy::sizing(double eps, const std::vector<Vec2>& features) const {
  geometry::MeshSizing s;
  s.h_default = std::min(far_ratio * eps, h_max);
  for (const auto& c : features) s.features.push_back({c, near_radius * eps, std::min(near_ratio * eps, s.h_default)});
  return s;
}

void MeshPolicy::validate() const {
  if (!(near_ratio > 0)) throw Error(ErrorCode::ValidationError, "mesh.near_ratio must be positive");
  if (!(far_ratio > 0)) throw Error(ErrorCode::ValidationError, "mesh.far_ratio must be positive");
  if (!(near_radius >= 0)) throw Error(ErrorCode::ValidationError, "mesh.near_radius must be non-negative");
  if (!(h_max > 0)) throw Error(ErrorCode::ValidationError, "mesh.h_max must be positive");
}

geometry::Domain dipole_domain(double eta) {
  if (!(eta > 0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
  if (!(eta < 0.5)) throw Error(ErrorCode::WindowTooLarge, "window 2*eta = " + io::fmt(2 * eta) + " exceeds the bottom edge");
  return geometry::build_polygon({Vec2(-0.5, 0), Vec2(-eta, 0), Vec2(0, 0), Vec2(eta, 0), Vec2(0.5, 0), Vec2(0.5, 1),
                                  Vec2(-0.5, 1)});
}

BoundaryData build_dipole_data(MeshPtr mesh, double eta, const Vec2& origin) {
  if (!(eta > 0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
  const auto& m = *mesh;
  const double tol = 1e-12 * std::max(1.0, origin.norm());

  // Boundary edge containing the origin.
  int loop_id = -1, edge_id = -1;
  for (std::size_t l = 0; l < m.loops.size() && loop_id < 0; ++l) {
    const auto& edges = m.loops[l].edges;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const Vec2& a = m.nodes[edges[k].a];
      const Vec2& b = m.nodes[edges[k].b];
      const Vec2 d = b - a;
      const double t = (origin - a).dot(d) / d.squaredNorm();
      if (t >= -1e-12 && t <= 1 + 1e-12 && std::abs(cross(d, origin - a)) <= tol * d.norm()) {
        loop_id = static_cast<int>(l);
        edge_id = static_cast<int>(k);
        break;
      }
    }
  }
  if (loop_id < 0) throw Error(ErrorCode::InvalidArgument, "dipole origin is not on the boundary");

  const auto& edges = m.loops[loop_id].edges;
  const std::size_t ne = edges.size();
  const Vec2 dir = Vec2(m.nodes[edges[edge_id].b] - m.nodes[edges[edge_id].a]).normalized();
  auto collinear = [&](const geometry::BoundaryEdge& e) {
    const Vec2 d = m.nodes[e.b] - m.nodes[e.a];
    return std::abs(cross(dir, d)) <= 1e-9 * d.norm() && d.dot(dir) > 0 &&
           std::abs(cross(dir, m.nodes[e.a] - origin)) <= 1e-9 * std::max(1.0, (m.nodes[e.a] - origin).norm());
  };
  std::set<int> flat;
  double ahead = 0.0, behind = 0.0;
  for (std::size_t step = 0; step < ne; ++step) {
    const auto& e = edges[(edge_id + step) % ne];
    if (!collinear(e)) break;
    flat.insert(e.a);
    flat.insert(e.b);
    ahead = std::max(ahead, (m.nodes[e.b] - origin).dot(dir));
  }
  for (std::size_t step = 1; step < ne; ++step) {
    const auto& e = edges[(edge_id + ne - step) % ne];
    if (!collinear(e)) break;
    flat.insert(e.a);
    flat.insert(e.b);
    behind = std::max(behind, -(m.nodes[e.a] - origin).dot(dir));
  }
  behind = std::max(behind, -(m.nodes[edges[edge_id].a] - origin).dot(dir));
  if (ahead < eta - 1e-12 || behind < eta - 1e-12) {
    throw Error(ErrorCode::WindowTooLarge, "flat segment extends " + io::fmt(behind) + " / " + io::fmt(ahead) +
                                                " around the origin, window half-width is " + io::fmt(eta));
  }

  std::vector<Vec2> g;
  g.reserve(m.boundary_nodes().size());
  for (int n : m.boundary_nodes()) {
    double phi = 0.0;
    if (flat.count(n)) {
      const double s = std::abs((m.nodes[n] - origin).dot(dir));
      if (s < eta) phi = pi * (1.0 - s / eta);
    }
    g.emplace_back(std::cos(phi), std::sin(phi));
  }
  return core::make_boundary_data(std::move(mesh), std::move(g));
}

geometry::Domain cone_domain(double theta0) {
  if (!(theta0 > 0 && theta0 < pi)) throw Error(ErrorCode::InvalidArgument, "theta0 must lie in (0, pi)");
  const double w = std::tan(0.5 * theta0);
  return geometry::build_polygon({Vec2(0, 0), Vec2(w, 1), Vec2(-w, 1)});
}

namespace {

const profile::ProfileTable& default_table() {
  static const profile::ProfileTable t = profile::solve_profile(40.0, 4000);
  return t;
}

MeshPtr mesh_for(const geometry::Domain& d, const geometry::MeshSizing& s) {
  return std::make_shared<const core::Mesh>(geometry::triangulate(d, s));
}

}  // namespace

ConeScenario build_cone_scenario(double theta0, double mu, double eps, double eta, const MeshPolicy& policy,
                                 const profile::ProfileTable* table) {
  if (!(theta0 > 0 && theta0 < pi)) throw Error(ErrorCode::InvalidArgument, "theta0 must lie in (0, pi)");
  if (!(mu > 0 && mu < 1)) throw Error(ErrorCode::InvalidArgument, "mu must lie in (0, 1)");
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (eta <= 0) eta = 0.25 * theta0;
  if (!(eta < theta0)) throw Error(ErrorCode::InvalidArgument, "eta must be smaller than theta0");
  const double s = std::pow(eps, mu);
  if (s >= 1.0) throw Error(ErrorCode::GeometryError, "eps^mu = " + io::fmt(s) + " reaches the cone height");

  ConeScenario c;
  c.domain = cone_domain(theta0);
  c.P = Vec2(0.0, s);
  c.s = s;
  c.d = s * std::sin(0.5 * theta0);
  c.eta = eta;
  c.r = c.d / std::sin(0.5 * eta);
  c.energy_bound = (pi * (1 - mu) + 0.5 * (theta0 + eta) * mu) * std::abs(std::log(eps));

  auto sizing = policy.sizing(eps, {c.P, Vec2(0, 0)});
  sizing.required_points.push_back(c.P);
  c.mesh = mesh_for(c.domain, sizing);
  c.initial = profile::synthesize_vortex(c.P, eps, table ? *table : default_table(), c.mesh);
  c.g = core::boundary_trace(c.initial);
  return c;
}

double smoothstep(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

BoundaryData build_boundary_zero_data(MeshPtr mesh, const Vec2& x0, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  bool found = false;
  for (int n : mesh->boundary_nodes()) {
    if ((mesh->nodes[n] - x0).norm() <= 1e-12) found = true;
  }
  if (!found) throw Error(ErrorCode::InvalidArgument, "x0 is not a boundary node");
  return core::sample_boundary(std::move(mesh),
                               [&](const Vec2& x) { return Vec2(smoothstep((x - x0).norm() / eps), 0.0); });
}

BoundaryData build_reference_data(MeshPtr mesh, double amplitude) {
  const auto& m = *mesh;
  std::vector<Vec2> g(m.boundary_nodes().size(), Vec2(1, 0));
  if (!m.loops.empty()) {
    const auto& loop = m.loops[0];
    for (const auto& e : loop.edges) {
      const double phi = amplitude * std::sin(2 * pi * e.s0 / loop.perimeter);
      g[m.boundary_slot(e.a)] = Vec2(std::cos(phi), std::sin(phi));
    }
  }
  return core::make_boundary_data(std::move(mesh), std::move(g));
}

double ScenarioSpec::dipole_eta(double eps) const { return eta_power > 0 ? std::pow(eps, eta_power) : eta; }

namespace {

// Unit square with x0 inserted as a vertex of the edge it lies on.
geometry::Domain square_with(const Vec2& x0) {
  std::vector<Vec2> corners = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  std::vector<Vec2> loop;
  bool placed = false;
  for (int k = 0; k < 4; ++k) {
    const Vec2& a = corners[k];
    const Vec2& b = corners[(k + 1) % 4];
    loop.push_back(a);
    if ((x0 - a).norm() <= 1e-12) placed = true;
    const double t = (x0 - a).dot(b - a);
    if (!placed && std::abs(cross(b - a, x0 - a)) <= 1e-12 && t > 1e-12 && t < 1 - 1e-12) {
      loop.push_back(x0);
      placed = true;
    }
  }
  if (!placed) throw Error(ErrorCode::InvalidArgument, "x0 = (" + io::fmt(x0.x()) + ", " + io::fmt(x0.y()) +
                                                           ") is not on the unit square boundary");
  return geometry::build_polygon(std::move(loop));
}

}  // namespace

Instance build_instance(const ScenarioSpec& spec, double eps, const MeshPolicy& policy,
                        const profile::ProfileTable* table) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  Instance in;
  if (spec.name == "dipole") {
    const double eta = spec.dipole_eta(eps);
    const auto domain = dipole_domain(eta);
    in.theta0 = domain.cone_angle;
    in.mesh = mesh_for(domain, policy.sizing(eps, {Vec2(0, 0), Vec2(-eta, 0), Vec2(eta, 0)}));
    in.g = build_dipole_data(in.mesh, eta);
  } else if (spec.name == "cone") {
    auto c = build_cone_scenario(spec.theta0, spec.mu, eps, spec.cone_eta, policy, table);
    in.theta0 = c.domain.cone_angle;
    in.mesh = c.mesh;
    in.g = std::move(c.g);
    in.initial = std::move(c.initial);
    in.probe = c.P;
    in.vortex = c.P;
  } else if (spec.name == "boundary_zero") {
    const auto domain = square_with(spec.x0);
    in.theta0 = domain.cone_angle;
    in.mesh = mesh_for(domain, policy.sizing(eps, {spec.x0}));
    in.g = build_boundary_zero_data(in.mesh, spec.x0, eps);
    in.probe = spec.x0;
  } else if (spec.name == "reference") {
    if (spec.sides < 3) throw Error(ErrorCode::InvalidArgument, "reference disc needs at least 3 sides");
    std::vector<Vec2> poly;
    for (int k = 0; k < spec.sides; ++k) {
      const double t = 2 * pi * k / spec.sides;
      poly.emplace_back(std::cos(t), std::sin(t));
    }
    const auto domain = geometry::build_polygon(std::move(poly));
    in.theta0 = domain.cone_angle;
    in.mesh = mesh_for(domain, policy.sizing(eps, {}));
    in.g = build_reference_data(in.mesh, spec.amplitude);
  } else if (spec.name == "constant") {
    const auto domain = geometry::build_polygon({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)});
    in.theta0 = domain.cone_angle;
    in.mesh = mesh_for(domain, policy.sizing(eps, {}));
    in.g = core::sample_boundary(in.mesh, [](const Vec2&) { return Vec2(1, 0); });
    in.probe = Vec2(0.5, 0.5);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + spec.name + "'");
  }
  return in;
}

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "fit inputs differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0 && y[i] > 0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  const std::size_t n = lx.size();
  if (n < 3) throw Error(ErrorCode::FitError, "need at least 3 positive points, have " + std::to_string(n));
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0) throw Error(ErrorCode::FitError, "all x values coincide");
  PowerFit f;
  f.points = n;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

namespace {

void check_decreasing(const std::vector<double>& eps_list) {
  if (eps_list.empty()) throw Error(ErrorCode::InvalidArgument, "eps_list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0)) throw Error(ErrorCode::InvalidArgument, "eps values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "eps_list must be strictly decreasing");
    }
  }
}

RowDiagnostics row_diagnostics(const core::Field& u, const Instance& in, double eps) {
  RowDiagnostics d;
  d.h = u.grid().h;
  d.nodes = u.grid().node_count();
  d.min_modulus = diagnostics::min_modulus(u);
  d.max_modulus = diagnostics::max_modulus(u);
  const auto zeros = diagnostics::find_zeros(u);
  d.zero_clusters = zeros.size();
  for (const auto& z : zeros) {
    if (!z.touches_boundary) ++d.interior_zero_clusters;
  }
  if (in.vortex) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& z : zeros) {
      const double dist = (z.position - *in.vortex).norm();
      if (dist < best) {
        best = dist;
        d.vortex_winding = z.winding;
        d.vortex_offset = dist;
      }
    }
  }
  d.normal_derivative_energy = diagnostics::normal_derivative_energy(u, eps);
  d.pohozaev = diagnostics::pohozaev_residual(u, eps, in.probe, 4 * eps);
  d.localized_potential = diagnostics::localized_potential(u, eps, in.probe, std::pow(eps, 0.7));
  return d;
}

SweepRow solve_row(const ScenarioSpec& spec, double eps, const MeshPolicy& policy, const solver::SolverConfig& cfg,
                   const SweepOptions& opts) {
  SweepRow row;
  row.eps = eps;
  try {
    const Instance in = build_instance(spec, eps, policy);
    auto res = solver::minimize(in.g, eps, cfg, in.initial);
    row.record = std::move(res.record);
    row.report = diagnostics::energy_report(res.field, in.g, eps);
    row.diag = row_diagnostics(res.field, in, eps);
    const double kappa = opts.kappa > 0 ? opts.kappa : 0.25 * in.theta0;
    row.regime_M = row.report.M <= kappa * std::abs(std::log(eps));
    row.regime_N = row.report.N <= std::pow(eps, -opts.alpha);
    row.ok = row.record.converged;
    if (!row.ok) {
      row.error = "NoConvergence: residual " + io::fmt(row.record.residual) + " after " +
                  std::to_string(row.record.iterations) + " iterations";
    }
    if (opts.keep_fields) row.field = std::move(res.field);
  } catch (const Error& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace

SweepResult run_rows(const ScenarioSpec& spec, const std::vector<double>& eps_list, const MeshPolicy& policy,
                     const solver::SolverConfig& cfg, const SweepOptions& opts) {
  check_decreasing(eps_list);
  policy.validate();
  cfg.validate();
  if (spec.name == "cone") (void)default_table();

  SweepResult res;
  res.rows.resize(eps_list.size());
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(eps_list.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) res.rows[i] = solve_row(spec, eps_list[i], policy, cfg, opts);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < eps_list.size(); i = next++) {
          res.rows[i] = solve_row(spec, eps_list[i], policy, cfg, opts);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<double> x, y;
  for (const auto& r : res.rows) {
    if (r.ok) {
      x.push_back(r.eps);
      y.push_back(r.report.sup_dev);
    }
  }
  try {
    res.fit = fit_power_law(x, y);
  } catch (const Error& e) {
    res.fit_error = e.what();
  }
  return res;
}

SweepResult run_sweep(const ScenarioSpec& spec, const std::vector<double>& eps_list, const MeshPolicy& policy,
                      const solver::SolverConfig& cfg, const SweepOptions& opts) {
  if (eps_list.size() < 3) throw Error(ErrorCode::InvalidArgument, "a sweep needs at least 3 eps values");
  return run_rows(spec, eps_list, policy, cfg, opts);
}

void write_report_csv(std::ostream& out, const SweepResult& res) {
  out << "eps,M,N,sup_dev,delta,degree,kappa_measured,regime_M,regime_N\n";
  for (const auto& r : res.rows) {
    out << io::fmt(r.eps) << ",";
    if (r.report.eps == 0.0) {
      out << "NA,NA,NA,NA,NA,NA,NA,NA\n";
      continue;
    }
    const auto& e = r.report;
    out << io::fmt(e.M) << "," << io::fmt(e.N) << "," << io::fmt(e.sup_dev) << "," << io::fmt(e.delta) << ","
        << (e.degree ? std::to_string(*e.degree) : "NA") << "," << io::fmt(e.kappa_measured) << ","
        << (r.regime_M ? 1 : 0) << "," << (r.regime_N ? 1 : 0) << "\n";
  }
  if (res.fit) {
    out << "fit," << io::fmt(res.fit->exponent) << "," << io::fmt(res.fit->r2) << "\n";
  } else {
    out << "fit,NA,NA\n";
  }
}

void write_diagnostics_csv(std::ostream& out, const SweepResult& res) {
  out << "eps,status,iterations,el_residual,h,nodes,min_modulus,max_modulus,zero_clusters,interior_zero_clusters,"
         "vortex_winding,vortex_offset,normal_derivative_energy,"
      << diagnostics::pohozaev_header() << ",localized_potential\n";
  for (const auto& r : res.rows) {
    std::string status = "ok";
    if (!r.ok) status = r.error.substr(0, r.error.find(':'));
    out << io::fmt(r.eps) << "," << status << ",";
    if (r.report.eps == 0.0) {
      out << "NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA\n";
      continue;
    }
    const auto& d = r.diag;
    out << r.record.iterations << "," << io::fmt(r.record.residual) << "," << io::fmt(d.h) << "," << d.nodes << ","
        << io::fmt(d.min_modulus) << "," << io::fmt(d.max_modulus) << "," << d.zero_clusters << ","
        << d.interior_zero_clusters << "," << (d.vortex_winding ? std::to_string(*d.vortex_winding) : "NA") << ","
        << (d.vortex_offset >= 0 ? io::fmt(d.vortex_offset) : "NA") << "," << io::fmt(d.normal_derivative_energy)
        << "," << diagnostics::pohozaev_row(d.pohozaev) << "," << io::fmt(d.localized_potential) << "\n";
  }
}

}  // namespace glv::scenarios
