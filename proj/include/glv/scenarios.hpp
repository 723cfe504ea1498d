#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "glv/diagnostics.hpp"
#include "glv/gl_core.hpp"
#include "glv/solver.hpp"
#include "glv/vortex_profile.hpp"

namespace glv::scenarios {

using core::BoundaryData;
using core::MeshPtr;

/// Element size h = near_ratio*eps within near_radius*eps of a feature,
/// min(far_ratio*eps, h_max) elsewhere.
struct MeshPolicy {
  double near_ratio = 0.25;
  double far_ratio = 1.0;
  double near_radius = 4.0;
  double h_max = 0.05;

  geometry::MeshSizing sizing(double eps, const std::vector<Vec2>& features) const;
  void validate() const;
};

/// Square [-1/2, 1/2] x [0, 1] with polygon vertices at (0, 0) and (+-eta, 0).
geometry::Domain dipole_domain(double eta);

/// Phase pi(1 - |s|/eta) inside the window |s| < eta on the flat boundary
/// segment through `origin`, 0 elsewhere; s is arclength from the origin.
/// Throws WindowTooLarge when the flat segment does not extend eta both ways.
BoundaryData build_dipole_data(MeshPtr mesh, double eta, const Vec2& origin = Vec2::Zero());

/// Triangle with apex at the origin, opening theta0 about the +y axis, height 1.
geometry::Domain cone_domain(double theta0);

struct ConeScenario {
  geometry::Domain domain;
  MeshPtr mesh;
  core::Field initial;
  BoundaryData g;
  Vec2 P = Vec2::Zero();  ///< vortex centre on the medial axis
  double s = 0.0;         ///< eps^mu, distance of P from the apex
  double d = 0.0;         ///< s sin(theta0/2), distance of P from the sides
  double eta = 0.0;       ///< angle enlargement
  double r = 0.0;         ///< d / sin(eta/2)
  /// (pi(1-mu) + (theta0+eta) mu/2) |log eps|
  double energy_bound = 0.0;
};

/// Vortex at distance eps^mu from the apex of the cone, used both as the
/// initial guess and, through its trace, as the Dirichlet data. eta <= 0
/// selects theta0/4. Throws GeometryError when eps^mu reaches the height and
/// InvalidArgument for parameters out of range.
ConeScenario build_cone_scenario(double theta0, double mu, double eps, double eta = 0.0,
                                 const MeshPolicy& policy = {}, const profile::ProfileTable* table = nullptr);

/// Cubic smoothstep 3t^2 - 2t^3 on [0, 1], 1 beyond.
double smoothstep(double t);

/// g = (smoothstep(|x - x0|/eps), 0). Throws InvalidArgument unless x0 is a
/// boundary node.
BoundaryData build_boundary_zero_data(MeshPtr mesh, const Vec2& x0, double eps);

/// g = e^{i phi}, phi = amplitude sin(2 pi s/L) along the outer loop (s from
/// its first node), 1 on any other loop.
BoundaryData build_reference_data(MeshPtr mesh, double amplitude = 1.5707963267948966);

/// Scenario family name plus its parameters.
struct ScenarioSpec {
  std::string name;  ///< dipole, cone, boundary_zero, reference or constant
  double eta = 0.0;          ///< dipole window; used when eta_power is 0
  double eta_power = 0.0;    ///< dipole window eta = eps^eta_power when > 0
  double theta0 = 1.0471975511965976;
  double mu = 0.8;
  double cone_eta = 0.0;     ///< 0 selects theta0/4
  Vec2 x0 = Vec2(0.5, 0.0);  ///< boundary zero location on the unit square
  int sides = 64;            ///< reference disc polygon
  double amplitude = 1.5707963267948966;

  double dipole_eta(double eps) const;
};

/// Everything needed to solve one row of a sweep.
struct Instance {
  MeshPtr mesh;
  double theta0 = 0.0;  ///< cone angle of the domain
  BoundaryData g;
  std::optional<core::Field> initial;
  Vec2 probe = Vec2::Zero();  ///< centre for the local diagnostics
  std::optional<Vec2> vortex;  ///< expected vortex position, if any
};

Instance build_instance(const ScenarioSpec& spec, double eps, const MeshPolicy& policy,
                        const profile::ProfileTable* table = nullptr);

struct PowerFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of log y on log x. Non-positive pairs are skipped;
/// FitError with fewer than 3 usable points.
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct RowDiagnostics {
  double h = 0.0;
  std::size_t nodes = 0;
  double min_modulus = 0.0;
  double max_modulus = 0.0;
  std::size_t zero_clusters = 0;
  std::size_t interior_zero_clusters = 0;
  std::optional<int> vortex_winding;   ///< winding of the cluster nearest the expected vortex
  double vortex_offset = -1.0;         ///< its distance from the expected position
  double normal_derivative_energy = 0.0;
  diagnostics::PohozaevReport pohozaev;
  double localized_potential = 0.0;
};

struct SweepRow {
  double eps = 0.0;
  core::EnergyReport report;
  solver::ConvergenceRecord record;
  RowDiagnostics diag;
  bool regime_M = false;
  bool regime_N = false;
  bool ok = false;            ///< solved and converged
  std::string error;          ///< failure message, empty when ok
  std::optional<core::Field> field;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< decreasing eps
  std::optional<PowerFit> fit;
  std::string fit_error;
};

struct SweepOptions {
  double kappa = 0.0;  ///< 0 selects theta0/4 of the spec
  double alpha = 0.5;
  int threads = 1;
  bool keep_fields = true;
};

/// Independent solve per eps; rows may run concurrently and are merged in
/// input order. Requires strictly decreasing eps values; the fit is attempted
/// on whatever rows succeed.
SweepResult run_rows(const ScenarioSpec& spec, const std::vector<double>& eps_list, const MeshPolicy& policy,
                     const solver::SolverConfig& cfg, const SweepOptions& opts = {});

/// run_rows() with at least 3 eps values (InvalidArgument otherwise).
SweepResult run_sweep(const ScenarioSpec& spec, const std::vector<double>& eps_list, const MeshPolicy& policy,
                      const solver::SolverConfig& cfg, const SweepOptions& opts = {});

/// `eps,M,N,sup_dev,delta,degree,kappa_measured,regime_M,regime_N` rows plus
/// a `fit,<exponent>,<r2>` line (`fit,NA,NA` without a fit).
void write_report_csv(std::ostream& out, const SweepResult& res);
void write_diagnostics_csv(std::ostream& out, const SweepResult& res);

}  // namespace glv::scenarios
