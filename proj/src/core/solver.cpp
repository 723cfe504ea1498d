#include "glv/solver.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include <Eigen/SparseCholesky>

#include "glv/diagnostics.hpp"
#include "glv/io.hpp"

namespace glv::solver {

using core::BoundaryData;
using core::Discretization;
using core::Field;
using core::Mesh;

const char* method_name(Method m) {
  return m == Method::GradientDescent ? "gradient-descent" : "conjugate-gradient";
}

Method parse_method(const std::string& s) {
  if (s == "cg" || s == "ncg" || s == "conjugate-gradient") return Method::ConjugateGradient;
  if (s == "gd" || s == "gradient-descent") return Method::GradientDescent;
  throw Error(ErrorCode::ValidationError, "method: unknown value '" + s + "'");
}

void SolverConfig::validate() const {
  if (!(tol > 0)) throw Error(ErrorCode::ValidationError, "tol: must be positive");
  if (max_iters < 1) throw Error(ErrorCode::ValidationError, "max_iters: must be at least 1");
  if (restart_period < 1) throw Error(ErrorCode::ValidationError, "restart_period: must be at least 1");
  if (multistart < 0) throw Error(ErrorCode::ValidationError, "multistart: must be non-negative");
}

void write_convergence_csv(std::ostream& out, const ConvergenceRecord& rec) {
  out << "iter,energy,residual\n";
  for (std::size_t k = 0; k < rec.energies.size(); ++k) {
    out << k << "," << io::fmt(rec.energies[k]) << "," << io::fmt(rec.residuals[k]) << "\n";
  }
}

Field harmonic_init(const BoundaryData& g) {
  const Mesh& m = *g.mesh;
  Field u = core::with_boundary(core::constant_field(g.mesh, Vec2::Zero()), g);
  const auto& interior = m.interior_nodes();
  if (interior.empty()) throw SingularSystemError("mesh has no interior node", u);

  // Solve for the offset from one boundary value so constant data is exact.
  const Vec2 shift = g.g.front();
  const Discretization disc(m);
  const auto& K = disc.stiffness();
  const int ni = static_cast<int>(interior.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ni, 2);
  for (int col = 0; col < K.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      const int si = m.interior_slot(static_cast<int>(it.row()));
      if (si < 0) continue;
      const int sj = m.interior_slot(col);
      if (sj >= 0) {
        trip.emplace_back(si, sj, it.value());
      } else {
        rhs.row(si) -= it.value() * (u.values[col] - shift).transpose();
      }
    }
  }
  Eigen::SparseMatrix<double> A(ni, ni);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "Laplace system factorization failed");
  const Eigen::MatrixXd x = ldlt.solve(rhs);
  for (int s = 0; s < ni; ++s) u.values[interior[s]] = shift + Vec2(x(s, 0), x(s, 1));
  return u;
}

namespace {

// argmin over a > 0 of c0 a + c1 a^2 + c2 a^3 + c3 a^4 given c0 < 0.
double quartic_argmin(const std::array<double, 4>& c) {
  auto p = [&](double a) { return ((c[3] * a + c[2]) * a + c[1]) * a * a + c[0] * a; };
  auto dp = [&](double a) { return ((4 * c[3] * a + 3 * c[2]) * a + 2 * c[1]) * a + c[0]; };
  // Upper bound on the positive critical points (Cauchy bound of p').
  double lead = 0.0;
  double bound = 0.0;
  const std::array<double, 4> dc = {c[0], 2 * c[1], 3 * c[2], 4 * c[3]};
  int deg = 3;
  while (deg > 0 && dc[deg] == 0.0) --deg;
  if (deg == 0) return 0.0;
  lead = std::abs(dc[deg]);
  double mx = 0.0;
  for (int k = 0; k < deg; ++k) mx = std::max(mx, std::abs(dc[k]));
  bound = 1.0 + mx / lead;
  if (dc[deg] < 0) return 0.0;  // unbounded below; cannot happen for this energy

  // Split (0, bound] at the positive roots of p'' into monotone pieces of p'.
  std::vector<double> knots = {0.0};
  const double qa = 12 * c[3], qb = 6 * c[2], qc = 2 * c[1];
  if (qa != 0.0) {
    const double disc = qb * qb - 4 * qa * qc;
    if (disc >= 0) {
      const double s = std::sqrt(disc);
      for (double r : {(-qb - s) / (2 * qa), (-qb + s) / (2 * qa)}) {
        if (r > 0 && r < bound) knots.push_back(r);
      }
    }
  } else if (qb != 0.0) {
    const double r = -qc / qb;
    if (r > 0 && r < bound) knots.push_back(r);
  }
  std::sort(knots.begin(), knots.end());
  knots.push_back(bound);

  double best = 0.0, best_val = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    double lo = knots[k], hi = knots[k + 1];
    const double flo = dp(lo), fhi = dp(hi);
    if (!(flo < 0 && fhi >= 0)) continue;
    for (int it = 0; it < 200 && hi - lo > 0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (dp(mid) < 0 ? lo : hi) = mid;
    }
    const double a = 0.5 * (lo + hi);
    const double v = p(a);
    if (v < best_val) {
      best_val = v;
      best = a;
    }
  }
  return best;
}

class Minimizer {
 public:
  Minimizer(const BoundaryData& g, double eps, const SolverConfig& cfg)
      : mesh_(*g.mesh), disc_(mesh_), eps_(eps), cfg_(cfg), ni_(static_cast<int>(mesh_.interior_nodes().size())) {
    build_pattern();
  }

  void run(Field& u, ConvergenceRecord& rec) {
    auto& vals = u.values;
    std::vector<Vec2> grad, dfull(vals.size(), Vec2::Zero());
    disc_.gradient(vals, eps_, grad);
    clear_boundary(grad);
    double energy = disc_.energy(vals, eps_).total();
    double res = disc_.residual_norm(grad);
    rec.energies.push_back(energy);
    rec.residuals.push_back(res);

    Eigen::VectorXd G = pack(grad), Z, D;
    refactor(vals);
    Z = solve(G);
    D = -Z;
    double gz = G.dot(Z);
    bool steepest = true;
    long since_restart = 0;

    long it = 0;
    while (res > cfg_.tol && it < cfg_.max_iters) {
      unpack(D, dfull);
      auto c = disc_.line_coefficients(vals, dfull, eps_);
      if (!(c[0] < 0)) {
        if (steepest) break;  // no descent left at working precision
        D = -Z;
        steepest = true;
        since_restart = 0;
        continue;
      }
      double alpha = quartic_argmin(c);
      auto delta = [&](double a) { return ((c[3] * a + c[2]) * a + c[1]) * a * a + c[0] * a; };
      for (int bt = 0; bt < 60 && !(alpha > 0 && delta(alpha) <= 1e-4 * alpha * c[0]); ++bt) alpha *= 0.5;
      const double dE = delta(alpha);
      if (!(alpha > 0) || !(dE <= 1e-4 * alpha * c[0])) {
        if (steepest) break;
        D = -Z;
        steepest = true;
        since_restart = 0;
        continue;
      }
      for (int s = 0; s < ni_; ++s) vals[mesh_.interior_nodes()[s]] += alpha * dfull[mesh_.interior_nodes()[s]];
      energy += dE;
      ++it;
      ++since_restart;

      disc_.gradient(vals, eps_, grad);
      clear_boundary(grad);
      res = disc_.residual_norm(grad);
      rec.energies.push_back(energy);
      rec.residuals.push_back(res);
      if (res <= cfg_.tol) break;

      const Eigen::VectorXd Gn = pack(grad);
      const bool restart = cfg_.method == Method::GradientDescent || since_restart >= cfg_.restart_period;
      if (since_restart >= cfg_.restart_period) {
        refactor(vals);
        since_restart = 0;
      }
      const Eigen::VectorXd Zn = solve(Gn);
      const double gzn = Gn.dot(Zn);
      if (restart) {
        D = -Zn;
        steepest = true;
      } else {
        const double beta = std::max(0.0, (gzn - Gn.dot(Z)) / gz);
        D = -Zn + beta * D;
        steepest = beta == 0.0;
        if (Gn.dot(D) >= 0) {
          D = -Zn;
          steepest = true;
        }
      }
      G = Gn;
      Z = Zn;
      gz = gzn;
    }
    rec.iterations = it;
    rec.residual = res;
    rec.converged = res <= cfg_.tol;
    rec.energy = disc_.energy(vals, eps_).total();
    if (!rec.converged) {
      rec.warnings.push_back("NoConvergence: " + std::to_string(it) + " iterations, residual " + io::fmt(res));
    }
  }

 private:
  const Mesh& mesh_;
  Discretization disc_;
  double eps_;
  SolverConfig cfg_;
  int ni_;
  Eigen::SparseMatrix<double> P_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::SparseMatrix<double> base_;

  void clear_boundary(std::vector<Vec2>& g) const {
    for (int n : mesh_.boundary_nodes()) g[n].setZero();
  }

  Eigen::VectorXd pack(const std::vector<Vec2>& v) const {
    Eigen::VectorXd x(2 * ni_);
    const auto& in = mesh_.interior_nodes();
    for (int s = 0; s < ni_; ++s) {
      x[2 * s] = v[in[s]].x();
      x[2 * s + 1] = v[in[s]].y();
    }
    return x;
  }

  void unpack(const Eigen::VectorXd& x, std::vector<Vec2>& v) const {
    const auto& in = mesh_.interior_nodes();
    for (int s = 0; s < ni_; ++s) v[in[s]] = Vec2(x[2 * s], x[2 * s + 1]);
  }

  // P = K_II (x) I_2 + (2/eps^2) m_i u_i u_i^T: the Hessian with the
  // indefinite -(1-|u|^2)/eps^2 part dropped.
  void build_pattern() {
    const auto& K = disc_.stiffness();
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < K.outerSize(); ++col) {
      const int sj = mesh_.interior_slot(col);
      if (sj < 0) continue;
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
        const int si = mesh_.interior_slot(static_cast<int>(it.row()));
        if (si < 0) continue;
        trip.emplace_back(2 * si, 2 * sj, it.value());
        trip.emplace_back(2 * si + 1, 2 * sj + 1, it.value());
      }
    }
    for (int s = 0; s < ni_; ++s) {
      trip.emplace_back(2 * s, 2 * s + 1, 0.0);
      trip.emplace_back(2 * s + 1, 2 * s, 0.0);
    }
    base_.resize(2 * ni_, 2 * ni_);
    base_.setFromTriplets(trip.begin(), trip.end());
    base_.makeCompressed();
    P_ = base_;
    ldlt_.analyzePattern(P_);
  }

  void refactor(const std::vector<Vec2>& u) {
    P_ = base_;
    const auto& in = mesh_.interior_nodes();
    const auto& mass = disc_.lumped_mass();
    const double c = 2.0 / (eps_ * eps_);
    for (int s = 0; s < ni_; ++s) {
      const Vec2& v = u[in[s]];
      const double w = c * mass[in[s]];
      P_.coeffRef(2 * s, 2 * s) += w * v.x() * v.x();
      P_.coeffRef(2 * s + 1, 2 * s + 1) += w * v.y() * v.y();
      P_.coeffRef(2 * s, 2 * s + 1) += w * v.x() * v.y();
      P_.coeffRef(2 * s + 1, 2 * s) += w * v.x() * v.y();
    }
    ldlt_.factorize(P_);
    if (ldlt_.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "preconditioner factorization failed");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& g) const { return ldlt_.solve(g); }
};

}  // namespace

SolveResult minimize(const BoundaryData& g, double eps, const SolverConfig& cfg, const std::optional<Field>& initial) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  cfg.validate();
  SolveResult out;
  auto& rec = out.record;
  if (g.mesh->h > 0.5 * eps) {
    rec.warnings.push_back("mesh does not resolve eps: h = " + io::fmt(g.mesh->h) + " > eps/2 = " + io::fmt(0.5 * eps));
  }
  if (initial) {
    if (initial->mesh.get() != g.mesh.get() && initial->mesh->node_count() != g.mesh->node_count()) {
      throw Error(ErrorCode::InvalidArgument, "initial field lives on a different mesh");
    }
    out.field = core::with_boundary(core::make_field(g.mesh, initial->values), g);
  } else {
    try {
      out.field = harmonic_init(g);
    } catch (const SingularSystemError& e) {
      out.field = e.field();
      rec.converged = true;
      rec.energy = core::interior_energy(out.field, eps);
      rec.energies.push_back(rec.energy);
      rec.residuals.push_back(0.0);
      return out;
    }
  }
  if (g.mesh->interior_nodes().empty()) {
    rec.converged = true;
    rec.energy = core::interior_energy(out.field, eps);
    rec.energies.push_back(rec.energy);
    rec.residuals.push_back(0.0);
    return out;
  }
  Minimizer(g, eps, cfg).run(out.field, rec);
  return out;
}

SolveResult minimize_multistart(const BoundaryData& g, double eps, const SolverConfig& cfg) {
  SolveResult best = minimize(g, eps, cfg);
  for (int s = 1; s <= cfg.multistart; ++s) {
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(s));
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<Vec2> v(g.mesh->node_count());
    for (auto& x : v) {
      const double a = angle(rng);
      x = Vec2(std::cos(a), std::sin(a));
    }
    SolveResult r = minimize(g, eps, cfg, core::make_field(g.mesh, std::move(v)));
    const bool better = (r.record.converged && !best.record.converged) ||
                        (r.record.converged == best.record.converged && r.record.energy < best.record.energy);
    if (better) best = std::move(r);
  }
  return best;
}

Field interpolate_field(const Field& u, core::MeshPtr target) {
  const geometry::PointLocator loc(u.grid());
  std::vector<Vec2> v;
  v.reserve(target->node_count());
  for (const auto& p : target->nodes) {
    const auto hit = loc.locate_nearest(p);
    const auto& tri = u.grid().triangles[hit.triangle];
    v.push_back(hit.bary[0] * u.values[tri[0]] + hit.bary[1] * u.values[tri[1]] + hit.bary[2] * u.values[tri[2]]);
  }
  return core::make_field(std::move(target), std::move(v));
}

std::vector<ContinuationEntry> continuation_sweep(const ProblemBuilder& builder, const std::vector<double>& eps_list,
                                                  const SolverConfig& cfg) {
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) throw Error(ErrorCode::InvalidArgument, "eps_list must be strictly decreasing");
  }
  std::vector<ContinuationEntry> out;
  for (double eps : eps_list) {
    Problem prob = builder(eps);
    std::optional<Field> start = prob.initial;
    if (!out.empty()) start = interpolate_field(out.back().field, prob.g.mesh);
    SolveResult r = minimize(prob.g, eps, cfg, start);
    ContinuationEntry e;
    e.eps = eps;
    e.report = diagnostics::energy_report(r.field, prob.g, eps);
    e.field = std::move(r.field);
    e.record = std::move(r.record);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace glv::solver
