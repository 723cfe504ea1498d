#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "glv/errors.hpp"
#include "glv/gl_core.hpp"

namespace glv::solver {

enum class Method { GradientDescent, ConjugateGradient };

const char* method_name(Method m);
/// Accepts "cg", "ncg", "conjugate-gradient", "gd", "gradient-descent".
Method parse_method(const std::string& s);

struct SolverConfig {
  double tol = 1e-8;
  long max_iters = 200000;
  Method method = Method::ConjugateGradient;
  int restart_period = 50;
  std::uint64_t seed = 0;
  /// Extra random unit-modulus starts tried by minimize_multistart.
  int multistart = 0;

  /// Throws ValidationError.
  void validate() const;
};

struct ConvergenceRecord {
  bool converged = false;
  long iterations = 0;
  double residual = 0.0;
  double energy = 0.0;              ///< recomputed at the final iterate
  std::vector<double> energies;     ///< trajectory, one entry per iterate
  std::vector<double> residuals;
  std::vector<std::string> warnings;
};

void write_convergence_csv(std::ostream& out, const ConvergenceRecord& rec);

struct SolveResult {
  core::Field field;
  ConvergenceRecord record;
};

/// Raised by harmonic_init on meshes without interior nodes; carries the
/// boundary-only field.
class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& msg, core::Field field)
      : Error(ErrorCode::SingularSystem, msg), field_(std::move(field)) {}
  const core::Field& field() const { return field_; }

 private:
  core::Field field_;
};

/// Componentwise discrete-harmonic extension of g.
core::Field harmonic_init(const core::BoundaryData& g);

/// Minimises the discrete interior energy with Dirichlet data g, starting from
/// `initial` (boundary values overwritten) or the harmonic extension. Never
/// throws on non-convergence: record.converged is false instead.
SolveResult minimize(const core::BoundaryData& g, double eps, const SolverConfig& cfg,
                     const std::optional<core::Field>& initial = std::nullopt);

/// minimize() from the usual start plus cfg.multistart random unit-modulus
/// interior starts drawn from cfg.seed; returns the lowest-energy result.
SolveResult minimize_multistart(const core::BoundaryData& g, double eps, const SolverConfig& cfg);

/// Transfers u onto another mesh by linear interpolation.
core::Field interpolate_field(const core::Field& u, core::MeshPtr target);

struct Problem {
  core::BoundaryData g;
  std::optional<core::Field> initial;
};
using ProblemBuilder = std::function<Problem(double eps)>;

struct ContinuationEntry {
  double eps = 0.0;
  core::Field field;
  core::EnergyReport report;
  ConvergenceRecord record;
};

/// Solves at each eps in turn, warm-starting from the previous solution.
std::vector<ContinuationEntry> continuation_sweep(const ProblemBuilder& builder, const std::vector<double>& eps_list,
                                                  const SolverConfig& cfg);

}  // namespace glv::solver
