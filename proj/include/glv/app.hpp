#pragma once

#include <string>
#include <utility>
#include <vector>

#include "glv/scenarios.hpp"
#include "glv/solver.hpp"

namespace glv::app {

/// Parsed and validated run configuration.
struct RunConfig {
  scenarios::ScenarioSpec scenario;
  std::vector<double> eps_list;
  scenarios::MeshPolicy mesh;
  solver::SolverConfig solver;
  std::string output = "out";
  double kappa = 0.0;  ///< 0 selects theta0/4 of the domain
  double alpha = 0.5;
  int threads = 1;
};

/// Entries that replace (or add) keys of a configuration file, e.g. from
/// command-line flags.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Flat `key = value` text, `#` comments, dotted keys for `mesh.*` and
/// `params.*`, lists as `[a, b, c]`. ParseError (with line number) on
/// malformed lines, ValidationError naming the key on unknown, duplicate,
/// missing or out-of-range entries.
RunConfig parse_config_text(const std::string& text, const Overrides& overrides = {});
RunConfig parse_config(const std::string& path, const Overrides& overrides = {});

/// Canonical text of a configuration, every key with its effective value;
/// parse_config_text(echo_config(c)) reproduces c.
std::string echo_config(const RunConfig& c);

/// Thread count: explicit request (> 0), else GLV_THREADS, else the config.
int resolve_threads(const RunConfig& c, int requested);

struct RunOutcome {
  int exit_code = 0;  ///< 0 all rows converged, 2 otherwise
  scenarios::SweepResult result;
};

/// Runs the sweep and writes report.csv, diagnostics.csv, config.echo and
/// fields/eps_<value>.{fld,mesh,convergence.csv} under c.output.
RunOutcome run(const RunConfig& c, int threads);

/// Parse + run; config and setup problems give exit code 1 with the message
/// in `error`.
int run_config_file(const std::string& path, int threads, std::string* error, const Overrides& overrides = {});

/// Human-readable `key = value` summary of every diagnostic on a stored field.
std::string check_report(const core::Field& u, double eps);

/// Short form of eps for file names.
std::string eps_tag(double eps);

}  // namespace glv::app
