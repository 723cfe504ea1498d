#include "glv/app.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "glv/diagnostics.hpp"
#include "glv/errors.hpp"
#include "glv/io.hpp"

using std::numbers::pi;

namespace glv::app {

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::ValidationError, key + ": " + msg);
}

double to_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) invalid(key, "expected a number, got '" + text + "'");
  return v;
}

long to_integer(const std::string& key, const std::string& text) {
  long v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) invalid(key, "expected an integer, got '" + text + "'");
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') invalid(key, "expected a list [a, b, ...]");
  const std::string inner = io::trim(text.substr(1, text.size() - 2));
  std::vector<double> out;
  if (inner.empty()) return out;
  for (const auto& piece : io::split(inner, ',')) out.push_back(to_number(key, piece));
  return out;
}

const std::set<std::string> kTopKeys = {"scenario", "eps_list", "tol",    "max_iters", "method", "seed",
                                        "restart_period", "multistart", "output", "kappa", "alpha", "threads"};
const std::set<std::string> kMeshKeys = {"mesh.near_ratio", "mesh.far_ratio", "mesh.near_radius", "mesh.h_max"};
const std::map<std::string, std::set<std::string>> kParamKeys = {
    {"dipole", {"params.eta", "params.eta_power"}},
    {"cone", {"params.theta0", "params.mu", "params.eta"}},
    {"boundary_zero", {"params.x0"}},
    {"reference", {"params.sides", "params.amplitude"}},
    {"constant", {}},
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const Overrides& overrides) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = io::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = io::trim(line.substr(0, eq));
    const std::string value = io::trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": missing key");
    if (value.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": missing value for " + key);
    if (kv.count(key)) invalid(key, "given more than once");
    kv[key] = value;
  }

  for (const auto& [key, value] : overrides) kv[key] = io::trim(value);

  if (!kv.count("scenario")) invalid("scenario", "missing");
  const std::string name = kv["scenario"];
  const auto params = kParamKeys.find(name);
  if (params == kParamKeys.end()) invalid("scenario", "unknown scenario '" + name + "'");
  for (const auto& [key, value] : kv) {
    if (!kTopKeys.count(key) && !kMeshKeys.count(key) && !params->second.count(key)) {
      invalid(key, "unknown key for scenario '" + name + "'");
    }
  }

  RunConfig c;
  c.scenario.name = name;
  if (!kv.count("eps_list")) invalid("eps_list", "missing");
  c.eps_list = to_list("eps_list", kv["eps_list"]);
  if (c.eps_list.empty()) invalid("eps_list", "must not be empty");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] > 0)) invalid("eps_list", "values must be positive");
    if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1])) invalid("eps_list", "must be strictly decreasing");
  }

  auto num = [&](const std::string& key, double& dst) {
    if (kv.count(key)) dst = to_number(key, kv[key]);
  };
  num("tol", c.solver.tol);
  if (kv.count("max_iters")) c.solver.max_iters = to_integer("max_iters", kv["max_iters"]);
  if (kv.count("method")) c.solver.method = solver::parse_method(kv["method"]);
  if (kv.count("seed")) {
    const long s = to_integer("seed", kv["seed"]);
    if (s < 0) invalid("seed", "must be non-negative");
    c.solver.seed = static_cast<std::uint64_t>(s);
  }
  if (kv.count("restart_period")) c.solver.restart_period = static_cast<int>(to_integer("restart_period", kv["restart_period"]));
  if (kv.count("multistart")) c.solver.multistart = static_cast<int>(to_integer("multistart", kv["multistart"]));
  c.solver.validate();
  if (kv.count("output")) c.output = kv["output"];
  num("kappa", c.kappa);
  if (c.kappa < 0) invalid("kappa", "must be non-negative");
  num("alpha", c.alpha);
  if (!(c.alpha > 0)) invalid("alpha", "must be positive");
  if (kv.count("threads")) c.threads = static_cast<int>(to_integer("threads", kv["threads"]));
  if (c.threads < 1) invalid("threads", "must be at least 1");

  num("mesh.near_ratio", c.mesh.near_ratio);
  num("mesh.far_ratio", c.mesh.far_ratio);
  num("mesh.near_radius", c.mesh.near_radius);
  num("mesh.h_max", c.mesh.h_max);
  c.mesh.validate();

  auto& s = c.scenario;
  if (name == "dipole") {
    const bool fixed = kv.count("params.eta"), power = kv.count("params.eta_power");
    if (fixed == power) invalid("params.eta", "give exactly one of params.eta and params.eta_power");
    num("params.eta", s.eta);
    num("params.eta_power", s.eta_power);
    if (fixed && !(s.eta > 0 && s.eta < 0.5)) invalid("params.eta", "must lie in (0, 0.5)");
    if (power && !(s.eta_power > 0)) invalid("params.eta_power", "must be positive");
  } else if (name == "cone") {
    if (!kv.count("params.theta0")) invalid("params.theta0", "missing");
    if (!kv.count("params.mu")) invalid("params.mu", "missing");
    num("params.theta0", s.theta0);
    num("params.mu", s.mu);
    num("params.eta", s.cone_eta);
    if (!(s.theta0 > 0 && s.theta0 < pi)) invalid("params.theta0", "must lie in (0, pi)");
    if (!(s.mu > 0 && s.mu < 1)) invalid("params.mu", "must lie in (0, 1)");
    if (kv.count("params.eta") && !(s.cone_eta > 0 && s.cone_eta < s.theta0)) {
      invalid("params.eta", "must lie in (0, theta0)");
    }
  } else if (name == "boundary_zero") {
    if (kv.count("params.x0")) {
      const auto v = to_list("params.x0", kv["params.x0"]);
      if (v.size() != 2) invalid("params.x0", "expected [x, y]");
      s.x0 = Vec2(v[0], v[1]);
    }
  } else if (name == "reference") {
    if (kv.count("params.sides")) s.sides = static_cast<int>(to_integer("params.sides", kv["params.sides"]));
    if (s.sides < 3) invalid("params.sides", "must be at least 3");
    num("params.amplitude", s.amplitude);
  }
  return c;
}

RunConfig parse_config(const std::string& path, const Overrides& overrides) {
  return parse_config_text(io::read_file(path), overrides);
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  const auto& s = c.scenario;
  o << "scenario = " << s.name << "\n";
  o << "eps_list = [";
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) o << (i ? ", " : "") << io::fmt(c.eps_list[i]);
  o << "]\n";
  o << "tol = " << io::fmt(c.solver.tol) << "\n";
  o << "max_iters = " << c.solver.max_iters << "\n";
  o << "method = " << solver::method_name(c.solver.method) << "\n";
  o << "seed = " << c.solver.seed << "\n";
  o << "restart_period = " << c.solver.restart_period << "\n";
  o << "multistart = " << c.solver.multistart << "\n";
  o << "output = " << c.output << "\n";
  o << "kappa = " << io::fmt(c.kappa) << "\n";
  o << "alpha = " << io::fmt(c.alpha) << "\n";
  o << "threads = " << c.threads << "\n";
  o << "mesh.near_ratio = " << io::fmt(c.mesh.near_ratio) << "\n";
  o << "mesh.far_ratio = " << io::fmt(c.mesh.far_ratio) << "\n";
  o << "mesh.near_radius = " << io::fmt(c.mesh.near_radius) << "\n";
  o << "mesh.h_max = " << io::fmt(c.mesh.h_max) << "\n";
  if (s.name == "dipole") {
    if (s.eta_power > 0) {
      o << "params.eta_power = " << io::fmt(s.eta_power) << "\n";
    } else {
      o << "params.eta = " << io::fmt(s.eta) << "\n";
    }
  } else if (s.name == "cone") {
    o << "params.theta0 = " << io::fmt(s.theta0) << "\n";
    o << "params.mu = " << io::fmt(s.mu) << "\n";
    o << "params.eta = " << io::fmt(s.cone_eta > 0 ? s.cone_eta : 0.25 * s.theta0) << "\n";
  } else if (s.name == "boundary_zero") {
    o << "params.x0 = [" << io::fmt(s.x0.x()) << ", " << io::fmt(s.x0.y()) << "]\n";
  } else if (s.name == "reference") {
    o << "params.sides = " << s.sides << "\n";
    o << "params.amplitude = " << io::fmt(s.amplitude) << "\n";
  }
  return o.str();
}

int resolve_threads(const RunConfig& c, int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GLV_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return c.threads;
}

std::string eps_tag(double eps) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", eps);
  return buf;
}

RunOutcome run(const RunConfig& c, int threads) {
  scenarios::SweepOptions opts;
  opts.kappa = c.kappa;
  opts.alpha = c.alpha;
  opts.threads = threads > 0 ? threads : c.threads;
  RunOutcome out;
  out.result = scenarios::run_rows(c.scenario, c.eps_list, c.mesh, c.solver, opts);

  const std::filesystem::path dir(c.output);
  io::write_file((dir / "config.echo").string(), echo_config(c));
  std::ostringstream report, diag;
  scenarios::write_report_csv(report, out.result);
  scenarios::write_diagnostics_csv(diag, out.result);
  io::write_file((dir / "report.csv").string(), report.str());
  io::write_file((dir / "diagnostics.csv").string(), diag.str());
  for (const auto& row : out.result.rows) {
    const std::string stem = (dir / "fields" / ("eps_" + eps_tag(row.eps))).string();
    if (row.field) {
      std::filesystem::create_directories(dir / "fields");
      core::save_field(stem + ".fld", *row.field, row.eps);
    }
    if (!row.record.energies.empty()) {
      std::ostringstream conv;
      solver::write_convergence_csv(conv, row.record);
      io::write_file(stem + ".convergence.csv", conv.str());
    }
    if (!row.ok) out.exit_code = 2;
  }
  return out;
}

int run_config_file(const std::string& path, int threads, std::string* error, const Overrides& overrides) {
  RunConfig c;
  try {
    c = parse_config(path, overrides);
  } catch (const Error& e) {
    if (error) *error = e.what();
    return 1;
  }
  try {
    const auto outcome = run(c, resolve_threads(c, threads));
    if (error) {
      error->clear();
      for (const auto& row : outcome.result.rows) {
        if (!row.ok) *error += "eps " + io::fmt(row.eps) + ": " + row.error + "\n";
      }
    }
    return outcome.exit_code;
  } catch (const Error& e) {
    if (error) *error = e.what();
    return 1;
  } catch (const std::exception& e) {
    if (error) *error = std::string("Internal: ") + e.what();
    return 1;
  }
}

std::string check_report(const core::Field& u, double eps) {
  std::ostringstream o;
  const auto& m = u.grid();
  const auto g = core::boundary_trace(u);
  const auto rep = diagnostics::energy_report(u, g, eps);
  o << "eps = " << io::fmt(eps) << "\n";
  o << "nodes = " << m.node_count() << "\n";
  o << "triangles = " << m.triangle_count() << "\n";
  o << "h = " << io::fmt(m.h) << "\n";
  o << "M = " << io::fmt(rep.M) << "\n";
  o << "N = " << io::fmt(rep.N) << "\n";
  o << "kappa_measured = " << io::fmt(rep.kappa_measured) << "\n";
  o << "el_residual = " << io::fmt(core::el_residual(core::with_boundary(u, g), eps)) << "\n";
  o << "sup_deviation = " << io::fmt(rep.sup_dev) << "\n";
  o << "min_modulus = " << io::fmt(diagnostics::min_modulus(u)) << "\n";
  o << "max_modulus = " << io::fmt(diagnostics::max_modulus(u)) << "\n";
  o << "delta = " << io::fmt(rep.delta) << "\n";
  for (std::size_t l = 0; l < m.loops.size(); ++l) {
    o << "degree[" << l << "] = ";
    try {
      o << diagnostics::compute_degree(g, l);
    } catch (const Error& e) {
      o << "NA (" << error_code_name(e.code()) << ")";
    }
    o << "\n";
  }
  o << "normal_derivative_energy = " << io::fmt(diagnostics::normal_derivative_energy(u, eps)) << "\n";
  const auto zeros = diagnostics::find_zeros(u);
  o << "zero_clusters = " << zeros.size() << "\n";
  for (std::size_t k = 0; k < zeros.size(); ++k) {
    const auto& z = zeros[k];
    o << "zero[" << k << "] = " << io::fmt(z.position.x()) << " " << io::fmt(z.position.y())
      << " min_modulus " << io::fmt(z.min_modulus) << " winding " << (z.winding ? std::to_string(*z.winding) : "NA")
      << (z.touches_boundary ? " boundary" : "") << "\n";
    const auto p = diagnostics::pohozaev_residual(u, eps, z.position, 4 * eps);
    o << "pohozaev[" << k << "] = " << diagnostics::pohozaev_row(p) << "\n";
    o << "localized_potential[" << k << "] = "
      << io::fmt(diagnostics::localized_potential(u, eps, z.position, std::pow(eps, 0.7))) << "\n";
  }
  return o.str();
}

}  // namespace glv::app
