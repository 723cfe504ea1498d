#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include "doctest.h"
#include "glv/app.hpp"
#include "glv/errors.hpp"
#include "glv/io.hpp"

using namespace glv;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::function<void()>& fn, ErrorCode* code = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (code) *code = e.code();
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("glv_app_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal dipole config takes defaults") {
  const auto c = app::parse_config_text("scenario = dipole\neps_list = [0.1, 0.05, 0.025]\nparams.eta_power = 0.5\n");
  CHECK(c.scenario.name == "dipole");
  CHECK(c.eps_list.size() == 3);
  CHECK(c.solver.tol == 1e-8);
  CHECK(c.solver.method == solver::Method::ConjugateGradient);
  CHECK(c.scenario.eta_power == 0.5);
  CHECK(c.output == "out");
  CHECK(c.threads == 1);
}

TEST_CASE("config validation names the key") {
  ErrorCode code{};
  auto msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = [0.05, 0.1]\n"); }, &code);
  CHECK(code == ErrorCode::ValidationError);
  CHECK(msg.find("eps_list") != std::string::npos);

  msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = [0.1]\nfoo = 1\n"); }, &code);
  CHECK(code == ErrorCode::ValidationError);
  CHECK(msg.find("foo") != std::string::npos);

  msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = []\n"); }, &code);
  CHECK(msg.find("eps_list") != std::string::npos);

  msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = [0.1]\ntol = 1\ntol = 2\n"); }, &code);
  CHECK(msg.find("tol") != std::string::npos);

  msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = [0.1]\nparams.mu = 0.5\n"); }, &code);
  CHECK(msg.find("params.mu") != std::string::npos);

  msg = message_of([] { app::parse_config_text("scenario = dipole\neps_list = [0.1]\n"); }, &code);
  CHECK(code == ErrorCode::ValidationError);

  msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = [0.1]\nmethod = newton\n"); }, &code);
  CHECK(msg.find("method") != std::string::npos);

  msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = [0.1]\nmesh.h_max = -1\n"); }, &code);
  CHECK(msg.find("mesh.h_max") != std::string::npos);
}

TEST_CASE("malformed lines report their number") {
  ErrorCode code{};
  const auto msg = message_of([] { app::parse_config_text("# header\nscenario = constant\n\neps_list [0.1]\n"); }, &code);
  CHECK(code == ErrorCode::ParseError);
  CHECK(msg.find("line 4") != std::string::npos);
}

TEST_CASE("echo round trip") {
  const auto c = app::parse_config_text(
      "scenario = cone  # comment\neps_list = [0.02, 0.01]\nparams.theta0 = 1.2\nparams.mu = 0.7\n"
      "tol = 1e-9\nmethod = gd\nmesh.near_ratio = 0.2\nthreads = 2\n");
  const auto text = app::echo_config(c);
  const auto d = app::parse_config_text(text);
  CHECK(app::echo_config(d) == text);
  CHECK(d.scenario.theta0 == 1.2);
  CHECK(d.scenario.cone_eta == doctest::Approx(0.3));
  CHECK(d.solver.method == solver::Method::GradientDescent);
  CHECK(d.mesh.near_ratio == 0.2);

  const auto b = app::parse_config_text("scenario = boundary_zero\neps_list = [0.1]\nparams.x0 = [0.25, 0]\n");
  CHECK(app::parse_config_text(app::echo_config(b)).scenario.x0 == Vec2(0.25, 0));
}

TEST_CASE("thread count precedence") {
  app::RunConfig c;
  c.threads = 3;
  ::unsetenv("GLV_THREADS");
  CHECK(app::resolve_threads(c, 0) == 3);
  ::setenv("GLV_THREADS", "5", 1);
  CHECK(app::resolve_threads(c, 0) == 5);
  CHECK(app::resolve_threads(c, 2) == 2);
  ::unsetenv("GLV_THREADS");
}

TEST_CASE("constant run writes its outputs") {
  const auto dir = scratch("constant");
  auto c = app::parse_config_text("scenario = constant\neps_list = [0.2, 0.1, 0.05]\n");
  c.output = dir.string();
  const auto out = app::run(c, 1);
  CHECK(out.exit_code == 0);
  for (const auto& r : out.result.rows) CHECK(r.report.M == 0.0);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "diagnostics.csv"));
  CHECK(fs::exists(dir / "config.echo"));
  const std::string stem = "eps_" + app::eps_tag(0.1);
  CHECK(fs::exists(dir / "fields" / (stem + ".fld")));
  CHECK(fs::exists(dir / "fields" / (stem + ".mesh")));
  CHECK(fs::exists(dir / "fields" / (stem + ".convergence.csv")));
  CHECK(app::parse_config(dir.string() + "/config.echo").eps_list == c.eps_list);

  double eps = 0;
  const auto u = core::load_field((dir / "fields" / (stem + ".fld")).string(), &eps);
  CHECK(eps == 0.1);
  const auto text = app::check_report(u, eps);
  CHECK(text.find("M = 0\n") != std::string::npos);
  CHECK(text.find("degree[0] = 0") != std::string::npos);
  CHECK(text.find("zero_clusters = 0") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("non-converged rows give exit code 2") {
  const auto dir = scratch("noconv");
  const auto cfg = dir / "run.cfg";
  io::write_file(cfg.string(), "scenario = dipole\neps_list = [0.1, 0.05, 0.025]\nparams.eta_power = 0.5\n"
                               "max_iters = 1\noutput = " + (dir / "out").string() + "\n");
  std::string err;
  CHECK(app::run_config_file(cfg.string(), 1, &err) == 2);
  CHECK(err.find("NoConvergence") != std::string::npos);
  CHECK(io::read_file((dir / "out" / "diagnostics.csv").string()).find(",NoConvergence,") != std::string::npos);

  CHECK(app::run_config_file((dir / "missing.cfg").string(), 1, &err) == 1);
  CHECK(err.find("IoError") == 0);
  fs::remove_all(dir);
}

TEST_CASE("reports are reproducible") {
  const auto dir = scratch("repro");
  auto c = app::parse_config_text("scenario = dipole\neps_list = [0.1, 0.05, 0.025]\nparams.eta_power = 0.5\n");
  c.output = (dir / "a").string();
  app::run(c, 1);
  c.output = (dir / "b").string();
  app::run(c, 2);
  CHECK(io::read_file((dir / "a" / "report.csv").string()) == io::read_file((dir / "b" / "report.csv").string()));
  CHECK(io::read_file((dir / "a" / "diagnostics.csv").string()) ==
        io::read_file((dir / "b" / "diagnostics.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("overrides replace file entries") {
  const auto c = app::parse_config_text("scenario = constant\neps_list = [0.1]\ntol = 1e-6\n",
                                        {{"tol", "1e-10"}, {"method", "gd"}, {"seed", "7"}});
  CHECK(c.solver.tol == 1e-10);
  CHECK(c.solver.method == solver::Method::GradientDescent);
  CHECK(c.solver.seed == 7);
  ErrorCode code{};
  const auto msg = message_of([] { app::parse_config_text("scenario = constant\neps_list = [0.1]\n", {{"max_iters", "x"}}); }, &code);
  CHECK(code == ErrorCode::ValidationError);
  CHECK(msg.find("max_iters") != std::string::npos);
}
