#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "glv/glv.h"

namespace {

int report(glv_status s) {
  std::fprintf(stderr, "glv: %s\n", glv_last_error()[0] ? glv_last_error() : glv_status_name(s));
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Ginzburg-Landau vortex solver"};
  cli.set_version_flag("--version", std::string(glv_version()));
  cli.require_subcommand(1);
  cli.fallthrough();
  int threads = 0;
  cli.add_option("--threads", threads, "Worker threads (overrides GLV_THREADS and the config)")->check(CLI::NonNegativeNumber);

  auto* run = cli.add_subcommand("run", "Run an eps sweep from a configuration file");
  std::string config;
  run->add_option("config", config, "Configuration file")->required();
  std::string tol, max_iters, method, seed;
  run->add_option("--tol", tol, "Residual tolerance (overrides the config)");
  run->add_option("--max-iters", max_iters, "Iteration budget (overrides the config)");
  run->add_option("--method", method, "cg or gd (overrides the config)");
  run->add_option("--seed", seed, "Random seed (overrides the config)");

  auto* prof = cli.add_subcommand("profile", "Solve the radial vortex profile");
  double r_max = 40.0;
  int grid_n = 4000;
  std::string out = "profile.csv";
  prof->add_option("--rmax", r_max, "Outer radius of the table");
  prof->add_option("--n", grid_n, "Grid intervals");
  prof->add_option("--out", out, "Output CSV");

  auto* deg = cli.add_subcommand("degree", "Degree of the boundary trace of a stored field");
  std::string field;
  std::size_t loop = 0;
  deg->add_option("--field", field, "Field file (.fld)")->required();
  deg->add_option("--loop", loop, "Boundary loop index");

  auto* check = cli.add_subcommand("check", "Diagnostic summary of a stored field");
  check->add_option("--field", field, "Field file (.fld)")->required();

  CLI11_PARSE(cli, argc, argv);

  if (*run) {
    std::vector<const char*> keys, values;
    for (const auto& [key, value] : {std::pair<const char*, std::string*>{"tol", &tol}, {"max_iters", &max_iters},
                                     {"method", &method}, {"seed", &seed}}) {
      if (value->empty()) continue;
      keys.push_back(key);
      values.push_back(value->c_str());
    }
    int code = 0;
    const glv_status s =
        glv_run_config_overrides(config.c_str(), threads, keys.data(), values.data(), keys.size(), &code);
    if (s != GLV_OK) return report(s);
    if (code != 0) std::fprintf(stderr, "%s", glv_last_error());
    return code;
  }
  if (*prof) {
    glv_profile* p = nullptr;
    glv_status s = glv_profile_solve(r_max, grid_n, &p);
    if (s != GLV_OK) return report(s);
    double a = 0, f10 = 0, res = 0;
    glv_profile_shoot_slope(p, &a);
    glv_profile_eval(p, 10.0, &f10);
    glv_profile_ode_residual(p, &res);
    s = glv_profile_write_csv(p, out.c_str());
    glv_profile_free(p);
    if (s != GLV_OK) return report(s);
    std::printf("shoot_slope = %.12g\nf(10) = %.12g\node_residual = %.3g\nwrote %s\n", a, f10, res, out.c_str());
    return 0;
  }
  if (*deg) {
    int d = 0;
    const glv_status s = glv_degree_file(field.c_str(), loop, &d);
    if (s != GLV_OK) return report(s);
    std::printf("%d\n", d);
    return 0;
  }
  char* text = nullptr;
  const glv_status s = glv_check_report(field.c_str(), &text);
  if (s != GLV_OK) return report(s);
  std::printf("%s", text);
  glv_string_free(text);
  return 0;
}
