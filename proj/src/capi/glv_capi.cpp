#include "glv/glv.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "glv/app.hpp"
#include "glv/diagnostics.hpp"
#include "glv/errors.hpp"
#include "glv/io.hpp"
#include "glv/scenarios.hpp"
#include "glv/solver.hpp"
#include "glv/vortex_profile.hpp"

using namespace glv;

struct glv_mesh {
  core::MeshPtr mesh;
};
struct glv_field {
  core::Field field;
};
struct glv_boundary {
  core::BoundaryData data;
};
struct glv_profile {
  profile::ProfileTable table;
};

namespace {

thread_local std::string last_error;

glv_status fail(glv_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class Fn>
glv_status guard(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const Error& e) {
    return fail(static_cast<glv_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(GLV_INTERNAL, "Internal: out of memory");
  } catch (const std::exception& e) {
    return fail(GLV_INTERNAL, std::string("Internal: ") + e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* glv_version(void) { return "1.0.0"; }

const char* glv_status_name(glv_status status) {
  if (status == GLV_OK) return "OK";
  if (status < GLV_INVALID_ARGUMENT || status > GLV_INTERNAL) return "Unknown";
  return error_code_name(static_cast<ErrorCode>(status));
}

const char* glv_last_error(void) { return last_error.c_str(); }

void glv_string_free(char* s) { std::free(s); }

glv_status glv_mesh_polygon(const double* xy, size_t n_vertices, double h, glv_mesh** out) {
  return guard([&] {
    require(xy && out, "null argument");
    require(n_vertices >= 3, "a polygon needs at least 3 vertices");
    require(h > 0, "h must be positive");
    std::vector<Vec2> pts;
    for (size_t i = 0; i < n_vertices; ++i) pts.emplace_back(xy[2 * i], xy[2 * i + 1]);
    const auto domain = geometry::build_polygon(std::move(pts));
    *out = new glv_mesh{std::make_shared<const geometry::Mesh>(geometry::triangulate(domain, h))};
    return GLV_OK;
  });
}

glv_status glv_mesh_load(const char* path, glv_mesh** out) {
  return guard([&] {
    require(path && out, "null argument");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, std::string("cannot open ") + path);
    *out = new glv_mesh{std::make_shared<const geometry::Mesh>(geometry::read_mesh(in))};
    return GLV_OK;
  });
}

glv_status glv_mesh_save(const glv_mesh* mesh, const char* path) {
  return guard([&] {
    require(mesh && path, "null argument");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, std::string("cannot write ") + path);
    geometry::write_mesh(out, *mesh->mesh);
    if (!out) throw Error(ErrorCode::IoError, std::string("write failed: ") + path);
    return GLV_OK;
  });
}

void glv_mesh_free(glv_mesh* mesh) { delete mesh; }

size_t glv_mesh_node_count(const glv_mesh* mesh) { return mesh ? mesh->mesh->node_count() : 0; }
size_t glv_mesh_triangle_count(const glv_mesh* mesh) { return mesh ? mesh->mesh->triangle_count() : 0; }
size_t glv_mesh_boundary_node_count(const glv_mesh* mesh) {
  return mesh ? mesh->mesh->boundary_nodes().size() : 0;
}
size_t glv_mesh_loop_count(const glv_mesh* mesh) { return mesh ? mesh->mesh->loops.size() : 0; }
double glv_mesh_h(const glv_mesh* mesh) { return mesh ? mesh->mesh->h : 0.0; }

glv_status glv_mesh_nodes(const glv_mesh* mesh, double* xy) {
  return guard([&] {
    require(mesh && xy, "null argument");
    for (size_t i = 0; i < mesh->mesh->node_count(); ++i) {
      xy[2 * i] = mesh->mesh->nodes[i].x();
      xy[2 * i + 1] = mesh->mesh->nodes[i].y();
    }
    return GLV_OK;
  });
}

glv_status glv_mesh_triangles(const glv_mesh* mesh, int* tri) {
  return guard([&] {
    require(mesh && tri, "null argument");
    for (size_t t = 0; t < mesh->mesh->triangle_count(); ++t) {
      for (int k = 0; k < 3; ++k) tri[3 * t + k] = mesh->mesh->triangles[t][k];
    }
    return GLV_OK;
  });
}

glv_status glv_boundary_dipole(const glv_mesh* mesh, double eta, double origin_x, double origin_y,
                               glv_boundary** out) {
  return guard([&] {
    require(mesh && out, "null argument");
    *out = new glv_boundary{scenarios::build_dipole_data(mesh->mesh, eta, Vec2(origin_x, origin_y))};
    return GLV_OK;
  });
}

glv_status glv_boundary_reference(const glv_mesh* mesh, double amplitude, glv_boundary** out) {
  return guard([&] {
    require(mesh && out, "null argument");
    *out = new glv_boundary{scenarios::build_reference_data(mesh->mesh, amplitude)};
    return GLV_OK;
  });
}

glv_status glv_boundary_zero(const glv_mesh* mesh, double x0, double y0, double eps, glv_boundary** out) {
  return guard([&] {
    require(mesh && out, "null argument");
    require(eps > 0, "eps must be positive");
    *out = new glv_boundary{scenarios::build_boundary_zero_data(mesh->mesh, Vec2(x0, y0), eps)};
    return GLV_OK;
  });
}

glv_status glv_boundary_from_values(const glv_mesh* mesh, const double* g, size_t n_values, glv_boundary** out) {
  return guard([&] {
    require(mesh && g && out, "null argument");
    std::vector<Vec2> v;
    for (size_t i = 0; i < n_values; ++i) v.emplace_back(g[2 * i], g[2 * i + 1]);
    *out = new glv_boundary{core::make_boundary_data(mesh->mesh, std::move(v))};
    return GLV_OK;
  });
}

glv_status glv_boundary_values(const glv_boundary* g, double* out) {
  return guard([&] {
    require(g && out, "null argument");
    for (size_t i = 0; i < g->data.g.size(); ++i) {
      out[2 * i] = g->data.g[i].x();
      out[2 * i + 1] = g->data.g[i].y();
    }
    return GLV_OK;
  });
}

glv_status glv_boundary_energy(const glv_boundary* g, double eps, double* out) {
  return guard([&] {
    require(g && out, "null argument");
    require(eps > 0, "eps must be positive");
    *out = core::boundary_energy(g->data, eps);
    return GLV_OK;
  });
}

glv_status glv_boundary_degree(const glv_boundary* g, size_t loop, int* out) {
  return guard([&] {
    require(g && out, "null argument");
    require(loop < g->data.mesh->loops.size(), "loop index out of range");
    *out = diagnostics::compute_degree(g->data, loop);
    return GLV_OK;
  });
}

void glv_boundary_free(glv_boundary* g) { delete g; }

void glv_solver_options_default(glv_solver_options* opts) {
  if (!opts) return;
  const solver::SolverConfig d;
  opts->tol = d.tol;
  opts->max_iters = d.max_iters;
  opts->method = GLV_METHOD_CG;
  opts->restart_period = d.restart_period;
  opts->seed = d.seed;
  opts->multistart = d.multistart;
}

glv_status glv_minimize(const glv_boundary* g, double eps, const glv_solver_options* opts, glv_field** out,
                        glv_solve_info* info) {
  return guard([&] {
    require(g && out, "null argument");
    require(eps > 0, "eps must be positive");
    solver::SolverConfig cfg;
    if (opts) {
      require(opts->method == GLV_METHOD_CG || opts->method == GLV_METHOD_GD, "method: unknown value");
      cfg.tol = opts->tol;
      cfg.max_iters = opts->max_iters;
      cfg.method = opts->method == GLV_METHOD_GD ? solver::Method::GradientDescent : solver::Method::ConjugateGradient;
      cfg.restart_period = opts->restart_period;
      cfg.seed = opts->seed;
      cfg.multistart = opts->multistart;
    }
    cfg.validate();
    auto res = cfg.multistart > 0 ? solver::minimize_multistart(g->data, eps, cfg) : solver::minimize(g->data, eps, cfg);
    if (info) {
      info->converged = res.record.converged ? 1 : 0;
      info->iterations = res.record.iterations;
      info->residual = res.record.residual;
      info->energy = res.record.energy;
    }
    const bool converged = res.record.converged;
    *out = new glv_field{std::move(res.field)};
    if (!converged) return fail(GLV_NO_CONVERGENCE, "NoConvergence: iteration budget exhausted");
    return GLV_OK;
  });
}

glv_status glv_field_from_values(const glv_mesh* mesh, const double* values, size_t n_nodes, glv_field** out) {
  return guard([&] {
    require(mesh && values && out, "null argument");
    std::vector<Vec2> v;
    for (size_t i = 0; i < n_nodes; ++i) v.emplace_back(values[2 * i], values[2 * i + 1]);
    *out = new glv_field{core::make_field(mesh->mesh, std::move(v))};
    return GLV_OK;
  });
}

glv_status glv_field_load(const char* path, glv_field** out, double* eps) {
  return guard([&] {
    require(path && out, "null argument");
    double e = 0.0;
    auto u = core::load_field(path, &e);
    if (eps) *eps = e;
    *out = new glv_field{std::move(u)};
    return GLV_OK;
  });
}

glv_status glv_field_save(const glv_field* u, const char* path, double eps) {
  return guard([&] {
    require(u && path, "null argument");
    core::save_field(path, u->field, eps);
    return GLV_OK;
  });
}

size_t glv_field_size(const glv_field* u) { return u ? u->field.size() : 0; }

glv_status glv_field_values(const glv_field* u, double* out) {
  return guard([&] {
    require(u && out, "null argument");
    for (size_t i = 0; i < u->field.size(); ++i) {
      out[2 * i] = u->field.values[i].x();
      out[2 * i + 1] = u->field.values[i].y();
    }
    return GLV_OK;
  });
}

glv_status glv_field_mesh(const glv_field* u, glv_mesh** out) {
  return guard([&] {
    require(u && out, "null argument");
    *out = new glv_mesh{u->field.mesh};
    return GLV_OK;
  });
}

glv_status glv_field_energy(const glv_field* u, double eps, double* out) {
  return guard([&] {
    require(u && out, "null argument");
    require(eps > 0, "eps must be positive");
    *out = core::interior_energy(u->field, eps);
    return GLV_OK;
  });
}

glv_status glv_field_el_residual(const glv_field* u, double eps, double* out) {
  return guard([&] {
    require(u && out, "null argument");
    require(eps > 0, "eps must be positive");
    *out = core::el_residual(core::with_boundary(u->field, core::boundary_trace(u->field)), eps);
    return GLV_OK;
  });
}

glv_status glv_field_sup_dev(const glv_field* u, double* out) {
  return guard([&] {
    require(u && out, "null argument");
    *out = diagnostics::sup_deviation(u->field);
    return GLV_OK;
  });
}

glv_status glv_field_trace(const glv_field* u, glv_boundary** out) {
  return guard([&] {
    require(u && out, "null argument");
    *out = new glv_boundary{core::boundary_trace(u->field)};
    return GLV_OK;
  });
}

void glv_field_free(glv_field* u) { delete u; }

glv_status glv_profile_solve(double r_max, int grid_n, glv_profile** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = new glv_profile{profile::solve_profile(r_max, grid_n)};
    return GLV_OK;
  });
}

glv_status glv_profile_eval(const glv_profile* p, double r, double* out) {
  return guard([&] {
    require(p && out, "null argument");
    *out = p->table.eval(r);
    return GLV_OK;
  });
}

glv_status glv_profile_slope(const glv_profile* p, double r, double* out) {
  return guard([&] {
    require(p && out, "null argument");
    *out = p->table.slope(r);
    return GLV_OK;
  });
}

glv_status glv_profile_shoot_slope(const glv_profile* p, double* out) {
  return guard([&] {
    require(p && out, "null argument");
    *out = p->table.shoot_slope;
    return GLV_OK;
  });
}

glv_status glv_profile_derivative_check(const glv_profile* p, double r, double* out) {
  return guard([&] {
    require(p && out, "null argument");
    *out = profile::profile_derivative_check(p->table, r);
    return GLV_OK;
  });
}

glv_status glv_profile_ode_residual(const glv_profile* p, double* out) {
  return guard([&] {
    require(p && out, "null argument");
    *out = profile::ode_residual(p->table);
    return GLV_OK;
  });
}

glv_status glv_profile_write_csv(const glv_profile* p, const char* path) {
  return guard([&] {
    require(p && path, "null argument");
    std::ostringstream out;
    profile::write_profile_csv(out, p->table);
    io::write_file(path, out.str());
    return GLV_OK;
  });
}

void glv_profile_free(glv_profile* p) { delete p; }

glv_status glv_run_config(const char* path, int threads, int* exit_code) {
  return glv_run_config_overrides(path, threads, nullptr, nullptr, 0, exit_code);
}

glv_status glv_run_config_overrides(const char* path, int threads, const char* const* keys,
                                    const char* const* values, size_t n, int* exit_code) {
  return guard([&] {
    require(path && exit_code, "null argument");
    require(n == 0 || (keys && values), "null argument");
    app::Overrides overrides;
    for (size_t i = 0; i < n; ++i) {
      require(keys[i] && values[i], "null override");
      overrides.emplace_back(keys[i], values[i]);
    }
    const auto cfg = app::parse_config(path, overrides);
    const auto outcome = app::run(cfg, app::resolve_threads(cfg, threads));
    *exit_code = outcome.exit_code;
    if (outcome.exit_code != 0) {
      std::string msg;
      for (const auto& row : outcome.result.rows) {
        if (!row.ok) msg += "eps " + std::to_string(row.eps) + ": " + row.error + "\n";
      }
      last_error = msg;
    }
    return GLV_OK;
  });
}

glv_status glv_degree_file(const char* field_path, size_t loop, int* out) {
  return guard([&] {
    require(field_path && out, "null argument");
    const auto u = core::load_field(field_path);
    const auto g = core::boundary_trace(u);
    require(loop < g.mesh->loops.size(), "loop index out of range");
    *out = diagnostics::compute_degree(g, loop);
    return GLV_OK;
  });
}

glv_status glv_check_report(const char* field_path, char** out) {
  return guard([&] {
    require(field_path && out, "null argument");
    double eps = 0.0;
    const auto u = core::load_field(field_path, &eps);
    require(eps > 0, "stored eps must be positive");
    *out = dup_string(app::check_report(u, eps));
    return GLV_OK;
  });
}

}  // extern "C"
