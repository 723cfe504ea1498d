#ifndef GLV_H
#define GLV_H

#include <stddef.h>
#include <stdint.h>

#if defined(GLV_BUILDING)
#define GLV_API __attribute__((visibility("default")))
#else
#define GLV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum glv_status {
  GLV_OK = 0,
  GLV_INVALID_ARGUMENT = 1,
  GLV_SELF_INTERSECTION,
  GLV_DEGENERATE_LOOP,
  GLV_MESH_FAILURE,
  GLV_SINGULAR_SYSTEM,
  GLV_NO_CONVERGENCE,
  GLV_SHOOT_FAILURE,
  GLV_OUT_OF_TABLE,
  GLV_VANISHING_DATA,
  GLV_NON_INTEGER_WINDING,
  GLV_VANISHING_MODULUS,
  GLV_NON_SIMPLY_CONNECTED,
  GLV_INCONSISTENT_PHASE,
  GLV_WINDOW_TOO_LARGE,
  GLV_GEOMETRY_ERROR,
  GLV_PARSE_ERROR,
  GLV_VALIDATION_ERROR,
  GLV_IO_ERROR,
  GLV_FIT_ERROR,
  GLV_INTERNAL
} glv_status;

typedef struct glv_mesh glv_mesh;
typedef struct glv_field glv_field;
typedef struct glv_boundary glv_boundary;
typedef struct glv_profile glv_profile;

/* Library version string, e.g. "1.0.0". */
GLV_API const char* glv_version(void);
GLV_API const char* glv_status_name(glv_status status);
/* Message of the last failed call on this thread; "" when none. */
GLV_API const char* glv_last_error(void);
GLV_API void glv_string_free(char* s);

/* Meshes. Coordinates are interleaved x0 y0 x1 y1 ... */
GLV_API glv_status glv_mesh_polygon(const double* xy, size_t n_vertices, double h, glv_mesh** out);
GLV_API glv_status glv_mesh_load(const char* path, glv_mesh** out);
GLV_API glv_status glv_mesh_save(const glv_mesh* mesh, const char* path);
GLV_API void glv_mesh_free(glv_mesh* mesh);
GLV_API size_t glv_mesh_node_count(const glv_mesh* mesh);
GLV_API size_t glv_mesh_triangle_count(const glv_mesh* mesh);
GLV_API size_t glv_mesh_boundary_node_count(const glv_mesh* mesh);
GLV_API size_t glv_mesh_loop_count(const glv_mesh* mesh);
GLV_API double glv_mesh_h(const glv_mesh* mesh);
/* Writes 2 * node_count doubles. */
GLV_API glv_status glv_mesh_nodes(const glv_mesh* mesh, double* xy);
/* Writes 3 * triangle_count indices. */
GLV_API glv_status glv_mesh_triangles(const glv_mesh* mesh, int* tri);

/* Dirichlet data, one value per boundary node in boundary order. */
GLV_API glv_status glv_boundary_dipole(const glv_mesh* mesh, double eta, double origin_x, double origin_y,
                                       glv_boundary** out);
GLV_API glv_status glv_boundary_reference(const glv_mesh* mesh, double amplitude, glv_boundary** out);
GLV_API glv_status glv_boundary_zero(const glv_mesh* mesh, double x0, double y0, double eps, glv_boundary** out);
GLV_API glv_status glv_boundary_from_values(const glv_mesh* mesh, const double* g, size_t n_values,
                                            glv_boundary** out);
GLV_API glv_status glv_boundary_values(const glv_boundary* g, double* out);
GLV_API glv_status glv_boundary_energy(const glv_boundary* g, double eps, double* out);
GLV_API glv_status glv_boundary_degree(const glv_boundary* g, size_t loop, int* out);
GLV_API void glv_boundary_free(glv_boundary* g);

typedef enum glv_method { GLV_METHOD_CG = 0, GLV_METHOD_GD = 1 } glv_method;

typedef struct glv_solver_options {
  double tol;
  long max_iters;
  glv_method method;
  int restart_period;
  uint64_t seed;
  int multistart;
} glv_solver_options;

typedef struct glv_solve_info {
  int converged;
  long iterations;
  double residual;
  double energy;
} glv_solve_info;

GLV_API void glv_solver_options_default(glv_solver_options* opts);
/* Minimises from the harmonic extension of g. opts may be NULL. When the
   iteration budget runs out the result is still returned in *out together
   with GLV_NO_CONVERGENCE. info may be NULL. */
GLV_API glv_status glv_minimize(const glv_boundary* g, double eps, const glv_solver_options* opts, glv_field** out,
                                glv_solve_info* info);

/* Fields. Values are interleaved u1 u2 per node. */
GLV_API glv_status glv_field_from_values(const glv_mesh* mesh, const double* values, size_t n_nodes,
                                         glv_field** out);
GLV_API glv_status glv_field_load(const char* path, glv_field** out, double* eps);
GLV_API glv_status glv_field_save(const glv_field* u, const char* path, double eps);
GLV_API size_t glv_field_size(const glv_field* u);
GLV_API glv_status glv_field_values(const glv_field* u, double* out);
GLV_API glv_status glv_field_mesh(const glv_field* u, glv_mesh** out);
GLV_API glv_status glv_field_energy(const glv_field* u, double eps, double* out);
GLV_API glv_status glv_field_el_residual(const glv_field* u, double eps, double* out);
GLV_API glv_status glv_field_sup_dev(const glv_field* u, double* out);
GLV_API glv_status glv_field_trace(const glv_field* u, glv_boundary** out);
GLV_API void glv_field_free(glv_field* u);

/* Radial vortex profile. */
GLV_API glv_status glv_profile_solve(double r_max, int grid_n, glv_profile** out);
GLV_API glv_status glv_profile_eval(const glv_profile* p, double r, double* out);
GLV_API glv_status glv_profile_slope(const glv_profile* p, double r, double* out);
GLV_API glv_status glv_profile_shoot_slope(const glv_profile* p, double* out);
GLV_API glv_status glv_profile_derivative_check(const glv_profile* p, double r, double* out);
GLV_API glv_status glv_profile_ode_residual(const glv_profile* p, double* out);
GLV_API glv_status glv_profile_write_csv(const glv_profile* p, const char* path);
GLV_API void glv_profile_free(glv_profile* p);

/* Runs a configuration file. threads <= 0 defers to GLV_THREADS, then the
   file. Returns a non-OK status for configuration or setup errors; otherwise
   *exit_code is 0 when every row converged and 2 when some did not. */
GLV_API glv_status glv_run_config(const char* path, int threads, int* exit_code);
/* As glv_run_config with n `key = value` pairs replacing entries of the file. */
GLV_API glv_status glv_run_config_overrides(const char* path, int threads, const char* const* keys,
                                            const char* const* values, size_t n, int* exit_code);
/* Degree on one loop of the boundary trace of a stored field. */
GLV_API glv_status glv_degree_file(const char* field_path, size_t loop, int* out);
/* Diagnostic summary of a stored field; release with glv_string_free. */
GLV_API glv_status glv_check_report(const char* field_path, char** out);

#ifdef __cplusplus
}
#endif

#endif
