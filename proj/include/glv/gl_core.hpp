#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "glv/geometry.hpp"

namespace glv::core {

using geometry::Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

/// Nodal 2-vector field u = (u1, u2) on a mesh.
struct Field {
  MeshPtr mesh;
  std::vector<Vec2> values;
  bool constrained = false;  ///< boundary nodes hold Dirichlet data

  const Mesh& grid() const { return *mesh; }
  std::size_t size() const { return values.size(); }
};

/// Validates size and finiteness. Throws InvalidArgument.
Field make_field(MeshPtr mesh, std::vector<Vec2> values, bool constrained = false);
Field constant_field(MeshPtr mesh, const Vec2& value);

/// Dirichlet data g, one value per boundary node (indexed by boundary slot).
struct BoundaryData {
  MeshPtr mesh;
  std::vector<Vec2> g;

  const Vec2& at_node(int node) const { return g[mesh->boundary_slot(node)]; }
  /// ||g| - 1|_inf over boundary nodes.
  double delta() const;
  double min_modulus() const;
  /// Edgewise tangential derivative (g_b - g_a) / length for each edge of a loop.
  std::vector<Vec2> tangential_derivative(std::size_t loop) const;
};

BoundaryData make_boundary_data(MeshPtr mesh, std::vector<Vec2> g);
/// g(x) sampled at every boundary node.
template <class Fn>
BoundaryData sample_boundary(MeshPtr mesh, Fn&& fn) {
  std::vector<Vec2> g;
  g.reserve(mesh->boundary_nodes().size());
  for (int n : mesh->boundary_nodes()) g.push_back(fn(mesh->nodes[n]));
  return make_boundary_data(std::move(mesh), std::move(g));
}

BoundaryData boundary_trace(const Field& u);
/// Copy of u with boundary values replaced by g, marked constrained.
Field with_boundary(Field u, const BoundaryData& g);

struct EnergyParts {
  double dirichlet = 0.0;
  double potential = 0.0;
  double total() const { return dirichlet + potential; }
};

/// Per-mesh precomputation shared by energy, gradient and line search.
class Discretization {
 public:
  explicit Discretization(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
  const std::vector<double>& lumped_mass() const { return lumped_; }

  EnergyParts energy(const std::vector<Vec2>& u, double eps) const;
  /// Gradient of energy() with respect to every nodal value.
  void gradient(const std::vector<Vec2>& u, double eps, std::vector<Vec2>& out) const;
  /// E(u + a d) - E(u) = c[0] a + c[1] a^2 + c[2] a^3 + c[3] a^4 (exact).
  std::array<double, 4> line_coefficients(const std::vector<Vec2>& u, const std::vector<Vec2>& d, double eps) const;
  /// Area-weighted RMS of grad_i / m_i over interior nodes.
  double residual_norm(const std::vector<Vec2>& grad) const;

 private:
  const Mesh* mesh_;
  std::vector<std::array<Vec2, 3>> grads_;  // basis gradients per triangle
  std::vector<double> area_;
  std::vector<double> lumped_;
  Eigen::SparseMatrix<double> stiffness_;
};

/// Sum over triangles of 1/2|grad u|^2 + (1/4eps^2)(1-|u|^2)^2, the quartic by
/// the 3-edge-midpoint rule.
double interior_energy(const Field& u, double eps);
EnergyParts interior_energy_parts(const Field& u, double eps);

/// Sum over boundary edges of 1/2|d_tau g|^2 + (1/4eps^2)(1-|g|^2)^2, the
/// quartic by the edge-midpoint rule.
double boundary_energy(const BoundaryData& g, double eps);

/// Gradient of interior_energy; boundary entries are zero when u is constrained.
std::vector<Vec2> energy_gradient(const Field& u, double eps);

/// Area-weighted RMS of the strong residual G_i / m_i over interior nodes,
/// where G is the energy gradient and m the lumped mass.
double el_residual(const Field& u, double eps);

/// Piecewise-constant energy density per triangle.
std::vector<double> energy_density(const Field& u, double eps);

/// Mean triangle density over centroids with lo <= |c - center| <= hi.
double ring_density(const Field& u, double eps, const Vec2& center, double lo, double hi);

/// Scalar summary of one run.
struct EnergyReport {
  double eps = 0.0;
  double M = 0.0;
  double N = 0.0;
  double sup_dev = 0.0;
  double delta = 0.0;
  std::optional<int> degree;  ///< empty when the data vanishes on the boundary
  double kappa_measured = 0.0;
  std::vector<Vec2> vortices;
};

/// `eps,M,N,sup_dev,delta,degree,kappa`
std::string energy_report_header();
std::string energy_report_row(const EnergyReport& r);

/// Field dump: `field N eps` followed by `x y u1 u2` per node.
void write_field(std::ostream& out, const Field& u, double eps);

struct FieldDump {
  double eps = 0.0;
  std::vector<Vec2> points;
  std::vector<Vec2> values;
};
FieldDump read_field_dump(std::istream& in);

/// Writes `path` and the mesh next to it (`.mesh` replacing `.fld`).
void save_field(const std::string& path, const Field& u, double eps);
/// Loads a field dump together with its sibling mesh file.
Field load_field(const std::string& path, double* eps = nullptr);
std::string mesh_path_for(const std::string& field_path);

}  // namespace glv::core
