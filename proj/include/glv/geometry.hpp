#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace glv {

using Vec2 = Eigen::Vector2d;

/// 2-D cross product (z-component).
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Rotation by +pi/2: (x, y) -> (-y, x).
inline Vec2 perp(const Vec2& a) { return Vec2(-a.y(), a.x()); }

}  // namespace glv

namespace glv::geometry {

/// Polygonal planar region. loops[0] is the outer boundary (counter-clockwise),
/// the remaining loops are holes (clockwise), so the domain always lies to the
/// left of the direction of travel.
struct Domain {
  std::vector<std::vector<Vec2>> loops;
  double cone_radius = 0.0;  ///< rho_0
  double cone_angle = 0.0;   ///< theta_0, radians
  std::vector<std::string> warnings;

  double area() const;
  double perimeter(std::size_t loop) const;
  double diameter() const;
  /// Even-odd point-in-polygon test over all loops.
  bool contains(const Vec2& p) const;
};

/// Builds a domain from an outer loop and optional holes. Orientation is
/// normalised (a warning is recorded when a loop had to be reversed).
/// Throws DegenerateLoop, SelfIntersection or GeometryError.
Domain build_polygon(std::vector<Vec2> outer, std::vector<std::vector<Vec2>> holes = {});

/// Reads `loop = [[x,y],...]` / `hole = [[x,y],...]` text.
Domain parse_domain(std::istream& in);
Domain load_domain(const std::string& path);

struct BoundaryEdge {
  int a = -1;  ///< start node (direction of travel)
  int b = -1;  ///< end node
  double s0 = 0.0;      ///< arclength at `a`, measured from the loop start
  double length = 0.0;
  Vec2 normal = Vec2::Zero();   ///< outward unit normal nu
  Vec2 tangent = Vec2::Zero();  ///< tau = nu^perp = (-nu_2, nu_1)
};

struct BoundaryLoop {
  std::vector<BoundaryEdge> edges;  ///< closed chain, edges[k].b == edges[k+1].a
  double perimeter = 0.0;
  double signed_area = 0.0;

  /// Nodes in loop order (one per edge, the start node).
  std::vector<int> nodes() const;
};

/// Conforming P1 triangulation with an oriented, parameterised boundary.
class Mesh {
 public:
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  ///< positively oriented
  std::vector<BoundaryLoop> loops;            ///< outer loop first
  double h = 0.0;                             ///< maximum edge length

  std::size_t node_count() const { return nodes.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  bool is_boundary(int node) const { return boundary_slot_[node] >= 0; }
  /// Index into boundary_nodes(), or -1 for interior nodes.
  int boundary_slot(int node) const { return boundary_slot_[node]; }
  /// Index into interior_nodes(), or -1 for boundary nodes.
  int interior_slot(int node) const { return interior_slot_[node]; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  const std::vector<int>& interior_nodes() const { return interior_nodes_; }

  double triangle_area(std::size_t t) const;
  double total_area() const;
  /// Gradients of the three barycentric basis functions of triangle t.
  std::array<Vec2, 3> basis_gradients(std::size_t t) const;
  /// Lumped mass: one third of the incident triangle areas, per node.
  std::vector<double> lumped_mass() const;
  /// Sorted, de-duplicated node adjacency through triangle edges.
  std::vector<std::vector<int>> node_adjacency() const;
  /// For each node, the triangles containing it.
  std::vector<std::vector<int>> node_triangles() const;

  friend Mesh make_mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles);

 private:
  std::vector<int> boundary_nodes_;
  std::vector<int> interior_nodes_;
  std::vector<int> boundary_slot_;
  std::vector<int> interior_slot_;
};

/// Assembles a mesh from raw tables: fixes triangle orientation, extracts the
/// boundary chains from the topology (outer loop first, each loop starting at
/// its smallest node index) and computes the (nu, tau) frames.
/// Throws MeshFailure on degenerate triangles or a non-manifold boundary.
Mesh make_mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles);

/// Target element size as a function of position.
struct MeshSizing {
  struct Feature {
    Vec2 center;
    double radius;  ///< size h is used within this distance of center
    double h;
  };
  double h_default = 0.1;
  std::vector<Feature> features;
  std::vector<Vec2> required_points;  ///< interior points that must become nodes
  double grading = 0.3;               ///< growth of h per unit distance outside a feature

  double size_at(const Vec2& x) const;
};

/// Delaunay refinement with protected boundary. Deterministic. Every edge of
/// the result is at most the local target size.
Mesh triangulate(const Domain& domain, double h_target);
Mesh triangulate(const Domain& domain, const MeshSizing& sizing);

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

/// Uniform-grid triangle lookup.
class PointLocator {
 public:
  struct Hit {
    int triangle = -1;
    std::array<double, 3> bary{};
  };

  explicit PointLocator(const Mesh& mesh);

  /// Triangle containing p (within a small tolerance), if any.
  std::optional<Hit> locate(const Vec2& p) const;
  /// Like locate(), but falls back to the closest triangle with clamped
  /// barycentric coordinates for points slightly outside the mesh.
  Hit locate_nearest(const Vec2& p) const;

 private:
  std::optional<Hit> scan(const std::vector<int>& cands, const Vec2& p, double tol) const;
  int cell_of(double v, double lo, double w, int n) const;

  const Mesh* mesh_;
  Vec2 lo_, hi_;
  int nx_ = 1, ny_ = 1;
  double cw_ = 1.0, ch_ = 1.0;
  std::vector<std::vector<int>> cells_;
};

/// Barycentric coordinates of p with respect to triangle t.
std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& p);

}  // namespace glv::geometry
