#include "glv/gl_core.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "glv/errors.hpp"
#include "glv/io.hpp"

namespace glv::core {

Field make_field(MeshPtr mesh, std::vector<Vec2> values, bool constrained) {
  if (!mesh) throw Error(ErrorCode::InvalidArgument, "field without a mesh");
  if (values.size() != mesh->node_count()) {
    throw Error(ErrorCode::InvalidArgument, "field has " + std::to_string(values.size()) + " values for " +
                                                std::to_string(mesh->node_count()) + " nodes");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite value at node " + std::to_string(i));
  }
  return Field{std::move(mesh), std::move(values), constrained};
}

Field constant_field(MeshPtr mesh, const Vec2& value) {
  const std::size_t n = mesh->node_count();
  return make_field(std::move(mesh), std::vector<Vec2>(n, value));
}

double BoundaryData::delta() const {
  double d = 0.0;
  for (const auto& v : g) d = std::max(d, std::abs(v.norm() - 1.0));
  return d;
}

double BoundaryData::min_modulus() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& v : g) m = std::min(m, v.norm());
  return m;
}

std::vector<Vec2> BoundaryData::tangential_derivative(std::size_t loop) const {
  std::vector<Vec2> out;
  for (const auto& e : mesh->loops.at(loop).edges) out.push_back((at_node(e.b) - at_node(e.a)) / e.length);
  return out;
}

BoundaryData make_boundary_data(MeshPtr mesh, std::vector<Vec2> g) {
  if (!mesh) throw Error(ErrorCode::InvalidArgument, "boundary data without a mesh");
  if (g.size() != mesh->boundary_nodes().size()) {
    throw Error(ErrorCode::InvalidArgument, "boundary data has " + std::to_string(g.size()) + " values for " +
                                                std::to_string(mesh->boundary_nodes().size()) + " boundary nodes");
  }
  for (const auto& v : g) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite boundary value");
  }
  return BoundaryData{std::move(mesh), std::move(g)};
}

BoundaryData boundary_trace(const Field& u) {
  std::vector<Vec2> g;
  for (int n : u.mesh->boundary_nodes()) g.push_back(u.values[n]);
  return BoundaryData{u.mesh, std::move(g)};
}

Field with_boundary(Field u, const BoundaryData& g) {
  if (g.mesh.get() != u.mesh.get() && g.mesh->node_count() != u.mesh->node_count()) {
    throw Error(ErrorCode::InvalidArgument, "boundary data belongs to a different mesh");
  }
  const auto& bn = u.mesh->boundary_nodes();
  for (std::size_t k = 0; k < bn.size(); ++k) u.values[bn[k]] = g.g[k];
  u.constrained = true;
  return u;
}

namespace {

// grad u per component from vertex differences, so constants give exactly 0.
inline void p1_gradient(const Mesh& m, const std::array<int, 3>& tri, const std::vector<Vec2>& u, Vec2& g1,
                        Vec2& g2) {
  const Vec2 e1 = m.nodes[tri[1]] - m.nodes[tri[0]];
  const Vec2 e2 = m.nodes[tri[2]] - m.nodes[tri[0]];
  const double det = cross(e1, e2);
  const Vec2 b1(e2.y() / det, -e2.x() / det);
  const Vec2 b2(-e1.y() / det, e1.x() / det);
  const Vec2 d1 = u[tri[1]] - u[tri[0]];
  const Vec2 d2 = u[tri[2]] - u[tri[0]];
  g1 = d1.x() * b1 + d2.x() * b2;
  g2 = d1.y() * b1 + d2.y() * b2;
}

}  // namespace

Discretization::Discretization(const Mesh& mesh) : mesh_(&mesh) {
  const std::size_t nt = mesh.triangle_count();
  grads_.resize(nt);
  area_.resize(nt);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    grads_[t] = mesh.basis_gradients(t);
    area_[t] = mesh.triangle_area(t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], area_[t] * grads_[t][i].dot(grads_[t][j]));
    }
  }
  const int n = static_cast<int>(mesh.node_count());
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(trip.begin(), trip.end());
  lumped_ = mesh.lumped_mass();
}

EnergyParts Discretization::energy(const std::vector<Vec2>& u, double eps) const {
  const Mesh& m = *mesh_;
  const double c = 1.0 / (4.0 * eps * eps);
  EnergyParts e;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    Vec2 g1, g2;
    p1_gradient(m, tri, u, g1, g2);
    e.dirichlet += 0.5 * area_[t] * (g1.squaredNorm() + g2.squaredNorm());
    double q = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Vec2 mid = 0.5 * (u[tri[i]] + u[tri[(i + 1) % 3]]);
      const double w = 1.0 - mid.squaredNorm();
      q += w * w;
    }
    e.potential += c * area_[t] / 3.0 * q;
  }
  return e;
}

void Discretization::gradient(const std::vector<Vec2>& u, double eps, std::vector<Vec2>& out) const {
  const Mesh& m = *mesh_;
  out.assign(u.size(), Vec2::Zero());
  const double c = 1.0 / (6.0 * eps * eps);
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    Vec2 g1, g2;
    p1_gradient(m, tri, u, g1, g2);
    const double a = area_[t];
    for (int i = 0; i < 3; ++i) {
      out[tri[i]] += a * Vec2(grads_[t][i].dot(g1), grads_[t][i].dot(g2));
    }
    for (int i = 0; i < 3; ++i) {
      const int p = tri[i];
      const int q = tri[(i + 1) % 3];
      const Vec2 mid = 0.5 * (u[p] + u[q]);
      const Vec2 f = (c * a * (1.0 - mid.squaredNorm())) * mid;
      out[p] -= f;
      out[q] -= f;
    }
  }
}

std::array<double, 4> Discretization::line_coefficients(const std::vector<Vec2>& u, const std::vector<Vec2>& d,
                                                        double eps) const {
  const Mesh& m = *mesh_;
  const double c = 1.0 / (4.0 * eps * eps);
  std::array<double, 4> k{0, 0, 0, 0};
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    Vec2 gu1, gu2, gd1, gd2;
    p1_gradient(m, tri, u, gu1, gu2);
    p1_gradient(m, tri, d, gd1, gd2);
    const double a = area_[t];
    k[0] += a * (gu1.dot(gd1) + gu2.dot(gd2));
    k[1] += 0.5 * a * (gd1.squaredNorm() + gd2.squaredNorm());
    const double wq = c * a / 3.0;
    for (int i = 0; i < 3; ++i) {
      const int p = tri[i];
      const int q = tri[(i + 1) % 3];
      const Vec2 um = 0.5 * (u[p] + u[q]);
      const Vec2 dm = 0.5 * (d[p] + d[q]);
      const double w = 1.0 - um.squaredNorm();
      const double B = um.dot(dm);
      const double C = dm.squaredNorm();
      k[0] += wq * (-4.0 * w * B);
      k[1] += wq * (4.0 * B * B - 2.0 * w * C);
      k[2] += wq * (4.0 * B * C);
      k[3] += wq * (C * C);
    }
  }
  return k;
}

double Discretization::residual_norm(const std::vector<Vec2>& grad) const {
  double num = 0.0, den = 0.0;
  for (int n : mesh_->interior_nodes()) {
    num += grad[n].squaredNorm() / lumped_[n];
    den += lumped_[n];
  }
  return den > 0 ? std::sqrt(num / den) : 0.0;
}

EnergyParts interior_energy_parts(const Field& u, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  return Discretization(u.grid()).energy(u.values, eps);
}

double interior_energy(const Field& u, double eps) { return interior_energy_parts(u, eps).total(); }

double boundary_energy(const BoundaryData& g, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const double c = 1.0 / (4.0 * eps * eps);
  double e = 0.0;
  for (const auto& loop : g.mesh->loops) {
    for (const auto& edge : loop.edges) {
      const Vec2& ga = g.at_node(edge.a);
      const Vec2& gb = g.at_node(edge.b);
      const Vec2 dt = (gb - ga) / edge.length;
      const double w = 1.0 - (0.5 * (ga + gb)).squaredNorm();
      e += edge.length * (0.5 * dt.squaredNorm() + c * w * w);
    }
  }
  return e;
}

std::vector<Vec2> energy_gradient(const Field& u, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  std::vector<Vec2> g;
  Discretization(u.grid()).gradient(u.values, eps, g);
  if (u.constrained) {
    for (int n : u.grid().boundary_nodes()) g[n].setZero();
  }
  return g;
}

double el_residual(const Field& u, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const Discretization disc(u.grid());
  std::vector<Vec2> g;
  disc.gradient(u.values, eps, g);
  return disc.residual_norm(g);
}

std::vector<double> energy_density(const Field& u, double eps) {
  const Mesh& m = u.grid();
  const double c = 1.0 / (4.0 * eps * eps);
  std::vector<double> out(m.triangle_count());
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    Vec2 g1, g2;
    p1_gradient(m, tri, u.values, g1, g2);
    double q = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double w = 1.0 - (0.5 * (u.values[tri[i]] + u.values[tri[(i + 1) % 3]])).squaredNorm();
      q += w * w;
    }
    out[t] = 0.5 * (g1.squaredNorm() + g2.squaredNorm()) + c * q / 3.0;
  }
  return out;
}

double ring_density(const Field& u, double eps, const Vec2& center, double lo, double hi) {
  const Mesh& m = u.grid();
  const auto dens = energy_density(u, eps);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    const Vec2 c = (m.nodes[tri[0]] + m.nodes[tri[1]] + m.nodes[tri[2]]) / 3.0;
    const double r = (c - center).norm();
    if (r < lo || r > hi) continue;
    const double a = m.triangle_area(t);
    num += a * dens[t];
    den += a;
  }
  return den > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

std::string energy_report_header() { return "eps,M,N,sup_dev,delta,degree,kappa"; }

std::string energy_report_row(const EnergyReport& r) {
  return io::fmt(r.eps) + "," + io::fmt(r.M) + "," + io::fmt(r.N) + "," + io::fmt(r.sup_dev) + "," +
         io::fmt(r.delta) + "," + (r.degree ? std::to_string(*r.degree) : std::string("NA")) + "," +
         io::fmt(r.kappa_measured);
}

void write_field(std::ostream& out, const Field& u, double eps) {
  const Mesh& m = u.grid();
  out << "field " << m.node_count() << " " << io::fmt(eps) << "\n";
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    out << io::fmt(m.nodes[i].x()) << " " << io::fmt(m.nodes[i].y()) << " " << io::fmt(u.values[i].x()) << " "
        << io::fmt(u.values[i].y()) << "\n";
  }
}

FieldDump read_field_dump(std::istream& in) {
  std::string tag;
  std::size_t n = 0;
  FieldDump d;
  if (!(in >> tag >> n >> d.eps) || tag != "field") throw Error(ErrorCode::ParseError, "field: expected 'field N eps'");
  d.points.resize(n);
  d.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> d.points[i].x() >> d.points[i].y() >> d.values[i].x() >> d.values[i].y())) {
      throw Error(ErrorCode::ParseError, "field: truncated record " + std::to_string(i));
    }
  }
  return d;
}

std::string mesh_path_for(const std::string& field_path) {
  const std::string ext = ".fld";
  if (field_path.size() > ext.size() && field_path.compare(field_path.size() - ext.size(), ext.size(), ext) == 0) {
    return field_path.substr(0, field_path.size() - ext.size()) + ".mesh";
  }
  return field_path + ".mesh";
}

void save_field(const std::string& path, const Field& u, double eps) {
  std::ostringstream f, m;
  write_field(f, u, eps);
  geometry::write_mesh(m, u.grid());
  io::write_file(path, f.str());
  io::write_file(mesh_path_for(path), m.str());
}

Field load_field(const std::string& path, double* eps) {
  std::ifstream fin(path);
  if (!fin) throw Error(ErrorCode::IoError, "cannot open " + path);
  const FieldDump dump = read_field_dump(fin);
  const std::string mpath = mesh_path_for(path);
  std::ifstream min(mpath);
  if (!min) throw Error(ErrorCode::IoError, "cannot open " + mpath);
  auto mesh = std::make_shared<const Mesh>(geometry::read_mesh(min));
  if (mesh->node_count() != dump.points.size()) {
    throw Error(ErrorCode::InvalidArgument, "field and mesh node counts differ");
  }
  for (std::size_t i = 0; i < dump.points.size(); ++i) {
    if ((mesh->nodes[i] - dump.points[i]).norm() > 1e-12 * (1.0 + dump.points[i].norm())) {
      throw Error(ErrorCode::InvalidArgument, "field and mesh coordinates differ at node " + std::to_string(i));
    }
  }
  if (eps) *eps = dump.eps;
  return make_field(std::move(mesh), dump.values);
}

}  // namespace glv::core
