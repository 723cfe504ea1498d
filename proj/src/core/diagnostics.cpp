#include "glv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <set>

#include "glv/errors.hpp"
#include "glv/io.hpp"

namespace glv::diagnostics {

using core::Mesh;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Signed angle from a to b in (-pi, pi].
double angle_increment(const Vec2& a, const Vec2& b) { return std::atan2(cross(a, b), a.dot(b)); }

double raw_winding(const std::vector<Vec2>& values, const std::vector<int>& cycle) {
  double sum = 0.0;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    sum += angle_increment(values[cycle[k]], values[cycle[(k + 1) % cycle.size()]]);
  }
  return sum / kTwoPi;
}

int checked_winding(const std::vector<Vec2>& values, const std::vector<int>& cycle) {
  double mn = std::numeric_limits<double>::infinity();
  for (int n : cycle) mn = std::min(mn, values[n].norm());
  if (mn < 0.1) throw Error(ErrorCode::VanishingData, "min |g| = " + io::fmt(mn) + " < 0.1 on the loop");
  const double w = raw_winding(values, cycle);
  const double r = std::round(w);
  if (std::abs(w - r) > 0.1) throw Error(ErrorCode::NonIntegerWinding, "winding " + io::fmt(w) + " is not near an integer");
  return static_cast<int>(r);
}

std::vector<Vec2> node_values(const BoundaryData& g) {
  std::vector<Vec2> v(g.mesh->node_count(), Vec2::Zero());
  const auto& bn = g.mesh->boundary_nodes();
  for (std::size_t k = 0; k < bn.size(); ++k) v[bn[k]] = g.g[k];
  return v;
}

}  // namespace

double winding_value(const BoundaryData& g, std::size_t loop) {
  return raw_winding(node_values(g), g.mesh->loops.at(loop).nodes());
}

int compute_degree(const BoundaryData& g, std::size_t loop) {
  return checked_winding(node_values(g), g.mesh->loops.at(loop).nodes());
}

int total_degree(const BoundaryData& g) {
  const auto v = node_values(g);
  int d = 0;
  for (const auto& l : g.mesh->loops) d += checked_winding(v, l.nodes());
  return d;
}

int cycle_winding(const std::vector<Vec2>& values, const std::vector<int>& cycle) {
  return checked_winding(values, cycle);
}

std::vector<ZeroCluster> find_zeros(const Field& u, double threshold) {
  const Mesh& m = u.grid();
  const auto adj = m.node_adjacency();
  const auto node_tris = m.node_triangles();
  const std::size_t n = m.node_count();
  std::vector<int> label(n, -1);
  std::vector<ZeroCluster> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0 || !(u.values[s].norm() < threshold)) continue;
    ZeroCluster c;
    const int id = static_cast<int>(out.size());
    std::queue<int> q;
    q.push(static_cast<int>(s));
    label[s] = id;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      c.nodes.push_back(v);
      for (int w : adj[v]) {
        if (label[w] < 0 && u.values[w].norm() < threshold) {
          label[w] = id;
          q.push(w);
        }
      }
    }
    std::sort(c.nodes.begin(), c.nodes.end());
    c.min_modulus = std::numeric_limits<double>::infinity();
    for (int v : c.nodes) {
      const double mod = u.values[v].norm();
      if (mod < c.min_modulus) {
        c.min_modulus = mod;
        c.node = v;
      }
      c.touches_boundary = c.touches_boundary || m.is_boundary(v);
    }
    c.position = m.nodes[c.node];

    // Rim of the union of triangles touching the cluster: directed edges
    // without their reverse. The summed increments equal the total winding
    // of the enclosed triangles.
    std::set<int> tris;
    for (int v : c.nodes) tris.insert(node_tris[v].begin(), node_tris[v].end());
    std::set<std::pair<int, int>> directed;
    for (int t : tris) {
      const auto& tri = m.triangles[t];
      for (int i = 0; i < 3; ++i) directed.insert({tri[i], tri[(i + 1) % 3]});
    }
    double sum = 0.0;
    double rim_min = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : directed) {
      if (directed.count({b, a})) continue;
      rim_min = std::min({rim_min, u.values[a].norm(), u.values[b].norm()});
      sum += angle_increment(u.values[a], u.values[b]);
    }
    const double w = sum / kTwoPi;
    if (rim_min >= 0.1 && std::abs(w - std::round(w)) <= 0.1) c.winding = static_cast<int>(std::round(w));
    out.push_back(std::move(c));
  }
  return out;
}

double sup_deviation(const Field& u) {
  double d = 0.0;
  for (const auto& v : u.values) d = std::max(d, std::abs(v.norm() - 1.0));
  return d;
}

double min_modulus(const Field& u) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& v : u.values) d = std::min(d, v.norm());
  return d;
}

double max_modulus(const Field& u) {
  double d = 0.0;
  for (const auto& v : u.values) d = std::max(d, v.norm());
  return d;
}

Polar polar_decompose(const Field& u, std::vector<int> subregion) {
  const Mesh& m = u.grid();
  std::sort(subregion.begin(), subregion.end());
  subregion.erase(std::unique(subregion.begin(), subregion.end()), subregion.end());
  if (subregion.empty()) throw Error(ErrorCode::InvalidArgument, "empty subregion");
  const int n = static_cast<int>(m.node_count());
  std::vector<int> slot(n, -1);
  for (std::size_t k = 0; k < subregion.size(); ++k) {
    const int v = subregion[k];
    if (v < 0 || v >= n) throw Error(ErrorCode::InvalidArgument, "subregion node out of range");
    slot[v] = static_cast<int>(k);
    if (u.values[v].norm() < 0.1) {
      throw Error(ErrorCode::VanishingModulus, "|u| = " + io::fmt(u.values[v].norm()) + " < 0.1 at node " + std::to_string(v));
    }
  }

  // Induced complex: edges and triangles with all vertices in the subregion.
  std::set<std::pair<int, int>> edges;
  long faces = 0;
  for (const auto& tri : m.triangles) {
    const bool full = slot[tri[0]] >= 0 && slot[tri[1]] >= 0 && slot[tri[2]] >= 0;
    faces += full;
    for (int i = 0; i < 3; ++i) {
      const int a = tri[i], b = tri[(i + 1) % 3];
      if (slot[a] >= 0 && slot[b] >= 0) edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  std::vector<std::vector<int>> adj(subregion.size());
  for (const auto& [a, b] : edges) {
    adj[slot[a]].push_back(b);
    adj[slot[b]].push_back(a);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  Polar p;
  p.nodes = subregion;
  p.rho.resize(subregion.size());
  p.phi.assign(subregion.size(), 0.0);
  std::vector<char> seen(subregion.size(), 0);
  std::vector<int> parent(subregion.size(), -1);
  const int anchor = subregion.front();
  p.phi[0] = std::atan2(u.values[anchor].y(), u.values[anchor].x());
  seen[0] = 1;
  std::queue<int> q;
  q.push(anchor);
  std::size_t reached = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[slot[v]]) {
      if (seen[slot[w]]) continue;
      seen[slot[w]] = 1;
      parent[slot[w]] = v;
      p.phi[slot[w]] = p.phi[slot[v]] + angle_increment(u.values[v], u.values[w]);
      q.push(w);
      ++reached;
    }
  }
  const long euler = static_cast<long>(subregion.size()) - static_cast<long>(edges.size()) + faces;
  if (reached != subregion.size() || euler != 1) {
    throw Error(ErrorCode::NonSimplyConnected, "subregion is not simply connected (components reached " +
                                                   std::to_string(reached) + "/" + std::to_string(subregion.size()) +
                                                   ", Euler characteristic " + std::to_string(euler) + ")");
  }
  for (const auto& [a, b] : edges) {
    if (parent[slot[b]] == a || parent[slot[a]] == b) continue;
    const double gap = p.phi[slot[b]] - p.phi[slot[a]] - angle_increment(u.values[a], u.values[b]);
    if (std::abs(gap) > 1e-6) {
      throw Error(ErrorCode::InconsistentPhase, "phase cycle mismatch " + io::fmt(gap) + " on edge " +
                                                    std::to_string(a) + "-" + std::to_string(b));
    }
  }
  for (std::size_t k = 0; k < subregion.size(); ++k) p.rho[k] = u.values[subregion[k]].norm();
  return p;
}

double normal_derivative_energy(const Field& u, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const Mesh& m = u.grid();
  const geometry::PointLocator loc(m);
  double total = 0.0;
  for (const auto& loop : m.loops) {
    const std::size_t ne = loop.edges.size();
    for (std::size_t k = 0; k < ne; ++k) {
      const auto& prev = loop.edges[(k + ne - 1) % ne];
      const auto& next = loop.edges[k];
      const int node = next.a;
      Vec2 nu = prev.normal + next.normal;
      if (nu.norm() < 1e-12) nu = next.normal;
      nu.normalize();
      const double weight = 0.5 * (prev.length + next.length);
      const double offset = 0.5 * weight;
      const Vec2 p = m.nodes[node] - offset * nu;
      const auto hit = loc.locate_nearest(p);
      const auto& tri = m.triangles[hit.triangle];
      const Vec2 up = hit.bary[0] * u.values[tri[0]] + hit.bary[1] * u.values[tri[1]] + hit.bary[2] * u.values[tri[2]];
      const Vec2 dnu = (u.values[node] - up) / offset;
      total += weight * dnu.squaredNorm();
    }
  }
  return total;
}

namespace {

constexpr int kArcSamples = 4096;

enum class Side { Edge, Arc };

struct ClipVertex {
  Vec2 p;
  Side side;     // kind of the boundary piece starting at p
  int edge = -1;  // triangle edge index for Side::Edge
};

double polar_angle(const Vec2& v) {
  double a = std::atan2(v.y(), v.x());
  if (a < 0) a += kTwoPi;
  return a;
}

// Appends the circle samples strictly between the angles of a and b going
// counter-clockwise; sample angles come from a fixed global grid so that
// neighbouring triangles share them.
void append_arc(std::vector<ClipVertex>& out, const Vec2& x0, double r, const Vec2& a, const Vec2& b) {
  if ((a - b).norm() <= 1e-12 * r) return;
  const double ta = polar_angle(a - x0);
  double tb = polar_angle(b - x0);
  if (tb <= ta) tb += kTwoPi;
  const double step = kTwoPi / kArcSamples;
  long k = static_cast<long>(std::floor(ta / step)) + 1;
  for (;; ++k) {
    const double t = k * step;
    if (t >= tb - 1e-12) break;
    if (t <= ta + 1e-12) continue;
    out.push_back({x0 + r * Vec2(std::cos(t), std::sin(t)), Side::Arc, -1});
  }
}

// Convex region triangle t intersected with B(x0, r), counter-clockwise.
std::vector<ClipVertex> clip_triangle(const Mesh& m, std::size_t t, const Vec2& x0, double r) {
  const auto& tri = m.triangles[t];
  const double r2 = r * r;
  struct Piece {
    bool present = false;
    double t0 = 0, t1 = 0;
  };
  std::array<Piece, 3> pieces;
  std::array<Vec2, 3> P;
  for (int i = 0; i < 3; ++i) P[i] = m.nodes[tri[i]];
  bool any = false;
  for (int e = 0; e < 3; ++e) {
    const Vec2& A = P[e];
    const Vec2 D = P[(e + 1) % 3] - A;
    const double a = D.squaredNorm();
    const double b = 2.0 * (A - x0).dot(D);
    const double c = (A - x0).squaredNorm() - r2;
    const double disc = b * b - 4 * a * c;
    if (disc <= 0) continue;
    const double s = std::sqrt(disc);
    // Stable roots.
    const double qq = -0.5 * (b + (b >= 0 ? s : -s));
    double ra = qq / a, rb = (qq != 0) ? c / qq : -b / a;
    if (ra > rb) std::swap(ra, rb);
    double lo = std::max(0.0, ra), hi = std::min(1.0, rb);
    if (lo < 1e-12) lo = 0.0;
    if (hi > 1.0 - 1e-12) hi = 1.0;
    if (hi - lo <= 1e-12) continue;
    pieces[e] = {true, lo, hi};
    any = true;
  }
  std::vector<ClipVertex> out;
  if (!any) {
    // Either the disc lies inside the triangle or the two are disjoint.
    const auto bary = geometry::barycentric(m, static_cast<int>(t), x0);
    if (bary[0] < 0 || bary[1] < 0 || bary[2] < 0) return out;
    for (int k = 0; k < kArcSamples; ++k) {
      const double th = kTwoPi * k / kArcSamples;
      out.push_back({x0 + r * Vec2(std::cos(th), std::sin(th)), Side::Arc, -1});
    }
    return out;
  }
  std::vector<int> order;
  for (int e = 0; e < 3; ++e) {
    if (pieces[e].present) order.push_back(e);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int e = order[k];
    const int f = order[(k + 1) % order.size()];
    const Vec2 D = P[(e + 1) % 3] - P[e];
    const Vec2 start = pieces[e].t0 == 0.0 ? P[e] : Vec2(P[e] + pieces[e].t0 * D);
    const Vec2 end = pieces[e].t1 == 1.0 ? P[(e + 1) % 3] : Vec2(P[e] + pieces[e].t1 * D);
    out.push_back({start, Side::Edge, e});
    const bool joined = pieces[e].t1 == 1.0 && f == (e + 1) % 3 && pieces[f].t0 == 0.0;
    if (joined) continue;
    const Vec2 Df = P[(f + 1) % 3] - P[f];
    const Vec2 next = pieces[f].t0 == 0.0 ? P[f] : Vec2(P[f] + pieces[f].t0 * Df);
    out.push_back({end, Side::Arc, -1});
    append_arc(out, x0, r, end, next);
  }
  return out;
}

struct Clipper {
  const Field& u;
  const Vec2 x0;
  const double r;
  std::set<std::pair<int, int>> boundary_edges;

  Clipper(const Field& field, const Vec2& c, double radius) : u(field), x0(c), r(radius) {
    for (const auto& loop : u.grid().loops) {
      for (const auto& e : loop.edges) boundary_edges.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
    }
  }

  // Calls vol(tri, a, b, c) for each fan sub-triangle and seg(tri, p, q) for
  // each piece of the clipped region's boundary.
  template <class Vol, class Seg>
  void visit(Vol&& vol, Seg&& seg) const {
    const Mesh& m = u.grid();
    for (std::size_t t = 0; t < m.triangle_count(); ++t) {
      const auto& tri = m.triangles[t];
      // Cheap rejection by bounding circle.
      const Vec2 c = (m.nodes[tri[0]] + m.nodes[tri[1]] + m.nodes[tri[2]]) / 3.0;
      double rad = 0;
      for (int v : tri) rad = std::max(rad, (m.nodes[v] - c).norm());
      if ((c - x0).norm() > r + rad) continue;
      const auto poly = clip_triangle(m, t, x0, r);
      if (poly.size() < 3) continue;
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) vol(t, poly[0].p, poly[k].p, poly[k + 1].p);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        const ClipVertex& a = poly[k];
        const Vec2& b = poly[(k + 1) % poly.size()].p;
        if (a.side == Side::Edge) {
          const int va = tri[a.edge], vb = tri[(a.edge + 1) % 3];
          if (!boundary_edges.count({std::min(va, vb), std::max(va, vb)})) continue;
        }
        seg(t, a.p, b);
      }
    }
  }
};

struct Affine {
  Vec2 base_point;
  Vec2 base_value;
  Vec2 g1, g2;  // gradients of the two components

  Vec2 at(const Vec2& x) const {
    const Vec2 d = x - base_point;
    return base_value + Vec2(g1.dot(d), g2.dot(d));
  }
};

Affine affine_on(const Field& u, std::size_t t) {
  const Mesh& m = u.grid();
  const auto& tri = m.triangles[t];
  const auto g = m.basis_gradients(t);
  Affine a;
  a.base_point = m.nodes[tri[0]];
  a.base_value = u.values[tri[0]];
  const Vec2 d1 = u.values[tri[1]] - u.values[tri[0]];
  const Vec2 d2 = u.values[tri[2]] - u.values[tri[0]];
  a.g1 = d1.x() * g[1] + d2.x() * g[2];
  a.g2 = d1.y() * g[1] + d2.y() * g[2];
  return a;
}

// Area-weighted average of the adjacent triangle gradients at every node;
// exact for affine fields.
std::vector<std::array<Vec2, 2>> recovered_gradients(const Field& u) {
  const Mesh& m = u.grid();
  std::vector<std::array<Vec2, 2>> g(m.node_count(), {Vec2::Zero(), Vec2::Zero()});
  std::vector<double> w(m.node_count(), 0.0);
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const Affine a = affine_on(u, t);
    const double area = m.triangle_area(t);
    for (int v : m.triangles[t]) {
      g[v][0] += area * a.g1;
      g[v][1] += area * a.g2;
      w[v] += area;
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (w[i] > 0) {
      g[i][0] /= w[i];
      g[i][1] /= w[i];
    }
  }
  return g;
}

}  // namespace

PohozaevReport pohozaev_residual(const Field& u, double eps, const Vec2& x0, double r, const Source& source) {
  if (!(eps > 0) || !(r > 0)) throw Error(ErrorCode::InvalidArgument, "eps and r must be positive");
  const double inv_eps2 = 1.0 / (eps * eps);
  PohozaevReport rep;
  rep.x0 = x0;
  rep.r = r;
  const Mesh& m = u.grid();
  const Clipper clip(u, x0, r);
  const auto rg = recovered_gradients(u);
  // 3-point Gauss-Legendre on [0, 1].
  const double gq = std::sqrt(0.6);
  const std::array<double, 3> gx = {0.5 * (1 - gq), 0.5, 0.5 * (1 + gq)};
  const std::array<double, 3> gw = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  std::size_t cached = static_cast<std::size_t>(-1);
  Affine A;
  auto affine = [&](std::size_t t) -> const Affine& {
    if (t != cached) {
      A = affine_on(u, t);
      cached = t;
    }
    return A;
  };
  // Recovered gradient rows (d u1, d u2) at x inside triangle t.
  auto gradient = [&](std::size_t t, const Vec2& x) {
    const auto b = geometry::barycentric(m, static_cast<int>(t), x);
    std::array<Vec2, 2> g = {Vec2::Zero(), Vec2::Zero()};
    for (int k = 0; k < 3; ++k) {
      g[0] += b[k] * rg[m.triangles[t][k]][0];
      g[1] += b[k] * rg[m.triangles[t][k]][1];
    }
    return g;
  };
  clip.visit(
      [&](std::size_t t, const Vec2& a, const Vec2& b, const Vec2& c) {
        const Affine& f = affine(t);
        const double area = 0.5 * cross(b - a, c - a);
        const std::array<Vec2, 3> mids = {0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)};
        for (const auto& x : mids) {
          const Vec2 v = f.at(x);
          const double w = 1.0 - v.squaredNorm();
          double val = 0.5 * inv_eps2 * w * w;
          if (source) {
            const Vec2 X = x - x0;
            const auto g = gradient(t, x);
            val += source(x).dot(Vec2(g[0].dot(X), g[1].dot(X)));
          }
          rep.lhs += area / 3.0 * val;
        }
      },
      [&](std::size_t t, const Vec2& p, const Vec2& q) {
        const Affine& f = affine(t);
        const Vec2 d = q - p;
        const double len = d.norm();
        if (len == 0.0) return;
        const Vec2 nu(d.y() / len, -d.x() / len);
        for (int k = 0; k < 3; ++k) {
          const Vec2 x = p + gx[k] * d;
          const Vec2 X = x - x0;
          const auto g = gradient(t, x);
          const double grad2 = g[0].squaredNorm() + g[1].squaredNorm();
          const Vec2 dnu(g[0].dot(nu), g[1].dot(nu));
          const Vec2 xgrad(g[0].dot(X), g[1].dot(X));
          const double xn = X.dot(nu);
          const double w = 1.0 - f.at(x).squaredNorm();
          rep.rhs += gw[k] * len * (0.5 * xn * grad2 - dnu.dot(xgrad) + 0.25 * inv_eps2 * xn * w * w);
        }
      });
  rep.residual = std::abs(rep.lhs - rep.rhs);
  return rep;
}

double localized_potential(const Field& u, double eps, const Vec2& x0, double r) {
  if (!(eps > 0) || !(r > 0)) throw Error(ErrorCode::InvalidArgument, "eps and r must be positive");
  const Clipper clip(u, x0, r);
  double total = 0.0;
  std::size_t cached = static_cast<std::size_t>(-1);
  Affine A;
  clip.visit(
      [&](std::size_t t, const Vec2& a, const Vec2& b, const Vec2& c) {
        if (t != cached) {
          A = affine_on(u, t);
          cached = t;
        }
        const double area = 0.5 * cross(b - a, c - a);
        for (const Vec2& x : {Vec2(0.5 * (a + b)), Vec2(0.5 * (b + c)), Vec2(0.5 * (c + a))}) {
          const double w = 1.0 - A.at(x).squaredNorm();
          total += area / 3.0 * w * w;
        }
      },
      [](std::size_t, const Vec2&, const Vec2&) {});
  return total / (eps * eps);
}

double clipped_area(const core::Mesh& mesh, const Vec2& x0, double r) {
  const auto dummy = core::make_field(std::make_shared<const core::Mesh>(mesh), std::vector<Vec2>(mesh.node_count(), Vec2::Zero()));
  const Clipper clip(dummy, x0, r);
  double area = 0.0;
  clip.visit([&](std::size_t, const Vec2& a, const Vec2& b, const Vec2& c) { area += 0.5 * cross(b - a, c - a); },
             [](std::size_t, const Vec2&, const Vec2&) {});
  return area;
}

std::string pohozaev_header() { return "x0x,x0y,r,lhs,rhs,residual"; }

std::string pohozaev_row(const PohozaevReport& p) {
  return io::fmt(p.x0.x()) + "," + io::fmt(p.x0.y()) + "," + io::fmt(p.r) + "," + io::fmt(p.lhs) + "," +
         io::fmt(p.rhs) + "," + io::fmt(p.residual);
}

core::EnergyReport energy_report(const Field& u, const BoundaryData& g, double eps) {
  core::EnergyReport r;
  r.eps = eps;
  r.M = core::interior_energy(u, eps);
  r.N = core::boundary_energy(g, eps);
  r.sup_dev = sup_deviation(u);
  r.delta = g.delta();
  try {
    r.degree = total_degree(g);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::VanishingData && e.code() != ErrorCode::NonIntegerWinding) throw;
  }
  r.kappa_measured = r.M / std::abs(std::log(eps));
  for (const auto& c : find_zeros(u)) r.vortices.push_back(c.position);
  return r;
}

}  // namespace glv::diagnostics
