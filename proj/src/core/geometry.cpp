#include "glv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "glv/errors.hpp"
#include "glv/io.hpp"

namespace glv::geometry {

namespace {

double signed_area(const std::vector<Vec2>& loop) {
  double a = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    a += cross(loop[i], loop[(i + 1) % loop.size()]);
  }
  return 0.5 * a;
}

int orientation_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double o = cross(b - a, c - a);
  const double scale = (b - a).squaredNorm() + (c - a).squaredNorm();
  if (std::abs(o) <= 1e-14 * scale) return 0;
  return o > 0 ? 1 : -1;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) - 1e-15 <= p.x() && p.x() <= std::max(a.x(), b.x()) + 1e-15 &&
         std::min(a.y(), b.y()) - 1e-15 <= p.y() && p.y() <= std::max(a.y(), b.y()) + 1e-15;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation_sign(p1, p2, q1);
  const int o2 = orientation_sign(p1, p2, q2);
  const int o3 = orientation_sign(q1, q2, p1);
  const int o4 = orientation_sign(q1, q2, p2);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

void check_loop(const std::vector<Vec2>& loop, std::size_t index) {
  const std::size_t n = loop.size();
  if (n < 3) {
    throw Error(ErrorCode::DegenerateLoop,
                "loop " + std::to_string(index) + " has fewer than 3 vertices");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((loop[i] - loop[(i + 1) % n]).norm() == 0.0) {
      throw Error(ErrorCode::DegenerateLoop, "loop " + std::to_string(index) +
                                                 ": consecutive vertices coincide at index " +
                                                 std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2& c = loop[j];
      const Vec2& d = loop[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges share one vertex; they may only meet there.
        const Vec2& shared = (j == i + 1) ? b : a;
        const Vec2& far1 = (j == i + 1) ? a : b;
        const Vec2& far2 = (j == i + 1) ? d : c;
        if (orientation_sign(far1, shared, far2) == 0 &&
            (far1 - shared).dot(far2 - shared) > 0.0) {
          throw Error(ErrorCode::SelfIntersection,
                      "loop " + std::to_string(index) + " folds back on itself at vertex " +
                          std::to_string(j == i + 1 ? j : i));
        }
        continue;
      }
      if (segments_intersect(a, b, c, d)) {
        throw Error(ErrorCode::SelfIntersection, "loop " + std::to_string(index) + ": edges " +
                                                     std::to_string(i) + " and " +
                                                     std::to_string(j) + " intersect");
      }
    }
  }
}

bool point_in_loop(const std::vector<Vec2>& loop, const Vec2& p) {
  bool inside = false;
  const std::size_t n = loop.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

double Domain::area() const {
  double a = 0.0;
  for (const auto& l : loops) a += signed_area(l);
  return a;
}

double Domain::perimeter(std::size_t loop) const {
  const auto& l = loops.at(loop);
  double p = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) p += (l[(i + 1) % l.size()] - l[i]).norm();
  return p;
}

double Domain::diameter() const {
  double d = 0.0;
  for (const auto& l : loops) {
    for (const auto& p : l) {
      for (const auto& q : loops.front()) d = std::max(d, (p - q).norm());
    }
  }
  return d;
}

bool Domain::contains(const Vec2& p) const {
  bool inside = false;
  for (const auto& l : loops) {
    if (point_in_loop(l, p)) inside = !inside;
  }
  return inside;
}

Domain build_polygon(std::vector<Vec2> outer, std::vector<std::vector<Vec2>> holes) {
  Domain d;
  d.loops.reserve(holes.size() + 1);
  d.loops.push_back(std::move(outer));
  for (auto& h : holes) d.loops.push_back(std::move(h));

  for (std::size_t k = 0; k < d.loops.size(); ++k) check_loop(d.loops[k], k);

  for (std::size_t k = 0; k < d.loops.size(); ++k) {
    for (std::size_t m = k + 1; m < d.loops.size(); ++m) {
      const auto& A = d.loops[k];
      const auto& B = d.loops[m];
      for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t j = 0; j < B.size(); ++j) {
          if (segments_intersect(A[i], A[(i + 1) % A.size()], B[j], B[(j + 1) % B.size()])) {
            throw Error(ErrorCode::SelfIntersection,
                        "loops " + std::to_string(k) + " and " + std::to_string(m) + " intersect");
          }
        }
      }
    }
  }
  for (std::size_t k = 1; k < d.loops.size(); ++k) {
    if (!point_in_loop(d.loops[0], d.loops[k][0])) {
      throw Error(ErrorCode::GeometryError, "hole " + std::to_string(k) + " is not inside the outer loop");
    }
    for (std::size_t m = 1; m < d.loops.size(); ++m) {
      if (m != k && point_in_loop(d.loops[m], d.loops[k][0])) {
        throw Error(ErrorCode::GeometryError, "hole " + std::to_string(k) + " is nested in hole " +
                                                  std::to_string(m));
      }
    }
  }

  for (std::size_t k = 0; k < d.loops.size(); ++k) {
    const double a = signed_area(d.loops[k]);
    const bool want_ccw = (k == 0);
    if ((a > 0) != want_ccw) {
      std::reverse(d.loops[k].begin(), d.loops[k].end());
      std::rotate(d.loops[k].rbegin(), d.loops[k].rbegin() + 1, d.loops[k].rend());
      d.warnings.push_back((k == 0 ? std::string("outer loop") : "hole " + std::to_string(k)) +
                           " reversed to " + (want_ccw ? "counter-clockwise" : "clockwise") +
                           " orientation");
    }
  }

  double theta = std::numbers::pi;
  double rho = std::numeric_limits<double>::infinity();
  for (const auto& l : d.loops) {
    const std::size_t n = l.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& prev = l[(i + n - 1) % n];
      const Vec2& cur = l[i];
      const Vec2& next = l[(i + 1) % n];
      const Vec2 e1 = prev - cur;
      const Vec2 e2 = next - cur;
      double alpha = std::atan2(cross(e2, e1), e2.dot(e1));
      if (alpha <= 0) alpha += 2 * std::numbers::pi;
      theta = std::min(theta, std::min(alpha, 2 * std::numbers::pi - alpha));
      rho = std::min(rho, 0.5 * std::min(e1.norm(), e2.norm()));
    }
  }
  d.cone_angle = theta;
  d.cone_radius = rho;
  return d;
}

namespace {

// Parses "[[x,y],[x,y],...]" starting at pos; advances pos past the closing bracket.
std::vector<Vec2> parse_point_list(const std::string& text, std::size_t& pos, int line) {
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
  };
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto expect = [&](char c) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c) fail(std::string("expected '") + c + "'");
    ++pos;
  };
  auto number = [&] {
    skip_ws();
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos += static_cast<std::size_t>(end - begin);
    return v;
  };

  std::vector<Vec2> pts;
  expect('[');
  skip_ws();
  if (pos < text.size() && text[pos] == ']') {
    ++pos;
    return pts;
  }
  while (true) {
    expect('[');
    const double x = number();
    expect(',');
    const double y = number();
    expect(']');
    pts.emplace_back(x, y);
    skip_ws();
    if (pos < text.size() && text[pos] == ',') {
      ++pos;
      continue;
    }
    expect(']');
    break;
  }
  return pts;
}

}  // namespace

Domain parse_domain(std::istream& in) {
  std::vector<std::vector<Vec2>> outer;
  std::vector<std::vector<Vec2>> holes;

  std::string pending;
  std::string key;
  int start_line = 0;
  int line_no = 0;
  std::string line;
  auto depth = [](const std::string& s) {
    int d = 0;
    for (char c : s) d += (c == '[') - (c == ']');
    return d;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (key.empty()) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      key = io::trim(line.substr(0, eq));
      if (key != "loop" && key != "hole") {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
      pending = line.substr(eq + 1);
      start_line = line_no;
    } else {
      pending += "\n" + line;
    }
    if (depth(pending) == 0 && pending.find('[') != std::string::npos) {
      std::size_t pos = 0;
      auto pts = parse_point_list(pending, pos, start_line);
      if (!io::trim(pending.substr(pos)).empty()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(start_line) + ": trailing characters");
      }
      (key == "loop" ? outer : holes).push_back(std::move(pts));
      key.clear();
      pending.clear();
    }
  }
  if (!key.empty()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(start_line) + ": unterminated point list");
  }
  if (outer.size() != 1) {
    throw Error(ErrorCode::ParseError, "expected exactly one 'loop' entry, found " + std::to_string(outer.size()));
  }
  return build_polygon(std::move(outer.front()), std::move(holes));
}

Domain load_domain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_domain(in);
}

std::vector<int> BoundaryLoop::nodes() const {
  std::vector<int> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.a);
  return out;
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross(nodes[tri[1]] - nodes[tri[0]], nodes[tri[2]] - nodes[tri[0]]);
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

std::array<Vec2, 3> Mesh::basis_gradients(std::size_t t) const {
  const auto& tri = triangles[t];
  const double two_area = 2.0 * triangle_area(t);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2& p = nodes[tri[(i + 1) % 3]];
    const Vec2& q = nodes[tri[(i + 2) % 3]];
    // grad phi_i is perpendicular to the opposite edge, pointing towards vertex i.
    g[i] = Vec2(p.y() - q.y(), q.x() - p.x()) / two_area;
  }
  return g;
}

std::vector<double> Mesh::lumped_mass() const {
  std::vector<double> m(nodes.size(), 0.0);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const double a = triangle_area(t) / 3.0;
    for (int v : triangles[t]) m[v] += a;
  }
  return m;
}

std::vector<std::vector<int>> Mesh::node_adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& tri : triangles) {
    for (int i = 0; i < 3; ++i) {
      adj[tri[i]].push_back(tri[(i + 1) % 3]);
      adj[tri[i]].push_back(tri[(i + 2) % 3]);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

std::vector<std::vector<int>> Mesh::node_triangles() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int v : triangles[t]) out[v].push_back(static_cast<int>(t));
  }
  return out;
}

Mesh make_mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles) {
  Mesh m;
  m.nodes = std::move(nodes);
  m.triangles = std::move(triangles);
  const int n = static_cast<int>(m.nodes.size());
  if (m.triangles.empty()) throw Error(ErrorCode::MeshFailure, "mesh has no triangles");

  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    auto& tri = m.triangles[t];
    for (int v : tri) {
      if (v < 0 || v >= n) throw Error(ErrorCode::MeshFailure, "triangle " + std::to_string(t) + " references a missing node");
    }
    double a = m.triangle_area(t);
    if (a < 0) {
      std::swap(tri[1], tri[2]);
      a = -a;
    }
    if (!(a > 0)) throw Error(ErrorCode::MeshFailure, "triangle " + std::to_string(t) + " is degenerate");
  }

  // Directed edge counts: a boundary edge appears once, in the orientation of its triangle.
  std::map<std::pair<int, int>, int> directed;
  double hmax = 0.0;
  for (const auto& tri : m.triangles) {
    for (int i = 0; i < 3; ++i) {
      const int a = tri[i];
      const int b = tri[(i + 1) % 3];
      directed[{a, b}] += 1;
      hmax = std::max(hmax, (m.nodes[a] - m.nodes[b]).norm());
    }
  }
  m.h = hmax;

  std::vector<int> next(n, -1);
  for (const auto& [e, count] : directed) {
    if (count > 1) throw Error(ErrorCode::MeshFailure, "edge used twice with the same orientation");
    if (directed.count({e.second, e.first})) continue;
    if (next[e.first] != -1) {
      throw Error(ErrorCode::MeshFailure, "non-manifold boundary at node " + std::to_string(e.first));
    }
    next[e.first] = e.second;
  }

  std::vector<char> visited(n, 0);
  for (int start = 0; start < n; ++start) {
    if (next[start] < 0 || visited[start]) continue;
    BoundaryLoop loop;
    int cur = start;
    double s = 0.0;
    double area2 = 0.0;
    do {
      visited[cur] = 1;
      const int nb = next[cur];
      if (nb < 0) throw Error(ErrorCode::MeshFailure, "open boundary chain at node " + std::to_string(cur));
      BoundaryEdge e;
      e.a = cur;
      e.b = nb;
      const Vec2 d = m.nodes[nb] - m.nodes[cur];
      e.length = d.norm();
      e.s0 = s;
      const Vec2 t = d / e.length;
      e.normal = Vec2(t.y(), -t.x());
      e.tangent = Vec2(-e.normal.y(), e.normal.x());
      s += e.length;
      area2 += cross(m.nodes[cur], m.nodes[nb]);
      loop.edges.push_back(e);
      cur = nb;
    } while (cur != start);
    loop.perimeter = s;
    loop.signed_area = 0.5 * area2;
    m.loops.push_back(std::move(loop));
  }
  std::stable_sort(m.loops.begin(), m.loops.end(), [](const BoundaryLoop& a, const BoundaryLoop& b) {
    return (a.signed_area > 0) > (b.signed_area > 0);
  });

  m.boundary_slot_.assign(n, -1);
  m.interior_slot_.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    if (next[v] >= 0) {
      m.boundary_slot_[v] = static_cast<int>(m.boundary_nodes_.size());
      m.boundary_nodes_.push_back(v);
    } else {
      m.interior_slot_[v] = static_cast<int>(m.interior_nodes_.size());
      m.interior_nodes_.push_back(v);
    }
  }
  return m;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << "nodes " << mesh.nodes.size() << "\n";
  out << "tris " << mesh.triangles.size() << "\n";
  out << "h " << io::fmt(mesh.h) << "\n";
  for (const auto& p : mesh.nodes) out << io::fmt(p.x()) << " " << io::fmt(p.y()) << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
}

Mesh read_mesh(std::istream& in) {
  std::string tag;
  std::size_t n = 0, m = 0;
  double h = 0.0;
  if (!(in >> tag >> n) || tag != "nodes") throw Error(ErrorCode::ParseError, "mesh: expected 'nodes N'");
  if (!(in >> tag >> m) || tag != "tris") throw Error(ErrorCode::ParseError, "mesh: expected 'tris M'");
  if (!(in >> tag >> h) || tag != "h") throw Error(ErrorCode::ParseError, "mesh: expected 'h <value>'");
  std::vector<Vec2> nodes(n);
  for (auto& p : nodes) {
    if (!(in >> p.x() >> p.y())) throw Error(ErrorCode::ParseError, "mesh: truncated node table");
  }
  std::vector<std::array<int, 3>> tris(m);
  for (auto& t : tris) {
    if (!(in >> t[0] >> t[1] >> t[2])) throw Error(ErrorCode::ParseError, "mesh: truncated triangle table");
  }
  return make_mesh(std::move(nodes), std::move(tris));
}

std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& p) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.nodes[tri[0]];
  const Vec2& b = mesh.nodes[tri[1]];
  const Vec2& c = mesh.nodes[tri[2]];
  const double det = cross(b - a, c - a);
  const double l1 = cross(p - a, c - a) / det;
  const double l2 = cross(b - a, p - a) / det;
  return {1.0 - l1 - l2, l1, l2};
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  lo_ = mesh.nodes.front();
  hi_ = lo_;
  for (const auto& p : mesh.nodes) {
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  const Vec2 span = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-12));
  const double cells = std::max(1.0, std::sqrt(static_cast<double>(mesh.triangles.size())));
  const double cell = std::max(span.x(), span.y()) / cells;
  nx_ = std::max(1, static_cast<int>(std::ceil(span.x() / cell)));
  ny_ = std::max(1, static_cast<int>(std::ceil(span.y() / cell)));
  cw_ = span.x() / nx_;
  ch_ = span.y() / ny_;
  cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    Vec2 a = mesh.nodes[mesh.triangles[t][0]], b = a;
    for (int v : mesh.triangles[t]) {
      a = a.cwiseMin(mesh.nodes[v]);
      b = b.cwiseMax(mesh.nodes[v]);
    }
    const int i0 = cell_of(a.x(), lo_.x(), cw_, nx_), i1 = cell_of(b.x(), lo_.x(), cw_, nx_);
    const int j0 = cell_of(a.y(), lo_.y(), ch_, ny_), j1 = cell_of(b.y(), lo_.y(), ch_, ny_);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) cells_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
    }
  }
}

int PointLocator::cell_of(double v, double lo, double w, int n) const {
  const int c = static_cast<int>(std::floor((v - lo) / w));
  return std::clamp(c, 0, n - 1);
}

std::optional<PointLocator::Hit> PointLocator::scan(const std::vector<int>& cands, const Vec2& p,
                                                    double tol) const {
  for (int t : cands) {
    const auto l = barycentric(*mesh_, t, p);
    if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol) return Hit{t, l};
  }
  return std::nullopt;
}

std::optional<PointLocator::Hit> PointLocator::locate(const Vec2& p) const {
  const int i = static_cast<int>(std::floor((p.x() - lo_.x()) / cw_));
  const int j = static_cast<int>(std::floor((p.y() - lo_.y()) / ch_));
  if (i < -1 || j < -1 || i > nx_ || j > ny_) return std::nullopt;
  return scan(cells_[static_cast<std::size_t>(std::clamp(j, 0, ny_ - 1)) * nx_ + std::clamp(i, 0, nx_ - 1)],
              p, 1e-12);
}

PointLocator::Hit PointLocator::locate_nearest(const Vec2& p) const {
  if (auto hit = locate(p)) return *hit;
  const int ci = std::clamp(static_cast<int>(std::floor((p.x() - lo_.x()) / cw_)), 0, nx_ - 1);
  const int cj = std::clamp(static_cast<int>(std::floor((p.y() - lo_.y()) / ch_)), 0, ny_ - 1);
  Hit best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int radius = 1; radius <= std::max(nx_, ny_); ++radius) {
    for (int j = std::max(0, cj - radius); j <= std::min(ny_ - 1, cj + radius); ++j) {
      for (int i = std::max(0, ci - radius); i <= std::min(nx_ - 1, ci + radius); ++i) {
        for (int t : cells_[static_cast<std::size_t>(j) * nx_ + i]) {
          auto l = barycentric(*mesh_, t, p);
          for (auto& v : l) v = std::max(v, 0.0);
          const double s = l[0] + l[1] + l[2];
          for (auto& v : l) v /= s;
          const auto& tri = mesh_->triangles[t];
          const Vec2 q = l[0] * mesh_->nodes[tri[0]] + l[1] * mesh_->nodes[tri[1]] + l[2] * mesh_->nodes[tri[2]];
          const double d = (q - p).norm();
          if (d < best_d) {
            best_d = d;
            best = Hit{t, l};
          }
        }
      }
    }
    if (best.triangle >= 0) break;
  }
  if (best.triangle < 0) throw Error(ErrorCode::Internal, "point locator: empty mesh");
  return best;
}

}  // namespace glv::geometry
