// Incremental Delaunay triangulation (Lawson flips) with protected boundary
// segments and size-driven circumcenter refinement.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "glv/errors.hpp"
#include "glv/geometry.hpp"
#include "glv/io.hpp"

namespace glv::geometry {

double MeshSizing::size_at(const Vec2& x) const {
  double h = h_default;
  for (const auto& f : features) {
    const double d = std::max(0.0, (x - f.center).norm() - f.radius);
    h = std::min(h, f.h + grading * d);
  }
  return h;
}

namespace {

using Real = long double;

Real orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Real l = (Real(b.x()) - a.x()) * (Real(c.y()) - a.y());
  const Real r = (Real(b.y()) - a.y()) * (Real(c.x()) - a.x());
  const Real det = l - r;
  if (std::abs(det) <= 1e-17L * (std::abs(l) + std::abs(r))) return 0;
  return det;
}

// > 0 when d lies strictly inside the circumcircle of the ccw triangle abc.
Real incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const Real adx = Real(a.x()) - d.x(), ady = Real(a.y()) - d.y();
  const Real bdx = Real(b.x()) - d.x(), bdy = Real(b.y()) - d.y();
  const Real cdx = Real(c.x()) - d.x(), cdy = Real(c.y()) - d.y();
  const Real alift = adx * adx + ady * ady;
  const Real blift = bdx * bdx + bdy * bdy;
  const Real clift = cdx * cdx + cdy * cdy;
  const Real det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                   clift * (adx * bdy - bdx * ady);
  const Real perm = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                    blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                    clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  if (std::abs(det) <= 1e-15L * perm) return 0;
  return det;
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = ab.squaredNorm();
  const double ac2 = ac.squaredNorm();
  return a + Vec2(ac.y() * ab2 - ab.y() * ac2, ab.x() * ac2 - ac.x() * ab2) / d;
}

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> n;  // n[i] is the neighbour across the edge opposite v[i]
};

struct Segment {
  int a;
  int b;
};

std::pair<int, int> key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

class Triangulator {
 public:
  Triangulator(const Domain& domain, const MeshSizing& sizing) : dom_(domain), size_(sizing) {}

  Mesh run() {
    make_super();
    insert_boundary();
    conform();
    for (const auto& p : size_.required_points) insert_required(p);
    refine();
    return extract();
  }

 private:
  static constexpr int kSuper = 3;
  static constexpr std::size_t kMaxPoints = 4'000'000;

  const Domain& dom_;
  const MeshSizing& size_;
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> vtri_;
  std::map<std::pair<int, int>, int> constrained_;  // edge -> segment index
  std::vector<Segment> segs_;
  std::vector<int> touched_;
  int hint_ = 0;

  // --- topology primitives -------------------------------------------------

  void make_super() {
    Vec2 lo = dom_.loops.front().front(), hi = lo;
    for (const auto& l : dom_.loops) {
      for (const auto& p : l) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
    const Vec2 c = 0.5 * (lo + hi);
    const double d = 50.0 * std::max((hi - lo).maxCoeff(), 1e-12);
    pts_ = {c + d * Vec2(0.0, 2.0), c + d * Vec2(-std::sqrt(3.0), -1.0), c + d * Vec2(std::sqrt(3.0), -1.0)};
    tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}});
    vtri_ = {0, 0, 0};
  }

  int index_in(const Tri& t, int v) const {
    for (int i = 0; i < 3; ++i) {
      if (t.v[i] == v) return i;
    }
    return -1;
  }

  void relink(int nb, int from, int to) {
    if (nb < 0) return;
    for (int i = 0; i < 3; ++i) {
      if (tris_[nb].n[i] == from) {
        tris_[nb].n[i] = to;
        return;
      }
    }
  }

  void touch(int t) {
    for (int v : tris_[t].v) vtri_[v] = t;
    touched_.push_back(t);
  }

  int new_tri(const Tri& t) {
    tris_.push_back(t);
    return static_cast<int>(tris_.size()) - 1;
  }

  bool is_constrained(int a, int b) const { return constrained_.count(key(a, b)) > 0; }

  struct Located {
    int tri = -1;
    int edge = -1;    // edge index when the point lies on an edge
    int vertex = -1;  // existing vertex when the point coincides with one
  };

  Located locate(const Vec2& p, int hint) const {
    int t = (hint >= 0 && hint < static_cast<int>(tris_.size())) ? hint : 0;
    const std::size_t limit = 4 * tris_.size() + 64;
    for (std::size_t step = 0; step < limit; ++step) {
      const Tri& T = tris_[t];
      int move = -1;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((k + step) % 3);
        if (orient(pts_[T.v[(i + 1) % 3]], pts_[T.v[(i + 2) % 3]], p) < 0) {
          move = i;
          break;
        }
      }
      if (move < 0) return classify(t, p);
      t = T.n[move];
      if (t < 0) throw Error(ErrorCode::MeshFailure, "point outside the bounding triangle");
    }
    for (std::size_t s = 0; s < tris_.size(); ++s) {
      const Tri& T = tris_[s];
      bool inside = true;
      for (int i = 0; i < 3 && inside; ++i) {
        inside = orient(pts_[T.v[(i + 1) % 3]], pts_[T.v[(i + 2) % 3]], p) >= 0;
      }
      if (inside) return classify(static_cast<int>(s), p);
    }
    throw Error(ErrorCode::MeshFailure, "point location failed");
  }

  Located classify(int t, const Vec2& p) const {
    Located loc;
    loc.tri = t;
    const Tri& T = tris_[t];
    for (int i = 0; i < 3; ++i) {
      if ((pts_[T.v[i]] - p).squaredNorm() <= 1e-28 * (1.0 + p.squaredNorm())) {
        loc.vertex = T.v[i];
        return loc;
      }
    }
    for (int i = 0; i < 3; ++i) {
      if (orient(pts_[T.v[(i + 1) % 3]], pts_[T.v[(i + 2) % 3]], p) == 0) {
        loc.edge = i;
        return loc;
      }
    }
    return loc;
  }

  // Splits triangle t by the new vertex p (1 -> 3).
  void split_triangle(int t, int p) {
    const Tri T = tris_[t];
    const int a = T.v[0], b = T.v[1], c = T.v[2];
    const int na = T.n[0], nb = T.n[1], nc = T.n[2];
    const int t1 = t;
    const int t2 = new_tri({});
    const int t3 = new_tri({});
    tris_[t1] = Tri{{p, b, c}, {na, t2, t3}};
    tris_[t2] = Tri{{p, c, a}, {nb, t3, t1}};
    tris_[t3] = Tri{{p, a, b}, {nc, t1, t2}};
    relink(nb, t, t2);
    relink(nc, t, t3);
    touch(t1);
    touch(t2);
    touch(t3);
    legalize(p, {t1, t2, t3});
  }

  // Splits the edge opposite T.v[i] of triangle t at the new vertex p (2 -> 4).
  void split_edge(int t, int i, int p) {
    Tri T = tris_[t];
    std::rotate(T.v.begin(), T.v.begin() + i, T.v.end());
    std::rotate(T.n.begin(), T.n.begin() + i, T.n.end());
    const int a = T.v[0], b = T.v[1], c = T.v[2];
    const int u = T.n[0], nb = T.n[1], nc = T.n[2];

    int seg = -1;
    if (auto it = constrained_.find(key(b, c)); it != constrained_.end()) {
      seg = it->second;
      constrained_.erase(it);
    }

    const int t1 = t;
    const int t2 = new_tri({});
    std::vector<int> fresh = {t1, t2};
    if (u >= 0) {
      Tri U = tris_[u];
      const int j = index_in(U, [&] {
        for (int w : U.v) {
          if (w != b && w != c) return w;
        }
        return -1;
      }());
      std::rotate(U.v.begin(), U.v.begin() + j, U.v.end());
      std::rotate(U.n.begin(), U.n.begin() + j, U.n.end());
      const int d = U.v[0];  // U = (d, c, b)
      const int uc = U.n[1];  // across (b, d)
      const int ub = U.n[2];  // across (d, c)
      const int s1 = u;
      const int s2 = new_tri({});
      tris_[t1] = Tri{{a, b, p}, {s1, t2, nc}};
      tris_[t2] = Tri{{a, p, c}, {s2, nb, t1}};
      tris_[s1] = Tri{{d, p, b}, {t1, uc, s2}};
      tris_[s2] = Tri{{d, c, p}, {t2, s1, ub}};
      relink(nb, t, t2);
      relink(ub, u, s2);
      fresh.push_back(s1);
      fresh.push_back(s2);
    } else {
      tris_[t1] = Tri{{a, b, p}, {-1, t2, nc}};
      tris_[t2] = Tri{{a, p, c}, {-1, nb, t1}};
      relink(nb, t, t2);
    }
    for (int f : fresh) touch(f);

    if (seg >= 0) {
      segs_[seg] = Segment{b, p};
      constrained_[key(b, p)] = seg;
      segs_.push_back(Segment{p, c});
      constrained_[key(p, c)] = static_cast<int>(segs_.size()) - 1;
    }
    legalize(p, fresh);
  }

  void flip(int t, int u) {
    // t = (p, b, c) with p = t.v[0]; u = (d, c, b).
    Tri T = tris_[t];
    Tri U = tris_[u];
    const int p = T.v[0], b = T.v[1], c = T.v[2];
    const int j = [&] {
      for (int k = 0; k < 3; ++k) {
        if (U.v[k] != b && U.v[k] != c) return k;
      }
      return -1;
    }();
    std::rotate(U.v.begin(), U.v.begin() + j, U.v.end());
    std::rotate(U.n.begin(), U.n.begin() + j, U.n.end());
    const int d = U.v[0];
    const int x1 = U.n[1];  // across (b, d)
    const int x2 = U.n[2];  // across (d, c)
    const int y1 = T.n[1];  // across (c, p)
    const int y2 = T.n[2];  // across (p, b)
    tris_[t] = Tri{{p, b, d}, {x1, u, y2}};
    tris_[u] = Tri{{p, d, c}, {x2, y1, t}};
    relink(x1, u, t);
    relink(y1, t, u);
    touch(t);
    touch(u);
  }

  void legalize(int p, std::vector<int> stack) {
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      Tri& T = tris_[t];
      const int k = index_in(T, p);
      if (k < 0) continue;
      std::rotate(T.v.begin(), T.v.begin() + k, T.v.end());
      std::rotate(T.n.begin(), T.n.begin() + k, T.n.end());
      const int u = T.n[0];
      if (u < 0) continue;
      const int b = T.v[1], c = T.v[2];
      if (is_constrained(b, c)) continue;
      int d = -1;
      for (int w : tris_[u].v) {
        if (w != b && w != c) d = w;
      }
      if (incircle(pts_[T.v[0]], pts_[b], pts_[c], pts_[d]) > 0) {
        flip(t, u);
        stack.push_back(t);
        stack.push_back(u);
      }
    }
  }

  // Inserts p; returns the vertex index (an existing one if p coincides).
  int insert_point(const Vec2& p, int hint) {
    const Located loc = locate(p, hint);
    if (loc.vertex >= 0) return loc.vertex;
    if (pts_.size() >= kMaxPoints) {
      throw Error(ErrorCode::MeshFailure, "point budget exhausted; achieved h = " + io::fmt(current_h()));
    }
    pts_.push_back(p);
    vtri_.push_back(loc.tri);
    const int v = static_cast<int>(pts_.size()) - 1;
    if (loc.edge >= 0) {
      split_edge(loc.tri, loc.edge, v);
    } else {
      split_triangle(loc.tri, v);
    }
    hint_ = vtri_[v];
    return v;
  }

  // (triangle, edge index) holding edge {a, b}, or {-1, -1}.
  std::pair<int, int> find_edge(int a, int b) const {
    const int start = vtri_[a];
    int t = start;
    for (std::size_t guard = 0; guard < tris_.size() + 8; ++guard) {
      const Tri& T = tris_[t];
      const int k = index_in(T, a);
      if (k < 0) break;
      if (T.v[(k + 1) % 3] == b) return {t, (k + 2) % 3};
      if (T.v[(k + 2) % 3] == b) return {t, (k + 1) % 3};
      t = T.n[(k + 1) % 3];
      if (t < 0 || t == start) break;
    }
    return {-1, -1};
  }

  bool in_diametral_circle(const Segment& s, const Vec2& p) const {
    const Vec2 mid = 0.5 * (pts_[s.a] + pts_[s.b]);
    const double r2 = 0.25 * (pts_[s.a] - pts_[s.b]).squaredNorm();
    return (p - mid).squaredNorm() < r2 * (1.0 - 1e-10);
  }

  bool apex_encroaches(const Segment& s) const {
    const auto [t, i] = find_edge(s.a, s.b);
    if (t < 0) return true;
    const int apex = tris_[t].v[i];
    if (apex >= kSuper && in_diametral_circle(s, pts_[apex])) return true;
    const int u = tris_[t].n[i];
    if (u >= 0) {
      for (int w : tris_[u].v) {
        if (w != s.a && w != s.b && w >= kSuper && in_diametral_circle(s, pts_[w])) return true;
      }
    }
    return false;
  }

  double current_h() const {
    double h = 0.0;
    for (const auto& T : tris_) {
      if (T.v[0] < kSuper || T.v[1] < kSuper || T.v[2] < kSuper) continue;
      for (int i = 0; i < 3; ++i) h = std::max(h, (pts_[T.v[i]] - pts_[T.v[(i + 1) % 3]]).norm());
    }
    return h;
  }

  // --- stages --------------------------------------------------------------

  void insert_boundary() {
    // All polygon vertices first so that each loop starts at a low node index.
    std::vector<std::vector<int>> corner(dom_.loops.size());
    for (std::size_t k = 0; k < dom_.loops.size(); ++k) {
      for (const auto& p : dom_.loops[k]) corner[k].push_back(insert_point(p, hint_));
    }
    for (std::size_t k = 0; k < dom_.loops.size(); ++k) {
      const auto& loop = dom_.loops[k];
      for (std::size_t e = 0; e < loop.size(); ++e) {
        const Vec2& p = loop[e];
        const Vec2& q = loop[(e + 1) % loop.size()];
        const int ia = corner[k][e];
        const int ib = corner[k][(e + 1) % loop.size()];
        // Equidistribute the points in the metric 1/size along the edge.
        constexpr int kSamples = 512;
        std::vector<double> cum(kSamples + 1, 0.0);
        for (int s = 0; s < kSamples; ++s) {
          const double t0 = static_cast<double>(s) / kSamples;
          const double t1 = static_cast<double>(s + 1) / kSamples;
          const Vec2 x = p + 0.5 * (t0 + t1) * (q - p);
          cum[s + 1] = cum[s] + (t1 - t0) / size_.size_at(x);
        }
        const double total = cum.back() * (q - p).norm();
        const int pieces = std::max(1, static_cast<int>(std::ceil(total - 1e-9)));
        int prev = ia;
        for (int j = 1; j < pieces; ++j) {
          const double target = cum.back() * j / pieces;
          const auto it = std::lower_bound(cum.begin(), cum.end(), target);
          const int s = std::max(1, static_cast<int>(it - cum.begin()));
          const double frac = (target - cum[s - 1]) / (cum[s] - cum[s - 1]);
          const double t = (s - 1 + frac) / kSamples;
          const Vec2 x = p + t * (q - p);
          const int iv = insert_point(x, hint_);
          segs_.push_back(Segment{prev, iv});
          prev = iv;
        }
        segs_.push_back(Segment{prev, ib});
      }
    }
  }

  void conform() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t s = 0; s < segs_.size(); ++s) {
        if (!apex_encroaches(segs_[s])) continue;
        const Segment seg = segs_[s];
        const int m = insert_point(0.5 * (pts_[seg.a] + pts_[seg.b]), vtri_[seg.a]);
        segs_[s] = Segment{seg.a, m};
        segs_.push_back(Segment{m, seg.b});
        changed = true;
      }
    }
    for (std::size_t s = 0; s < segs_.size(); ++s) constrained_[key(segs_[s].a, segs_[s].b)] = static_cast<int>(s);
  }

  // Splits a protected segment at its midpoint, then any sub-segment whose
  // diametral circle now holds an adjacent apex.
  void split_segment(int s) {
    std::vector<int> pending = {s};
    while (!pending.empty()) {
      const int cur = pending.back();
      pending.pop_back();
      const Segment seg = segs_[cur];
      const auto [t, i] = find_edge(seg.a, seg.b);
      if (t < 0) throw Error(ErrorCode::MeshFailure, "protected segment lost");
      if (pts_.size() >= kMaxPoints) {
        throw Error(ErrorCode::MeshFailure, "point budget exhausted; achieved h = " + io::fmt(current_h()));
      }
      pts_.push_back(0.5 * (pts_[seg.a] + pts_[seg.b]));
      vtri_.push_back(t);
      const int m = static_cast<int>(pts_.size()) - 1;
      const std::size_t before = segs_.size();
      split_edge(t, i, m);
      for (int k : {cur, static_cast<int>(before)}) {
        if (apex_encroaches(segs_[k])) pending.push_back(k);
      }
    }
  }

  std::vector<int> encroached_by(const Vec2& p) const {
    std::vector<int> out;
    for (std::size_t s = 0; s < segs_.size(); ++s) {
      if (in_diametral_circle(segs_[s], p)) out.push_back(static_cast<int>(s));
    }
    return out;
  }

  void insert_required(const Vec2& p) {
    if (!dom_.contains(p)) throw Error(ErrorCode::GeometryError, "required point lies outside the domain");
    for (int guard = 0; guard < 64; ++guard) {
      const auto enc = encroached_by(p);
      if (enc.empty()) break;
      for (int s : enc) split_segment(s);
    }
    insert_point(p, hint_);
  }

  void refine() {
    std::deque<int> queue;
    for (std::size_t t = 0; t < tris_.size(); ++t) queue.push_back(static_cast<int>(t));
    auto flush = [&] {
      for (int t : touched_) queue.push_back(t);
      touched_.clear();
    };
    touched_.clear();
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      const Tri T = tris_[t];
      if (T.v[0] < kSuper || T.v[1] < kSuper || T.v[2] < kSuper) continue;
      const Vec2& a = pts_[T.v[0]];
      const Vec2& b = pts_[T.v[1]];
      const Vec2& c = pts_[T.v[2]];
      const Vec2 centroid = (a + b + c) / 3.0;
      if (!dom_.contains(centroid)) continue;
      const double l0 = (b - c).norm(), l1 = (c - a).norm(), l2 = (a - b).norm();
      const double lmax = std::max({l0, l1, l2});
      const double lmin = std::min({l0, l1, l2});
      const double target = size_.size_at(centroid);
      const Vec2 cc = circumcenter(a, b, c);
      const double radius = (cc - a).norm();
      const bool too_big = lmax > target;
      const bool skinny = radius > std::sqrt(2.0) * lmin && lmin > 0.3 * target;
      if (!too_big && !skinny) continue;

      const auto enc = encroached_by(cc);
      if (!enc.empty()) {
        for (int s : enc) split_segment(s);
        flush();
        queue.push_back(t);
        continue;
      }
      if (!dom_.contains(cc)) {
        // Should be covered by the encroachment test; split the closest segment.
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < segs_.size(); ++s) {
          const double d = (0.5 * (pts_[segs_[s].a] + pts_[segs_[s].b]) - cc).norm();
          if (d < best_d) {
            best_d = d;
            best = static_cast<int>(s);
          }
        }
        split_segment(best);
        flush();
        queue.push_back(t);
        continue;
      }
      insert_point(cc, t);
      flush();
    }
  }

  Mesh extract() const {
    std::vector<int> remap(pts_.size(), -1);
    std::vector<std::array<int, 3>> kept;
    for (const auto& T : tris_) {
      if (T.v[0] < kSuper || T.v[1] < kSuper || T.v[2] < kSuper) continue;
      const Vec2 centroid = (pts_[T.v[0]] + pts_[T.v[1]] + pts_[T.v[2]]) / 3.0;
      if (!dom_.contains(centroid)) continue;
      kept.push_back(T.v);
      for (int v : T.v) remap[v] = 0;
    }
    std::vector<Vec2> nodes;
    for (std::size_t v = kSuper; v < pts_.size(); ++v) {
      if (remap[v] < 0) continue;
      remap[v] = static_cast<int>(nodes.size());
      nodes.push_back(pts_[v]);
    }
    for (auto& t : kept) {
      for (int& v : t) v = remap[v];
    }
    Mesh mesh = make_mesh(std::move(nodes), std::move(kept));
    if (mesh.loops.size() != dom_.loops.size()) {
      throw Error(ErrorCode::MeshFailure, "boundary recovery failed: " + std::to_string(mesh.loops.size()) +
                                              " loops for a domain with " + std::to_string(dom_.loops.size()));
    }
    return mesh;
  }
};

}  // namespace

Mesh triangulate(const Domain& domain, const MeshSizing& sizing) {
  if (!(sizing.h_default > 0)) throw Error(ErrorCode::InvalidArgument, "h_target must be positive");
  for (const auto& f : sizing.features) {
    if (!(f.h > 0)) throw Error(ErrorCode::InvalidArgument, "feature size must be positive");
  }
  Triangulator tr(domain, sizing);
  return tr.run();
}

Mesh triangulate(const Domain& domain, double h_target) {
  MeshSizing s;
  s.h_default = h_target;
  return triangulate(domain, s);
}

}  // namespace glv::geometry
