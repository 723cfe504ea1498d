#include "glv/vortex_profile.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "glv/errors.hpp"
#include "glv/io.hpp"

namespace glv::profile {

double tail_value(double r) {
  const double r2 = r * r;
  return 1.0 - 1.0 / (2.0 * r2) - 9.0 / (8.0 * r2 * r2);
}

double tail_slope(double r) {
  const double r2 = r * r;
  return 1.0 / (r2 * r) + 9.0 / (2.0 * r2 * r2 * r);
}

namespace {

struct State {
  double f;
  double fp;
};

inline double second_derivative(double r, double f, double fp) {
  return -fp / r + f / (r * r) - f * (1.0 - f * f);
}

inline State rk4(double r, const State& y, double h) {
  auto F = [](double x, const State& s) { return State{s.fp, second_derivative(x, s.f, s.fp)}; };
  const State k1 = F(r, y);
  const State k2 = F(r + 0.5 * h, {y.f + 0.5 * h * k1.f, y.fp + 0.5 * h * k1.fp});
  const State k3 = F(r + 0.5 * h, {y.f + 0.5 * h * k2.f, y.fp + 0.5 * h * k2.fp});
  const State k4 = F(r + h, {y.f + h * k3.f, y.fp + h * k3.fp});
  return {y.f + h / 6.0 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f), y.fp + h / 6.0 * (k1.fp + 2 * k2.fp + 2 * k3.fp + k4.fp)};
}

inline double max_step(double r) { return std::min(1e-3, 0.05 * r); }

constexpr double kStart = 1e-4;
constexpr double kSegment = 8.0;
constexpr double kProbe = 12.0;

enum class Outcome { Overshoot, Collapse };

inline bool overshoots(const State& y) { return y.f > 1.0 + 1e-9; }
inline bool collapses(const State& y) { return y.fp < 0.0; }

// Bisects a parameter whose low end collapses and high end overshoots.
template <class Classify>
double bisect(double lo, double hi, Classify&& classify) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    (classify(mid) == Outcome::Collapse ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Fixed stepping on the uniform grid r_i = i dr, shared by probing and
// recording so both follow the same discrete trajectory.
class Marcher {
 public:
  explicit Marcher(double dr) : dr_(dr) {}

  double at(int i) const { return i * dr_; }

  // Integrates over [r_i, r_{i+1}]; the first interval starts at kStart.
  // Returns false as soon as stop(y) holds after a substep.
  template <class Stop>
  bool interval(int i, State& y, Stop&& stop) const {
    if (i == 0) {
      double r = kStart;
      while (r < dr_) {
        const double h = std::min(max_step(r), dr_ - r);
        y = rk4(r, y, h);
        r += h;
        if (stop(y)) return false;
      }
      return true;
    }
    const double r0 = at(i);
    const int n = std::max(1, static_cast<int>(std::ceil(dr_ / max_step(r0) - 1e-9)));
    const double h = dr_ / n;
    for (int k = 0; k < n; ++k) {
      y = rk4(r0 + k * h, y, h);
      if (stop(y)) return false;
    }
    return true;
  }

  // Integrates from grid point i0 to i1 watching for overshoot or collapse;
  // without an event the end state is compared with the tail expansion.
  Outcome probe(int i0, State y, int i1) const {
    Outcome out = Outcome::Collapse;
    auto event = [&](const State& s) {
      if (overshoots(s)) return out = Outcome::Overshoot, true;
      if (collapses(s)) return out = Outcome::Collapse, true;
      return false;
    };
    for (int i = i0; i < i1; ++i) {
      if (!interval(i, y, event)) return out;
    }
    return y.f > tail_value(at(i1)) ? Outcome::Overshoot : Outcome::Collapse;
  }

 private:
  double dr_;
};

double hermite(double t, double h, double y0, double d0, double y1, double d1) {
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
}

}  // namespace

ProfileTable solve_profile(double r_max, int grid_n) {
  if (!(r_max >= 20.0)) throw Error(ErrorCode::InvalidArgument, "r_max must be at least 20");
  if (grid_n < 2000) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2000");

  const double dr = r_max / grid_n;
  ProfileTable t;
  t.r.resize(grid_n + 1);
  t.f.assign(grid_n + 1, 0.0);
  t.f_prime.assign(grid_n + 1, 0.0);
  for (int i = 0; i <= grid_n; ++i) t.r[i] = i == grid_n ? r_max : i * dr;

  const Marcher m(dr);
  const int per_segment = std::max(1, static_cast<int>(std::lround(kSegment / dr)));
  const int probe_points = static_cast<int>(std::ceil(kProbe / dr));
  auto start_state = [](double a) { return State{a * kStart, a}; };

  const int first_end = std::min(grid_n, per_segment);
  auto classify_a = [&](double a) { return m.probe(0, start_state(a), first_end + probe_points); };
  if (classify_a(0.0) != Outcome::Collapse || classify_a(2.0) != Outcome::Overshoot) {
    throw Error(ErrorCode::ShootFailure, "initial slope is not bracketed by [0, 2]");
  }
  const double a = bisect(0.0, 2.0, classify_a);
  t.shoot_slope = a;
  t.f[0] = 0.0;
  t.f_prime[0] = a;

  auto never = [](const State&) { return false; };
  State y = start_state(a);
  for (int i = 0; i < grid_n; ++i) {
    if (i > 0 && i % per_segment == 0) {
      // Re-shoot on the slope at the segment start, keeping f fixed.
      const int seg_end = std::min(grid_n, i + per_segment);
      const double f0 = y.f;
      auto classify_s = [&](double s) { return m.probe(i, {f0, s}, seg_end + probe_points); };
      double width = std::max(1e-6 * std::abs(y.fp), 1e-14);
      double lo = y.fp - width, hi = y.fp + width;
      int widen = 0;
      while ((classify_s(lo) != Outcome::Collapse || classify_s(hi) != Outcome::Overshoot) && widen < 30) {
        width *= 4.0;
        lo = y.fp - width;
        hi = y.fp + width;
        ++widen;
      }
      if (widen == 30) throw Error(ErrorCode::ShootFailure, "slope re-shooting failed at r = " + io::fmt(t.r[i]));
      y.fp = bisect(lo, hi, classify_s);
      t.f_prime[i] = y.fp;
    }
    m.interval(i, y, never);
    t.f[i + 1] = y.f;
    t.f_prime[i + 1] = y.fp;
  }
  return t;
}

double ProfileTable::eval(double x) const {
  if (x < 0) throw Error(ErrorCode::OutOfTable, "negative radius");
  if (x >= r_max()) return x == r_max() ? f.back() : tail_value(x);
  const double dr = r[1] - r[0];
  const std::size_t i = std::min(r.size() - 2, static_cast<std::size_t>(x / dr));
  const double h = r[i + 1] - r[i];
  return hermite((x - r[i]) / h, h, f[i], f_prime[i], f[i + 1], f_prime[i + 1]);
}

double ProfileTable::slope(double x) const {
  if (x < 0) throw Error(ErrorCode::OutOfTable, "negative radius");
  if (x >= r_max()) return x == r_max() ? f_prime.back() : tail_slope(x);
  const double dr = r[1] - r[0];
  const std::size_t i = std::min(r.size() - 2, static_cast<std::size_t>(x / dr));
  const double h = r[i + 1] - r[i];
  auto fpp = [&](std::size_t k) { return r[k] == 0.0 ? 0.0 : second_derivative(r[k], f[k], f_prime[k]); };
  return hermite((x - r[i]) / h, h, f_prime[i], fpp(i), f_prime[i + 1], fpp(i + 1));
}

double profile_derivative_check(const ProfileTable& table, double r) {
  if (!(r >= 0.0 && r <= table.r_max())) {
    throw Error(ErrorCode::OutOfTable, "r = " + io::fmt(r) + " outside [0, " + io::fmt(table.r_max()) + "]");
  }
  return std::abs(table.slope(r) - tail_slope(r));
}

double ode_residual(const ProfileTable& t) {
  const std::size_t n = t.r.size();
  double worst = 0.0;
  for (std::size_t i = 3; i + 3 < n; ++i) {
    const double h = t.r[i + 1] - t.r[i];
    const auto& d = t.f_prime;
    const double fpp = (-d[i - 3] + 9 * d[i - 2] - 45 * d[i - 1] + 45 * d[i + 1] - 9 * d[i + 2] + d[i + 3]) / (60 * h);
    const double r = t.r[i], f = t.f[i];
    const double res = -fpp - d[i] / r + f / (r * r) - f * (1 - f * f);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

core::Field synthesize_vortex(const Vec2& P, double eps, const ProfileTable& table, core::MeshPtr mesh) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  std::vector<Vec2> v;
  v.reserve(mesh->node_count());
  for (const auto& x : mesh->nodes) {
    const Vec2 d = x - P;
    const double rho = d.norm();
    v.push_back(rho == 0.0 ? Vec2::Zero() : Vec2(table.eval(rho / eps) * d / rho));
  }
  return core::make_field(std::move(mesh), std::move(v));
}

void write_profile_csv(std::ostream& out, const ProfileTable& t) {
  out << "r,f,fprime\n";
  for (std::size_t i = 0; i < t.r.size(); ++i) {
    out << io::fmt(t.r[i]) << "," << io::fmt(t.f[i]) << "," << io::fmt(t.f_prime[i]) << "\n";
  }
}

}  // namespace glv::profile
