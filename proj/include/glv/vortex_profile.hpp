#pragma once

#include <iosfwd>
#include <vector>

#include "glv/gl_core.hpp"

namespace glv::profile {

/// Degree-one radial profile f on a uniform grid over [0, r_max].
struct ProfileTable {
  std::vector<double> r;
  std::vector<double> f;
  std::vector<double> f_prime;
  double shoot_slope = 0.0;  ///< f'(0+)

  double r_max() const { return r.back(); }
  /// f(r): cubic Hermite inside the table, two-term series beyond r_max.
  double eval(double r) const;
  /// f'(r), same conventions.
  double slope(double r) const;
};

/// Two-term large-r expansions 1 - 1/(2r^2) - 9/(8r^4) and 1/r^3 + 9/(2r^5).
double tail_value(double r);
double tail_slope(double r);

/// Shoots f'' + f'/r - f/r^2 + f(1 - f^2) = 0 from f ~ a r, bisecting on a in
/// [0, 2], re-shooting on the slope every few units of r to keep the growing
/// mode in check. Requires r_max >= 20 and grid_n >= 2000 (InvalidArgument);
/// ShootFailure when [0, 2] does not bracket.
ProfileTable solve_profile(double r_max, int grid_n);

/// |f'(r) - (1/r^3 + 9/(2r^5))|. Throws OutOfTable outside [0, r_max].
double profile_derivative_check(const ProfileTable& table, double r);

/// Max over interior grid points of |-f'' - f'/r + f/r^2 - f(1-f^2)|, with
/// f'' from sixth-order central differences of the tabulated f'.
double ode_residual(const ProfileTable& table);

/// u(x) = f(|x-P|/eps)(x-P)/|x-P|, with u(P) = 0.
core::Field synthesize_vortex(const Vec2& P, double eps, const ProfileTable& table, core::MeshPtr mesh);

/// `r,f,fprime`
void write_profile_csv(std::ostream& out, const ProfileTable& table);

}  // namespace glv::profile
