#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glv/gl_core.hpp"

namespace glv::diagnostics {

using core::BoundaryData;
using core::Field;

/// Raw winding (1/2pi) sum of wrapped angle increments of g/|g| along a loop.
double winding_value(const BoundaryData& g, std::size_t loop);

/// Integer degree of g on one boundary loop. Throws VanishingData when
/// min|g| < 0.1 on the loop, NonIntegerWinding when the raw value is more
/// than 0.1 away from an integer.
int compute_degree(const BoundaryData& g, std::size_t loop);

/// Sum of compute_degree over all loops.
int total_degree(const BoundaryData& g);

/// Winding of the values along an arbitrary closed node cycle. Throws as
/// compute_degree does.
int cycle_winding(const std::vector<Vec2>& values, const std::vector<int>& cycle);

struct ZeroCluster {
  Vec2 position = Vec2::Zero();  ///< node of minimum |u|
  int node = -1;
  double min_modulus = 0.0;
  std::vector<int> nodes;
  std::optional<int> winding;  ///< empty when the surrounding ring is unusable
  bool touches_boundary = false;
};

/// Clusters nodes with |u| < threshold by mesh adjacency. The winding of each
/// cluster is taken on the outer rim of the triangles touching it.
std::vector<ZeroCluster> find_zeros(const Field& u, double threshold = 0.5);

/// max over nodes of ||u| - 1|.
double sup_deviation(const Field& u);
double min_modulus(const Field& u);
double max_modulus(const Field& u);

struct Polar {
  std::vector<int> nodes;  ///< the subregion, sorted
  std::vector<double> rho;
  std::vector<double> phi;
};

/// u = rho e^{i phi} on a node subregion by spanning-tree phase unwrapping,
/// anchored at the lowest node index with phi = atan2(u). Throws
/// VanishingModulus, NonSimplyConnected or InconsistentPhase.
Polar polar_decompose(const Field& u, std::vector<int> subregion);

/// Integral over the boundary of |d_nu u|^2, with d_nu u from a one-sided
/// difference at an inward offset of half the local mesh size.
double normal_derivative_energy(const Field& u, double eps);

struct PohozaevReport {
  Vec2 x0 = Vec2::Zero();
  double r = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// Optional right-hand side s for -Lap u = u(1-|u|^2)/eps^2 + s; its
/// contribution int s.((x-x0).grad u) is added to the volume side.
using Source = std::function<Vec2(const Vec2&)>;

/// Both sides of the ball-centred Pohozaev balance on B(x0, r) intersected
/// with the domain: volume term (1/2eps^2) int (1-|u|^2)^2 against the flux
/// 1/2 X.nu |grad u|^2 - (d_nu u).(X.grad u) + (1/4eps^2) X.nu (1-|u|^2)^2
/// over the boundary of the clipped region, X = x - x0.
PohozaevReport pohozaev_residual(const Field& u, double eps, const Vec2& x0, double r, const Source& source = {});

/// (1/eps^2) int over B(x0, r) intersected with the domain of (1-|u|^2)^2.
double localized_potential(const Field& u, double eps, const Vec2& x0, double r);

/// Area of B(x0, r) intersected with the mesh.
double clipped_area(const core::Mesh& mesh, const Vec2& x0, double r);

std::string pohozaev_header();
std::string pohozaev_row(const PohozaevReport& p);

/// M, N, sup_dev, delta, degree (empty when the data vanishes or is
/// under-resolved), kappa = M/|log eps| and the interior zero locations.
core::EnergyReport energy_report(const Field& u, const BoundaryData& g, double eps);

}  // namespace glv::diagnostics
