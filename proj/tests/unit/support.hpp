#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "glv/gl_core.hpp"
#include "glv/geometry.hpp"

namespace test {

using glv::Vec2;
using glv::geometry::Mesh;

// n x n cells on [x0, x0+L]^2, each split along the same diagonal.
inline Mesh structured_square(int n, double L = 1.0, double x0 = 0.0) {
  std::vector<Vec2> nodes;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) nodes.emplace_back(x0 + L * i / n, x0 + L * j / n);
  }
  std::vector<std::array<int, 3>> tris;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return glv::geometry::make_mesh(std::move(nodes), std::move(tris));
}

inline std::vector<Vec2> ngon(int n, double r = 1.0, Vec2 c = Vec2::Zero()) {
  std::vector<Vec2> p;
  for (int k = 0; k < n; ++k) {
    const double t = 2 * std::numbers::pi * k / n;
    p.push_back(c + r * Vec2(std::cos(t), std::sin(t)));
  }
  return p;
}

inline std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

inline std::vector<Vec2> random_values(std::size_t n, std::mt19937_64& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> U(-amp, amp);
  std::vector<Vec2> v(n);
  for (auto& x : v) x = Vec2(U(rng), U(rng));
  return v;
}

template <class Fn>
glv::core::Field interpolate(std::shared_ptr<const Mesh> mesh, Fn&& fn) {
  std::vector<Vec2> v;
  for (const auto& p : mesh->nodes) v.push_back(fn(p));
  return glv::core::make_field(std::move(mesh), std::move(v));
}

}  // namespace test
