// Meshes and polynomial helpers shared by the operator tests.
#pragma once

#include "sddr/ddr_spaces.hpp"
#include "sddr/mesh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace fixtures {

using sddr::Mesh;
using sddr::Vec3;

inline Mesh affine_image(const Mesh& m, const Eigen::Matrix3d& A, const Vec3& b) {
  auto d = m.description();
  for (Vec3& v : d.vertices) v = A * v + b;
  return Mesh(d);
}

inline Eigen::Matrix3d random_affine(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) += u(rng);
  return A;
}

/// Frustum of a square pyramid (planar faces, not an affine cube) under a
/// random affine map.
inline Mesh random_hexahedron(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.55, 0.85);
  const double s = u(rng);
  sddr::PolyhedralDescription d;
  const double lo = 0.5 - 0.5 * s, hi = 0.5 + 0.5 * s;
  d.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {lo, lo, 1}, {hi, lo, 1}, {hi, hi, 1}, {lo, hi, 1}};
  d.faces = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
  d.cells = {{0, 1, 2, 3, 4, 5}};
  return affine_image(Mesh(d), random_affine(rng), Vec3(0.1, -0.3, 0.2));
}

inline Mesh random_tetrahedron(unsigned seed) {
  std::mt19937 rng(seed);
  sddr::PolyhedralDescription d;
  d.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  d.faces = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  d.cells = {{0, 1, 2, 3}};
  return affine_image(Mesh(d), random_affine(rng), Vec3(-0.2, 0.4, 0.1));
}

/// Single prism over a convex pentagon.
inline Mesh pentagonal_prism() {
  sddr::PolyhedralDescription d;
  const double r[5] = {1.0, 0.9, 1.1, 0.95, 1.05};
  for (int layer = 0; layer < 2; ++layer) {
    for (int i = 0; i < 5; ++i) {
      const double a = 2.0 * M_PI * i / 5.0 + 0.1;
      d.vertices.push_back(Vec3(r[i] * std::cos(a), r[i] * std::sin(a), 0.8 * layer));
    }
  }
  d.faces = {{4, 3, 2, 1, 0}, {5, 6, 7, 8, 9}};
  for (std::size_t i = 0; i < 5; ++i) {
    const std::size_t j = (i + 1) % 5;
    d.faces.push_back({i, j, j + 5, i + 5});
  }
  d.cells = {{0, 1, 2, 3, 4, 5, 6}};
  return Mesh(d);
}

/// Exponent triples of total degree <= d.
inline std::vector<std::array<int, 3>> exponents(int d) {
  std::vector<std::array<int, 3>> out;
  for (int t = 0; t <= d; ++t)
    for (int a = t; a >= 0; --a)
      for (int b = t - a; b >= 0; --b) out.push_back({a, b, t - a - b});
  return out;
}

/// (x - c)^alpha with its gradient.
struct Monomial {
  std::array<int, 3> a;
  Vec3 c;
  double operator()(const Vec3& x) const {
    return std::pow(x(0) - c(0), a[0]) * std::pow(x(1) - c(1), a[1]) * std::pow(x(2) - c(2), a[2]);
  }
  Vec3 grad(const Vec3& x) const {
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
      if (a[std::size_t(i)] == 0) {
        g(i) = 0.0;
        continue;
      }
      double v = a[std::size_t(i)];
      for (int j = 0; j < 3; ++j) {
        const int p = a[std::size_t(j)] - (j == i ? 1 : 0);
        v *= std::pow(x(j) - c(j), p);
      }
      g(i) = v;
    }
    return g;
  }
};

/// Monomial times a unit vector, with curl and divergence.
struct VectorMonomial {
  Monomial m;
  int dir;
  Vec3 operator()(const Vec3& x) const { return m(x) * Vec3::Unit(dir); }
  Vec3 curl(const Vec3& x) const { return m.grad(x).cross(Vec3::Unit(dir)); }
  double div(const Vec3& x) const { return m.grad(x)(dir); }
};

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace fixtures
