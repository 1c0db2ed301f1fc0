// Quadrature on edges, polygonal faces (fan from x_F) and polyhedral cells
// (cone of the face fans to x_T). Simplex rules are collapsed Gauss-Legendre.

#pragma once

#include "sddr/mesh.hpp"

#include <stdexcept>
#include <vector>

namespace sddr {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  std::size_t size() const { return weights.size(); }
  double measure() const;
  void append(const QuadratureRule& other);
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [0,1]
/// (Golub-Welsch). Cached; safe to call concurrently.
const std::vector<std::pair<double, double>>& gauss_legendre01(int n);

QuadratureRule segment_rule(const Vec3& a, const Vec3& b, int degree);
QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int degree);
QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int degree);

QuadratureRule edge_rule(const Mesh& mesh, std::size_t edge, int degree);
QuadratureRule face_rule(const Mesh& mesh, std::size_t face, int degree);
QuadratureRule cell_rule(const Mesh& mesh, std::size_t cell, int degree);

/// Simplices of the fan / cone decompositions used by face_rule and cell_rule.
std::vector<std::array<Vec3, 3>> face_triangles(const Mesh& mesh, std::size_t face);
std::vector<std::array<Vec3, 4>> cell_tetrahedra(const Mesh& mesh, std::size_t cell);

}  // namespace sddr
