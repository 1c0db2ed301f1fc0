#include "sddr/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace sddr {

double QuadratureRule::measure() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

void QuadratureRule::append(const QuadratureRule& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

namespace {

std::vector<std::pair<double, double>> golub_welsch(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<std::pair<double, double>> r(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    r[i] = {0.5 * (es.eigenvalues()(i) + 1.0), v0 * v0};  // weight 2 v0^2 on [-1,1], halved
  }
  return r;
}

int points_for(int degree) { return std::max(1, (degree + 2) / 2); }  // ceil((degree+1)/2)

}  // namespace

const std::vector<std::pair<double, double>>& gauss_legendre01(int n) {
  if (n < 1) throw QuadratureError("gauss_legendre01: need at least one point");
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<const std::vector<std::pair<double, double>>>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<const std::vector<std::pair<double, double>>>(golub_welsch(n));
  return *slot;
}

QuadratureRule segment_rule(const Vec3& a, const Vec3& b, int degree) {
  const double len = (b - a).norm();
  if (!(len > 0.0)) throw QuadratureError("degenerate segment");
  const auto& gl = gauss_legendre01(points_for(degree));
  QuadratureRule r;
  r.exactness_degree = degree;
  for (const auto& [s, w] : gl) {
    r.points.push_back(a + s * (b - a));
    r.weights.push_back(w * len);
  }
  return r;
}

QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int degree) {
  const double twice_area = (b - a).cross(c - a).norm();
  if (!(twice_area > 0.0)) throw QuadratureError("degenerate triangle");
  // (1-u) Jacobian raises the degree in u by one
  const auto& gu = gauss_legendre01(points_for(degree + 1));
  const auto& gv = gauss_legendre01(points_for(degree));
  QuadratureRule r;
  r.exactness_degree = degree;
  r.points.reserve(gu.size() * gv.size());
  r.weights.reserve(gu.size() * gv.size());
  for (const auto& [u, wu] : gu) {
    for (const auto& [v, wv] : gv) {
      r.points.push_back(a + u * (b - a) + (1.0 - u) * v * (c - a));
      r.weights.push_back(wu * wv * (1.0 - u) * twice_area);
    }
  }
  return r;
}

QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int degree) {
  const double six_vol = std::abs((b - a).cross(c - a).dot(d - a));
  if (!(six_vol > 0.0)) throw QuadratureError("degenerate tetrahedron");
  const auto& gu = gauss_legendre01(points_for(degree + 2));
  const auto& gv = gauss_legendre01(points_for(degree + 1));
  const auto& gw = gauss_legendre01(points_for(degree));
  QuadratureRule r;
  r.exactness_degree = degree;
  const std::size_t n = gu.size() * gv.size() * gw.size();
  r.points.reserve(n);
  r.weights.reserve(n);
  for (const auto& [u, wu] : gu) {
    for (const auto& [v, wv] : gv) {
      for (const auto& [w, ww] : gw) {
        r.points.push_back(a + u * (b - a) + (1.0 - u) * (v * (c - a) + (1.0 - v) * w * (d - a)));
        r.weights.push_back(wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v) * six_vol);
      }
    }
  }
  return r;
}

std::vector<std::array<Vec3, 3>> face_triangles(const Mesh& mesh, std::size_t face) {
  const Face& F = mesh.face(face);
  const std::size_t m = F.vertices.size();
  std::vector<std::array<Vec3, 3>> tris;
  tris.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    tris.push_back({F.center, mesh.vertex(F.vertices[i]).coords, mesh.vertex(F.vertices[(i + 1) % m]).coords});
  }
  return tris;
}

std::vector<std::array<Vec3, 4>> cell_tetrahedra(const Mesh& mesh, std::size_t cell) {
  const Cell& T = mesh.cell(cell);
  std::vector<std::array<Vec3, 4>> tets;
  for (std::size_t f : T.faces) {
    for (const auto& tri : face_triangles(mesh, f)) tets.push_back({T.center, tri[0], tri[1], tri[2]});
  }
  return tets;
}

QuadratureRule edge_rule(const Mesh& mesh, std::size_t edge, int degree) {
  const Edge& E = mesh.edge(edge);
  return segment_rule(mesh.vertex(E.vertices[0]).coords, mesh.vertex(E.vertices[1]).coords, degree);
}

QuadratureRule face_rule(const Mesh& mesh, std::size_t face, int degree) {
  QuadratureRule r;
  r.exactness_degree = degree;
  for (const auto& t : face_triangles(mesh, face)) r.append(triangle_rule(t[0], t[1], t[2], degree));
  return r;
}

QuadratureRule cell_rule(const Mesh& mesh, std::size_t cell, int degree) {
  QuadratureRule r;
  r.exactness_degree = degree;
  for (const auto& t : cell_tetrahedra(mesh, cell)) r.append(tetrahedron_rule(t[0], t[1], t[2], t[3], degree));
  return r;
}

}  // namespace sddr
