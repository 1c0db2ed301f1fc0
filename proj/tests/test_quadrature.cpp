#include <doctest.h>

#include "sddr/quadrature.hpp"

#include <cmath>
#include <map>

using namespace sddr;

namespace {

using Bary = std::array<int, 4>;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Exact integral of prod_j (x - c)_j^alpha_j over a simplex with nv = dim+1
// vertices: expand in barycentric monomials and use
// int lambda^beta = |S| beta! dim! / (|beta| + dim)!.
double simplex_monomial(const std::vector<Vec3>& v, double measure, const Vec3& c, const std::array<int, 3>& alpha) {
  const int nv = int(v.size());
  const int dim = nv - 1;
  std::map<Bary, double> poly{{Bary{0, 0, 0, 0}, 1.0}};
  for (int j = 0; j < 3; ++j) {
    for (int p = 0; p < alpha[j]; ++p) {
      std::map<Bary, double> next;
      for (const auto& [b, coef] : poly) {
        for (int i = 0; i < nv; ++i) {
          Bary nb = b;
          nb[i] += 1;
          next[nb] += coef * (v[i](j) - c(j));
        }
      }
      poly = std::move(next);
    }
  }
  double s = 0.0;
  for (const auto& [b, coef] : poly) {
    double num = factorial(dim);
    int tot = 0;
    for (int i = 0; i < nv; ++i) {
      num *= factorial(b[i]);
      tot += b[i];
    }
    s += coef * num / factorial(tot + dim);
  }
  return measure * s;
}

double rule_monomial(const QuadratureRule& r, const Vec3& c, const std::array<int, 3>& a) {
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) {
    const Vec3 y = r.points[q] - c;
    s += r.weights[q] * std::pow(y(0), a[0]) * std::pow(y(1), a[1]) * std::pow(y(2), a[2]);
  }
  return s;
}

void check_cell_exactness(const Mesh& m, int degree) {
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    const Cell& T = m.cell(t);
    const QuadratureRule r = cell_rule(m, t, degree);
    CHECK(r.measure() == doctest::Approx(T.volume).epsilon(1e-12));
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        for (int c = 0; a + b + c <= degree; ++c) {
          double exact = 0.0, scale = 0.0;
          for (const auto& tet : cell_tetrahedra(m, t)) {
            const std::vector<Vec3> v(tet.begin(), tet.end());
            const double vol = std::abs((v[1] - v[0]).cross(v[2] - v[0]).dot(v[3] - v[0])) / 6.0;
            exact += simplex_monomial(v, vol, T.center, {a, b, c});
            scale += vol * std::pow(T.diameter, a + b + c);
          }
          CHECK(std::abs(rule_monomial(r, T.center, {a, b, c}) - exact) <= 1e-12 * scale);
        }
      }
    }
  }
}

void check_face_exactness(const Mesh& m, int degree) {
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    const Face& F = m.face(f);
    const QuadratureRule r = face_rule(m, f, degree);
    CHECK(r.measure() == doctest::Approx(F.area).epsilon(1e-12));
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        for (int c = 0; a + b + c <= degree; ++c) {
          double exact = 0.0;
          for (const auto& tri : face_triangles(m, f)) {
            const std::vector<Vec3> v(tri.begin(), tri.end());
            exact += simplex_monomial(v, 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm(), F.center, {a, b, c});
          }
          CHECK(std::abs(rule_monomial(r, F.center, {a, b, c}) - exact) <= 1e-12 * F.area * std::pow(F.diameter, a + b + c));
        }
      }
    }
  }
}

}  // namespace

TEST_CASE("Gauss-Legendre nodes and weights") {
  for (int n = 1; n <= 12; ++n) {
    const auto& gl = gauss_legendre01(n);
    double s = 0.0;
    for (const auto& [x, w] : gl) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    // exact for degree 2n-1
    double m = 0.0;
    for (const auto& [x, w] : gl) m += w * std::pow(x, 2 * n - 1);
    CHECK(m == doctest::Approx(1.0 / (2 * n)).epsilon(1e-13));
  }
}

TEST_CASE("edge, square and cube reference integrals") {
  const QuadratureRule e = segment_rule(Vec3(0, 0, 0), Vec3(1, 0, 0), 3);
  CHECK(e.size() == 2);
  CHECK(rule_monomial(e, Vec3::Zero(), {3, 0, 0}) == doctest::Approx(0.25).epsilon(1e-15));

  const Mesh cube = generate_cubic_mesh(1);
  for (std::size_t f = 0; f < cube.n_faces(); ++f) {
    const Face& F = cube.face(f);
    if (std::abs(F.normal.z()) > 0.5 && F.center.z() < 0.5) {
      const QuadratureRule r = face_rule(cube, f, 4);
      CHECK(std::abs(rule_monomial(r, Vec3::Zero(), {2, 2, 0}) - 1.0 / 9.0) < 1e-14);
    }
  }
  const QuadratureRule c = cell_rule(cube, 0, 6);
  CHECK(std::abs(rule_monomial(c, Vec3::Zero(), {2, 2, 2}) - 1.0 / 27.0) < 1e-13);
}

TEST_CASE("exactness on every entity against the barycentric oracle") {
  const Mesh cubes = generate_cubic_mesh(2);
  const Mesh tets = generate_tet_mesh(1);
  for (int d : {0, 2, 5, 9}) {
    check_cell_exactness(cubes, d);
    check_cell_exactness(tets, d);
    check_face_exactness(tets, d);
  }
  check_face_exactness(cubes, 9);
}

TEST_CASE("degenerate simplices are rejected") {
  CHECK_THROWS_AS(segment_rule(Vec3::Zero(), Vec3::Zero(), 2), QuadratureError);
  CHECK_THROWS_AS(triangle_rule(Vec3::Zero(), Vec3(1, 0, 0), Vec3(2, 0, 0), 2), QuadratureError);
  CHECK_THROWS_AS(tetrahedron_rule(Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0), 2), QuadratureError);
}
