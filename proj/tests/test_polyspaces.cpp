#include <doctest.h>

#include "sddr/polyspaces.hpp"

#include <cmath>
#include <random>

using namespace sddr;

namespace {

// Gram of a family computed directly from point samples (no monomial Gram).
Eigen::MatrixXd sampled_gram(const EntityBasis& B, const PolyFamily& f, const QuadratureRule& r) {
  const auto s = B.evaluate(f, r.points);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(f.size(), f.size());
  for (const auto& c : s) {
    for (std::size_t q = 0; q < r.size(); ++q) G += r.weights[q] * c.col(Eigen::Index(q)) * c.col(Eigen::Index(q)).transpose();
  }
  return G;
}

Eigen::Index rank_of(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > 1e-10 * s(0) ? 1 : 0;
  return r;
}

// Skewed single hexahedron: affine image of the unit cube.
Mesh affine_hex() {
  Eigen::Matrix3d A;
  A << 1.1, 0.2, -0.1, 0.05, 0.9, 0.15, -0.12, 0.1, 1.3;
  auto d = generate_cubic_mesh(1).description();
  for (Vec3& v : d.vertices) v = A * v + Vec3(0.3, -0.2, 0.5);
  return Mesh(d);
}

}  // namespace

TEST_CASE("dimensions of polynomial spaces") {
  CHECK(dim_poly(3, 2) == 10);
  CHECK(dim_poly(2, 1) == 3);
  CHECK(dim_poly(1, 4) == 5);
  CHECK(dim_poly(3, -1) == 0);
  CHECK(monomial_exponents(3, 3).size() == 20);
  // graded order
  const auto& e = monomial_exponents(3, 2);
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i][0] + e[i][1] + e[i][2] >= e[i - 1][0] + e[i - 1][1] + e[i - 1][2]);
}

TEST_CASE("orthonormal bases: Gram is the identity under independent quadrature") {
  const Mesh cube = generate_cubic_mesh(1);
  const Mesh hex = affine_hex();
  for (const Mesh* m : {&cube, &hex}) {
    const EntityBasis T = EntityBasis::for_cell(*m, 0, 4);
    const QuadratureRule r = cell_rule(*m, 0, 9);
    for (int l = 0; l <= 4; ++l) {
      const PolyFamily b = T.scalar_basis(l);
      CHECK(b.size() == dim_poly(3, l));
      CHECK((sampled_gram(T, b, r) - Eigen::MatrixXd::Identity(b.size(), b.size())).norm() < 1e-10);
    }
    CHECK(T.scalar_basis(-1).size() == 0);
    for (std::size_t f = 0; f < m->n_faces(); ++f) {
      const EntityBasis F = EntityBasis::for_face(*m, f, 3);
      const PolyFamily b = F.vector_basis(3);
      CHECK((sampled_gram(F, b, face_rule(*m, f, 7)) - Eigen::MatrixXd::Identity(b.size(), b.size())).norm() < 1e-10);
    }
    const EntityBasis E = EntityBasis::for_edge(*m, 0, 2);
    const auto b0 = E.evaluate(E.scalar_basis(0), {m->edge(0).midpoint})[0](0, 0);
    CHECK(std::abs(b0) == doctest::Approx(1.0 / std::sqrt(m->edge(0).length)));
  }
}

TEST_CASE("subspace dimensions and direct decompositions") {
  const Mesh hex = affine_hex();
  const Mesh tet = generate_tet_mesh(1);
  for (const Mesh* m : {&hex, &tet}) {
    const EntityBasis T = EntityBasis::for_cell(*m, 0, 5);
    const EntityBasis F = EntityBasis::for_face(*m, 0, 5);
    for (int l = -1; l <= 4; ++l) {
      for (Subspace s : {Subspace::G, Subspace::Gc, Subspace::R, Subspace::Rc}) {
        CHECK(T.subspace_basis(s, l).size() == subspace_dim(3, s, l));
        CHECK(F.subspace_basis(s, l).size() == subspace_dim(2, s, l));
      }
      if (l < 0) continue;
      for (const EntityBasis* B : {&T, &F}) {
        const int full = B->dim() * dim_poly(B->dim(), l);
        const auto G = PolyFamily::stack(B->subspace_basis(Subspace::G, l), B->subspace_basis(Subspace::Gc, l));
        const auto R = PolyFamily::stack(B->subspace_basis(Subspace::R, l), B->subspace_basis(Subspace::Rc, l));
        CHECK(rank_of(B->inner(G, G)) == full);
        CHECK(rank_of(B->inner(R, R)) == full);
      }
    }
  }
  CHECK(subspace_dim(3, Subspace::Rc, 1) == 1);
  CHECK(subspace_dim(3, Subspace::G, 0) == 3);
}

TEST_CASE("subspace members have the defining pointwise properties") {
  const Mesh hex = affine_hex();
  const EntityBasis T = EntityBasis::for_cell(hex, 0, 4);
  const QuadratureRule r = cell_rule(hex, 0, 4);
  const Vec3 xT = hex.cell(0).center;
  for (int l = 0; l <= 3; ++l) {
    // G = gradients: curl vanishes; R = curls: divergence vanishes
    const auto cg = T.evaluate(T.curl(T.subspace_basis(Subspace::G, l)), r.points);
    for (const auto& c : cg) CHECK(c.cwiseAbs().maxCoeff() < 1e-10);
    const auto dr = T.evaluate(T.div(T.subspace_basis(Subspace::R, l)), r.points);
    CHECK(dr[0].cwiseAbs().maxCoeff() < 1e-10);
    // Gc members are orthogonal to x - x_T pointwise, Rc members parallel to it
    const auto gc = T.evaluate(T.subspace_basis(Subspace::Gc, l), r.points);
    const auto rc = T.evaluate(T.subspace_basis(Subspace::Rc, l), r.points);
    for (std::size_t q = 0; q < r.size(); ++q) {
      const Vec3 y = r.points[q] - xT;
      for (Eigen::Index i = 0; i < gc[0].rows(); ++i) {
        const Vec3 v(gc[0](i, Eigen::Index(q)), gc[1](i, Eigen::Index(q)), gc[2](i, Eigen::Index(q)));
        CHECK(std::abs(v.dot(y)) < 1e-10);
      }
      for (Eigen::Index i = 0; i < rc[0].rows(); ++i) {
        const Vec3 v(rc[0](i, Eigen::Index(q)), rc[1](i, Eigen::Index(q)), rc[2](i, Eigen::Index(q)));
        CHECK(v.cross(y).norm() < 1e-10);
      }
    }
  }
  // rot_F of scalars is tangent to the face
  for (std::size_t f = 0; f < hex.n_faces(); ++f) {
    const EntityBasis F = EntityBasis::for_face(hex, f, 3);
    const auto rr = F.evaluate3(F.rot(F.scalar_basis(3)), face_rule(hex, f, 3).points);
    const Vec3 n = hex.face(f).normal;
    CHECK((n(0) * rr[0] + n(1) * rr[1] + n(2) * rr[2]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("derivatives agree with finite differences of point values") {
  const Mesh hex = affine_hex();
  const EntityBasis T = EntityBasis::for_cell(hex, 0, 3);
  const PolyFamily p = T.scalar_basis(3);
  const PolyFamily g = T.grad(p);
  const Vec3 x = hex.cell(0).center + Vec3(0.05, -0.03, 0.02);
  const double h = 1e-5;
  const auto gx = T.evaluate(g, {x});
  for (int j = 0; j < 3; ++j) {
    const Vec3 dx = h * Vec3::Unit(j);
    const auto vp = T.evaluate(p, {x + dx})[0];
    const auto vm = T.evaluate(p, {x - dx})[0];
    CHECK(((vp - vm) / (2 * h) - gx[std::size_t(j)]).cwiseAbs().maxCoeff() < 1e-7);
  }
  // face rot: (grad r) x n
  const EntityBasis F = EntityBasis::for_face(hex, 2, 3);
  const Face& Fc = hex.face(2);
  const PolyFamily r = F.scalar_basis(2);
  const Vec3 y = Fc.center + 0.01 * Fc.frame[0] - 0.02 * Fc.frame[1];
  const auto rot = F.evaluate3(F.rot(r), {y});
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    Vec3 gr = Vec3::Zero();
    for (int a = 0; a < 2; ++a) {
      const Vec3 d = h * Fc.frame[std::size_t(a)];
      gr += (F.evaluate(r, {y + d})[0](i, 0) - F.evaluate(r, {y - d})[0](i, 0)) / (2 * h) * Fc.frame[std::size_t(a)];
    }
    const Vec3 expect = gr.cross(Fc.normal);
    CHECK((Vec3(rot[0](i, 0), rot[1](i, 0), rot[2](i, 0)) - expect).norm() < 1e-7);
  }
}

TEST_CASE("projection: constants, idempotence, normal-equations oracle") {
  const Mesh cube = generate_cubic_mesh(1);
  const EntityBasis T = EntityBasis::for_cell(cube, 0, 3);
  const QuadratureRule r = cell_rule(cube, 0, 8);
  const Eigen::Index nq = Eigen::Index(r.size());

  const PolyFamily p0 = T.scalar_basis(0);
  const Eigen::VectorXd c1 = T.project(p0, r, {Eigen::VectorXd::Ones(nq)});
  CHECK(std::abs(T.evaluate(p0, {Vec3(0.3, 0.3, 0.3)})[0](0, 0) * c1(0) - 1.0) < 1e-14);

  // x^2 onto P^1 against normal equations in raw monomials {1, x, y, z}
  Eigen::VectorXd f(nq);
  for (Eigen::Index q = 0; q < nq; ++q) f(q) = r.points[std::size_t(q)].x() * r.points[std::size_t(q)].x();
  const PolyFamily p1 = T.scalar_basis(1);
  const Eigen::VectorXd c = T.project(p1, r, {f});
  Eigen::Matrix4d N = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  for (std::size_t q = 0; q < r.size(); ++q) {
    const Eigen::Vector4d m(1.0, r.points[q].x(), r.points[q].y(), r.points[q].z());
    N += r.weights[q] * m * m.transpose();
    rhs += r.weights[q] * f(Eigen::Index(q)) * m;
  }
  const Eigen::Vector4d a = N.ldlt().solve(rhs);
  CHECK(a(0) == doctest::Approx(-1.0 / 6.0));
  CHECK(a(1) == doctest::Approx(1.0));
  for (const Vec3& x : {Vec3(0.1, 0.2, 0.3), Vec3(0.9, 0.5, 0.7)}) {
    const double mine = (T.evaluate(p1, {x})[0].col(0).transpose() * c)(0);
    CHECK(mine == doctest::Approx(a(0) + a(1) * x.x() + a(2) * x.y() + a(3) * x.z()).epsilon(1e-12));
  }

  // idempotence and contraction with random data on a face subspace
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  const EntityBasis F = EntityBasis::for_face(cube, 0, 3);
  const QuadratureRule fr = face_rule(cube, 0, 6);
  const PolyFamily R = F.subspace_basis(Subspace::R, 2);
  Eigen::VectorXd coef(R.size());
  for (auto& v : coef) v = nd(rng);
  const auto s = F.evaluate(R, fr.points);
  const Eigen::VectorXd back = F.project(R, fr, {s[0].transpose() * coef, s[1].transpose() * coef});
  CHECK((back - coef).norm() < 1e-11 * coef.norm());
  Eigen::VectorXd g0(fr.size()), g1(fr.size());
  for (auto& v : g0) v = nd(rng);
  for (auto& v : g1) v = nd(rng);
  double l2 = 0.0;
  for (std::size_t q = 0; q < fr.size(); ++q) l2 += fr.weights[q] * (g0(Eigen::Index(q)) * g0(Eigen::Index(q)) + g1(Eigen::Index(q)) * g1(Eigen::Index(q)));
  CHECK(F.project(R, fr, {g0, g1}).squaredNorm() <= l2 + 1e-12);
}
