#include "doctest.h"
#include "fixtures.hpp"
#include "sddr/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace sddr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("errors vanish on interpolates and on reproduced polynomials") {
  const Mesh mesh = generate_cubic_mesh(2);
  DDRCore core(mesh, 1);
  DDROperators ops(core);
  const ProblemSpec trig = manufactured_problem(1.0, 2.0, BoundaryPreset::Natural);
  const ErrorReport r = compute_errors(ops, interpolate_curl(core, trig.exact_u), interpolate_grad(core, trig.exact_p), trig);
  CHECK(r.Edu == 0.0);
  CHECK(r.Edp == 0.0);
  CHECK(r.Epu > 0.0);
  CHECK(r.h == doctest::Approx(std::sqrt(3.0) / 2));

  ProblemSpec lin;
  lin.exact_u = [](const Vec3& x) { return Vec3(x(1) - 2 * x(2), 0.5 + x(0), -x(1)); };
  lin.exact_curl_u = [](const Vec3&) { return Vec3(-1.0, -2.0, 0.0); };
  lin.exact_p = [](const Vec3& x) { return x(0) * x(1) + x(2) * x(2); };
  lin.exact_grad_p = [](const Vec3& x) { return Vec3(x(1), x(0), 2 * x(2)); };
  const ErrorReport s = compute_errors(ops, interpolate_curl(core, lin.exact_u), interpolate_grad(core, lin.exact_p), lin);
  CHECK(s.Epu < 1e-9);
  CHECK(s.Epp < 1e-9);
  CHECK_THROWS_AS(compute_errors(ops, interpolate_curl(core, lin.exact_u), interpolate_grad(core, lin.exact_p), ProblemSpec{}),
                  std::invalid_argument);
}

TEST_CASE("observed orders and CSV") {
  std::vector<ErrorReport> rep(3);
  for (int i = 0; i < 3; ++i) {
    const double h = std::pow(0.5, i);
    rep[std::size_t(i)].h = h;
    rep[std::size_t(i)].n = std::size_t(2) << i;
    rep[std::size_t(i)].Edu = 3 * h * h;
    rep[std::size_t(i)].Epu = h;
    rep[std::size_t(i)].Edp = 0.1 * std::pow(h, 1.5);
    rep[std::size_t(i)].Epp = 2 * h;
  }
  compute_eoc(rep);
  CHECK(std::isnan(rep[0].eoc_Edu));
  CHECK(rep[2].eoc_Edu == doctest::Approx(2.0));
  CHECK(rep[1].eoc_Epu == doctest::Approx(1.0));
  CHECK(rep[2].eoc_Edp == doctest::Approx(1.5));
  std::ostringstream os;
  write_error_csv(os, rep);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("MeshSize,N,DimCondensed", 0) == 0);
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 11);
  }
  CHECK(rows == 3);
}

TEST_CASE("Poincare constant: dense and iterative estimates, complement bound") {
  const Mesh mesh = generate_cubic_mesh(2);
  DDRCore core(mesh, 0);
  DDROperators ops(core);
  const double cp = estimate_poincare(ops);
  CHECK(std::isfinite(cp));
  CHECK(cp > 0.0);
  CHECK(estimate_poincare_iterative(ops) == doctest::Approx(cp).epsilon(1e-6));

  // random vectors orthogonalised against discrete gradients obey the bound
  const MatrixXd M(ops.l2_matrix(SpaceKind::Curl));
  const MatrixXd G(ops.gradient_matrix());
  const MatrixXd GMG = G.transpose() * M * G;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(GMG);
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    VectorXd v = fixtures::random_vector(M.rows(), rng);
    v -= G * cod.solve(G.transpose() * M * v);
    CHECK((G.transpose() * M * v).norm() < 1e-10 * v.norm());
    const DofVector dv(core.layout(SpaceKind::Curl), v);
    CHECK(ops.l2_norm(dv) <= cp * ops.l2_norm(ops.curl(dv)) * (1 + 1e-10));
  }

  const Mesh single = generate_cubic_mesh(1);
  DDRCore c1(single, 0);
  DDROperators o1(c1);
  const double cp1 = estimate_poincare(o1);
  CHECK(std::isfinite(cp1));
  CHECK(cp1 > 0.0);
  CHECK_THROWS_AS(estimate_poincare(ops, 10), DimensionCapError);
}

TEST_CASE("continuity constants are at most one") {
  // the discrete L2 products are the potential products plus nonnegative stabilisation
  const Mesh mesh = fixtures::random_hexahedron(4);
  for (int k : {0, 1}) {
    DDRCore core(mesh, k);
    DDROperators ops(core);
    const auto [cc, cd] = continuity_constants(ops);
    CHECK(cc <= 1.0 + 1e-10);
    CHECK(cd <= 1.0 + 1e-10);
    CHECK(cc > 0.5);
    CHECK(cd > 0.5);
  }
}

TEST_CASE("Sobolev lower bound: positive, monotone in the sample count") {
  const Mesh mesh = generate_cubic_mesh(2);
  DDRCore core(mesh, 0);
  DDROperators ops(core);
  const double b1 = estimate_sobolev_lower_bound(ops, 1, 5, 7);
  const double b4 = estimate_sobolev_lower_bound(ops, 4, 5, 7);
  CHECK(b1 > 0.0);
  CHECK(b4 >= b1);
  // ascent only improves on the raw samples
  CHECK(estimate_sobolev_lower_bound(ops, 4, 20, 7) >= estimate_sobolev_lower_bound(ops, 4, 0, 7));
}

TEST_CASE("exactness ranks against lowest-order dimension counts") {
  // for k = 0 the spaces are the Whitney ones: rank uG = V - 1, rank uC = E - V + 1
  for (const Mesh& mesh : {generate_cubic_mesh(1), generate_tet_mesh(1), generate_cubic_mesh(2)}) {
    DDRCore core(mesh, 0);
    DDROperators ops(core);
    const ExactnessReport r = check_exactness(ops);
    CHECK(r.rank_uG == mesh.n_vertices() - 1);
    CHECK(r.rank_uC == mesh.n_edges() - mesh.n_vertices() + 1);
    CHECK(r.exact());
  }
  const Mesh cube = generate_cubic_mesh(1);
  DDRCore core(cube, 1);
  DDROperators ops(core);
  CHECK(check_exactness(ops).exact());
}

TEST_CASE("consistency and commutation checks, fault injection") {
  const Mesh hex = fixtures::random_hexahedron(8);
  for (int k : {0, 1}) {
    DDRCore core(hex, k);
    DDROperators ops(core);
    CHECK(polynomial_consistency_error(ops) < 1e-10);
    CHECK(commutation_error(ops) < 1e-11);
    CHECK(complex_defect(ops, 5, 1) < 1e-12);
  }
  const Mesh cube = generate_cubic_mesh(2);
  CHECK(divergence_closure_defect(cube) < 1e-12);
  const Mesh bad = cube.with_flipped_orientation(3, 2);
  CHECK(divergence_closure_defect(bad) > 0.1);
}

TEST_CASE("norm brackets are mesh-size independent on cubic meshes") {
  NormBrackets b[2];
  int i = 0;
  for (std::size_t n : {2u, 4u}) {
    const Mesh mesh = generate_cubic_mesh(n);
    DDRCore core(mesh, 1);
    DDROperators ops(core);
    b[i++] = norm_brackets(ops, 40, 3);
  }
  for (const NormBrackets& x : b) {
    CHECK(x.equiv2_min > 0.0);
    CHECK(x.lebesgue_min > 0.0);
    CHECK(x.equiv2_max < 1e3);
  }
  // all cells are translates and scalings of one cube
  CHECK(b[1].lebesgue_max / b[0].lebesgue_max == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("property suite on a single cube") {
  const Mesh mesh = generate_cubic_mesh(1);
  const auto res = run_property_suite({{"cube1", &mesh}}, {0}, 1);
  CHECK(res.size() >= 9);
  for (const auto& r : res) {
    CAPTURE(r.name);
    CAPTURE(r.value);
    CHECK(r.passed);
  }
  const Mesh bad = generate_cubic_mesh(2).with_flipped_orientation(0, 0);
  const auto fail = run_property_suite({{"flipped", &bad}}, {}, 1);
  REQUIRE(fail.size() == 1);
  CHECK_FALSE(fail[0].passed);
}
