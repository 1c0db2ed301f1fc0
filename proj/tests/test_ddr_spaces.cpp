#include <doctest.h>

#include "fixtures.hpp"
#include "sddr/ddr_spaces.hpp"
#include "sddr/quadrature.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace sddr;

namespace {

std::size_t expected_size(SpaceKind s, int k, const Mesh& m) {
  auto p1 = [](int l) { return l < 0 ? 0 : l + 1; };
  auto p2 = [](int l) { return l < 0 ? 0 : (l + 1) * (l + 2) / 2; };
  auto p3 = [](int l) { return l < 0 ? 0 : (l + 1) * (l + 2) * (l + 3) / 6; };
  // image and Koszul dimensions from the exact sequences
  auto RF = [&](int l) { return l < 0 ? 0 : p2(l + 1) - 1; };
  auto RcF = [&](int l) { return p2(l - 1); };
  auto GT = [&](int l) { return l < 0 ? 0 : p3(l + 1) - 1; };
  auto GcT = [&](int l) { return 3 * p3(l) - GT(l); };
  auto RT = [&](int l) { return l < 0 ? 0 : 3 * p3(l + 1) - GT(l + 1); };
  auto RcT = [&](int l) { return p3(l - 1); };
  const std::size_t V = m.n_vertices(), E = m.n_edges(), F = m.n_faces(), T = m.n_cells();
  switch (s) {
    case SpaceKind::Grad: return V + E * p1(k - 1) + F * p2(k - 1) + T * p3(k - 1);
    case SpaceKind::Curl: return E * p1(k) + F * (RF(k - 1) + RcF(k)) + T * (RT(k - 1) + RcT(k));
    case SpaceKind::Div: return F * p2(k) + T * (GT(k - 1) + GcT(k));
  }
  return 0;
}

}  // namespace

TEST_CASE("DoF counts follow the closed-form dimensions") {
  for (int k = 0; k <= 2; ++k) {
    for (const Mesh& m : {generate_cubic_mesh(2), generate_tet_mesh(2)}) {
      for (SpaceKind s : {SpaceKind::Grad, SpaceKind::Curl, SpaceKind::Div}) {
        const DofLayout l(s, k, m);
        CAPTURE(k);
        CAPTURE(space_name(s));
        CHECK(l.size() == expected_size(s, k, m));
      }
    }
  }
  // k = 0 is the lowest-order complex: vertices, edges, faces, cells
  const Mesh c = generate_cubic_mesh(2);
  CHECK(DofLayout(SpaceKind::Grad, 0, c).size() == 27);
  CHECK(DofLayout(SpaceKind::Curl, 0, c).size() == 54);
  CHECK(DofLayout(SpaceKind::Div, 0, c).size() == 36);
  // k = 1 cube: per-entity blocks
  const DofLayout l1(SpaceKind::Curl, 1, c);
  CHECK(l1.edge_size == 2);
  CHECK(l1.face_a == 2);
  CHECK(l1.face_b == 1);
  CHECK(l1.cell_a == 3);
  CHECK(l1.cell_b == 1);
  const DofLayout d1(SpaceKind::Div, 1, c);
  CHECK(d1.face_size == 3);
  CHECK(d1.cell_a == 3);
  CHECK(d1.cell_b == 3);
}

TEST_CASE("serendipity config accepts only the DDR mode") {
  const Mesh m = generate_cubic_mesh(1);
  SerendipityConfig c = SerendipityConfig::ddr_mode(m);
  CHECK_NOTHROW(c.validate(m));
  CHECK(c.ell_face(2, 0) == 1);
  c.eta_face[0] = 3;
  CHECK_THROWS_AS(DDRCore(m, 1, c), std::invalid_argument);
  c.eta_face[0] = 1;
  CHECK_THROWS_AS(c.validate(m), std::invalid_argument);
}

TEST_CASE("interpolation of constants and linears") {
  const Mesh m = generate_cubic_mesh(1);
  {
    DDRCore core(m, 0);
    const DofVector one = interpolate_grad(core, [](const Vec3&) { return 1.0; });
    CHECK(one.values.size() == 8);
    CHECK((one.values.array() - 1.0).abs().maxCoeff() < 1e-15);
    const DofVector lin = interpolate_grad(core, [](const Vec3& x) { return 2 * x(0) - x(2); });
    for (std::size_t v = 0; v < m.n_vertices(); ++v) {
      const Vec3& x = m.vertex(v).coords;
      CHECK(lin.values(Eigen::Index(v)) == doctest::Approx(2 * x(0) - x(2)));
    }
    // constant vector: edge DoFs are v . t_E times sqrt(h_E) (orthonormal P^0(E))
    const Vec3 c(0.5, -1.0, 2.0);
    const DofVector vc = interpolate_curl(core, [&](const Vec3&) { return c; });
    for (std::size_t e = 0; e < m.n_edges(); ++e) {
      CHECK(vc.values(Eigen::Index(e)) == doctest::Approx(c.dot(m.edge(e).tangent) * std::sqrt(m.edge(e).length)));
    }
    // identity field on the unit cube: face flux (x - x0).n averaged = face-normal coordinate
    const DofVector w = interpolate_div(core, [](const Vec3& x) { return x; });
    for (std::size_t f = 0; f < m.n_faces(); ++f) {
      const Face& F = m.face(f);
      CHECK(w.values(Eigen::Index(f)) == doctest::Approx(F.center.dot(F.normal) * std::sqrt(F.area)));
    }
  }
  {
    // v = (y, 0, 0), k = 0, one cube: cell block empty, edges carry mean tangential components
    DDRCore core(m, 0);
    const DofVector v = interpolate_curl(core, [](const Vec3& x) { return Vec3(x(1), 0, 0); });
    for (std::size_t e = 0; e < m.n_edges(); ++e) {
      const Edge& E = m.edge(e);
      CHECK(v.values(Eigen::Index(e)) == doctest::Approx(E.midpoint(1) * E.tangent(0) * std::sqrt(E.length)));
    }
  }
}

TEST_CASE("edge moments of trigonometric fields match closed-form integrals") {
  const Mesh m = generate_cubic_mesh(1);
  DDRCore core(m, 1);
  const DofLayout& l = core.layout(SpaceKind::Grad);
  // mean of cos(2 pi x) + x: 1/2 along x-edges, point value elsewhere; P^0(E) basis is 1/sqrt(h_E) = 1
  const int degree = 24;
  const DofVector p = interpolate_grad(core, [](const Vec3& x) { return std::cos(2 * M_PI * x(0)) + x(0); }, degree);
  for (std::size_t e = 0; e < m.n_edges(); ++e) {
    const Edge& E = m.edge(e);
    const double mean = std::abs(E.tangent(0)) > 0.5 ? 0.5 : std::cos(2 * M_PI * E.midpoint(0)) + E.midpoint(0);
    CHECK(p.values(Eigen::Index(l.edge_offset(e))) == doctest::Approx(mean).epsilon(1e-10));
  }
  // default degree 2k+4 is within quadrature tolerance only
  const DofVector d = interpolate_grad(core, [](const Vec3& x) { return std::cos(2 * M_PI * x(0)) + x(0); });
  CHECK((d.values - p.values).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("interpolators are linear") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  const Mesh m = generate_tet_mesh(1);
  DDRCore core(m, 2);
  const double a = u(rng), b = u(rng);
  auto f = [](const Vec3& x) { return Vec3(std::sin(x(0) + x(1)), x(2) * x(2), std::exp(x(0))); };
  auto g = [](const Vec3& x) { return Vec3(x(1), std::cos(x(2)), x(0) * x(1) * x(2)); };
  auto h = [&](const Vec3& x) { return Vec3(a * f(x) + b * g(x)); };
  for (auto I : {interpolate_curl, interpolate_div}) {
    const auto lhs = I(core, h, -1).values;
    const auto rhs = (a * I(core, f, -1).values + b * I(core, g, -1).values).eval();
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }
  const auto lq = interpolate_grad(core, [&](const Vec3& x) { return a * f(x)(0) + b * g(x)(2); }).values;
  const auto rq = (a * interpolate_grad(core, [&](const Vec3& x) { return f(x)(0); }).values +
                   b * interpolate_grad(core, [&](const Vec3& x) { return g(x)(2); }).values)
                      .eval();
  CHECK((lq - rq).norm() <= 1e-12 * rq.norm());
}

TEST_CASE("restriction and scatter") {
  std::mt19937 rng(1);
  const Mesh m = generate_cubic_mesh(2);
  DDRCore core(m, 1);
  for (SpaceKind s : {SpaceKind::Grad, SpaceKind::Curl, SpaceKind::Div}) {
    const DofLayout& l = core.layout(s);
    const DofVector v(l, fixtures::random_vector(Eigen::Index(l.size()), rng));
    // gather then scatter into a zero vector, counting multiplicities
    DofVector acc(l), count(l);
    for (std::size_t t = 0; t < m.n_cells(); ++t) {
      scatter_add(core, acc, EntityKind::Cell, t, restrict_to(core, v, EntityKind::Cell, t));
      scatter_add(core, count, EntityKind::Cell, t, Eigen::VectorXd::Ones(Eigen::Index(core.local_dofs(s, EntityKind::Cell, t).size())));
    }
    CHECK((acc.values.cwiseQuotient(count.values) - v.values).cwiseAbs().maxCoeff() < 1e-15);
  }
  // cells sharing a face see the same face block
  const std::size_t f = [&] {
    for (std::size_t i = 0; i < m.n_faces(); ++i)
      if (m.face(i).cells.size() == 2) return i;
    return std::size_t(0);
  }();
  const auto a = core.local_dofs(SpaceKind::Div, EntityKind::Cell, m.face(f).cells[0]);
  const auto b = core.local_dofs(SpaceKind::Div, EntityKind::Cell, m.face(f).cells[1]);
  const auto fd = core.local_dofs(SpaceKind::Div, EntityKind::Face, f);
  CHECK_NOTHROW(DDRCore::extension(fd, a));
  CHECK_NOTHROW(DDRCore::extension(fd, b));
  // single cell: restriction is the identity
  const Mesh one = generate_cubic_mesh(1);
  DDRCore c1(one, 2);
  const DofVector w(c1.layout(SpaceKind::Curl), fixtures::random_vector(Eigen::Index(c1.layout(SpaceKind::Curl).size()), rng));
  CHECK(restrict_to(c1, w, EntityKind::Cell, 0) == w.values);
}

TEST_CASE("boundary masks") {
  const Mesh m = generate_cubic_mesh(1);
  DDRCore core(m, 0);
  auto essential = [](const Face&) { return BoundaryType::Essential; };
  auto natural = [](const Face&) { return BoundaryType::Natural; };
  auto count = [](const std::vector<bool>& v) { return std::count(v.begin(), v.end(), true); };
  CHECK(count(boundary_subspace_mask(core, SpaceKind::Grad, essential)) == 8);
  CHECK(count(boundary_subspace_mask(core, SpaceKind::Curl, essential)) == 12);
  CHECK(count(boundary_subspace_mask(core, SpaceKind::Div, essential)) == 0);
  CHECK(count(boundary_subspace_mask(core, SpaceKind::Grad, natural)) == 0);
  CHECK_THROWS_AS(boundary_subspace_mask(core, SpaceKind::Grad, [](const Face&) { return BoundaryType::Unclassified; }), BoundaryError);

  // essential on the x = 0 side of an n = 4 mesh, k = 0: a 5 x 5 vertex grid and 2 * 4 * 5 edges
  const Mesh m4 = generate_cubic_mesh(4);
  DDRCore c4(m4, 0);
  auto left = [](const Face& F) { return F.center(0) < 1e-12 ? BoundaryType::Essential : BoundaryType::Natural; };
  CHECK(count(boundary_subspace_mask(c4, SpaceKind::Grad, left)) == 25);
  CHECK(count(boundary_subspace_mask(c4, SpaceKind::Curl, left)) == 40);
}

TEST_CASE("DoF vector serialisation round trip") {
  std::mt19937 rng(2);
  const Mesh m = generate_cubic_mesh(2);
  DDRCore core(m, 1);
  const DofVector v(core.layout(SpaceKind::Curl), fixtures::random_vector(Eigen::Index(core.layout(SpaceKind::Curl).size()), rng));
  const auto path = std::filesystem::temp_directory_path() / "sddr_dof_roundtrip.bin";
  save_dof_vector(v, path);
  const DofVector w = load_dof_vector(path);
  CHECK(w.layout == v.layout);
  CHECK(w.values == v.values);
  CHECK(std::filesystem::file_size(path) == 8 * v.layout.size());

  // tamper with the sidecar hash
  std::ifstream in(path.string() + ".json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto pos = text.find("\"k\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 6, "\"k\": 2");
  std::ofstream(path.string() + ".json") << text;
  CHECK_THROWS(load_dof_vector(path));
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}
