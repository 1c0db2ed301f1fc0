#include "sddr/ns_solver.hpp"

#include "sddr/quadrature.hpp"

#include <Eigen/SparseLU>
#ifdef SDDR_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace sddr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using ColSparse = Eigen::SparseMatrix<double>;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

bool in_corner(const Vec3& c, int axis, double value) {
  const double tol = 1e-10;
  const int a = (axis + 1) % 3, b = (axis + 2) % 3;
  const double lo = std::min(c(a), c(b)), hi = std::max(c(a), c(b));
  return std::abs(c(axis) - value) < tol && lo > tol && hi < 0.25 - tol;
}

Index idx(std::size_t i) { return Index(i); }

}  // namespace

bool ProblemSpec::has_essential(const Mesh& mesh) const {
  if (!regions) return false;
  for (const Face& f : mesh.faces())
    if (f.boundary && regions(f) == BoundaryType::Essential) return true;
  return false;
}

void ProblemSpec::validate(const Mesh& mesh) const {
  if (!(nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (regions) {
    for (const Face& f : mesh.faces()) {
      if (!f.boundary) continue;
      const BoundaryType b = regions(f);
      if (b != BoundaryType::Natural && b != BoundaryType::Essential)
        throw BoundaryError("boundary face " + std::to_string(f.id) + " is not classified");
    }
  }
}

BoundaryPreset parse_boundary_preset(const std::string& s) {
  if (s == "natural") return BoundaryPreset::Natural;
  if (s == "essential") return BoundaryPreset::Essential;
  if (s == "pressflux") return BoundaryPreset::PressFlux;
  throw std::invalid_argument("unknown boundary condition '" + s + "' (natural, essential, pressflux)");
}

const char* boundary_preset_name(BoundaryPreset b) {
  switch (b) {
    case BoundaryPreset::Natural: return "natural";
    case BoundaryPreset::Essential: return "essential";
    case BoundaryPreset::PressFlux: return "pressflux";
  }
  return "?";
}

ProblemSpec manufactured_problem(double nu, double lambda, BoundaryPreset bc) {
  if (bc == BoundaryPreset::PressFlux) throw std::invalid_argument("manufactured solution takes natural or essential conditions");
  const double a = kTwoPi;
  ProblemSpec p;
  p.nu = nu;
  p.exact_u = [](const Vec3& x) {
    const double sx = std::sin(kTwoPi * x(0)), sy = std::sin(kTwoPi * x(1)), sz = std::sin(kTwoPi * x(2));
    const double cx = std::cos(kTwoPi * x(0)), cy = std::cos(kTwoPi * x(1)), cz = std::cos(kTwoPi * x(2));
    return Vec3(0.5 * sx * cy * cz, 0.5 * cx * sy * cz, -cx * cy * sz);
  };
  p.exact_curl_u = [a](const Vec3& x) {
    const double sx = std::sin(a * x(0)), sy = std::sin(a * x(1)), sz = std::sin(a * x(2));
    const double cx = std::cos(a * x(0)), cy = std::cos(a * x(1));
    return Vec3(1.5 * a * cx * sy * sz, -1.5 * a * sx * cy * sz, 0.0);
  };
  p.exact_p = [lambda, a](const Vec3& x) { return lambda * std::sin(a * x(0)) * std::sin(a * x(1)) * std::sin(a * x(2)); };
  p.exact_grad_p = [lambda, a](const Vec3& x) {
    const double sx = std::sin(a * x(0)), sy = std::sin(a * x(1)), sz = std::sin(a * x(2));
    const double cx = std::cos(a * x(0)), cy = std::cos(a * x(1)), cz = std::cos(a * x(2));
    return Vec3(lambda * a * cx * sy * sz, lambda * a * sx * cy * sz, lambda * a * sx * sy * cz);
  };
  // curl curl u = 3 a^2 u for this field
  p.velocity_forcing = [nu, a, u = p.exact_u, w = p.exact_curl_u](const Vec3& x) {
    const Vec3 ux = u(x);
    return Vec3(nu * 3.0 * a * a * ux + w(x).cross(ux));
  };
  p.forcing = [r = p.velocity_forcing, g = p.exact_grad_p](const Vec3& x) { return Vec3(r(x) + g(x)); };
  if (bc == BoundaryPreset::Natural) {
    p.regions = [](const Face&) { return BoundaryType::Natural; };
  } else {
    p.regions = [](const Face&) { return BoundaryType::Essential; };
    p.velocity_data = p.exact_u;
    p.pressure_data = p.exact_p;
  }
  return p;
}

ProblemSpec pressflux_problem(double nu) {
  ProblemSpec p;
  p.nu = nu;
  p.regions = [](const Face& f) { return in_corner(f.center, 0, 0.0) ? BoundaryType::Essential : BoundaryType::Natural; };
  p.flux = [](const Face& f, const Vec3&) { return in_corner(f.center, 0, 1.0) ? 1.0 : 0.0; };
  p.pressure_data = [](const Vec3& x) { return -x(2); };
  return p;
}

// ---------------------------------------------------------------------------
// linear solvers

namespace {

class SparseLUSolver final : public LinearSolver {
 public:
  const char* name() const override { return "sparselu"; }
  void factor(const ColSparse& A) override {
    m_lu.analyzePattern(A);
    m_lu.factorize(A);
    if (m_lu.info() != Eigen::Success) throw std::runtime_error("SparseLU: factorisation failed: " + m_lu.lastErrorMessage());
  }
  VectorXd solve(const VectorXd& b) const override { return m_lu.solve(b); }

 private:
  Eigen::SparseLU<ColSparse> m_lu;
};

#ifdef SDDR_HAVE_UMFPACK
class UmfpackSolver final : public LinearSolver {
 public:
  const char* name() const override { return "umfpack"; }
  void factor(const ColSparse& A) override {
    m_lu.compute(A);
    if (m_lu.info() != Eigen::Success) throw std::runtime_error("UMFPACK: factorisation failed");
  }
  VectorXd solve(const VectorXd& b) const override { return m_lu.solve(b); }

 private:
  Eigen::UmfPackLU<ColSparse> m_lu;
};
#endif

}  // namespace

std::unique_ptr<LinearSolver> make_linear_solver(const std::string& name) {
#ifdef SDDR_HAVE_UMFPACK
  if (name.empty() || name == "umfpack") return std::make_unique<UmfpackSolver>();
#else
  if (name == "umfpack") throw std::invalid_argument("built without UMFPACK");
  if (name.empty()) return std::make_unique<SparseLUSolver>();
#endif
  if (name == "sparselu") return std::make_unique<SparseLUSolver>();
  throw std::invalid_argument("unknown linear solver '" + name + "'");
}

// ---------------------------------------------------------------------------
// system

NSSystem::NSSystem(const DDROperators& ops, ProblemSpec spec, SolverOptions options)
    : m_ops(&ops), m_spec(std::move(spec)), m_options(std::move(options)) {
  const DDRCore& core = ops.core();
  const Mesh& mesh = core.mesh();
  const int k = core.degree();
  m_spec.validate(mesh);

  m_nu = core.layout(SpaceKind::Curl).size();
  m_np = core.layout(SpaceKind::Grad).size();
  m_mean = !m_spec.has_essential(mesh);
  const std::size_t n = size();

  m_fixed.assign(n, false);
  m_lift = VectorXd::Zero(idx(n));
  if (!m_mean) {
    const auto mu = boundary_subspace_mask(core, SpaceKind::Curl, m_spec.regions);
    const auto mp = boundary_subspace_mask(core, SpaceKind::Grad, m_spec.regions);
    const VectorField zero_v = [](const Vec3&) { return Vec3::Zero().eval(); };
    const ScalarField zero_s = [](const Vec3&) { return 0.0; };
    const DofVector Iu = interpolate_curl(core, m_spec.velocity_data ? m_spec.velocity_data : zero_v);
    const DofVector Ip = interpolate_grad(core, m_spec.pressure_data ? m_spec.pressure_data : zero_s);
    for (std::size_t i = 0; i < m_nu; ++i)
      if (mu[i]) m_fixed[i] = true, m_lift(idx(i)) = Iu.values(idx(i));
    for (std::size_t i = 0; i < m_np; ++i)
      if (mp[i]) m_fixed[m_nu + i] = true, m_lift(idx(m_nu + i)) = Ip.values(idx(i));
  }

  m_If = m_spec.forcing ? interpolate_curl(core, m_spec.forcing) : DofVector(core.layout(SpaceKind::Curl));
  const DofVector I1 = interpolate_grad(core, [](const Vec3&) { return 1.0; });

  m_rhs = VectorXd::Zero(idx(n));
  m_cells.resize(mesh.n_cells());
  m_tri.resize(mesh.n_cells());
  const std::size_t curl_cell = core.layout(SpaceKind::Curl).cell_size;
  const std::size_t grad_cell = core.layout(SpaceKind::Grad).cell_size;
  for (std::size_t t = 0; t < mesh.n_cells(); ++t) {
    const CellOperators& op = ops.cell(t);
    CellData& cd = m_cells[t];
    cd.u = core.local_dofs(SpaceKind::Curl, EntityKind::Cell, t);
    cd.p = core.local_dofs(SpaceKind::Grad, EntityKind::Cell, t);
    for (auto& i : cd.p) i += m_nu;
    cd.A = op.uC.transpose() * op.mass_div * op.uC;
    cd.B = op.mass_curl * op.uG;
    cd.Ch = op.potential_div * op.uC;
    cd.c = op.mass_grad * restrict_to(core, I1, EntityKind::Cell, t);
    cd.internal.assign(cd.u.size() + cd.p.size(), false);
    for (std::size_t i = cd.u.size() - curl_cell; i < cd.u.size(); ++i) cd.internal[i] = true;
    for (std::size_t i = cd.p.size() - grad_cell; i < cd.p.size(); ++i) cd.internal[cd.u.size() + i] = true;

    const VectorXd f = op.mass_curl * restrict_to(core, m_If, EntityKind::Cell, t);
    for (std::size_t i = 0; i < cd.u.size(); ++i) m_rhs(idx(cd.u[i])) += f(idx(i));

    // T(a,b,c) = int (phi_a x phi_b) . phi_c, integrand of degree 3k
    const QuadratureRule rule = cell_rule(mesh, t, 3 * k + 3);
    const auto phi = core.cell_basis(t).evaluate(core.cell_bases(t).Pk3, rule.points);
    const int m = int(phi[0].rows());
    TrilinearTensor& T = m_tri[t];
    T.n = m;
    T.data.assign(std::size_t(m) * m * m, 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q];
      for (int a = 0; a < m; ++a) {
        const Vec3 pa(phi[0](a, idx(q)), phi[1](a, idx(q)), phi[2](a, idx(q)));
        if (pa.squaredNorm() == 0.0) continue;
        for (int b = 0; b < m; ++b) {
          const Vec3 pb(phi[0](b, idx(q)), phi[1](b, idx(q)), phi[2](b, idx(q)));
          const Vec3 ab = w * pa.cross(pb);
          if (ab.squaredNorm() == 0.0) continue;
          double* row = &T.data[std::size_t((a * m + b) * m)];
          for (int c = 0; c < m; ++c) row[c] += ab(0) * phi[0](c, idx(q)) + ab(1) * phi[1](c, idx(q)) + ab(2) * phi[2](c, idx(q));
        }
      }
    }
  }

  // prescribed normal flux on natural faces: the mass equation reads
  // -(u, uG q) + int_Gamma g gamma_F q = 0
  if (m_spec.flux) {
    for (const Face& F : mesh.faces()) {
      if (!F.boundary) continue;
      if (m_spec.regions && m_spec.regions(F) != BoundaryType::Natural) continue;
      const QuadratureRule rule = face_rule(mesh, F.id, 2 * k + 4);
      const auto phi = core.face_basis(F.id).evaluate(core.face_bases(F.id).Pkp1, rule.points);
      VectorXd mom = VectorXd::Zero(phi[0].rows());
      bool any = false;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double g = m_spec.flux(F, rule.points[q]);
        if (g == 0.0) continue;
        any = true;
        mom += rule.weights[q] * g * phi[0].col(idx(q));
      }
      if (!any) continue;
      const VectorXd local = ops.face(F.id).trace.transpose() * mom;
      const auto dofs = core.local_dofs(SpaceKind::Grad, EntityKind::Face, F.id);
      for (std::size_t i = 0; i < dofs.size(); ++i) m_rhs(idx(m_nu + dofs[i])) -= local(idx(i));
    }
    if (m_mean) {
      // without a pressure condition the net flux must vanish
      const double net = -m_rhs.segment(idx(m_nu), idx(m_np)).dot(I1.values);
      if (std::abs(net) > 1e-10) throw BoundaryError("net boundary flux is nonzero but no essential pressure region exists");
    }
  }
}

DofVector NSSystem::velocity(const Eigen::VectorXd& x) const {
  return DofVector(m_ops->core().layout(SpaceKind::Curl), x.head(idx(m_nu)));
}

DofVector NSSystem::pressure(const Eigen::VectorXd& x) const {
  return DofVector(m_ops->core().layout(SpaceKind::Grad), x.segment(idx(m_nu), idx(m_np)));
}

double NSSystem::trilinear(const DofVector& a, const DofVector& b, const DofVector& v) const {
  const DDRCore& core = m_ops->core();
  double acc = 0.0;
  for (std::size_t t = 0; t < m_cells.size(); ++t) {
    const CellData& cd = m_cells[t];
    const MatrixXd& P = m_ops->cell(t).potential_curl;
    const VectorXd al = cd.Ch * restrict_to(core, a, EntityKind::Cell, t);
    const VectorXd be = P * restrict_to(core, b, EntityKind::Cell, t);
    const VectorXd ga = P * restrict_to(core, v, EntityKind::Cell, t);
    const TrilinearTensor& T = m_tri[t];
    for (int i = 0; i < T.n; ++i)
      for (int j = 0; j < T.n; ++j) {
        const double s = al(i) * be(j);
        if (s == 0.0) continue;
        for (int l = 0; l < T.n; ++l) acc += s * T(i, j, l) * ga(l);
      }
  }
  return acc;
}

void NSSystem::local_system(std::size_t t, const Eigen::VectorXd& x, bool convective, Eigen::MatrixXd* K,
                            Eigen::VectorXd* r) const {
  const CellData& cd = m_cells[t];
  const Index nc = idx(cd.u.size()), ng = idx(cd.p.size());
  const Index nl = nc + ng + (m_mean ? 1 : 0);
  VectorXd u(nc), p(ng);
  for (Index i = 0; i < nc; ++i) u(i) = x(idx(cd.u[std::size_t(i)]));
  for (Index i = 0; i < ng; ++i) p(i) = x(idx(cd.p[std::size_t(i)]));
  const double mu = m_mean ? x(idx(m_nu + m_np)) : 0.0;
  const double nu = m_spec.nu;

  VectorXd tri_r;
  MatrixXd tri_J;
  if (convective) {
    const MatrixXd& P = m_ops->cell(t).potential_curl;
    const TrilinearTensor& T = m_tri[t];
    const int m = T.n;
    const VectorXd al = cd.Ch * u, be = P * u;
    VectorXd rc = VectorXd::Zero(m);
    MatrixXd K1 = MatrixXd::Zero(m, m), K2 = MatrixXd::Zero(m, m);  // d/d(P u), d/d(C_h u)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double* row = &T.data[std::size_t((a * m + b) * m)];
        for (int c = 0; c < m; ++c) {
          const double v = row[c];
          if (v == 0.0) continue;
          rc(c) += al(a) * be(b) * v;
          K1(c, b) += al(a) * v;
          K2(c, a) += be(b) * v;
        }
      }
    if (r) tri_r = P.transpose() * rc;
    if (K) tri_J = P.transpose() * (K1 * P + K2 * cd.Ch);
  }

  if (r) {
    r->setZero(nl);
    r->head(nc) = nu * (cd.A * u) + cd.B * p;
    if (convective) r->head(nc) += tri_r;
    r->segment(nc, ng) = -cd.B.transpose() * u;
    if (m_mean) {
      r->segment(nc, ng) += mu * cd.c;
      (*r)(nl - 1) = cd.c.dot(p);
    }
  }
  if (K) {
    K->setZero(nl, nl);
    K->topLeftCorner(nc, nc) = nu * cd.A;
    if (convective) K->topLeftCorner(nc, nc) += tri_J;
    K->block(0, nc, nc, ng) = cd.B;
    K->block(nc, 0, ng, nc) = -cd.B.transpose();
    if (m_mean) {
      K->block(nc, nl - 1, ng, 1) = cd.c;
      K->block(nl - 1, nc, 1, ng) = cd.c.transpose();
    }
  }
}

Eigen::VectorXd NSSystem::residual(const Eigen::VectorXd& x, bool convective) const {
  if (x.size() != idx(size())) throw std::invalid_argument("residual: state has the wrong size");
  VectorXd R = -m_rhs;
  VectorXd r;
  for (std::size_t t = 0; t < m_cells.size(); ++t) {
    local_system(t, x, convective, nullptr, &r);
    const CellData& cd = m_cells[t];
    Index j = 0;
    for (std::size_t i : cd.u) R(idx(i)) += r(j++);
    for (std::size_t i : cd.p) R(idx(i)) += r(j++);
    if (m_mean) R(idx(m_nu + m_np)) += r(j);
  }
  return R;
}

double NSSystem::free_norm(const Eigen::VectorXd& r) const {
  double s = 0.0;
  for (Index i = 0; i < r.size(); ++i)
    if (!m_fixed[std::size_t(i)]) s += r(i) * r(i);
  return std::sqrt(s);
}

Eigen::SparseMatrix<double> NSSystem::jacobian(const Eigen::VectorXd& x, bool convective) const {
  std::vector<Eigen::Triplet<double>> trip;
  MatrixXd K;
  for (std::size_t t = 0; t < m_cells.size(); ++t) {
    local_system(t, x, convective, &K, nullptr);
    const CellData& cd = m_cells[t];
    std::vector<std::size_t> g(cd.u);
    g.insert(g.end(), cd.p.begin(), cd.p.end());
    if (m_mean) g.push_back(m_nu + m_np);
    for (Index i = 0; i < K.rows(); ++i)
      for (Index j = 0; j < K.cols(); ++j)
        if (K(i, j) != 0.0) trip.emplace_back(idx(g[std::size_t(i)]), idx(g[std::size_t(j)]), K(i, j));
  }
  ColSparse J(idx(size()), idx(size()));
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

Eigen::VectorXd NSSystem::newton_step(const Eigen::VectorXd& x, const Eigen::VectorXd& r, bool convective,
                                      LinearSolver& solver, std::size_t* solved_dim) const {
  const std::size_t n = size();
  const bool condense = m_options.condense;

  // global numbering of the unknowns kept in the solved system
  std::vector<bool> internal(n, false);
  if (condense)
    for (const CellData& cd : m_cells)
      for (std::size_t i = 0; i < cd.internal.size(); ++i)
        if (cd.internal[i]) internal[i < cd.u.size() ? cd.u[i] : cd.p[i - cd.u.size()]] = true;
  std::vector<Index> gmap(n, -1);
  Index ns = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!m_fixed[i] && !internal[i]) gmap[i] = ns++;

  struct Elim {
    std::vector<std::size_t> I, S;  // global indices
    MatrixXd Y;                     // K_II^{-1} K_IS
    VectorXd z;                     // K_II^{-1} r_I
  };
  std::vector<Elim> elim(condense ? m_cells.size() : 0);

  std::vector<Eigen::Triplet<double>> trip;
  VectorXd b = VectorXd::Zero(ns);
  for (std::size_t i = 0; i < n; ++i)
    if (gmap[i] >= 0) b(gmap[i]) = -r(idx(i));

  MatrixXd K;
  for (std::size_t t = 0; t < m_cells.size(); ++t) {
    local_system(t, x, convective, &K, nullptr);
    const CellData& cd = m_cells[t];
    std::vector<std::size_t> g(cd.u);
    g.insert(g.end(), cd.p.begin(), cd.p.end());
    if (m_mean) g.push_back(m_nu + m_np);

    std::vector<Index> li, ls;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (internal[g[i]]) li.push_back(Index(i));
      else if (gmap[g[i]] >= 0) ls.push_back(Index(i));
    }
    MatrixXd KSS = K(ls, ls);
    if (!li.empty()) {
      Elim& e = elim[t];
      for (Index i : li) e.I.push_back(g[std::size_t(i)]);
      for (Index i : ls) e.S.push_back(g[std::size_t(i)]);
      const MatrixXd KII = K(li, li);
      Eigen::FullPivLU<MatrixXd> lu(KII);
      if (!lu.isInvertible())
        throw std::runtime_error("static condensation: singular cell block in cell " + std::to_string(t));
      VectorXd rI(Index(li.size()));
      for (std::size_t i = 0; i < li.size(); ++i) rI(Index(i)) = r(idx(e.I[i]));
      e.Y = lu.solve(MatrixXd(K(li, ls)));
      e.z = lu.solve(rI);
      const MatrixXd KSI = K(ls, li);
      KSS.noalias() -= KSI * e.Y;
      const VectorXd corr = KSI * e.z;
      for (std::size_t i = 0; i < ls.size(); ++i) b(gmap[e.S[i]]) += corr(Index(i));
    }
    for (std::size_t i = 0; i < ls.size(); ++i)
      for (std::size_t j = 0; j < ls.size(); ++j) {
        const double v = KSS(Index(i), Index(j));
        if (v != 0.0) trip.emplace_back(gmap[g[std::size_t(ls[i])]], gmap[g[std::size_t(ls[j])]], v);
      }
  }
  ColSparse S(ns, ns);
  S.setFromTriplets(trip.begin(), trip.end());
  S.makeCompressed();
  solver.factor(S);
  const VectorXd ds = solver.solve(b);
  if (!ds.allFinite()) throw std::runtime_error("linear solve produced non-finite values");

  VectorXd dx = VectorXd::Zero(idx(n));
  for (std::size_t i = 0; i < n; ++i)
    if (gmap[i] >= 0) dx(idx(i)) = ds(gmap[i]);
  for (const Elim& e : elim) {
    if (e.I.empty()) continue;
    VectorXd dS(Index(e.S.size()));
    for (std::size_t i = 0; i < e.S.size(); ++i) dS(Index(i)) = dx(idx(e.S[i]));
    const VectorXd dI = -e.z - e.Y * dS;
    for (std::size_t i = 0; i < e.I.size(); ++i) dx(idx(e.I[i])) = dI(Index(i));
  }
  if (solved_dim) *solved_dim = std::size_t(ns);
  return dx;
}

NewtonResult newton_solve(const NSSystem& system) {
  const SolverOptions& opt = system.options();
  auto solver = make_linear_solver(opt.linear_solver);
  NewtonResult res;

  VectorXd x = system.lifting();
  double ref = system.free_norm(system.residual(x, false));
  if (!(ref > 0.0)) ref = 1.0;

  // Stokes start
  VectorXd R = system.residual(x, false);
  x += system.newton_step(x, R, false, *solver, &res.condensed_dim);

  if (!opt.convective) {
    const double rel = system.free_norm(system.residual(x, false)) / ref;
    res.history.push_back(rel);
    res.converged = rel <= opt.tol;
    if (!res.converged) res.message = "Stokes solve did not reach the tolerance";
  } else {
    R = system.residual(x, true);
    double rn = system.free_norm(R);
    res.history.push_back(rn / ref);
    while (true) {
      if (rn / ref <= opt.tol) {
        res.converged = true;
        break;
      }
      if (res.iterations >= opt.max_iter) {
        res.message = "Newton did not converge in " + std::to_string(opt.max_iter) + " iterations";
        break;
      }
      const VectorXd dx = system.newton_step(x, R, true, *solver);
      double alpha = 1.0;
      VectorXd xt = x + dx;
      VectorXd Rt = system.residual(xt, true);
      double rt = system.free_norm(Rt);
      for (int h = 0; h < opt.max_halvings && !(rt < rn); ++h) {
        alpha *= 0.5;
        xt = x + alpha * dx;
        Rt = system.residual(xt, true);
        rt = system.free_norm(Rt);
      }
      x = std::move(xt);
      R = std::move(Rt);
      rn = rt;
      ++res.iterations;
      res.damping.push_back(alpha);
      res.history.push_back(rn / ref);
      if (!std::isfinite(rn)) {
        res.message = "Newton diverged";
        break;
      }
    }
  }
  res.u = system.velocity(x);
  res.p = system.pressure(x);
  res.x = std::move(x);
  return res;
}

std::map<std::string, std::string> read_key_value_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    out[key] = value;
  }
  return out;
}

}  // namespace sddr
