#include "sddr/polyspaces.hpp"

#include "sddr/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <map>
#include <memory>
#include <mutex>

namespace sddr {

int dim_poly(int dim, int l) {
  if (l < 0) return 0;
  switch (dim) {
    case 1: return l + 1;
    case 2: return (l + 1) * (l + 2) / 2;
    case 3: return (l + 1) * (l + 2) * (l + 3) / 6;
    default: throw BasisError("dim_poly: dimension must be 1, 2 or 3");
  }
}

namespace {

struct MonomialTable {
  std::vector<std::array<int, 3>> exps;
  std::map<std::array<int, 3>, int> index;
};

const MonomialTable& table(int dim, int l) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, std::unique_ptr<const MonomialTable>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[{dim, l}];
  if (!slot) {
    auto t = std::make_unique<MonomialTable>();
    for (int deg = 0; deg <= l; ++deg) {
      if (dim == 1) {
        t->exps.push_back({deg, 0, 0});
      } else if (dim == 2) {
        for (int a = deg; a >= 0; --a) t->exps.push_back({a, deg - a, 0});
      } else {
        for (int a = deg; a >= 0; --a) {
          for (int b = deg - a; b >= 0; --b) t->exps.push_back({a, b, deg - a - b});
        }
      }
    }
    for (std::size_t i = 0; i < t->exps.size(); ++i) t->index[t->exps[i]] = int(i);
    slot = std::move(t);
  }
  return *slot;
}

}  // namespace

const std::vector<std::array<int, 3>>& monomial_exponents(int dim, int l) { return table(dim, l).exps; }

LocalFrame LocalFrame::for_edge(const Mesh& mesh, std::size_t e) {
  const Edge& E = mesh.edge(e);
  LocalFrame f;
  f.dim = 1;
  f.origin = E.midpoint;
  f.scale = E.length;
  const Vec3 n1 = E.tangent.unitOrthogonal();
  f.axes = {E.tangent, n1, E.tangent.cross(n1)};
  return f;
}

LocalFrame LocalFrame::for_face(const Mesh& mesh, std::size_t fid) {
  const Face& F = mesh.face(fid);
  LocalFrame f;
  f.dim = 2;
  f.origin = F.center;
  f.scale = F.diameter;
  f.axes = {F.frame[0], F.frame[1], F.normal};
  return f;
}

LocalFrame LocalFrame::for_cell(const Mesh& mesh, std::size_t t) {
  const Cell& T = mesh.cell(t);
  LocalFrame f;
  f.dim = 3;
  f.origin = T.center;
  f.scale = T.diameter;
  return f;
}

Vec3 LocalFrame::local(const Vec3& x) const {
  const Vec3 d = (x - origin) / scale;
  return Vec3(axes[0].dot(d), axes[1].dot(d), axes[2].dot(d));
}

PolyFamily PolyFamily::rows(Eigen::Index start, Eigen::Index count) const {
  return {ncomp, degree, coeffs.middleRows(start, count)};
}

PolyFamily PolyFamily::stack(const PolyFamily& a, const PolyFamily& b) {
  if (a.ncomp != b.ncomp || a.degree != b.degree || a.coeffs.cols() != b.coeffs.cols()) {
    throw BasisError("PolyFamily::stack: incompatible families");
  }
  PolyFamily r{a.ncomp, a.degree, Eigen::MatrixXd(a.size() + b.size(), a.coeffs.cols())};
  r.coeffs << a.coeffs, b.coeffs;
  return r;
}

const char* subspace_name(Subspace s) {
  switch (s) {
    case Subspace::G: return "G";
    case Subspace::Gc: return "Gc";
    case Subspace::R: return "R";
    case Subspace::Rc: return "Rc";
  }
  return "?";
}

int subspace_dim(int dim, Subspace s, int l) {
  if (l < 0) return 0;
  if (dim == 2) {
    switch (s) {
      case Subspace::G:
      case Subspace::R: return dim_poly(2, l + 1) - 1;
      case Subspace::Gc:
      case Subspace::Rc: return dim_poly(2, l - 1);
    }
  } else if (dim == 3) {
    const int g = dim_poly(3, l + 1) - 1;
    const int rc = dim_poly(3, l - 1);
    switch (s) {
      case Subspace::G: return g;
      case Subspace::Gc: return 3 * dim_poly(3, l) - g;
      case Subspace::R: return 3 * dim_poly(3, l) - rc;
      case Subspace::Rc: return rc;
    }
  }
  throw BasisError("subspace_dim: subspaces exist on faces and cells only");
}

EntityBasis::EntityBasis(const LocalFrame& frame, int max_degree, const QuadratureRule& rule)
    : m_frame(frame), m_max_degree(max_degree) {
  if (max_degree < 0) throw BasisError("EntityBasis: negative maximal degree");
  if (rule.exactness_degree < 2 * max_degree) throw BasisError("EntityBasis: quadrature too weak for the Gram matrix");
  const SampleMatrix V = eval_monomials(rule.points, max_degree);
  m_gram = integrate_products({V}, {V}, rule.weights);
  const int n = int(m_gram.rows());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_gram, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  const double lmax = es.eigenvalues()(n - 1);
  m_condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();

  Eigen::LLT<Eigen::MatrixXd> llt(m_gram);
  if (llt.info() == Eigen::Success && m_condition <= 1e12) {
    const Eigen::MatrixXd L = llt.matrixL();
    m_ortho = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
    return;
  }

  // Two-pass Gram-Schmidt on weighted samples; keeps the graded (triangular) structure.
  m_fallback = true;
  SampleMatrix S = V;
  for (Eigen::Index q = 0; q < S.cols(); ++q) S.col(q) *= std::sqrt(rule.weights[std::size_t(q)]);
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < i; ++j) {
        const double r = S.row(i).dot(S.row(j));
        S.row(i) -= r * S.row(j);
        T.row(i) -= r * T.row(j);
      }
    }
    const double nrm = S.row(i).norm();
    if (!(nrm > 1e-14 * std::sqrt(rule.measure()))) {
      throw BasisError("EntityBasis: monomial Gram matrix is numerically singular");
    }
    S.row(i) /= nrm;
    T.row(i) /= nrm;
  }
  m_ortho = T;
}

EntityBasis EntityBasis::for_edge(const Mesh& mesh, std::size_t e, int max_degree) {
  return EntityBasis(LocalFrame::for_edge(mesh, e), max_degree, edge_rule(mesh, e, 2 * max_degree));
}

EntityBasis EntityBasis::for_face(const Mesh& mesh, std::size_t f, int max_degree) {
  return EntityBasis(LocalFrame::for_face(mesh, f), max_degree, face_rule(mesh, f, 2 * max_degree));
}

EntityBasis EntityBasis::for_cell(const Mesh& mesh, std::size_t t, int max_degree) {
  return EntityBasis(LocalFrame::for_cell(mesh, t), max_degree, cell_rule(mesh, t, 2 * max_degree));
}

SampleMatrix EntityBasis::eval_monomials(const std::vector<Vec3>& points, int l) const {
  const int n = nmono(l);
  SampleMatrix V(n, Eigen::Index(points.size()));
  if (n == 0) return V;
  const auto& exps = monomial_exponents(dim(), l);
  std::vector<std::array<double, 3>> pw(std::size_t(l + 1));
  for (std::size_t q = 0; q < points.size(); ++q) {
    const Vec3 xi = m_frame.local(points[q]);
    for (int j = 0; j < 3; ++j) {
      double p = 1.0;
      for (int a = 0; a <= l; ++a) {
        pw[std::size_t(a)][std::size_t(j)] = p;
        p *= xi(j);
      }
    }
    for (int i = 0; i < n; ++i) {
      const auto& e = exps[std::size_t(i)];
      V(i, Eigen::Index(q)) = pw[std::size_t(e[0])][0] * pw[std::size_t(e[1])][1] * pw[std::size_t(e[2])][2];
    }
  }
  return V;
}

std::vector<SampleMatrix> EntityBasis::evaluate(const PolyFamily& fam, const std::vector<Vec3>& points) const {
  const int n = nmono(fam.degree);
  const SampleMatrix V = eval_monomials(points, fam.degree);
  std::vector<SampleMatrix> out;
  out.reserve(std::size_t(fam.ncomp));
  for (int c = 0; c < fam.ncomp; ++c) {
    if (n == 0) {
      out.emplace_back(SampleMatrix::Zero(fam.size(), Eigen::Index(points.size())));
    } else {
      out.emplace_back(fam.coeffs.middleCols(c * n, n) * V);
    }
  }
  return out;
}

std::vector<SampleMatrix> EntityBasis::evaluate3(const PolyFamily& fam, const std::vector<Vec3>& points) const {
  auto comps = evaluate(fam, points);
  if (fam.ncomp == 3) return comps;
  if (fam.ncomp != 2 || dim() != 2) throw BasisError("evaluate3: expects a face-tangent or cell vector family");
  std::vector<SampleMatrix> out(3);
  for (int j = 0; j < 3; ++j) out[std::size_t(j)] = m_frame.axes[0](j) * comps[0] + m_frame.axes[1](j) * comps[1];
  return out;
}

PolyFamily EntityBasis::embed(const PolyFamily& fam, int degree) const {
  if (degree == fam.degree) return fam;
  if (degree < fam.degree) throw BasisError("embed: cannot lower the degree");
  const int n0 = nmono(fam.degree);
  const int n1 = nmono(degree);
  PolyFamily r{fam.ncomp, degree, Eigen::MatrixXd::Zero(fam.size(), fam.ncomp * n1)};
  for (int c = 0; c < fam.ncomp; ++c) r.coeffs.middleCols(c * n1, n0) = fam.coeffs.middleCols(c * n0, n0);
  return r;
}

Eigen::MatrixXd EntityBasis::inner(const PolyFamily& a, const PolyFamily& b) const {
  if (a.ncomp != b.ncomp) throw BasisError("inner: component mismatch");
  const int d = std::max(a.degree, b.degree);
  if (d > m_max_degree) throw BasisError("inner: degree exceeds the Gram matrix");
  const PolyFamily A = embed(a, d);
  const PolyFamily B = embed(b, d);
  const int n = nmono(d);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(a.size(), b.size());
  if (n == 0) return r;
  const auto M = m_gram.topLeftCorner(n, n);
  for (int c = 0; c < a.ncomp; ++c) r.noalias() += A.coeffs.middleCols(c * n, n) * M * B.coeffs.middleCols(c * n, n).transpose();
  return r;
}

PolyFamily EntityBasis::scalar_basis(int l) const {
  if (l > m_max_degree) throw BasisError("scalar_basis: degree exceeds the maximal degree");
  const int n = nmono(l);
  return {1, l, m_ortho.topLeftCorner(n, n)};
}

PolyFamily EntityBasis::vector_basis(int l) const {
  const PolyFamily s = scalar_basis(l);
  const int n = nmono(l);
  const int d = dim();
  PolyFamily r{d, l, Eigen::MatrixXd::Zero(d * n, d * n)};
  for (int c = 0; c < d; ++c) r.coeffs.block(c * n, c * n, n, n) = s.coeffs;
  return r;
}

PolyFamily EntityBasis::zero_mean_basis(int l) const {
  const PolyFamily s = scalar_basis(l);
  if (s.size() == 0) return s;
  return s.rows(1, s.size() - 1);
}

Eigen::MatrixXd EntityBasis::derivative(int i, int degree) const {
  const int n0 = nmono(degree);
  const int n1 = nmono(degree - 1);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n0, n1);
  if (n1 == 0) return D;
  const auto& exps = monomial_exponents(dim(), degree);
  const auto& idx = table(dim(), degree - 1).index;
  for (int b = 0; b < n0; ++b) {
    auto e = exps[std::size_t(b)];
    if (e[std::size_t(i)] == 0) continue;
    const double f = e[std::size_t(i)];
    e[std::size_t(i)] -= 1;
    D(b, idx.at(e)) = f / m_frame.scale;
  }
  return D;
}

Eigen::MatrixXd EntityBasis::multiply(int i, int degree) const {
  const int n0 = nmono(degree);
  const int n1 = nmono(degree + 1);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n0, n1);
  const auto& exps = monomial_exponents(dim(), degree);
  const auto& idx = table(dim(), degree + 1).index;
  for (int b = 0; b < n0; ++b) {
    auto e = exps[std::size_t(b)];
    e[std::size_t(i)] += 1;
    X(b, idx.at(e)) = m_frame.scale;
  }
  return X;
}

namespace {

PolyFamily empty_family(int ncomp, int degree, int n) { return {ncomp, degree, Eigen::MatrixXd(0, ncomp * n)}; }

}  // namespace

PolyFamily EntityBasis::grad(const PolyFamily& s) const {
  if (s.ncomp != 1) throw BasisError("grad: scalar family expected");
  const int d = dim();
  const int n1 = nmono(s.degree - 1);
  const int deg = std::max(s.degree - 1, 0);
  PolyFamily r{d, deg, Eigen::MatrixXd::Zero(s.size(), d * nmono(deg))};
  for (int i = 0; i < d; ++i) {
    if (n1 > 0) r.coeffs.middleCols(i * nmono(deg), n1) = s.coeffs * derivative(i, s.degree);
  }
  return r;
}

PolyFamily EntityBasis::div(const PolyFamily& v) const {
  if (v.ncomp != dim()) throw BasisError("div: vector family expected");
  const int n = nmono(v.degree);
  const int deg = std::max(v.degree - 1, 0);
  PolyFamily r{1, deg, Eigen::MatrixXd::Zero(v.size(), nmono(deg))};
  const int n1 = nmono(v.degree - 1);
  if (n1 == 0) return r;
  for (int i = 0; i < dim(); ++i) r.coeffs.leftCols(n1) += v.coeffs.middleCols(i * n, n) * derivative(i, v.degree);
  return r;
}

PolyFamily EntityBasis::curl(const PolyFamily& v) const {
  if (dim() != 3 || v.ncomp != 3) throw BasisError("curl: cell vector family expected");
  const int n = nmono(v.degree);
  const int deg = std::max(v.degree - 1, 0);
  const int m = nmono(deg);
  const int n1 = nmono(v.degree - 1);
  PolyFamily r{3, deg, Eigen::MatrixXd::Zero(v.size(), 3 * m)};
  if (n1 == 0) return r;
  auto comp = [&](int c) { return v.coeffs.middleCols(c * n, n); };
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    // (curl v)_i = d_j v_k - d_k v_j
    r.coeffs.middleCols(i * m, n1) = comp(k) * derivative(j, v.degree) - comp(j) * derivative(k, v.degree);
  }
  return r;
}

PolyFamily EntityBasis::rot(const PolyFamily& s) const {
  if (dim() != 2 || s.ncomp != 1) throw BasisError("rot: face scalar family expected");
  const PolyFamily g = grad(s);
  const int m = nmono(g.degree);
  PolyFamily r = g;
  r.coeffs.middleCols(0, m) = g.coeffs.middleCols(m, m);
  r.coeffs.middleCols(m, m) = -g.coeffs.middleCols(0, m);
  return r;
}

PolyFamily EntityBasis::rot_scalar(const PolyFamily& v) const {
  if (dim() != 2 || v.ncomp != 2) throw BasisError("rot_scalar: face vector family expected");
  const int n = nmono(v.degree);
  const int deg = std::max(v.degree - 1, 0);
  PolyFamily r{1, deg, Eigen::MatrixXd::Zero(v.size(), nmono(deg))};
  const int n1 = nmono(v.degree - 1);
  if (n1 == 0) return r;
  r.coeffs.leftCols(n1) = v.coeffs.middleCols(n, n) * derivative(0, v.degree) - v.coeffs.middleCols(0, n) * derivative(1, v.degree);
  return r;
}

PolyFamily EntityBasis::x_times(const PolyFamily& s) const {
  if (s.ncomp != 1) throw BasisError("x_times: scalar family expected");
  const int d = dim();
  const int deg = s.degree + 1;
  const int m = nmono(deg);
  if (s.size() == 0 || nmono(s.degree) == 0) return empty_family(d, std::max(deg, 0), nmono(std::max(deg, 0)));
  PolyFamily r{d, deg, Eigen::MatrixXd::Zero(s.size(), d * m)};
  for (int i = 0; i < d; ++i) r.coeffs.middleCols(i * m, m) = s.coeffs * multiply(i, s.degree);
  return r;
}

PolyFamily EntityBasis::x_perp(const PolyFamily& s) const {
  if (dim() != 2) throw BasisError("x_perp: face family expected");
  PolyFamily x = x_times(s);
  if (x.size() == 0) return x;
  const int m = nmono(x.degree);
  PolyFamily r = x;
  // (a, b) x n_F = (b, -a) in the face frame
  r.coeffs.middleCols(0, m) = x.coeffs.middleCols(m, m);
  r.coeffs.middleCols(m, m) = -x.coeffs.middleCols(0, m);
  return r;
}

PolyFamily EntityBasis::x_cross(const PolyFamily& v) const {
  if (dim() != 3 || v.ncomp != 3) throw BasisError("x_cross: cell vector family expected");
  const int deg = v.degree + 1;
  const int m = nmono(deg);
  const int n = nmono(v.degree);
  if (v.size() == 0 || n == 0) return empty_family(3, std::max(deg, 0), nmono(std::max(deg, 0)));
  PolyFamily r{3, deg, Eigen::MatrixXd::Zero(v.size(), 3 * m)};
  auto comp = [&](int c) { return v.coeffs.middleCols(c * n, n); };
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    // ((x - x_T) x v)_i = y_j v_k - y_k v_j
    r.coeffs.middleCols(i * m, m) = comp(k) * multiply(j, v.degree) - comp(j) * multiply(k, v.degree);
  }
  return r;
}

PolyFamily EntityBasis::orthonormalize(const PolyFamily& family, int expected, const std::string& what) const {
  const PolyFamily full = family.ncomp == 1 ? scalar_basis(family.degree) : vector_basis(family.degree);
  if (expected == 0 && family.size() == 0) return {full.ncomp, full.degree, Eigen::MatrixXd(0, full.coeffs.cols())};
  const Eigen::MatrixXd C = inner(family, full);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += (sv(i) > 1e-10 * smax) ? 1 : 0;
  if (rank != expected) {
    throw BasisError(what + ": extracted rank " + std::to_string(rank) + " differs from the expected dimension " +
                     std::to_string(expected));
  }
  return {full.ncomp, full.degree, svd.matrixV().leftCols(rank).transpose() * full.coeffs};
}

PolyFamily EntityBasis::subspace_basis(Subspace s, int l) const {
  const int d = dim();
  if (d == 1) throw BasisError("subspace_basis: not defined on edges");
  const int expected = subspace_dim(d, s, l);
  const std::string what = std::string(subspace_name(s)) + "^" + std::to_string(l) + (d == 2 ? "(F)" : "(T)");
  const int deg = std::max(l, 0);
  if (expected == 0) return {d, deg, Eigen::MatrixXd(0, d * nmono(deg))};
  PolyFamily gen;
  switch (s) {
    case Subspace::G: gen = grad(zero_mean_basis(l + 1)); break;
    case Subspace::R: gen = d == 2 ? rot(zero_mean_basis(l + 1)) : curl(vector_basis(l + 1)); break;
    case Subspace::Gc: gen = d == 2 ? x_perp(scalar_basis(l - 1)) : x_cross(vector_basis(l - 1)); break;
    case Subspace::Rc: gen = x_times(scalar_basis(l - 1)); break;
  }
  return orthonormalize(gen, expected, what);
}

Eigen::VectorXd EntityBasis::project(const PolyFamily& target, const QuadratureRule& rule,
                                     const std::vector<Eigen::VectorXd>& samples) const {
  std::vector<SampleMatrix> phi;
  if (int(samples.size()) == target.ncomp) {
    phi = evaluate(target, rule.points);
  } else if (samples.size() == 3 && target.ncomp == 2) {
    phi = evaluate3(target, rule.points);
  } else {
    throw BasisError("project: sample components do not match the target");
  }
  Eigen::VectorXd r = Eigen::VectorXd::Zero(target.size());
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), Eigen::Index(rule.weights.size()));
  for (std::size_t c = 0; c < phi.size(); ++c) r.noalias() += phi[c] * samples[c].cwiseProduct(w);
  return r;
}

Eigen::MatrixXd integrate_products(const std::vector<SampleMatrix>& a, const std::vector<SampleMatrix>& b,
                                   const std::vector<double>& weights) {
  if (a.size() != b.size() || a.empty()) throw BasisError("integrate_products: component mismatch");
  SampleMatrix out = SampleMatrix::Zero(a[0].rows(), b[0].rows());
  if (out.size() == 0) return out;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c].cols() != Eigen::Index(weights.size()) || b[c].cols() != Eigen::Index(weights.size())) {
      throw BasisError("integrate_products: sample count mismatch");
    }
    kernels::weighted_gram({a[c].data(), std::size_t(a[c].rows()), std::size_t(a[c].cols()), std::size_t(a[c].cols())},
                           {b[c].data(), std::size_t(b[c].rows()), std::size_t(b[c].cols()), std::size_t(b[c].cols())},
                           weights.data(), {out.data(), std::size_t(out.rows()), std::size_t(out.cols()), std::size_t(out.cols())},
                           c > 0);
  }
  return out;
}

}  // namespace sddr
