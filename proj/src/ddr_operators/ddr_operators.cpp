#include "sddr/ddr_operators.hpp"

#include "sddr/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sddr {

namespace {

using Samples = std::vector<SampleMatrix>;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int bilinear_degree(int k) { return 2 * k + 4; }
int norm_degree(int k) { return 3 * k + 3; }

Eigen::Map<const VectorXd> weights(const QuadratureRule& r) {
  return {r.weights.data(), Index(r.weights.size())};
}

// sum_q w_q a(i, q) V(q, :)
MatrixXd moment(const SampleMatrix& a, const QuadratureRule& r, const MatrixXd& V) {
  return a * (weights(r).asDiagonal() * V);
}

MatrixXd gram(const MatrixXd& V, const QuadratureRule& r) { return V.transpose() * (weights(r).asDiagonal() * V); }

SampleMatrix dot(const Samples& v, const Vec3& n) { return n(0) * v[0] + n(1) * v[1] + n(2) * v[2]; }

Samples cross(const Samples& w, const Vec3& n) {
  return {w[1] * n(2) - w[2] * n(1), w[2] * n(0) - w[0] * n(2), w[0] * n(1) - w[1] * n(0)};
}

/// Columns of A (entity-local DoFs) moved to their positions among `ncols` parent DoFs.
MatrixXd extend(const MatrixXd& A, const std::vector<std::size_t>& pos, Index ncols) {
  MatrixXd out = MatrixXd::Zero(A.rows(), ncols);
  for (std::size_t j = 0; j < pos.size(); ++j) out.col(Index(pos[j])) += A.col(Index(j));
  return out;
}

MatrixXd solve(const MatrixXd& M, const MatrixXd& B, const std::string& what) {
  if (M.rows() == 0) return MatrixXd(0, B.cols());
  const auto qr = M.colPivHouseholderQr();
  if (qr.rank() < M.rows()) throw std::runtime_error(what + ": singular moment matrix");
  return qr.solve(B);
}

PolyFamily stack(const EntityBasis& B, const PolyFamily& a, const PolyFamily& b) {
  const int d = std::max(a.degree, b.degree);
  return PolyFamily::stack(B.embed(a, d), B.embed(b, d));
}

MatrixXd vstack(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd r(a.rows() + b.rows(), a.cols());
  r << a, b;
  return r;
}

double power_integral(const MatrixXd& values, const QuadratureRule& r, double s) {
  // values: npts x ncomp
  double acc = 0.0;
  for (Index q = 0; q < values.rows(); ++q) acc += r.weights[std::size_t(q)] * std::pow(values.row(q).norm(), s);
  return acc;
}

}  // namespace

// Values at quadrature points of entity traces, as matrices acting on the DoFs
// of a parent entity (`parent` lists the parent's global DoFs).
namespace {

struct Traces {
  const DDRCore& core;
  const DDROperators& ops;

  MatrixXd edge_skeleton(std::size_t e, const QuadratureRule& r, const std::vector<std::size_t>& parent) const {
    const MatrixXd v = core.edge_basis(e).evaluate(core.edge_bases(e).Pkp1, r.points)[0].transpose() *
                       ops.edge(e).reconstruction;
    return extend(v, DDRCore::extension(core.local_dofs(SpaceKind::Grad, EntityKind::Edge, e), parent), Index(parent.size()));
  }
  MatrixXd face_trace(std::size_t f, const QuadratureRule& r, const std::vector<std::size_t>& parent) const {
    const MatrixXd v = core.face_basis(f).evaluate(core.face_bases(f).Pkp1, r.points)[0].transpose() * ops.face(f).trace;
    return extend(v, DDRCore::extension(core.local_dofs(SpaceKind::Grad, EntityKind::Face, f), parent), Index(parent.size()));
  }
  MatrixXd edge_tangential(std::size_t e, const QuadratureRule& r, const std::vector<std::size_t>& parent) const {
    const MatrixXd v = core.edge_basis(e).evaluate(core.edge_bases(e).Pk, r.points)[0].transpose();
    return extend(v, DDRCore::extension(core.local_dofs(SpaceKind::Curl, EntityKind::Edge, e), parent), Index(parent.size()));
  }
  std::vector<MatrixXd> face_tangential(std::size_t f, const QuadratureRule& r, const std::vector<std::size_t>& parent) const {
    const Samples g = core.face_basis(f).evaluate3(core.face_bases(f).Pk2, r.points);
    const auto pos = DDRCore::extension(core.local_dofs(SpaceKind::Curl, EntityKind::Face, f), parent);
    std::vector<MatrixXd> out;
    for (int j = 0; j < 3; ++j) out.push_back(extend(g[std::size_t(j)].transpose() * ops.face(f).tangential_trace, pos, Index(parent.size())));
    return out;
  }
  MatrixXd face_normal(std::size_t f, const QuadratureRule& r, const std::vector<std::size_t>& parent) const {
    const MatrixXd v = core.face_basis(f).evaluate(core.face_bases(f).Pk, r.points)[0].transpose();
    return extend(v, DDRCore::extension(core.local_dofs(SpaceKind::Div, EntityKind::Face, f), parent), Index(parent.size()));
  }
};

}  // namespace

DDROperators::DDROperators(const DDRCore& core) : m_core(&core) {
  build_edges();
  build_faces();
  build_cells();
}

void DDROperators::build_edges() {
  const Mesh& m = mesh();
  const int k = degree();
  m_edge.resize(m.n_edges());
  for (std::size_t e = 0; e < m.n_edges(); ++e) {
    const Edge& E = m.edge(e);
    const EntityBasis& B = m_core->edge_basis(e);
    const EdgeBases& eb = m_core->edge_bases(e);
    const int n = k + 2;
    MatrixXd A = MatrixXd::Zero(n, n);
    const SampleMatrix v = B.evaluate(eb.Pkp1, {m.vertex(E.vertices[0]).coords, m.vertex(E.vertices[1]).coords})[0];
    A.row(0) = v.col(0).transpose();
    A.row(1) = v.col(1).transpose();
    // the P^{k-1} basis is a prefix of the P^{k+1} basis
    for (int i = 0; i < k; ++i) A(2 + i, i) = 1.0;
    EdgeOperators& op = m_edge[e];
    op.reconstruction = A.partialPivLu().inverse();
    op.derivative = B.inner(eb.Pk, B.grad(eb.Pkp1)) * op.reconstruction;
  }
}

void DDROperators::build_faces() {
  const Mesh& m = mesh();
  const int deg = bilinear_degree(degree());
  const Traces tr{*m_core, *this};
  m_face.resize(m.n_faces());
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    const Face& F = m.face(f);
    const EntityBasis& B = m_core->face_basis(f);
    const FaceBases& fb = m_core->face_bases(f);
    FaceOperators& op = m_face[f];
    const std::string where = "face " + std::to_string(f);

    // gradient and scalar trace
    {
      const DofLayout& l = m_core->layout(SpaceKind::Grad);
      const auto dofs = m_core->local_dofs(SpaceKind::Grad, EntityKind::Face, f);
      const Index nd = Index(dofs.size());
      const Index off = nd - Index(l.face_size);
      const PolyFamily test = stack(B, fb.Rk, fb.Rck);
      MatrixXd rhs = MatrixXd::Zero(test.size(), nd);
      MatrixXd rhs_trace = MatrixXd::Zero(fb.Rckp2.size(), nd);
      for (std::size_t i = 0; i < F.edges.size(); ++i) {
        const QuadratureRule r = edge_rule(m, F.edges[i], deg);
        const MatrixXd q = tr.edge_skeleton(F.edges[i], r, dofs);
        const Vec3& n = F.edge_normals[i];
        const double om = F.edge_orientations[i];
        rhs += om * moment(dot(B.evaluate3(test, r.points), n), r, q);
        rhs_trace += om * moment(dot(B.evaluate3(fb.Rckp2, r.points), n), r, q);
      }
      rhs.block(fb.Rk.size(), off, fb.Rck.size(), Index(l.face_size)) -= B.inner(B.div(fb.Rck), fb.Pkm1);
      op.gradient = solve(B.inner(test, fb.Pk2), rhs, where + " gradient");
      op.trace = solve(B.inner(B.div(fb.Rckp2), fb.Pkp1), rhs_trace - B.inner(fb.Rckp2, fb.Pk2) * op.gradient,
                       where + " trace");
      op.uG = vstack(B.inner(fb.Rkm1, fb.Pk2), B.inner(fb.Rck, fb.Pk2)) * op.gradient;
    }

    // curl and tangential trace
    {
      const DofLayout& l = m_core->layout(SpaceKind::Curl);
      const auto dofs = m_core->local_dofs(SpaceKind::Curl, EntityKind::Face, f);
      const Index nd = Index(dofs.size());
      const Index off = nd - Index(l.face_size);
      const Index na = Index(l.face_a), nb = Index(l.face_b);
      MatrixXd edge_k = MatrixXd::Zero(fb.Pk.size(), nd);
      MatrixXd edge_k1 = MatrixXd::Zero(fb.Pkp1_0.size(), nd);
      for (std::size_t i = 0; i < F.edges.size(); ++i) {
        const QuadratureRule r = edge_rule(m, F.edges[i], deg);
        const MatrixXd v = tr.edge_tangential(F.edges[i], r, dofs);
        const double om = F.edge_orientations[i];
        edge_k += om * moment(B.evaluate(fb.Pk, r.points)[0], r, v);
        edge_k1 += om * moment(B.evaluate(fb.Pkp1_0, r.points)[0], r, v);
      }
      op.curl = -edge_k;
      op.curl.middleCols(off, na) += B.inner(B.rot(fb.Pk), fb.Rkm1);

      const PolyFamily test = stack(B, B.rot(fb.Pkp1_0), fb.Rck);
      const Index n0 = fb.Pkp1_0.size();
      MatrixXd rhs = MatrixXd::Zero(test.size(), nd);
      rhs.topRows(n0) = B.inner(fb.Pkp1_0, fb.Pk) * op.curl + edge_k1;
      rhs.block(n0, off + na, nb, nb).setIdentity();
      op.tangential_trace = solve(B.inner(test, fb.Pk2), rhs, where + " tangential trace");
    }
  }
}

void DDROperators::build_cells() {
  const Mesh& m = mesh();
  const int deg = bilinear_degree(degree());
  const Traces tr{*m_core, *this};
  m_cell.resize(m.n_cells());
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    const Cell& T = m.cell(t);
    const EntityBasis& B = m_core->cell_basis(t);
    const CellBases& cb = m_core->cell_bases(t);
    CellOperators& op = m_cell[t];
    const std::string where = "cell " + std::to_string(t);

    std::vector<QuadratureRule> face_rules, edge_rules;
    for (std::size_t f : T.faces) face_rules.push_back(face_rule(m, f, deg));
    for (std::size_t e : T.edges) edge_rules.push_back(edge_rule(m, e, deg));

    const auto gd = m_core->local_dofs(SpaceKind::Grad, EntityKind::Cell, t);
    const auto cd = m_core->local_dofs(SpaceKind::Curl, EntityKind::Cell, t);
    const auto dd = m_core->local_dofs(SpaceKind::Div, EntityKind::Cell, t);

    // gradient and potential
    {
      const DofLayout& l = m_core->layout(SpaceKind::Grad);
      const Index nd = Index(gd.size());
      const Index off = nd - Index(l.cell_size);
      const PolyFamily test = stack(B, cb.Rk, cb.Rck);
      MatrixXd rhs = MatrixXd::Zero(test.size(), nd);
      MatrixXd rhs_pot = MatrixXd::Zero(cb.Rckp2.size(), nd);
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const QuadratureRule& r = face_rules[i];
        const MatrixXd g = tr.face_trace(T.faces[i], r, gd);
        const Vec3& n = m.face(T.faces[i]).normal;
        const double om = T.face_orientations[i];
        rhs += om * moment(dot(B.evaluate(test, r.points), n), r, g);
        rhs_pot += om * moment(dot(B.evaluate(cb.Rckp2, r.points), n), r, g);
      }
      rhs.block(cb.Rk.size(), off, cb.Rck.size(), Index(l.cell_size)) -= B.inner(B.div(cb.Rck), cb.Pkm1);
      op.gradient = solve(B.inner(test, cb.Pk3), rhs, where + " gradient");
      op.potential_grad = solve(B.inner(B.div(cb.Rckp2), cb.Pkp1), rhs_pot - B.inner(cb.Rckp2, cb.Pk3) * op.gradient,
                                where + " gradient potential");
    }

    // curl and potential
    {
      const DofLayout& l = m_core->layout(SpaceKind::Curl);
      const Index nd = Index(cd.size());
      const Index off = nd - Index(l.cell_size);
      const Index na = Index(l.cell_a), nb = Index(l.cell_b);
      MatrixXd face_k = MatrixXd::Zero(cb.Pk3.size(), nd);
      MatrixXd face_k1 = MatrixXd::Zero(cb.Gckp1.size(), nd);
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const QuadratureRule& r = face_rules[i];
        const auto g = tr.face_tangential(T.faces[i], r, cd);
        const Vec3& n = m.face(T.faces[i]).normal;
        const double om = T.face_orientations[i];
        const Samples w = cross(B.evaluate(cb.Pk3, r.points), n);
        const Samples z = cross(B.evaluate(cb.Gckp1, r.points), n);
        for (std::size_t j = 0; j < 3; ++j) {
          face_k += om * moment(w[j], r, g[j]);
          face_k1 += om * moment(z[j], r, g[j]);
        }
      }
      op.curl = face_k;
      op.curl.middleCols(off, na) += B.inner(B.curl(cb.Pk3), cb.Rkm1);

      const PolyFamily test = stack(B, B.curl(cb.Gckp1), cb.Rck);
      const Index n0 = cb.Gckp1.size();
      MatrixXd rhs = MatrixXd::Zero(test.size(), nd);
      rhs.topRows(n0) = B.inner(cb.Gckp1, cb.Pk3) * op.curl - face_k1;
      rhs.block(n0, off + na, nb, nb).setIdentity();
      op.potential_curl = solve(B.inner(test, cb.Pk3), rhs, where + " curl potential");
    }

    // divergence and potential
    {
      const DofLayout& l = m_core->layout(SpaceKind::Div);
      const Index nd = Index(dd.size());
      const Index off = nd - Index(l.cell_size);
      const Index na = Index(l.cell_a), nb = Index(l.cell_b);
      MatrixXd face_k = MatrixXd::Zero(cb.Pk.size(), nd);
      MatrixXd face_k1 = MatrixXd::Zero(cb.Pkp1_0.size(), nd);
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const QuadratureRule& r = face_rules[i];
        const MatrixXd w = tr.face_normal(T.faces[i], r, dd);
        const double om = T.face_orientations[i];
        face_k += om * moment(B.evaluate(cb.Pk, r.points)[0], r, w);
        face_k1 += om * moment(B.evaluate(cb.Pkp1_0, r.points)[0], r, w);
      }
      op.divergence = face_k;
      op.divergence.middleCols(off, na) -= B.inner(B.grad(cb.Pk), cb.Gkm1);

      const PolyFamily test = stack(B, B.grad(cb.Pkp1_0), cb.Gck);
      const Index n0 = cb.Pkp1_0.size();
      MatrixXd rhs = MatrixXd::Zero(test.size(), nd);
      rhs.topRows(n0) = face_k1 - B.inner(cb.Pkp1_0, cb.Pk) * op.divergence;
      rhs.block(n0, off + na, nb, nb).setIdentity();
      op.potential_div = solve(B.inner(test, cb.Pk3), rhs, where + " divergence potential");
    }

    // cell-local uG and uC
    {
      std::vector<MatrixXd> rows;
      for (std::size_t e : T.edges) {
        rows.push_back(extend(m_edge[e].derivative,
                              DDRCore::extension(m_core->local_dofs(SpaceKind::Grad, EntityKind::Edge, e), gd), Index(gd.size())));
      }
      for (std::size_t f : T.faces) {
        rows.push_back(extend(m_face[f].uG,
                              DDRCore::extension(m_core->local_dofs(SpaceKind::Grad, EntityKind::Face, f), gd), Index(gd.size())));
      }
      rows.push_back(vstack(B.inner(cb.Rkm1, cb.Pk3), B.inner(cb.Rck, cb.Pk3)) * op.gradient);
      op.uG.resize(Index(cd.size()), Index(gd.size()));
      Index r0 = 0;
      for (const MatrixXd& b : rows) {
        op.uG.middleRows(r0, b.rows()) = b;
        r0 += b.rows();
      }

      rows.clear();
      for (std::size_t f : T.faces) {
        rows.push_back(extend(m_face[f].curl,
                              DDRCore::extension(m_core->local_dofs(SpaceKind::Curl, EntityKind::Face, f), cd), Index(cd.size())));
      }
      rows.push_back(vstack(B.inner(cb.Gkm1, cb.Pk3), B.inner(cb.Gck, cb.Pk3)) * op.curl);
      op.uC.resize(Index(dd.size()), Index(cd.size()));
      r0 = 0;
      for (const MatrixXd& b : rows) {
        op.uC.middleRows(r0, b.rows()) = b;
        r0 += b.rows();
      }
    }

    // L2 products: potentials plus trace-mismatch stabilisation
    {
      const MatrixXd& P = op.potential_grad;
      MatrixXd M = P.transpose() * P;
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const QuadratureRule& r = face_rules[i];
        const MatrixXd d = B.evaluate(cb.Pkp1, r.points)[0].transpose() * P - tr.face_trace(T.faces[i], r, gd);
        M += m.face(T.faces[i]).diameter * gram(d, r);
      }
      for (std::size_t i = 0; i < T.edges.size(); ++i) {
        const QuadratureRule& r = edge_rules[i];
        const MatrixXd d = B.evaluate(cb.Pkp1, r.points)[0].transpose() * P - tr.edge_skeleton(T.edges[i], r, gd);
        const double h = m.edge(T.edges[i]).length;
        M += h * h * gram(d, r);
      }
      op.mass_grad = 0.5 * (M + M.transpose());
    }
    {
      const MatrixXd& P = op.potential_curl;
      MatrixXd M = P.transpose() * P;
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const QuadratureRule& r = face_rules[i];
        const Vec3& n = m.face(T.faces[i]).normal;
        const Samples phi = B.evaluate(cb.Pk3, r.points);
        std::vector<MatrixXd> pv;
        for (std::size_t j = 0; j < 3; ++j) pv.push_back(phi[j].transpose() * P);
        const MatrixXd pn = n(0) * pv[0] + n(1) * pv[1] + n(2) * pv[2];
        const auto g = tr.face_tangential(T.faces[i], r, cd);
        for (std::size_t j = 0; j < 3; ++j) M += m.face(T.faces[i]).diameter * gram(pv[j] - n(Index(j)) * pn - g[j], r);
      }
      for (std::size_t i = 0; i < T.edges.size(); ++i) {
        const QuadratureRule& r = edge_rules[i];
        const Edge& E = m.edge(T.edges[i]);
        const MatrixXd d = dot(B.evaluate(cb.Pk3, r.points), E.tangent).transpose() * P - tr.edge_tangential(T.edges[i], r, cd);
        M += E.length * E.length * gram(d, r);
      }
      op.mass_curl = 0.5 * (M + M.transpose());
    }
    {
      const MatrixXd& P = op.potential_div;
      MatrixXd M = P.transpose() * P;
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const QuadratureRule& r = face_rules[i];
        const Face& F = m.face(T.faces[i]);
        const MatrixXd d = dot(B.evaluate(cb.Pk3, r.points), F.normal).transpose() * P - tr.face_normal(T.faces[i], r, dd);
        M += F.diameter * gram(d, r);
      }
      op.mass_div = 0.5 * (M + M.transpose());
    }
  }
}

const Eigen::MatrixXd& DDROperators::mass(SpaceKind s, std::size_t t) const {
  switch (s) {
    case SpaceKind::Grad: return m_cell[t].mass_grad;
    case SpaceKind::Curl: return m_cell[t].mass_curl;
    case SpaceKind::Div: return m_cell[t].mass_div;
  }
  return m_cell[t].mass_grad;
}

namespace {

void require(const DofVector& x, const DofLayout& l, const char* what) {
  if (!(x.layout == l)) throw std::invalid_argument(std::string(what) + ": vector does not belong to the expected space");
}

}  // namespace

DofVector DDROperators::gradient(const DofVector& q) const {
  require(q, m_core->layout(SpaceKind::Grad), "gradient");
  const DofLayout& lc = m_core->layout(SpaceKind::Curl);
  DofVector out(lc);
  const Mesh& m = mesh();
  for (std::size_t e = 0; e < m.n_edges(); ++e) {
    out.values.segment(Index(lc.edge_offset(e)), Index(lc.edge_size)) = m_edge[e].derivative * restrict_to(*m_core, q, EntityKind::Edge, e);
  }
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    out.values.segment(Index(lc.face_offset(f)), Index(lc.face_size)) = m_face[f].uG * restrict_to(*m_core, q, EntityKind::Face, f);
  }
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    out.values.segment(Index(lc.cell_offset(t)), Index(lc.cell_size)) =
        m_cell[t].uG.bottomRows(Index(lc.cell_size)) * restrict_to(*m_core, q, EntityKind::Cell, t);
  }
  return out;
}

DofVector DDROperators::curl(const DofVector& v) const {
  require(v, m_core->layout(SpaceKind::Curl), "curl");
  const DofLayout& ld = m_core->layout(SpaceKind::Div);
  DofVector out(ld);
  const Mesh& m = mesh();
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    out.values.segment(Index(ld.face_offset(f)), Index(ld.face_size)) = m_face[f].curl * restrict_to(*m_core, v, EntityKind::Face, f);
  }
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    out.values.segment(Index(ld.cell_offset(t)), Index(ld.cell_size)) =
        m_cell[t].uC.bottomRows(Index(ld.cell_size)) * restrict_to(*m_core, v, EntityKind::Cell, t);
  }
  return out;
}

namespace {

void add_block(std::vector<Eigen::Triplet<double>>& trip, std::size_t row0, const MatrixXd& A,
               const std::vector<std::size_t>& cols) {
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0) trip.emplace_back(Index(row0) + i, Index(cols[std::size_t(j)]), A(i, j));
    }
  }
}

}  // namespace

SparseMatrix DDROperators::gradient_matrix() const {
  const DofLayout& lg = m_core->layout(SpaceKind::Grad);
  const DofLayout& lc = m_core->layout(SpaceKind::Curl);
  const Mesh& m = mesh();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t e = 0; e < m.n_edges(); ++e) {
    add_block(trip, lc.edge_offset(e), m_edge[e].derivative, m_core->local_dofs(SpaceKind::Grad, EntityKind::Edge, e));
  }
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    add_block(trip, lc.face_offset(f), m_face[f].uG, m_core->local_dofs(SpaceKind::Grad, EntityKind::Face, f));
  }
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    add_block(trip, lc.cell_offset(t), m_cell[t].uG.bottomRows(Index(lc.cell_size)),
              m_core->local_dofs(SpaceKind::Grad, EntityKind::Cell, t));
  }
  SparseMatrix G(Index(lc.size()), Index(lg.size()));
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

SparseMatrix DDROperators::curl_matrix() const {
  const DofLayout& lc = m_core->layout(SpaceKind::Curl);
  const DofLayout& ld = m_core->layout(SpaceKind::Div);
  const Mesh& m = mesh();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    add_block(trip, ld.face_offset(f), m_face[f].curl, m_core->local_dofs(SpaceKind::Curl, EntityKind::Face, f));
  }
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    add_block(trip, ld.cell_offset(t), m_cell[t].uC.bottomRows(Index(ld.cell_size)),
              m_core->local_dofs(SpaceKind::Curl, EntityKind::Cell, t));
  }
  SparseMatrix C(Index(ld.size()), Index(lc.size()));
  C.setFromTriplets(trip.begin(), trip.end());
  return C;
}

double DDROperators::l2_product(const DofVector& x, const DofVector& y) const {
  if (!(x.layout == y.layout)) throw std::invalid_argument("l2_product: layouts differ");
  const SpaceKind s = x.layout.kind;
  require(x, m_core->layout(s), "l2_product");
  double acc = 0.0;
  for (std::size_t t = 0; t < mesh().n_cells(); ++t) {
    acc += restrict_to(*m_core, x, EntityKind::Cell, t).dot(mass(s, t) * restrict_to(*m_core, y, EntityKind::Cell, t));
  }
  return acc;
}

double DDROperators::l2_norm(const DofVector& x) const { return std::sqrt(std::max(l2_product(x, x), 0.0)); }

SparseMatrix DDROperators::l2_matrix(SpaceKind s) const {
  const DofLayout& l = m_core->layout(s);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t t = 0; t < mesh().n_cells(); ++t) {
    const auto dofs = m_core->local_dofs(s, EntityKind::Cell, t);
    const MatrixXd& M = mass(s, t);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      for (std::size_t j = 0; j < dofs.size(); ++j) trip.emplace_back(Index(dofs[i]), Index(dofs[j]), M(Index(i), Index(j)));
    }
  }
  SparseMatrix A(Index(l.size()), Index(l.size()));
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

double DDROperators::graph_norm_U(const DofVector& v) const {
  const double a = l2_norm(v);
  const double b = l2_norm(curl(v));
  return std::sqrt(a * a + b * b);
}

Eigen::VectorXd DDROperators::cell_potential(const DofVector& x, std::size_t t) const {
  const VectorXd local = restrict_to(*m_core, x, EntityKind::Cell, t);
  switch (x.layout.kind) {
    case SpaceKind::Grad: return m_cell[t].potential_grad * local;
    case SpaceKind::Curl: return m_cell[t].potential_curl * local;
    case SpaceKind::Div: return m_cell[t].potential_div * local;
  }
  return {};
}

double DDROperators::cell_component_norm(std::size_t t, const Eigen::VectorXd& local, double s) const {
  if (s < 1.0) throw std::invalid_argument("component_norm: s must be >= 1");
  const Mesh& m = mesh();
  const Cell& T = m.cell(t);
  const DofLayout& l = m_core->layout(SpaceKind::Curl);
  const int deg = norm_degree(degree());
  const auto cd = m_core->local_dofs(SpaceKind::Curl, EntityKind::Cell, t);
  if (Index(cd.size()) != local.size()) throw std::invalid_argument("cell_component_norm: local size mismatch");
  double total = 0.0;
  {
    const QuadratureRule r = cell_rule(m, t, deg);
    const CellBases& cb = m_core->cell_bases(t);
    const VectorXd c = local.tail(Index(l.cell_size));
    const Samples a = m_core->cell_basis(t).evaluate(cb.Rkm1, r.points);
    const Samples b = m_core->cell_basis(t).evaluate(cb.Rck, r.points);
    MatrixXd v(Index(r.size()), 3);
    for (std::size_t j = 0; j < 3; ++j) {
      v.col(Index(j)) = a[j].transpose() * c.head(Index(l.cell_a)) + b[j].transpose() * c.tail(Index(l.cell_b));
    }
    total += std::pow(power_integral(v, r, s), 1.0 / s);
  }
  for (std::size_t f : T.faces) {
    const QuadratureRule r = face_rule(m, f, deg);
    const FaceBases& fb = m_core->face_bases(f);
    const auto pos = DDRCore::extension(m_core->local_dofs(SpaceKind::Curl, EntityKind::Face, f), cd);
    VectorXd c(Index(l.face_size));
    for (Index i = 0; i < c.size(); ++i) c(i) = local(Index(pos[pos.size() - l.face_size + std::size_t(i)]));
    const Samples a = m_core->face_basis(f).evaluate3(fb.Rkm1, r.points);
    const Samples b = m_core->face_basis(f).evaluate3(fb.Rck, r.points);
    MatrixXd v(Index(r.size()), 3);
    for (std::size_t j = 0; j < 3; ++j) {
      v.col(Index(j)) = a[j].transpose() * c.head(Index(l.face_a)) + b[j].transpose() * c.tail(Index(l.face_b));
    }
    total += std::pow(m.face(f).diameter, 1.0 / s) * std::pow(power_integral(v, r, s), 1.0 / s);
  }
  for (std::size_t e : T.edges) {
    const QuadratureRule r = edge_rule(m, e, deg);
    const Traces tr{*m_core, *this};
    const MatrixXd v = tr.edge_tangential(e, r, cd) * local;
    total += std::pow(m.edge(e).length, 2.0 / s) * std::pow(power_integral(v, r, s), 1.0 / s);
  }
  return total;
}

double DDROperators::cell_potential_norm(std::size_t t, const Eigen::VectorXd& local, double s) const {
  if (s < 1.0) throw std::invalid_argument("potential_norm: s must be >= 1");
  const Mesh& m = mesh();
  const Cell& T = m.cell(t);
  const int deg = norm_degree(degree());
  const Traces tr{*m_core, *this};
  const auto cd = m_core->local_dofs(SpaceKind::Curl, EntityKind::Cell, t);
  if (Index(cd.size()) != local.size()) throw std::invalid_argument("cell_potential_norm: local size mismatch");
  const EntityBasis& B = m_core->cell_basis(t);
  const CellBases& cb = m_core->cell_bases(t);
  const VectorXd p = m_cell[t].potential_curl * local;
  auto potential_at = [&](const QuadratureRule& r) {
    const Samples phi = B.evaluate(cb.Pk3, r.points);
    MatrixXd v(Index(r.size()), 3);
    for (std::size_t j = 0; j < 3; ++j) v.col(Index(j)) = phi[j].transpose() * p;
    return v;
  };
  double acc = power_integral(potential_at(cell_rule(m, t, deg)), cell_rule(m, t, deg), s);
  for (std::size_t f : T.faces) {
    const QuadratureRule r = face_rule(m, f, deg);
    const Vec3& n = m.face(f).normal;
    MatrixXd v = potential_at(r);
    const VectorXd vn = v * n;
    v -= vn * n.transpose();
    const auto g = tr.face_tangential(f, r, cd);
    for (std::size_t j = 0; j < 3; ++j) v.col(Index(j)) -= g[j] * local;
    acc += m.face(f).diameter * power_integral(v, r, s);
  }
  for (std::size_t e : T.edges) {
    const QuadratureRule r = edge_rule(m, e, deg);
    const Edge& E = m.edge(e);
    const MatrixXd v = potential_at(r) * E.tangent - tr.edge_tangential(e, r, cd) * local;
    acc += E.length * E.length * power_integral(v, r, s);
  }
  return std::pow(acc, 1.0 / s);
}

double DDROperators::component_norm(const DofVector& v, double s) const {
  require(v, m_core->layout(SpaceKind::Curl), "component_norm");
  double acc = 0.0;
  for (std::size_t t = 0; t < mesh().n_cells(); ++t) {
    acc += std::pow(cell_component_norm(t, restrict_to(*m_core, v, EntityKind::Cell, t), s), s);
  }
  return std::pow(acc, 1.0 / s);
}

double DDROperators::potential_norm(const DofVector& v, double s) const {
  require(v, m_core->layout(SpaceKind::Curl), "potential_norm");
  double acc = 0.0;
  for (std::size_t t = 0; t < mesh().n_cells(); ++t) {
    acc += std::pow(cell_potential_norm(t, restrict_to(*m_core, v, EntityKind::Cell, t), s), s);
  }
  return std::pow(acc, 1.0 / s);
}

double DDROperators::potential_lebesgue_norm(const DofVector& v, double s) const {
  require(v, m_core->layout(SpaceKind::Curl), "potential_lebesgue_norm");
  const Mesh& m = mesh();
  const int deg = norm_degree(degree());
  double acc = 0.0;
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    const QuadratureRule r = cell_rule(m, t, deg);
    const VectorXd p = cell_potential(v, t);
    const Samples phi = m_core->cell_basis(t).evaluate(m_core->cell_bases(t).Pk3, r.points);
    MatrixXd val(Index(r.size()), 3);
    for (std::size_t j = 0; j < 3; ++j) val.col(Index(j)) = phi[j].transpose() * p;
    acc += power_integral(val, r, s);
  }
  return std::pow(acc, 1.0 / s);
}

}  // namespace sddr
