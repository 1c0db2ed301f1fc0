// Polynomial spaces on mesh entities.
//
// Polynomials are stored as coefficients over scaled monomials
// ((x - x_Y)/h_Y)^alpha written in entity-local coordinates. Monomials are
// ordered by total degree, so P^l is always a prefix of P^L for l <= L.
// Vector-valued families concatenate one coefficient block per component:
// face-tangent fields use the face frame (e1, e2), cell fields use (x, y, z).

#pragma once

#include "sddr/mesh.hpp"
#include "sddr/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace sddr {

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class BasisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// dim P^l in `dim` variables; 0 for l < 0.
int dim_poly(int dim, int l);

/// Exponents of the monomials of degree <= l in `dim` variables, graded order.
const std::vector<std::array<int, 3>>& monomial_exponents(int dim, int l);

struct LocalFrame {
  int dim = 3;
  Vec3 origin = Vec3::Zero();
  double scale = 1.0;
  std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

  static LocalFrame for_edge(const Mesh& mesh, std::size_t e);
  static LocalFrame for_face(const Mesh& mesh, std::size_t f);
  static LocalFrame for_cell(const Mesh& mesh, std::size_t t);

  /// first `dim` entries are meaningful
  Vec3 local(const Vec3& x) const;
};

/// Rows are functions; ncomp blocks of nmono(degree) monomial coefficients.
struct PolyFamily {
  int ncomp = 1;
  int degree = 0;
  Eigen::MatrixXd coeffs;

  Eigen::Index size() const { return coeffs.rows(); }
  PolyFamily rows(Eigen::Index start, Eigen::Index count) const;
  static PolyFamily stack(const PolyFamily& a, const PolyFamily& b);
};

enum class Subspace { G, Gc, R, Rc };
const char* subspace_name(Subspace s);

/// Analytic dimension of G^l, Gc^l, R^l, Rc^l on an entity of dimension 2 or 3.
int subspace_dim(int dim, Subspace s, int l);

/// Monomial algebra, Gram matrix and orthonormal basis on one entity, up to a
/// maximal degree.
class EntityBasis {
 public:
  EntityBasis(const LocalFrame& frame, int max_degree, const QuadratureRule& rule);
  static EntityBasis for_edge(const Mesh& mesh, std::size_t e, int max_degree);
  static EntityBasis for_face(const Mesh& mesh, std::size_t f, int max_degree);
  static EntityBasis for_cell(const Mesh& mesh, std::size_t t, int max_degree);

  const LocalFrame& frame() const { return m_frame; }
  int dim() const { return m_frame.dim; }
  int max_degree() const { return m_max_degree; }
  int nmono(int l) const { return dim_poly(m_frame.dim, l); }
  /// Condition number of the scaled-monomial Gram matrix.
  double gram_condition() const { return m_condition; }
  bool used_fallback() const { return m_fallback; }

  /// Scaled monomials of degree <= l at the given points: nmono(l) x npts.
  SampleMatrix eval_monomials(const std::vector<Vec3>& points, int l) const;

  /// Samples of each component of the family at the points (rows x npts each).
  std::vector<SampleMatrix> evaluate(const PolyFamily& fam, const std::vector<Vec3>& points) const;
  /// Face-tangent or cell family evaluated as 3D vectors.
  std::vector<SampleMatrix> evaluate3(const PolyFamily& fam, const std::vector<Vec3>& points) const;

  /// L2(Y) inner products of two families (component-wise dot product).
  Eigen::MatrixXd inner(const PolyFamily& a, const PolyFamily& b) const;

  /// Orthonormal bases of P^l(Y) (prefix of a hierarchical basis) and of P^l(Y)^dim.
  PolyFamily scalar_basis(int l) const;
  PolyFamily vector_basis(int l) const;
  /// P^{0,l}(Y): zero-mean members of the orthonormal basis.
  PolyFamily zero_mean_basis(int l) const;
  PolyFamily subspace_basis(Subspace s, int l) const;

  /// Orthonormal basis of span(family) inside P^degree, rank checked against
  /// `expected` (singular values below 1e-10 sigma_max are dropped).
  PolyFamily orthonormalize(const PolyFamily& family, int expected, const std::string& what) const;

  /// Coefficients (rows of `target`) of the L2 projection of data sampled at
  /// the rule points: components given as 1 or ncomp rows of length npts.
  /// `target` must be orthonormal.
  Eigen::VectorXd project(const PolyFamily& target, const QuadratureRule& rule,
                          const std::vector<Eigen::VectorXd>& samples) const;

  // differential and Koszul maps on coefficients (physical scaling included)
  PolyFamily grad(const PolyFamily& scalar) const;
  PolyFamily div(const PolyFamily& vec) const;
  PolyFamily curl(const PolyFamily& vec) const;         // cells
  PolyFamily rot(const PolyFamily& scalar) const;       // faces: grad r x n_F
  PolyFamily rot_scalar(const PolyFamily& vec) const;   // faces: div of v x n_F
  PolyFamily x_times(const PolyFamily& scalar) const;   // (x - x_Y) q
  PolyFamily x_perp(const PolyFamily& scalar) const;    // faces: (x - x_F) x n_F q
  PolyFamily x_cross(const PolyFamily& vec) const;      // cells: (x - x_T) x v
  /// Raise the stored degree (zero padding), used before Koszul products.
  PolyFamily embed(const PolyFamily& fam, int degree) const;

 private:
  Eigen::MatrixXd derivative(int i, int degree) const;  // nmono(degree) x nmono(degree)
  Eigen::MatrixXd multiply(int i, int degree) const;    // nmono(degree) x nmono(degree+1)
  Eigen::MatrixXd block_gram(int ncomp, int degree) const;

  LocalFrame m_frame;
  int m_max_degree;
  Eigen::MatrixXd m_gram;   // scaled-monomial Gram up to max_degree
  Eigen::MatrixXd m_ortho;  // lower triangular, rows = orthonormal functions
  double m_condition = 1.0;
  bool m_fallback = false;
};

/// sum_c sum_q a_c(i,q) w(q) b_c(j,q): integrals of products of sampled
/// families, dispatched to the weighted-Gram kernel.
Eigen::MatrixXd integrate_products(const std::vector<SampleMatrix>& a, const std::vector<SampleMatrix>& b,
                                   const std::vector<double>& weights);

}  // namespace sddr
