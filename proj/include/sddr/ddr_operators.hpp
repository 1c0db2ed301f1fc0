// Discrete differential operators, potentials, traces and L2-products of the
// three discrete spaces.
//
// Every local operator is a dense matrix acting on the local DoFs of an entity
// (ordered as DDRCore::local_dofs) and returning coefficients in one of the
// orthonormal bases of DDRCore.

#pragma once

#include "sddr/ddr_spaces.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace sddr {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct EdgeOperators {
  Eigen::MatrixXd reconstruction;  // q_E in P^{k+1}(E), basis Pkp1, from [q_V0, q_V1, q_E]
  Eigen::MatrixXd derivative;      // q_E' in P^k(E), basis Pk
};

struct FaceOperators {
  Eigen::MatrixXd gradient;          // GRAD face DoFs -> Pk2
  Eigen::MatrixXd trace;             // GRAD face DoFs -> Pkp1
  Eigen::MatrixXd curl;              // CURL face DoFs -> Pk
  Eigen::MatrixXd tangential_trace;  // CURL face DoFs -> Pk2
  Eigen::MatrixXd uG;                // GRAD face DoFs -> [R^{k-1}(F) | Rc^k(F)] block
};

struct CellOperators {
  Eigen::MatrixXd gradient;        // GRAD -> Pk3
  Eigen::MatrixXd potential_grad;  // GRAD -> Pkp1
  Eigen::MatrixXd curl;            // CURL -> Pk3
  Eigen::MatrixXd potential_curl;  // CURL -> Pk3
  Eigen::MatrixXd divergence;      // DIV -> Pk
  Eigen::MatrixXd potential_div;   // DIV -> Pk3
  Eigen::MatrixXd uG;              // local GRAD -> local CURL
  Eigen::MatrixXd uC;              // local CURL -> local DIV
  Eigen::MatrixXd mass_grad, mass_curl, mass_div;  // consistency + stabilisation
};

class DDROperators {
 public:
  explicit DDROperators(const DDRCore& core);

  const DDRCore& core() const { return *m_core; }
  const Mesh& mesh() const { return m_core->mesh(); }
  int degree() const { return m_core->degree(); }

  const EdgeOperators& edge(std::size_t e) const { return m_edge[e]; }
  const FaceOperators& face(std::size_t f) const { return m_face[f]; }
  const CellOperators& cell(std::size_t t) const { return m_cell[t]; }
  const Eigen::MatrixXd& mass(SpaceKind s, std::size_t t) const;

  /// Global uG and uC applied entity by entity.
  DofVector gradient(const DofVector& q) const;
  DofVector curl(const DofVector& v) const;
  /// Same maps as sparse matrices (CURL x GRAD, DIV x CURL).
  SparseMatrix gradient_matrix() const;
  SparseMatrix curl_matrix() const;

  double l2_product(const DofVector& x, const DofVector& y) const;
  double l2_norm(const DofVector& x) const;
  SparseMatrix l2_matrix(SpaceKind s) const;

  /// sqrt(|v|_CURL^2 + |uC v|_DIV^2)
  double graph_norm_U(const DofVector& v) const;

  /// Coefficients of a cell potential (basis Pkp1 for GRAD, Pk3 otherwise).
  Eigen::VectorXd cell_potential(const DofVector& x, std::size_t t) const;

  /// CURL-space L^s norms: component norm (sum over the cell, its faces and
  /// edges of h-weighted component norms, then l^s over cells) and the
  /// potential-based norm with tangential-trace and edge jumps.
  double component_norm(const DofVector& v, double s) const;
  double potential_norm(const DofVector& v, double s) const;
  double cell_component_norm(std::size_t t, const Eigen::VectorXd& local, double s) const;
  double cell_potential_norm(std::size_t t, const Eigen::VectorXd& local, double s) const;
  /// |P_curl v|_{L^s(Omega)}
  double potential_lebesgue_norm(const DofVector& v, double s) const;

 private:
  void build_edges();
  void build_faces();
  void build_cells();

  const DDRCore* m_core;
  std::vector<EdgeOperators> m_edge;
  std::vector<FaceOperators> m_face;
  std::vector<CellOperators> m_cell;
};

}  // namespace sddr
