// Navier-Stokes scheme on the discrete complex: velocity in Xcurl, Bernoulli
// pressure in Xgrad, natural / essential / mixed boundary conditions, damped
// Newton with static condensation of the cell unknowns.

#pragma once

#include "sddr/ddr_operators.hpp"

#include <Eigen/Sparse>

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace sddr {

/// Boundary data and forcing. Boundary faces are split by `regions`; on
/// natural faces the normal flux is `flux` (zero when unset) and the
/// tangential vorticity is zero; on essential faces u x n and p are taken
/// from `velocity_data` and `pressure_data` (zero when unset).
struct ProblemSpec {
  double nu = 1.0;
  VectorField forcing;
  BoundaryPredicate regions;
  std::function<double(const Face&, const Vec3&)> flux;
  VectorField velocity_data;
  ScalarField pressure_data;

  // optional exact solution for error measures
  VectorField exact_u, exact_curl_u;
  ScalarField exact_p;
  VectorField exact_grad_p;
  VectorField velocity_forcing;  // nu curl curl u + curl u x u

  bool has_essential(const Mesh& mesh) const;
  void validate(const Mesh& mesh) const;
};

enum class BoundaryPreset { Natural, Essential, PressFlux };
BoundaryPreset parse_boundary_preset(const std::string& s);
const char* boundary_preset_name(BoundaryPreset b);

/// Trigonometric manufactured solution on the unit cube with
/// p = lambda sin sin sin and f = nu curl curl u + curl u x u + grad p.
/// `bc` is Natural (the data are homogeneous) or Essential (u x n and p from
/// the exact solution).
ProblemSpec manufactured_problem(double nu, double lambda, BoundaryPreset bc);

/// Mixed test on the unit cube: p = -z, u x n = 0 on {0} x (0,1/4)^2; u.n = 1
/// on {1} x (0,1/4)^2; homogeneous natural conditions elsewhere; no forcing.
ProblemSpec pressflux_problem(double nu);

class LinearSolver {
 public:
  virtual ~LinearSolver() = default;
  virtual const char* name() const = 0;
  /// Throws std::runtime_error when the matrix is numerically singular.
  virtual void factor(const Eigen::SparseMatrix<double>& A) = 0;
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& b) const = 0;
};

/// UMFPACK when compiled in, Eigen SparseLU otherwise ("umfpack", "sparselu"
/// or "" for the default).
std::unique_ptr<LinearSolver> make_linear_solver(const std::string& name = "");

struct SolverOptions {
  double tol = 1e-9;        // relative to the residual of the data
  int max_iter = 50;
  int max_halvings = 6;
  bool convective = true;   // false: Stokes
  bool condense = true;
  std::string linear_solver;
};

/// Per-cell tensor of the convective term on the P^k(T)^3 basis:
/// T(a, b, c) = int_T (phi_a x phi_b) . phi_c.
struct TrilinearTensor {
  int n = 0;
  std::vector<double> data;  // a-major
  double operator()(int a, int b, int c) const { return data[std::size_t((a * n + b) * n + c)]; }
};

/// Assembled scheme: unknowns x = [u (Xcurl) | p (Xgrad) | mean multiplier].
class NSSystem {
 public:
  NSSystem(const DDROperators& ops, ProblemSpec spec, SolverOptions options = {});

  const DDROperators& operators() const { return *m_ops; }
  const ProblemSpec& spec() const { return m_spec; }
  const SolverOptions& options() const { return m_options; }
  std::size_t n_velocity() const { return m_nu; }
  std::size_t n_pressure() const { return m_np; }
  bool has_mean_constraint() const { return m_mean; }
  std::size_t size() const { return m_nu + m_np + (m_mean ? 1 : 0); }
  const std::vector<bool>& fixed() const { return m_fixed; }
  /// Values of the essential DoFs (zero elsewhere), the starting point.
  const Eigen::VectorXd& lifting() const { return m_lift; }
  const DofVector& interpolated_forcing() const { return m_If; }

  /// t(a; b, v) = int_Omega (C_h a x P b) . P v with C_h = P_div uC.
  double trilinear(const DofVector& a, const DofVector& b, const DofVector& v) const;
  const TrilinearTensor& tensor(std::size_t cell) const { return m_tri[cell]; }

  Eigen::VectorXd residual(const Eigen::VectorXd& x, bool convective = true) const;
  /// Norm of the residual restricted to the free rows.
  double free_norm(const Eigen::VectorXd& r) const;
  /// Uncondensed Jacobian, all rows and columns.
  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x, bool convective = true) const;

  /// Newton update: solves J dx = -r on the free DoFs (fixed DoFs get 0),
  /// eliminating cell unknowns when `condense` is set. Returns the size of the
  /// globally solved system through `solved_dim`.
  Eigen::VectorXd newton_step(const Eigen::VectorXd& x, const Eigen::VectorXd& r, bool convective, LinearSolver& solver,
                              std::size_t* solved_dim = nullptr) const;

  DofVector velocity(const Eigen::VectorXd& x) const;
  DofVector pressure(const Eigen::VectorXd& x) const;

 private:
  struct CellData {
    std::vector<std::size_t> u, p;  // global indices in x
    Eigen::MatrixXd A;              // uC^T M_div uC
    Eigen::MatrixXd B;              // M_curl uG
    Eigen::MatrixXd Ch;             // P_div uC (coefficients on P^k(T)^3)
    Eigen::VectorXd c;              // (., I 1)_GRAD restricted to the cell
    std::vector<bool> internal;     // per local [u | p] DoF
  };

  void local_system(std::size_t t, const Eigen::VectorXd& x, bool convective, Eigen::MatrixXd* K, Eigen::VectorXd* r) const;

  const DDROperators* m_ops;
  ProblemSpec m_spec;
  SolverOptions m_options;
  std::size_t m_nu = 0, m_np = 0;
  bool m_mean = true;
  std::vector<CellData> m_cells;
  std::vector<TrilinearTensor> m_tri;
  std::vector<bool> m_fixed;
  Eigen::VectorXd m_lift;
  DofVector m_If;
  Eigen::VectorXd m_rhs;  // forcing and flux data, residual = operator - rhs
};

struct NewtonResult {
  DofVector u, p;
  Eigen::VectorXd x;
  bool converged = false;
  int iterations = 0;       // Newton iterations after the Stokes start
  std::vector<double> history;  // relative residual norms, first entry after the Stokes solve
  std::vector<double> damping;
  std::size_t condensed_dim = 0;
  std::string message;
};

NewtonResult newton_solve(const NSSystem& system);

/// key = value lines, '#' comments. Keys are returned lower-case.
std::map<std::string, std::string> read_key_value_config(const std::filesystem::path& path);

}  // namespace sddr
