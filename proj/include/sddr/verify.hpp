// Error measures, convergence rates, estimates of the discrete constants,
// exactness bookkeeping and the property suite.

#pragma once

#include "sddr/ns_solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace sddr {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ErrorReport {
  std::size_t n = 0;  // mesh level label
  double h = 0.0;
  std::size_t dim_condensed = 0;
  double Edu = 0.0, Epu = 0.0, Edp = 0.0, Epp = 0.0;
  double eoc_Edu = kNaN, eoc_Epu = kNaN, eoc_Edp = kNaN, eoc_Epp = kNaN;
  int newton_iterations = 0;
  bool converged = false;
};

/// Discrete errors |u - I u|_U, |uG(p - I p)|_CURL and potential errors
/// |P u - u| + |P_div uC u - curl u| (squared sum), |P uG p - grad p|.
/// `exact` must carry exact_u, exact_curl_u, exact_p, exact_grad_p.
ErrorReport compute_errors(const DDROperators& ops, const DofVector& u, const DofVector& p, const ProblemSpec& exact);

/// Fills the eoc_* fields from consecutive entries (log ratio of errors over
/// log ratio of h).
void compute_eoc(std::vector<ErrorReport>& reports);

/// Columns: MeshSize,N,DimCondensed,Newton,Ed_u,Ep_u,Ed_p,Ep_p,EOC_Ed_u,...
void write_error_csv(std::ostream& os, const std::vector<ErrorReport>& reports);

class DimensionCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kDenseCap = 5000;

/// max over v in (Im uG)^perp of |v|_CURL / |uC v|_DIV, by a dense generalised
/// eigenproblem on a complement basis. Throws DimensionCapError when dim Xcurl
/// exceeds `cap`.
double estimate_poincare(const DDROperators& ops, std::size_t cap = kDenseCap);

/// Same constant by inverse iteration on the constrained pencil with a sparse
/// saddle-point factorisation; used beyond the dense cap.
double estimate_poincare_iterative(const DDROperators& ops, double tol = 1e-10, int max_iter = 1000, unsigned seed = 1);

/// C_c: max |P v|_{L2} / |v| over Xcurl (first) and Xdiv (second). Dense.
std::pair<double, double> continuity_constants(const DDROperators& ops, std::size_t cap = kDenseCap);

/// Lower bound on max |P v|_{L4} / |uC v|_DIV over (Im uG)^perp: best value
/// over `samples` random starts, each refined by `ascent_steps` projected
/// gradient steps. Non-decreasing in `samples` for a fixed seed.
double estimate_sobolev_lower_bound(const DDROperators& ops, int samples, int ascent_steps, unsigned seed = 1,
                                    std::size_t cap = kDenseCap);

struct ConstantsReport {
  std::size_t n = 0;
  int k = 0;
  double poincare = kNaN;
  std::string poincare_method;
  double cc_curl = kNaN, cc_div = kNaN;
  double sobolev_lower = kNaN;  // lower bound only
  double chi = kNaN;            // from the estimates, reported only
};

struct ExactnessReport {
  std::size_t dim_grad = 0, dim_curl = 0, dim_div = 0;
  std::size_t rank_uG = 0, rank_uC = 0;
  std::size_t kernel_uG() const { return dim_grad - rank_uG; }
  std::size_t kernel_uC() const { return dim_curl - rank_uC; }
  bool exact() const { return kernel_uC() == rank_uG && kernel_uG() == 1; }
};

/// Numerical ranks from singular values, threshold 1e-10 relative. Dense.
ExactnessReport check_exactness(const DDROperators& ops, std::size_t cap = kDenseCap);

// individual checks --------------------------------------------------------

/// Largest relative sup-norm error (at quadrature points) of P_grad I, gamma_F I,
/// gamma_t I, P_curl I, P_div I on monomials of the degrees they reproduce,
/// over every cell and face of the mesh.
double polynomial_consistency_error(const DDROperators& ops);

/// Largest coefficient of uG I q - I grad q and uC I v - I curl v over
/// monomials of degree <= k+1.
double commutation_error(const DDROperators& ops);

/// max over random q of |uC uG q|_DIV / |uG q|_CURL.
double complex_defect(const DDROperators& ops, int samples, unsigned seed);

/// max over random u of |t(u;u,u)| / (|P_div uC u|_{L2} |P u|_{L4}^2).
double skew_symmetry_defect(const NSSystem& system, int samples, unsigned seed);

/// Relative finite-difference errors |(R(x+e d) - R(x))/e - J d| / |J d| for
/// each e, at a random state and direction.
std::vector<double> jacobian_fd_errors(const NSSystem& system, const std::vector<double>& eps, unsigned seed);

/// |nu |uC u|^2 - (I f, u)| relative to the larger side; 0 when |u| is below
/// 1e-10 |I f| / nu (the discrete solution vanishes to working precision).
double energy_identity_defect(const NSSystem& system, const DofVector& u);

/// Per-cell ratios over random local CURL vectors: potential / component norm
/// for s = 2 and s = 4, and the Lebesgue ratio |.|_{2} / (h^{3/4} |.|_{4}) of
/// component norms.
struct NormBrackets {
  double equiv2_min = 0, equiv2_max = 0, equiv4_min = 0, equiv4_max = 0;
  double lebesgue_min = 0, lebesgue_max = 0;
};
NormBrackets norm_brackets(const DDROperators& ops, int samples, unsigned seed);

/// Largest divergence-closure defect over the cells of the mesh.
double divergence_closure_defect(const Mesh& mesh);

struct PropertyResult {
  std::string mesh;
  int k = 0;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct NamedMesh {
  std::string name;
  const Mesh* mesh;
};

/// Runs every check above on each (mesh, k).
std::vector<PropertyResult> run_property_suite(const std::vector<NamedMesh>& meshes, const std::vector<int>& ks,
                                               unsigned seed = 1);

}  // namespace sddr
