// Experiment drivers shared by the command-line tool and the acceptance runner.

#pragma once

#include "sddr/verify.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sddr::experiments {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command = "convergence";
  std::string mesh = "cubic";  // cubic | tet | file:<path>
  std::vector<std::size_t> levels;
  std::vector<int> ks{0};
  std::optional<double> re;  // nu = 1 / re
  std::optional<double> lambda;  // pressure scaling
  std::string bc = "natural";
  double tol = 1e-9;
  int max_iter = 50;
  std::string linear_solver;
  std::filesystem::path out = "out";
  unsigned seed = 1;
  bool parallel_levels = false;

  /// Reynolds number, with the per-command default when unset.
  double reynolds() const;
  /// Pressure scaling; robustness compares 1 against this (default 100).
  double scale() const;
  /// Levels with the per-command default when unset.
  std::vector<std::size_t> level_list() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Mesh of the family at level n (the level is ignored for file meshes).
Mesh make_mesh(const std::string& family, std::size_t n);

/// Callback with the assembled system and its Newton result, while both live.
using Inspect = std::function<void(const NSSystem&, const NewtonResult&)>;

/// One level of the manufactured problem. Errors are NaN when Newton fails.
ErrorReport run_manufactured_level(const Mesh& mesh, std::size_t n, int k, double nu, double lambda, BoundaryPreset bc,
                                   const SolverOptions& opts, std::ostream* log = nullptr, const Inspect& inspect = {});

struct PressFluxReport {
  std::size_t n = 0;
  double h = 0.0;
  std::size_t dim_condensed = 0;
  int newton_iterations = 0;
  bool converged = false;
  double norm_u = kNaN;  // sqrt(|u|_CURL^2 + |uC u|_DIV^2)
  double norm_p = kNaN;  // sqrt(|p|_GRAD^2 + |uG p|_CURL^2)
};

PressFluxReport run_pressflux_level(const Mesh& mesh, std::size_t n, int k, double nu, const SolverOptions& opts,
                                    std::ostream* log = nullptr, const Inspect& inspect = {});

/// Fine-mesh values (n = 32, k = 2) of the two discrete norms, for comparison only.
constexpr double kPressFluxRefU = 7.3256611669273153e-01;
constexpr double kPressFluxRefP = 2.8368266709481171e-01;

void write_pressflux_csv(std::ostream& os, const std::vector<PressFluxReport>& rows);

/// Poincare, continuity and Sobolev estimates and chi for the manufactured
/// problem. The Poincare constant falls back to inverse iteration beyond the
/// dense cap; the other dense estimates are left NaN there.
ConstantsReport estimate_constants(const Mesh& mesh, std::size_t n, int k, double nu, double lambda, unsigned seed);

void write_constants_csv(std::ostream& os, const std::vector<ConstantsReport>& rows);

/// Runs the command; returns the process exit code (0, 2 solver failure,
/// 3 property failure). Throws ConfigError on bad configuration.
int run_command(const RunConfig& cfg, std::ostream& console);

}  // namespace sddr::experiments
