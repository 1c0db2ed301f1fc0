#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

namespace sddr::experiments {

namespace {

bool is_file_family(const std::string& family) { return family.rfind("file:", 0) == 0; }

std::string mesh_tag(const std::string& family, std::size_t n) {
  if (is_file_family(family)) return std::filesystem::path(family.substr(5)).stem().string();
  return family + std::to_string(n);
}

std::string family_tag(const std::string& family) {
  return is_file_family(family) ? std::filesystem::path(family.substr(5)).stem().string() : family;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void log_newton(std::ostream& log, const NewtonResult& r) {
  log << "  newton: " << (r.converged ? "converged" : "not converged") << " after " << r.iterations
      << " iterations, condensed dim " << r.condensed_dim;
  if (!r.message.empty()) log << " (" << r.message << ")";
  log << "\n  residuals:";
  for (std::size_t i = 0; i < r.history.size(); ++i)
    log << ' ' << std::scientific << std::setprecision(3) << r.history[i] << std::defaultfloat;
  log << "\n  damping:";
  for (double a : r.damping) log << ' ' << a;
  log << '\n';
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

/// Runs f(i) for each level, sequentially or one task per level; the logs are
/// concatenated in level order either way.
template <class R, class F>
std::vector<R> over_levels(std::size_t count, bool parallel, std::ostream& log, F f) {
  std::vector<R> out(count);
  std::vector<std::ostringstream> logs(count);
  if (parallel) {
    std::vector<std::future<R>> tasks;
    for (std::size_t i = 0; i < count; ++i) tasks.push_back(std::async(std::launch::async, [&, i] { return f(i, logs[i]); }));
    for (std::size_t i = 0; i < count; ++i) out[i] = tasks[i].get();
  } else {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i, logs[i]);
  }
  for (auto& l : logs) log << l.str();
  return out;
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  o.linear_solver = cfg.linear_solver;
  return o;
}

void write_config(std::ostream& log, const RunConfig& cfg) {
  log << "command " << cfg.command << "\nmesh " << cfg.mesh << "\nlevels";
  for (auto n : cfg.level_list()) log << ' ' << n;
  log << "\nk";
  for (int k : cfg.ks) log << ' ' << k;
  log << "\nre " << cfg.reynolds() << "\nlambda " << cfg.scale() << "\nbc " << cfg.bc << "\ntol " << cfg.tol
      << "\nmax_iter " << cfg.max_iter << "\nseed " << cfg.seed << "\n\n";
}

// ---------------------------------------------------------------------------

int cmd_convergence(const RunConfig& cfg, std::ostream& log, std::ostream& console) {
  const auto levels = cfg.level_list();
  const double nu = 1.0 / cfg.reynolds();
  const BoundaryPreset bc = parse_boundary_preset(cfg.bc);
  int code = 0;
  for (int k : cfg.ks) {
    auto reports = over_levels<ErrorReport>(levels.size(), cfg.parallel_levels, log, [&](std::size_t i, std::ostream& l) {
      const Mesh mesh = make_mesh(cfg.mesh, levels[i]);
      l << "level " << mesh_tag(cfg.mesh, levels[i]) << " k=" << k << '\n';
      return run_manufactured_level(mesh, levels[i], k, nu, cfg.scale(), bc, solver_options(cfg), &l);
    });
    compute_eoc(reports);
    const auto path = cfg.out / ("convergence_" + family_tag(cfg.mesh) + "_k" + std::to_string(k) + ".csv");
    auto os = open_output(path);
    write_error_csv(os, reports);
    for (const auto& r : reports) {
      if (!r.converged) code = 2;
      console << "k=" << k << " n=" << r.n << " Ed_u=" << r.Edu << " Ep_u=" << r.Epu << " Ed_p=" << r.Edp
              << " EOC_Ed_u=" << r.eoc_Edu << (r.converged ? "" : " [not converged]") << '\n';
    }
    console << "wrote " << path.string() << '\n';
  }
  return code;
}

int cmd_robustness(const RunConfig& cfg, std::ostream& log, std::ostream& console) {
  const auto levels = cfg.level_list();
  const double nu = 1.0 / cfg.reynolds();
  const BoundaryPreset bc = parse_boundary_preset(cfg.bc);
  const double lambdas[2] = {1.0, cfg.scale()};
  int code = 0;
  for (int k : cfg.ks) {
    struct Row {
      ErrorReport r[2];
      double dof_diff = kNaN;
    };
    auto rows = over_levels<Row>(levels.size(), cfg.parallel_levels, log, [&](std::size_t i, std::ostream& l) {
      const Mesh mesh = make_mesh(cfg.mesh, levels[i]);
      Row row;
      Eigen::VectorXd u[2];
      for (int j = 0; j < 2; ++j) {
        l << "level " << mesh_tag(cfg.mesh, levels[i]) << " k=" << k << " lambda=" << lambdas[j] << '\n';
        row.r[j] = run_manufactured_level(mesh, levels[i], k, nu, lambdas[j], bc, solver_options(cfg), &l,
                                          [&](const NSSystem&, const NewtonResult& res) { u[j] = res.u.values; });
      }
      if (u[0].size() && u[1].size()) row.dof_diff = (u[1] - u[0]).norm() / u[0].norm();
      return row;
    });
    const auto path = cfg.out / ("robustness_" + family_tag(cfg.mesh) + "_k" + std::to_string(k) + ".csv");
    auto os = open_output(path);
    os << std::setprecision(10) << "MeshSize,N,Lambda,Ed_u,Ep_u,Ed_p,Ep_p,Ed_u_Lambda,Ep_u_Lambda,Ed_p_Lambda,Ep_p_Lambda,"
       << "RelDiff_Ed_u,RelDiff_Ep_u,RelDiff_VelocityDofs\n";
    for (const Row& w : rows) {
      const ErrorReport &a = w.r[0], &b = w.r[1];
      if (!a.converged || !b.converged) code = 2;
      const double du = std::abs(b.Edu - a.Edu) / a.Edu, dp = std::abs(b.Epu - a.Epu) / a.Epu;
      os << a.h << ',' << a.n << ',' << cfg.scale() << ',' << a.Edu << ',' << a.Epu << ',' << a.Edp << ',' << a.Epp << ','
         << b.Edu << ',' << b.Epu << ',' << b.Edp << ',' << b.Epp << ',' << du << ',' << dp << ',' << w.dof_diff << '\n';
      console << "k=" << k << " n=" << a.n << " rel. change Ed_u=" << du << " Ep_u=" << dp << " velocity dofs=" << w.dof_diff
              << '\n';
    }
    console << "wrote " << path.string() << '\n';
  }
  return code;
}

int cmd_pressflux(const RunConfig& cfg, std::ostream& log, std::ostream& console) {
  const auto levels = cfg.level_list();
  const double nu = 1.0 / cfg.reynolds();
  int code = 0;
  for (int k : cfg.ks) {
    auto rows = over_levels<PressFluxReport>(levels.size(), cfg.parallel_levels, log, [&](std::size_t i, std::ostream& l) {
      const Mesh mesh = make_mesh(cfg.mesh, levels[i]);
      l << "level " << mesh_tag(cfg.mesh, levels[i]) << " k=" << k << '\n';
      return run_pressflux_level(mesh, levels[i], k, nu, solver_options(cfg), &l);
    });
    const auto path = cfg.out / ("pressflux_" + family_tag(cfg.mesh) + "_k" + std::to_string(k) + ".csv");
    auto os = open_output(path);
    write_pressflux_csv(os, rows);
    for (const auto& r : rows) {
      if (!r.converged) code = 2;
      console << "k=" << k << " n=" << r.n << " |u|=" << r.norm_u << " |p|=" << r.norm_p << " newton=" << r.newton_iterations
              << (r.converged ? "" : " [not converged]") << '\n';
    }
    console << "reference (n=32, k=2): |u|=" << kPressFluxRefU << " |p|=" << kPressFluxRefP << '\n';
    console << "wrote " << path.string() << '\n';
  }
  return code;
}

int cmd_properties(const RunConfig& cfg, std::ostream& log, std::ostream& console) {
  const auto levels = cfg.level_list();
  std::vector<Mesh> meshes;
  meshes.reserve(levels.size());
  std::vector<NamedMesh> named;
  for (auto n : levels) meshes.push_back(make_mesh(cfg.mesh, n));
  for (std::size_t i = 0; i < levels.size(); ++i) named.push_back({mesh_tag(cfg.mesh, levels[i]), &meshes[i]});
  const auto results = run_property_suite(named, cfg.ks, cfg.seed);
  const auto path = cfg.out / ("properties_" + family_tag(cfg.mesh) + ".csv");
  auto os = open_output(path);
  os << std::setprecision(10) << "Mesh,k,Property,Value,Threshold,Passed\n";
  int failed = 0;
  for (const auto& r : results) {
    os << r.mesh << ',' << r.k << ',' << r.name << ',' << r.value << ',' << r.threshold << ',' << (r.passed ? 1 : 0) << '\n';
    log << (r.passed ? "PASS " : "FAIL ") << r.mesh << " k=" << r.k << ' ' << r.name << " value=" << r.value
        << " threshold=" << r.threshold << '\n';
    if (!r.passed) {
      ++failed;
      console << "FAIL " << r.mesh << " k=" << r.k << ' ' << r.name << " value=" << r.value << '\n';
    }
  }
  console << results.size() - std::size_t(failed) << '/' << results.size() << " properties passed\nwrote " << path.string()
          << '\n';
  return failed ? 3 : 0;
}

int cmd_constants(const RunConfig& cfg, std::ostream& log, std::ostream& console) {
  const auto levels = cfg.level_list();
  const double nu = 1.0 / cfg.reynolds();
  for (int k : cfg.ks) {
    auto rows = over_levels<ConstantsReport>(levels.size(), cfg.parallel_levels, log, [&](std::size_t i, std::ostream& l) {
      const Mesh mesh = make_mesh(cfg.mesh, levels[i]);
      const auto t0 = std::chrono::steady_clock::now();
      ConstantsReport r = estimate_constants(mesh, levels[i], k, nu, cfg.scale(), cfg.seed);
      l << "level " << mesh_tag(cfg.mesh, levels[i]) << " k=" << k << " poincare (" << r.poincare_method << ") "
        << r.poincare << " chi " << r.chi << (r.chi > 0 ? " positive" : " not positive") << ", " << seconds_since(t0)
        << " s\n";
      return r;
    });
    const auto path = cfg.out / ("constants_" + family_tag(cfg.mesh) + "_k" + std::to_string(k) + ".csv");
    auto os = open_output(path);
    write_constants_csv(os, rows);
    for (const auto& r : rows)
      console << "k=" << k << " n=" << r.n << " Cp=" << r.poincare << " Cc=(" << r.cc_curl << ", " << r.cc_div
              << ") CS>=" << r.sobolev_lower << " chi=" << r.chi << '\n';
    console << "wrote " << path.string() << '\n';
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

double RunConfig::reynolds() const {
  if (re) return *re;
  return command == "pressflux" ? 100.0 : 1.0;
}

double RunConfig::scale() const {
  if (lambda) return *lambda;
  return command == "robustness" ? 100.0 : 1.0;
}

std::vector<std::size_t> RunConfig::level_list() const {
  if (!levels.empty()) return levels;
  if (is_file_family(mesh)) return {0};
  if (command == "pressflux") return {4, 8};
  if (command == "properties" || command == "constants") return {1, 2};
  return {2, 4};
}

void RunConfig::validate() const {
  static const char* commands[] = {"convergence", "robustness", "pressflux", "properties", "constants"};
  if (std::find(std::begin(commands), std::end(commands), command) == std::end(commands))
    throw ConfigError("unknown command '" + command + "'");
  if (mesh != "cubic" && mesh != "tet" && !(is_file_family(mesh) && mesh.size() > 5))
    throw ConfigError("mesh must be cubic, tet or file:<path>");
  const auto lv = level_list();
  if (lv.empty()) throw ConfigError("empty level list");
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (lv[i] == 0 && !is_file_family(mesh)) throw ConfigError("levels must be positive");
    if (i > 0 && lv[i] <= lv[i - 1]) throw ConfigError("levels must be strictly ascending");
  }
  if (ks.empty()) throw ConfigError("empty degree list");
  for (int k : ks)
    if (k < 0) throw ConfigError("degrees must be nonnegative");
  if (!(reynolds() > 0.0)) throw ConfigError("Reynolds number must be positive");
  if (!std::isfinite(scale())) throw ConfigError("lambda must be finite");
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  try {
    const BoundaryPreset b = parse_boundary_preset(bc);
    if ((command == "convergence" || command == "robustness") && b == BoundaryPreset::PressFlux)
      throw ConfigError("the manufactured problem takes bc natural or essential");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!linear_solver.empty() && linear_solver != "umfpack" && linear_solver != "sparselu")
    throw ConfigError("linear solver must be umfpack or sparselu");
}

Mesh make_mesh(const std::string& family, std::size_t n) {
  if (family == "cubic") return generate_cubic_mesh(n);
  if (family == "tet") return generate_tet_mesh(n);
  if (is_file_family(family)) return read_mesh(family.substr(5));
  throw ConfigError("unknown mesh family '" + family + "'");
}

ErrorReport run_manufactured_level(const Mesh& mesh, std::size_t n, int k, double nu, double lambda, BoundaryPreset bc,
                                   const SolverOptions& opts, std::ostream* log, const Inspect& inspect) {
  const auto t0 = std::chrono::steady_clock::now();
  DDRCore core(mesh, k);
  DDROperators ops(core);
  const ProblemSpec spec = manufactured_problem(nu, lambda, bc);
  const NSSystem system(ops, spec, opts);
  const NewtonResult res = newton_solve(system);
  ErrorReport r;
  if (res.converged) {
    r = compute_errors(ops, res.u, res.p, spec);
  } else {
    r.h = mesh.h_max();
    r.Edu = r.Epu = r.Edp = r.Epp = kNaN;
  }
  r.n = n;
  r.dim_condensed = res.condensed_dim;
  r.newton_iterations = res.iterations;
  r.converged = res.converged;
  if (inspect) inspect(system, res);
  if (log) {
    log_newton(*log, res);
    *log << "  errors: Ed_u " << r.Edu << " Ep_u " << r.Epu << " Ed_p " << r.Edp << " Ep_p " << r.Epp << ", "
         << seconds_since(t0) << " s\n";
  }
  return r;
}

PressFluxReport run_pressflux_level(const Mesh& mesh, std::size_t n, int k, double nu, const SolverOptions& opts,
                                    std::ostream* log, const Inspect& inspect) {
  const auto t0 = std::chrono::steady_clock::now();
  DDRCore core(mesh, k);
  DDROperators ops(core);
  const NSSystem system(ops, pressflux_problem(nu), opts);
  const NewtonResult res = newton_solve(system);
  PressFluxReport r;
  r.n = n;
  r.h = mesh.h_max();
  r.dim_condensed = res.condensed_dim;
  r.newton_iterations = res.iterations;
  r.converged = res.converged;
  if (res.converged) {
    r.norm_u = ops.graph_norm_U(res.u);
    const double pg = ops.l2_norm(res.p), gp = ops.l2_norm(ops.gradient(res.p));
    r.norm_p = std::sqrt(pg * pg + gp * gp);
  }
  if (inspect) inspect(system, res);
  if (log) {
    log_newton(*log, res);
    *log << "  norms: u " << r.norm_u << " p " << r.norm_p << ", " << seconds_since(t0) << " s\n";
  }
  return r;
}

void write_pressflux_csv(std::ostream& os, const std::vector<PressFluxReport>& rows) {
  const auto old = os.precision(17);
  os << "MeshSize,N,DimCondensed,Newton,Converged,NormU,NormP,DiffRefU,DiffRefP\n";
  for (const auto& r : rows)
    os << r.h << ',' << r.n << ',' << r.dim_condensed << ',' << r.newton_iterations << ',' << (r.converged ? 1 : 0) << ','
       << r.norm_u << ',' << r.norm_p << ',' << std::abs(r.norm_u - kPressFluxRefU) << ','
       << std::abs(r.norm_p - kPressFluxRefP) << '\n';
  os.precision(old);
}

ConstantsReport estimate_constants(const Mesh& mesh, std::size_t n, int k, double nu, double lambda, unsigned seed) {
  DDRCore core(mesh, k);
  DDROperators ops(core);
  ConstantsReport r;
  r.n = n;
  r.k = k;
  try {
    r.poincare = estimate_poincare(ops);
    r.poincare_method = "dense";
  } catch (const DimensionCapError&) {
    r.poincare = estimate_poincare_iterative(ops, 1e-10, 1000, seed);
    r.poincare_method = "iterative";
  }
  try {
    std::tie(r.cc_curl, r.cc_div) = continuity_constants(ops);
    r.sobolev_lower = estimate_sobolev_lower_bound(ops, 8, 20, seed);
  } catch (const DimensionCapError&) {
  }
  const ProblemSpec spec = manufactured_problem(nu, lambda, BoundaryPreset::Natural);
  const double ru = ops.l2_norm(interpolate_curl(core, spec.velocity_forcing));
  r.chi = nu - r.cc_div * r.sobolev_lower * r.sobolev_lower * r.poincare / nu * ru;
  return r;
}

void write_constants_csv(std::ostream& os, const std::vector<ConstantsReport>& rows) {
  const auto old = os.precision(10);
  os << "N,k,Poincare,PoincareMethod,Cc_curl,Cc_div,Sobolev_lower,Chi\n";
  for (const auto& r : rows)
    os << r.n << ',' << r.k << ',' << r.poincare << ',' << r.poincare_method << ',' << r.cc_curl << ',' << r.cc_div << ','
       << r.sobolev_lower << ',' << r.chi << '\n';
  os.precision(old);
}

int run_command(const RunConfig& cfg, std::ostream& console) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw ConfigError("cannot create " + cfg.out.string() + ": " + ec.message());
  const auto log_path = cfg.out / (cfg.command + ".log");
  auto log = open_output(log_path);
  write_config(log, cfg);
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  if (cfg.command == "convergence") code = cmd_convergence(cfg, log, console);
  else if (cfg.command == "robustness") code = cmd_robustness(cfg, log, console);
  else if (cfg.command == "pressflux") code = cmd_pressflux(cfg, log, console);
  else if (cfg.command == "properties") code = cmd_properties(cfg, log, console);
  else code = cmd_constants(cfg, log, console);
  log << "\nexit " << code << " after " << seconds_since(t0) << " s\n";
  return code;
}

}  // namespace sddr::experiments
