// Batch driver: convergence, robustness, pressflux, properties, constants.
// Exit codes: 0 success, 2 solver failure, 3 property failure, 4 config error.

#include "experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace sddr;
using namespace sddr::experiments;

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  if (!CLI::detail::lexical_cast(s, v)) throw ConfigError("config: bad value '" + s + "' for " + key);
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& s) {
  std::vector<T> out;
  for (const auto& item : CLI::detail::split(s, ',')) {
    const std::string t = CLI::detail::trim_copy(item);
    if (!t.empty()) out.push_back(parse_number<T>(key, t));
  }
  return out;
}

/// Fills the fields whose flag was not given on the command line.
void apply_config_file(const std::string& path, const CLI::App& app, RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  try {
    kv = read_key_value_config(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  auto unset = [&](const char* flag) { return app.count(flag) == 0; };
  for (const auto& [key, value] : kv) {
    if (key == "cmd" || key == "command") {
      if (unset("--cmd")) cfg.command = value;
    } else if (key == "mesh") {
      if (unset("--mesh")) cfg.mesh = value;
    } else if (key == "levels") {
      if (unset("--levels")) cfg.levels = parse_list<std::size_t>(key, value);
    } else if (key == "k") {
      if (unset("--k")) cfg.ks = parse_list<int>(key, value);
    } else if (key == "re") {
      if (unset("--re") && unset("--nu")) cfg.re = parse_number<double>(key, value);
    } else if (key == "nu") {
      if (unset("--re") && unset("--nu")) cfg.re = 1.0 / parse_number<double>(key, value);
    } else if (key == "lambda") {
      if (unset("--lambda")) cfg.lambda = parse_number<double>(key, value);
    } else if (key == "bc") {
      if (unset("--bc")) cfg.bc = value;
    } else if (key == "tol") {
      if (unset("--tol")) cfg.tol = parse_number<double>(key, value);
    } else if (key == "max_iter") {
      if (unset("--max-iter")) cfg.max_iter = parse_number<int>(key, value);
    } else if (key == "linear_solver") {
      if (unset("--linear-solver")) cfg.linear_solver = value;
    } else if (key == "out") {
      if (unset("--out")) cfg.out = value;
    } else if (key == "seed") {
      if (unset("--seed")) cfg.seed = parse_number<unsigned>(key, value);
    } else if (key == "parallel_levels") {
      if (unset("--parallel-levels")) cfg.parallel_levels = value == "1" || value == "true";
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Navier-Stokes experiments on the serendipity discrete de Rham complex"};
  std::string config_path;
  double re = 0.0, nu = 0.0, lambda = 0.0;
  std::string out = cfg.out.string();

  app.add_option("--cmd", cfg.command, "convergence | robustness | pressflux | properties | constants");
  app.add_option("--mesh", cfg.mesh, "cubic | tet | file:<path>");
  app.add_option("--levels", cfg.levels, "mesh levels n, ascending")->delimiter(',');
  app.add_option("--k", cfg.ks, "polynomial degrees")->delimiter(',');
  auto* re_opt = app.add_option("--re", re, "Reynolds number (nu = 1/Re)");
  app.add_option("--nu", nu, "viscosity")->excludes(re_opt);
  app.add_option("--lambda", lambda, "pressure scaling");
  app.add_option("--bc", cfg.bc, "natural | essential (manufactured problem)");
  app.add_option("--tol", cfg.tol, "relative Newton tolerance");
  app.add_option("--max-iter", cfg.max_iter, "Newton iteration cap");
  app.add_option("--linear-solver", cfg.linear_solver, "umfpack | sparselu");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_flag("--parallel-levels", cfg.parallel_levels, "run mesh levels concurrently");
  app.add_option("--config", config_path, "key = value file; command-line flags take precedence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (app.count("--re")) cfg.re = re;
    if (app.count("--nu")) cfg.re = 1.0 / nu;
    if (app.count("--lambda")) cfg.lambda = lambda;
    cfg.out = out;
    if (!config_path.empty()) apply_config_file(config_path, app, cfg);
    return run_command(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 4;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return 4;
  } catch (const BoundaryError& e) {
    std::cerr << "boundary error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 2;
  }
}
