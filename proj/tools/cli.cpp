#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "sphere_ot/cloud.hpp"
#include "sphere_ot/cost.hpp"
#include "sphere_ot/density.hpp"
#include "sphere_ot/error.hpp"
#include "sphere_ot/harness.hpp"
#include "sphere_ot/lift.hpp"
#include "sphere_ot/scheme.hpp"
#include "sphere_ot/solver.hpp"

#ifndef SPHERE_OT_VERSION
#define SPHERE_OT_VERSION "0.0.0"
#endif

namespace sphere_ot::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Options every numerical command shares.
struct ModelOptions {
  std::string cost = "squared_geodesic";
  std::optional<double> R;
  std::string coefficients = "analytic";

  void add(CLI::App* app) {
    app->add_option("--cost", cost, "squared_geodesic | logarithmic");
    app->add_option("--gradient-bound", R, "R (default 1.1 pi squared, 5 log)");
    app->add_option("--coefficients", coefficients, "analytic | finite_difference");
  }

  CostModel build() const {
    CostModel m = make_cost_model(parse_cost_kind(cost), R);
    m.method = parse_coefficient_method(coefficients);
    return m;
  }
};

struct SchemeOptions {
  SchemeConfig config;

  void add(CLI::App* app) {
    app->add_option("--tau-constant", config.tau_constant, "tau = constant (r^2 + h / r + dtheta)");
    app->add_option("--delta-mode", config.delta_mode, "tau | fixed");
    app->add_option("--delta-scale", config.delta_scale, "delta = scale * tau in tau mode");
    app->add_option("--delta-value", config.delta_value, "delta in fixed mode");
    app->add_option("--pair-count", config.pair_count, "orthogonal direction pairs per node");
    app->add_option("--underestimation", config.underestimation, "F offset in units of tau (negative: cost default)");
  }

  SchemeConfig build() const {
    if (config.delta_mode != "tau" && config.delta_mode != "fixed") {
      throw Error(ErrorCode::ConfigError, "unknown delta mode '" + config.delta_mode + "' (valid: tau, fixed)");
    }
    if (!(config.tau_constant > 0.0)) throw Error(ErrorCode::ConfigError, "tau constant must be positive");
    if (config.pair_count < 1) throw Error(ErrorCode::ConfigError, "pair count must be at least 1");
    return config;
  }
};

struct SolverOptions {
  SolverConfig config;

  void add(CLI::App* app) {
    app->add_option("--tol", config.tol, "inner residual tolerance (0: 1e-10 max(1, |H|_inf))");
    app->add_option("--max-iters", config.max_iters, "Newton steps per inner solve");
    app->add_option("--max-euler", config.max_euler, "Euler fallback steps per inner solve");
    app->add_option("--damping", config.damping, "first Newton step length tried, in (0, 1]");
    app->add_option("--max-outer", config.max_outer, "lagged-gradient outer iterations");
    app->add_option("--outer-tol", config.outer_tol, "outer stop on the max-norm gradient change");
    app->add_flag("--renormalize-f2", config.renormalize_f2, "rescale f2 to the mass of f1");
    app->add_option("--gradient-cap", config.gradient_cap, "coefficient gradient cap (0: cost default)");
  }

  SolverConfig build() const {
    if (!(config.damping > 0.0 && config.damping <= 1.0)) throw Error(ErrorCode::ConfigError, "damping must lie in (0, 1]");
    if (config.max_iters < 1 || config.max_outer < 1) throw Error(ErrorCode::ConfigError, "iteration limits must be positive");
    if (config.tol < 0.0) throw Error(ErrorCode::ConfigError, "tol must be non-negative");
    return config;
  }
};

struct CloudOptions {
  std::string kind;
  int n;
  std::string file;
  CloudParams params;

  CloudOptions(std::string default_kind, int default_n) : kind(std::move(default_kind)), n(default_n) {}

  void add(CLI::App* app) {
    app->add_option("--cloud-kind", kind, "fibonacci | icosahedral | file");
    app->add_option("--n", n, "node count");
    app->add_option("--cloud-file", file, "node file for --cloud-kind file");
    app->add_option("--radius-scale", params.radius_scale, "r = scale * h^exponent");
    app->add_option("--radius-exponent", params.radius_exponent, "r = scale * h^exponent");
  }

  PointCloud build() const {
    const CloudKind k = parse_cloud_kind(kind);
    if (k == CloudKind::File && file.empty()) throw Error(ErrorCode::ConfigError, "--cloud-kind file needs --cloud-file");
    return build_cloud(generate_cloud(k, n, file), params);
  }
};

// One value per line, '#' comments allowed.
std::vector<double> read_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileParse, "cannot open density file '" + path + "'");
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ss(t);
    double v;
    if (!(ss >> v)) throw Error(ErrorCode::FileParse, path + ":" + std::to_string(lineno) + ": expected a number");
    out.push_back(v);
  }
  return out;
}

std::vector<double> node_values_from_file(const std::string& path, const PointCloud& cloud) {
  auto values = read_value_file(path);
  if (static_cast<int>(values.size()) != cloud.size()) {
    throw Error(ErrorCode::FileParse, "density file '" + path + "' has " + std::to_string(values.size()) +
                                          " values for " + std::to_string(cloud.size()) + " nodes");
  }
  return values;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
  return f;
}

// Effective values of every option of `app` and then of its parent.
std::vector<std::pair<std::string, std::string>> effective_values(const CLI::App* app) {
  std::vector<const CLI::Option*> opts = app->get_options();
  if (app->get_parent() != nullptr) {
    const auto globals = app->get_parent()->get_options();
    opts.insert(opts.end(), globals.begin(), globals.end());
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : opts) {
    const std::string name = opt->get_lnames().empty() ? std::string{} : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "version") continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      value = opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      value = opt->results().back();
    } else {
      value = opt->get_default_str();
      if (value.empty()) value = "default";
    }
    out.emplace_back(name, value);
  }
  return out;
}

// Keys that do not change results are echoed but left out of the hash.
bool hashed(const std::string& key) { return key != "out" && key != "obj" && key != "threads" && key != "config"; }

void write_header(std::ostream& out, const std::string& command,
                  const std::vector<std::pair<std::string, std::string>>& values) {
  std::string canonical = command + "\n";
  for (const auto& [k, v] : values) {
    if (hashed(k)) canonical += k + "=" + v + "\n";
  }
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical);
  out << "# sphere_ot " << SPHERE_OT_VERSION << '\n';
  out << "# command " << command << '\n';
  out << "# config_hash fnv1a64:" << hash.str() << '\n';
  for (const auto& [k, v] : values) out << "# " << k << " = " << v << '\n';
}

void apply_threads(int threads) {
  if (threads <= 0) {
    const char* env = std::getenv("SPHERE_OT_THREADS");
    if (env == nullptr || *env == '\0') return;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v <= 0) throw Error(ErrorCode::ConfigError, std::string("SPHERE_OT_THREADS='") + env + "' is not a positive integer");
    threads = static_cast<int>(v);
  }
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
}

int cmd_generate(CLI::App* app, const CloudOptions& cloud_opts, const std::string& out_path,
                 const std::string& obj_path, std::ostream& out) {
  const CloudKind kind = parse_cloud_kind(cloud_opts.kind);
  const auto nodes = generate_cloud(kind, cloud_opts.n, cloud_opts.file);
  if (!obj_path.empty()) write_obj(obj_path, build_cloud(nodes, cloud_opts.params));
  std::ofstream file;
  if (!out_path.empty()) file = open_output(out_path);
  std::ostream& dst = out_path.empty() ? out : file;
  write_header(dst, "generate", effective_values(app));
  dst << std::setprecision(17);
  for (const auto& p : nodes) dst << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  return kExitOk;
}

struct SolveInputs {
  std::string f1 = "uniform";
  std::string f2 = "uniform";
  std::string out;
  std::string obj;
};

int cmd_solve(CLI::App* app, const CloudOptions& cloud_opts, const ModelOptions& model_opts,
              const SchemeOptions& scheme_opts, const SolverOptions& solver_opts, const SolveInputs& in,
              std::ostream& out) {
  const CostModel model = model_opts.build();
  const SchemeConfig scheme_cfg = scheme_opts.build();
  const SolverConfig solver_cfg = solver_opts.build();
  const PointCloud cloud = cloud_opts.build();

  TransportProblem problem;
  problem.model = model;
  problem.f1.resize(cloud.size());
  if (is_builtin_density(in.f1)) {
    const DensityFn f1 = parse_density(in.f1);
    for (int i = 0; i < cloud.size(); ++i) problem.f1[i] = f1(cloud.nodes[i]);
  } else {
    const auto values = node_values_from_file(in.f1, cloud);
    for (int i = 0; i < cloud.size(); ++i) problem.f1[i] = values[i];
  }
  if (is_builtin_density(in.f2)) {
    problem.f2 = parse_density(in.f2);
  } else {
    check_projection_bijective(cloud);
    auto values = std::make_shared<const std::vector<double>>(node_values_from_file(in.f2, cloud));
    auto lift = std::make_shared<const Interpolator>(cloud);
    problem.f2 = [values, lift](const SpherePoint& y) { return (*lift)(*values, y); };
  }
  if (!in.obj.empty()) write_obj(in.obj, cloud);

  const Scheme scheme(cloud, scheme_cfg, model);
  const SolveResult sol = solve(scheme, problem, solver_cfg);
  const SolveReport& r = sol.report;

  std::ofstream file;
  if (!in.out.empty()) file = open_output(in.out);
  const auto values = effective_values(app);
  write_header(out, "solve", values);
  out << std::setprecision(10);
  out << "# report iterations = " << r.iterations << '\n'
      << "# report outer_iterations = " << r.outer_iterations << '\n'
      << "# report euler_steps = " << r.euler_steps << '\n'
      << "# report converged = " << (r.converged ? "true" : "false") << '\n'
      << "# report final_update_norm = " << r.final_update_norm << '\n'
      << "# report gradient_change = " << r.gradient_change << '\n'
      << "# report v_residual_inf = " << r.v_residual_inf << '\n'
      << "# report uh_scheme_residual_inf = " << r.uh_scheme_residual_inf << '\n'
      << "# report eikonal_max = " << r.eikonal_max << '\n'
      << "# report gradient_bound_R = " << model.R << '\n'
      << "# report discrete_average_of_uh = " << r.discrete_average_of_uh << '\n'
      << "# report lipschitz_estimate = " << r.lipschitz_estimate << '\n'
      << "# report tol = " << r.tol << '\n'
      << "# report tau = " << r.tau << '\n'
      << "# report delta = " << r.delta << '\n'
      << "# report mass_source = " << r.mass_source << '\n'
      << "# report mass_target = " << r.mass_target << '\n'
      << "# report f2_scale = " << r.f2_scale << '\n'
      << "# report n = " << cloud.size() << '\n'
      << "# report h = " << cloud.h << '\n'
      << "# report r = " << cloud.r << '\n';
  for (const auto& w : cloud.warnings) out << "# warning " << w << '\n';

  std::ostream& dst = in.out.empty() ? out : file;
  if (!in.out.empty()) write_header(dst, "solve", values);
  dst << "node,x,y,z,u,grad_x,grad_y,grad_z,tx,ty,tz\n" << std::setprecision(17);
  for (int i = 0; i < cloud.size(); ++i) {
    const SpherePoint& x = cloud.nodes[i];
    const Vec3 g = tangent_frame(x).to_ambient(sol.gradients[i]);
    const SpherePoint t = transport_map(model, TangentVector(x, g));
    dst << i << ',' << x[0] << ',' << x[1] << ',' << x[2] << ',' << sol.u[i] << ',' << g[0] << ',' << g[1] << ','
        << g[2] << ',' << t[0] << ',' << t[1] << ',' << t[2] << '\n';
  }
  return kExitOk;
}

struct StudyInputs {
  std::string potential = "zonal_linear";
  std::optional<double> amplitude;
  std::string f2 = "uniform";
  int levels = 3;
  int first_subdivision = 3;
  std::string cloud_kind = "icosahedral";
  int first_n = 642;
  int samples = 1000;
  std::uint64_t seed = 12345;
  std::string out;
};

int cmd_study(CLI::App* app, const ModelOptions& model_opts, const SchemeOptions& scheme_opts,
              const SolverOptions& solver_opts, const StudyInputs& in, std::ostream& out) {
  StudyConfig cfg;
  cfg.model = model_opts.build();
  cfg.scheme = scheme_opts.build();
  cfg.solver = solver_opts.build();
  cfg.potential = parse_potential_kind(in.potential);
  cfg.amplitude = in.amplitude.value_or(cfg.model.kind == CostKind::SquaredGeodesic ? 0.2 : 0.05);
  cfg.f2 = in.f2;
  parse_density(cfg.f2);
  cfg.cloud_kind = parse_cloud_kind(in.cloud_kind);
  if (in.levels < 3) throw Error(ErrorCode::ConfigError, "a study needs --levels >= 3");
  if (cfg.cloud_kind == CloudKind::Icosahedral) {
    if (in.first_subdivision < 0) throw Error(ErrorCode::ConfigError, "--first-subdivision must be >= 0");
    cfg.sizes = icosahedral_sizes(in.first_subdivision, in.levels);
  } else if (cfg.cloud_kind == CloudKind::Fibonacci) {
    for (int k = 0; k < in.levels; ++k) cfg.sizes.push_back(in.first_n << (2 * k));
  } else {
    throw Error(ErrorCode::ConfigError, "studies generate their clouds (valid kinds: icosahedral, fibonacci)");
  }
  cfg.offnode_samples = in.samples;
  cfg.seed = in.seed;

  const auto rows = convergence_study(cfg);
  std::ofstream file;
  if (!in.out.empty()) file = open_output(in.out);
  std::ostream& dst = in.out.empty() ? out : file;
  auto values = effective_values(app);
  for (auto& [k, v] : values) {
    if (k == "amplitude") v = std::to_string(cfg.amplitude);
  }
  write_header(dst, "study", values);
  write_study_csv(dst, rows);
  return kExitOk;
}

struct CheckInputs {
  int trials = 10000;
  std::optional<double> amplitude;
  std::uint64_t seed = 2024;
  bool mutate_eikonal_sign = false;
};

int cmd_check(CLI::App* app, const CloudOptions& cloud_opts, const ModelOptions& model_opts,
              const SchemeOptions& scheme_opts, const SolverOptions& solver_opts, const CheckInputs& in,
              std::ostream& out) {
  PropertyConfig cfg;
  cfg.model = model_opts.build();
  cfg.scheme = scheme_opts.build();
  cfg.scheme.flip_eikonal_sign = in.mutate_eikonal_sign;
  cfg.solver = solver_opts.build();
  cfg.trials = in.trials;
  cfg.amplitude = in.amplitude.value_or(0.2);
  cfg.seed = in.seed;
  if (cfg.trials < 1) throw Error(ErrorCode::ConfigError, "--trials must be positive");
  const PointCloud cloud = cloud_opts.build();
  const auto results = property_suite(cloud, cfg);
  write_header(out, "check", effective_values(app));
  write_property_report(out, results);
  const bool ok = std::all_of(results.begin(), results.end(), [](const PropertyResult& r) { return r.passed; });
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileParse, "cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::FileParse, path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = dashed(trim(t.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::FileParse, path + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal transport on the sphere", "sphere_ot"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", SPHERE_OT_VERSION);

  std::string config_path;
  int threads = 0;
  app.add_option("--config", config_path, "flat key = value file; flags override it");
  app.add_option("--threads", threads, "worker thread cap (also SPHERE_OT_THREADS)");

  // generate
  CLI::App* gen = app.add_subcommand("generate", "write a node file")->fallthrough();
  CloudOptions gen_cloud("fibonacci", 1000);
  std::string gen_out, gen_obj;
  gen->add_option("--kind", gen_cloud.kind, "fibonacci | icosahedral | file");
  gen->add_option("--n", gen_cloud.n, "node count");
  gen->add_option("--cloud-file", gen_cloud.file, "input node file for --kind file");
  gen->add_option("--out", gen_out, "node file (default: stdout)");
  gen->add_option("--obj", gen_obj, "also write the triangulation as OBJ");

  // solve
  CLI::App* sol = app.add_subcommand("solve", "solve one transport problem")->fallthrough();
  CloudOptions sol_cloud("icosahedral", 642);
  ModelOptions sol_model;
  SchemeOptions sol_scheme;
  SolverOptions sol_solver;
  SolveInputs sol_in;
  sol_cloud.add(sol);
  sol_model.add(sol);
  sol_scheme.add(sol);
  sol_solver.add(sol);
  sol->add_option("--f1", sol_in.f1, "source density: built-in spec or per-node value file");
  sol->add_option("--f2", sol_in.f2, "target density: built-in spec or per-node value file");
  sol->add_option("--out", sol_in.out, "solution CSV (default: stdout)");
  sol->add_option("--obj", sol_in.obj, "also write the triangulation as OBJ");

  // study
  CLI::App* stu = app.add_subcommand("study", "manufactured convergence study")->fallthrough();
  ModelOptions stu_model;
  SchemeOptions stu_scheme;
  SolverOptions stu_solver;
  StudyInputs stu_in;
  stu_model.add(stu);
  stu_scheme.add(stu);
  stu_solver.add(stu);
  stu->add_option("--potential", stu_in.potential, "zonal_linear | zonal_bump");
  stu->add_option("--amplitude", stu_in.amplitude, "potential amplitude (default 0.2 squared, 0.05 log)");
  stu->add_option("--f2", stu_in.f2, "built-in target density");
  stu->add_option("--levels", stu_in.levels, "refinement levels (>= 3)");
  stu->add_option("--first-subdivision", stu_in.first_subdivision, "icosahedral subdivisions of the first level");
  stu->add_option("--cloud-kind", stu_in.cloud_kind, "icosahedral | fibonacci");
  stu->add_option("--first-n", stu_in.first_n, "fibonacci node count of the first level");
  stu->add_option("--samples", stu_in.samples, "off-node error samples");
  stu->add_option("--seed", stu_in.seed, "off-node sampler seed");
  stu->add_option("--out", stu_in.out, "study CSV (default: stdout)");

  // check
  CLI::App* chk = app.add_subcommand("check", "scheme property suite")->fallthrough();
  CloudOptions chk_cloud("fibonacci", 500);
  ModelOptions chk_model;
  SchemeOptions chk_scheme;
  SolverOptions chk_solver;
  CheckInputs chk_in;
  chk_cloud.add(chk);
  chk_model.add(chk);
  chk_scheme.add(chk);
  chk_solver.add(chk);
  chk->add_option("--trials", chk_in.trials, "monotonicity and oracle trials");
  chk->add_option("--amplitude", chk_in.amplitude, "manufactured amplitude");
  chk->add_option("--seed", chk_in.seed, "random seed");
  chk->add_flag("--mutate-eikonal-sign", chk_in.mutate_eikonal_sign)->group("");

  const std::vector<CLI::App*> commands{gen, sol, stu, chk};

  try {
    // Config-file entries become flags placed right after the subcommand, so
    // explicit flags, which come later, take precedence.
    std::vector<std::string> argv = args;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!config_path.empty()) {
      const auto entries = read_config_file(config_path);
      const auto sub_pos = std::find_if(argv.begin(), argv.end(), [&](const std::string& a) {
        return std::any_of(commands.begin(), commands.end(), [&](CLI::App* c) { return c->get_name() == a; });
      });
      if (sub_pos == argv.end()) throw Error(ErrorCode::ConfigError, "no command given");
      CLI::App* cmd = app.get_subcommand(*sub_pos);
      std::vector<std::string> injected;
      for (const auto& [key, value] : entries) {
        if (key == "config") continue;
        const bool known = key == "threads" || cmd->get_option_no_throw("--" + key) != nullptr;
        if (!known) {
          const bool elsewhere = std::any_of(commands.begin(), commands.end(),
                                             [&](CLI::App* c) { return c->get_option_no_throw("--" + key) != nullptr; });
          if (elsewhere) continue;
          throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "' in '" + config_path + "'");
        }
        injected.push_back("--" + key + "=" + value);
      }
      argv.insert(sub_pos + 1, injected.begin(), injected.end());
    }

    std::reverse(argv.begin(), argv.end());
    try {
      app.parse(argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitConfig;
    }

    apply_threads(threads);
    if (gen->parsed()) return cmd_generate(gen, gen_cloud, gen_out, gen_obj, out);
    if (sol->parsed()) return cmd_solve(sol, sol_cloud, sol_model, sol_scheme, sol_solver, sol_in, out);
    if (stu->parsed()) return cmd_study(stu, stu_model, stu_scheme, stu_solver, stu_in, out);
    return cmd_check(chk, chk_cloud, chk_model, chk_scheme, chk_solver, chk_in, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace sphere_ot::cli
