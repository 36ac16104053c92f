#include "liebridge/experiment.hpp"

#include "liebridge/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace liebridge {

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, int line, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(line, "value of '" + key + "' is not a number: '" + v + "'");
  }
  if (used != v.size())
    throw ConfigError(line, "trailing characters after number in '" + key + "': '" + v + "'");
  return out;
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(line, "value of '" + key + "' is not an integer: '" + v + "'");
  }
  if (used != v.size())
    throw ConfigError(line, "trailing characters after integer in '" + key + "': '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(line, "value of '" + key + "' must be true/false: '" + v + "'");
}

std::string fmt3(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}

DensityGrid make_endpoint(const std::shared_ptr<const GroupGrid>& grid,
                          const EndpointSpec& spec, int which) {
  const double kappa = which == 0 ? spec.kappa0 : spec.kappa1;
  const double loc = which == 0 ? spec.loc0 : spec.loc1;
  if (spec.family == "uniform") return make_uniform_density(grid);
  if (spec.family == "von_mises")
    return grid->group == GroupId::so2 ? make_von_mises_so2(grid, kappa, loc)
                                       : make_von_mises_so3_class(grid, kappa, loc);
  throw std::invalid_argument("unknown endpoint family: " + spec.family);
}

Eigen::ArrayXd argmax_trajectory(const BridgeSolution& sol) {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(sol.rho_opt.size()));
  for (std::size_t k = 0; k < sol.rho_opt.size(); ++k) {
    Eigen::Index imax = 0;
    sol.rho_opt[k].values.maxCoeff(&imax);
    out[static_cast<Eigen::Index>(k)] = sol.problem->grid().nodes[imax];
  }
  return out;
}

// ---- validate-only invariant suite ------------------------------------

struct SuitePrinter {
  bool all_pass = true;
  void report(const std::string& name, bool pass, double value) {
    all_pass = all_pass && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " (" << value << ")\n";
  }
};

PositiveGridFunction random_positive(const std::shared_ptr<const GroupGrid>& grid,
                                     std::uint64_t& rng) {
  Eigen::ArrayXd lv(static_cast<Eigen::Index>(grid->size()));
  for (Eigen::Index i = 0; i < lv.size(); ++i) lv[i] = 4.0 * uniform01(rng) - 2.0;
  return PositiveGridFunction(grid, lv);
}

bool run_validation_suite(const BridgeProblem& problem) {
  SuitePrinter out;
  const auto grid = problem.grid_ptr();
  const bool so2 = grid->group == GroupId::so2;
  std::uint64_t rng = 0x5eedULL;

  // semigroup law T_{0.3} T_{0.7} = T_1 on a generic positive function
  {
    const auto t03 = problem.cache().at(0.3);
    const auto t07 = problem.cache().at(0.7);
    const auto t1 = problem.t1();
    const PositiveGridFunction f(grid, problem.rho0().values.log());
    const Eigen::ArrayXd two_hop = t03->apply(t07->apply(f)).values();
    const Eigen::ArrayXd one_hop = t1->apply(f).values();
    const double rel = (two_hop - one_hop).abs().maxCoeff() / one_hop.abs().maxCoeff();
    out.report("semigroup_law", rel < (so2 ? 1e-6 : 1e-5), rel);
  }

  // stochasticity T_t 1 = 1
  {
    const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(grid->size()));
    double worst = 0.0;
    for (const double t : {0.25, 1.0}) {
      const Eigen::ArrayXd v = problem.cache().at(t)->apply(ones, Domain::linear);
      worst = std::max(worst, (v - 1.0).abs().maxCoeff());
    }
    out.report("stochasticity", worst < 1e-8, worst);
  }

  // Hilbert metric: scale invariance and ratio isometry on random cases
  {
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
      const PositiveGridFunction f = random_positive(grid, rng);
      const PositiveGridFunction g = random_positive(grid, rng);
      const PositiveGridFunction h = random_positive(grid, rng);
      const double alpha = 3.0 * uniform01(rng) + 0.1;
      const PositiveGridFunction fa(grid, f.log_values() + std::log(alpha));
      worst = std::max(worst, hilbert_distance(fa, f));
      worst = std::max(worst, std::abs(hilbert_distance(fa, g) - hilbert_distance(f, g)));
      const double iso = std::abs(hilbert_distance(pointwise_ratio(h, f), pointwise_ratio(h, g)) -
                                  hilbert_distance(f, g));
      worst = std::max(worst, iso);
    }
    out.report("hilbert_invariance", worst < 1e-12, worst);
  }

  // contraction of T_1 in d_H on random positive pairs
  {
    const auto t1 = problem.t1();
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
      const PositiveGridFunction f = random_positive(grid, rng);
      const PositiveGridFunction g = random_positive(grid, rng);
      const double before = hilbert_distance(f, g);
      if (before < 1e-12) continue;
      worst = std::max(worst, hilbert_distance(t1->apply(f), t1->apply(g)) / before);
    }
    out.report("contraction", worst < 1.0, worst);
  }

  return out.all_pass;
}

// ---- report helpers ----------------------------------------------------

nlohmann::json argmax_to_json(const Eigen::ArrayXd& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.size(); ++i) arr.push_back(a[i]);
  return arr;
}

}  // namespace

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error("config line " + std::to_string(line) + ": " + message),
      line_(line) {}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "endpoints" && section != "solver" &&
          section != "output" && section != "simulate")
        throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    if (value.empty()) throw ConfigError(line_no, "empty value for '" + key + "'");

    if (section == "problem") {
      if (key == "group") {
        if (value == "so2")
          c.group = GroupId::so2;
        else if (value == "so3")
          c.group = GroupId::so3_class;
        else
          throw ConfigError(line_no, "group must be so2 or so3: '" + value + "'");
      } else if (key == "grid_size") {
        const long long v = parse_int(value, line_no, key);
        if (v < 8) throw ConfigError(line_no, "grid_size must be >= 8");
        c.grid_size = static_cast<std::size_t>(v);
      } else if (key == "sigma") {
        c.sigma = parse_double(value, line_no, key);
        if (!(c.sigma > 0.0)) throw ConfigError(line_no, "sigma must be > 0");
      } else if (key == "truncation") {
        const long long v = parse_int(value, line_no, key);
        if (v < 0) throw ConfigError(line_no, "truncation must be >= 0");
        c.truncation = static_cast<int>(v);
      } else {
        throw ConfigError(line_no, "unknown key '" + key + "' in [problem]");
      }
    } else if (section == "endpoints") {
      if (key == "family") {
        if (value != "von_mises" && value != "uniform")
          throw ConfigError(line_no, "family must be von_mises or uniform: '" + value + "'");
        c.endpoints.family = value;
      } else if (key == "kappa0") {
        c.endpoints.kappa0 = parse_double(value, line_no, key);
      } else if (key == "loc0") {
        c.endpoints.loc0 = parse_double(value, line_no, key);
      } else if (key == "kappa1") {
        c.endpoints.kappa1 = parse_double(value, line_no, key);
      } else if (key == "loc1") {
        c.endpoints.loc1 = parse_double(value, line_no, key);
      } else {
        throw ConfigError(line_no, "unknown key '" + key + "' in [endpoints]");
      }
    } else if (section == "solver") {
      if (key == "tol") {
        c.tol = parse_double(value, line_no, key);
        if (!(c.tol > 0.0)) throw ConfigError(line_no, "tol must be > 0");
      } else if (key == "max_iter") {
        const long long v = parse_int(value, line_no, key);
        if (v < 1) throw ConfigError(line_no, "max_iter must be >= 1");
        c.max_iter = static_cast<int>(v);
      } else {
        throw ConfigError(line_no, "unknown key '" + key + "' in [solver]");
      }
    } else if (section == "output") {
      if (key == "directory") {
        c.directory = value;
      } else if (key == "time_samples") {
        const long long v = parse_int(value, line_no, key);
        if (v < 2) throw ConfigError(line_no, "time_samples must be >= 2");
        c.time_samples = static_cast<int>(v);
      } else {
        throw ConfigError(line_no, "unknown key '" + key + "' in [output]");
      }
    } else if (section == "simulate") {
      if (key == "enabled") {
        c.simulate.enabled = parse_bool(value, line_no, key);
      } else if (key == "n_particles") {
        const long long v = parse_int(value, line_no, key);
        if (v < 1000) throw ConfigError(line_no, "n_particles must be >= 1000");
        c.simulate.n_particles = static_cast<std::size_t>(v);
      } else if (key == "n_steps") {
        const long long v = parse_int(value, line_no, key);
        if (v < 1) throw ConfigError(line_no, "n_steps must be >= 1");
        c.simulate.n_steps = static_cast<int>(v);
      } else if (key == "seed") {
        c.simulate.seed = static_cast<std::uint64_t>(parse_int(value, line_no, key));
      } else {
        throw ConfigError(line_no, "unknown key '" + key + "' in [simulate]");
      }
    } else {
      throw ConfigError(line_no, "key '" + key + "' outside any section");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[problem]\n"
      << "group = " << (c.group == GroupId::so2 ? "so2" : "so3") << "\n"
      << "grid_size = " << c.grid_size << "\n"
      << "sigma = " << format_g17(c.sigma) << "\n"
      << "truncation = " << c.truncation << "\n\n"
      << "[endpoints]\n"
      << "family = " << c.endpoints.family << "\n"
      << "kappa0 = " << format_g17(c.endpoints.kappa0) << "\n"
      << "loc0 = " << format_g17(c.endpoints.loc0) << "\n"
      << "kappa1 = " << format_g17(c.endpoints.kappa1) << "\n"
      << "loc1 = " << format_g17(c.endpoints.loc1) << "\n\n"
      << "[solver]\n"
      << "tol = " << format_g17(c.tol) << "\n"
      << "max_iter = " << c.max_iter << "\n\n"
      << "[output]\n"
      << "directory = " << c.directory << "\n"
      << "time_samples = " << c.time_samples << "\n\n"
      << "[simulate]\n"
      << "enabled = " << (c.simulate.enabled ? "true" : "false") << "\n"
      << "n_particles = " << c.simulate.n_particles << "\n"
      << "n_steps = " << c.simulate.n_steps << "\n"
      << "seed = " << c.simulate.seed << "\n";
  return out.str();
}

int run_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
  ExperimentConfig c = config;
  if (overrides.out_dir) c.directory = *overrides.out_dir;
  if (overrides.seed) c.simulate.seed = *overrides.seed;

  const auto grid = make_grid(c.group, c.grid_size);
  const KernelSpec spec{c.sigma, c.truncation};
  const DensityGrid rho0 = make_endpoint(grid, c.endpoints, 0);
  const DensityGrid rho1 = make_endpoint(grid, c.endpoints, 1);
  const auto problem = std::make_shared<BridgeProblem>(grid, rho0, rho1, spec);

  if (overrides.validate_only) return run_validation_suite(*problem) ? 0 : 1;

  const std::filesystem::path dir(c.directory);
  std::filesystem::create_directories(dir);

  SolveOptions options;
  options.tol = c.tol;
  options.max_iter = c.max_iter;
  const SolveResult solved = solve(*problem, options);
  write_convergence_csv(dir / "convergence.csv", solved.report.dh_trace);

  nlohmann::json report;
  report["group"] = c.group == GroupId::so2 ? "so2" : "so3";
  report["grid_size"] = c.grid_size;
  report["sigma"] = c.sigma;
  report["truncation_effective"] = c.group == GroupId::so2
                                       ? spec.so2(*grid).m_max
                                       : spec.so3().l_max;
  report["converged"] = solved.report.converged;
  report["iterations"] = solved.report.iterations;
  report["tol"] = c.tol;
  report["contraction_estimate"] = solved.report.contraction_estimate;
  report["marginal_residual_rho0"] = solved.report.marginal_residual_rho0;
  report["marginal_residual_rho1"] = solved.report.marginal_residual_rho1;
  report["terminal_residual"] = solved.report.terminal_residual;
  report["mass_drift_max"] = nullptr;
  report["argmax"] = nullptr;
  report["shorter_arc"] = nullptr;
  report["argmax_monotone"] = nullptr;
  report["simulation"] = nullptr;

  if (!solved.report.converged) {
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << report.dump(2) << "\n";
    std::cerr << "liebridge: solver did not converge within " << c.max_iter << " iterations\n";
    return 2;
  }

  const BridgeDynamics dynamics(problem, solved.potentials);
  const BridgeSolution sol = make_bridge_solution(dynamics, uniform_times(c.time_samples));

  double mass_drift = 0.0;
  for (std::size_t k = 0; k < sol.time_grid.size(); ++k) {
    mass_drift = std::max(mass_drift, std::abs(sol.rho_opt[k].mass() - 1.0));
    const std::string stamp = fmt3(sol.time_grid[k]);
    write_density_csv(dir / ("density_t" + stamp + ".csv"), sol.rho_opt[k]);
    write_control_csv(dir / ("control_t" + stamp + ".csv"), *grid, sol.control_radial[k]);
  }
  write_solution_svg(dir / "solution.svg", sol);
  report["mass_drift_max"] = mass_drift;

  const Eigen::ArrayXd argmax = argmax_trajectory(sol);
  report["argmax"] = argmax_to_json(argmax);
  if (c.group == GroupId::so2) {
    bool outside_far_arc = true;
    bool crosses_zero = false;
    for (Eigen::Index k = 0; k < argmax.size(); ++k) {
      if (argmax[k] > kPi / 2.0 && argmax[k] < 3.0 * kPi / 2.0) outside_far_arc = false;
      if (k > 0 && std::abs(argmax[k] - argmax[k - 1]) > kPi) crosses_zero = true;
    }
    report["shorter_arc"] = outside_far_arc && crosses_zero;
  } else {
    const double dir_sign = argmax[argmax.size() - 1] >= argmax[0] ? 1.0 : -1.0;
    bool monotone = true;
    for (Eigen::Index k = 1; k < argmax.size(); ++k) {
      if (dir_sign * (argmax[k] - argmax[k - 1]) < -grid->spacing * (1.0 + 1e-12))
        monotone = false;
    }
    report["argmax_monotone"] = monotone;
  }

  if (c.simulate.enabled) {
    // Time knots for the simulated control field: every step boundary plus
    // the reporting times, so interpolation in t is effectively exact and
    // every checkpoint lies on the solution grid.
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(c.simulate.n_steps) + sol.time_grid.size() + 1);
    for (int k = 0; k <= c.simulate.n_steps; ++k)
      knots.push_back(static_cast<double>(k) / c.simulate.n_steps);
    knots.insert(knots.end(), sol.time_grid.begin(), sol.time_grid.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                knots.end());
    const BridgeSolution sim_sol = make_bridge_solution(dynamics, knots);
    const SimulationResult sim = simulate_bridge(sim_sol, c.simulate.n_particles,
                                                 c.simulate.n_steps, c.simulate.seed,
                                                 sol.time_grid);
    nlohmann::json sim_json;
    sim_json["seed"] = c.simulate.seed;
    sim_json["n_particles"] = c.simulate.n_particles;
    sim_json["n_steps"] = c.simulate.n_steps;
    sim_json["max_orthogonality_defect"] = sim.max_orthogonality_defect;
    nlohmann::json cps = nlohmann::json::array();
    for (const CheckpointStats& s : sim.checkpoints)
      cps.push_back({{"time", s.time}, {"tv_distance", s.tv_distance}});
    sim_json["checkpoints"] = std::move(cps);
    report["simulation"] = std::move(sim_json);
  }

  std::ofstream out(dir / "report.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + (dir / "report.json").string());
  out << report.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + (dir / "report.json").string());
  return 0;
}

}  // namespace liebridge
