#include "liebridge/bridge_control.hpp"

#include "liebridge/fft.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace liebridge {

namespace {

void require_unit_time(double t, const char* who) {
  if (!std::isfinite(t) || t < 0.0 || t > 1.0)
    throw std::invalid_argument(std::string(who) + ": t must lie in [0, 1]");
}

// 2nd-order first derivative on the uniform class grid; one-sided at the ends.
Eigen::ArrayXd fd_derivative(const Eigen::ArrayXd& f, double h) {
  const Eigen::Index n = f.size();
  Eigen::ArrayXd out(n);
  out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (Eigen::Index i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return out;
}

// 2nd-order second derivative, one-sided at the ends.
Eigen::ArrayXd fd_second_derivative(const Eigen::ArrayXd& f, double h) {
  const Eigen::Index n = f.size();
  const double h2 = h * h;
  Eigen::ArrayXd out(n);
  out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
  for (Eigen::Index i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
  out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  return out;
}

}  // namespace

BridgeDynamics::BridgeDynamics(std::shared_ptr<const BridgeProblem> problem,
                               SchrodingerPotentials potentials)
    : problem_(std::move(problem)), potentials_(std::move(potentials)) {
  if (!problem_) throw std::invalid_argument("BridgeDynamics: null problem");
  if (!same_grid(potentials_.log_phi1.grid(), problem_->grid()) ||
      !same_grid(potentials_.log_phihat0.grid(), problem_->grid()))
    throw std::invalid_argument("BridgeDynamics: potentials live on another grid");
}

std::pair<PositiveGridFunction, PositiveGridFunction> BridgeDynamics::propagate_potentials(
    double t) const {
  require_unit_time(t, "propagate_potentials");
  const auto& cache = problem_->cache();
  // T_0 is the identity: hand back the stored endpoint potentials untouched.
  PositiveGridFunction phi =
      t == 1.0 ? potentials_.log_phi1 : cache.at(1.0 - t)->apply(potentials_.log_phi1);
  PositiveGridFunction phihat =
      t == 0.0 ? potentials_.log_phihat0 : cache.at(t)->apply(potentials_.log_phihat0);
  return {std::move(phi), std::move(phihat)};
}

DensityGrid BridgeDynamics::density_from(const PositiveGridFunction& log_phi,
                                         const PositiveGridFunction& log_phihat,
                                         double t_diag) const {
  DensityGrid rho{problem_->grid_ptr(), (log_phi.log_values() + log_phihat.log_values()).exp()};
  const double drift = std::abs(rho.mass() - 1.0);
  if (drift > 1e-4)
    throw std::runtime_error("density_at: mass drift " + std::to_string(drift) +
                             " at t=" + std::to_string(t_diag) +
                             " (kernel truncation or grid inadequate)");
  if (drift > 1e-6)
    std::cerr << "liebridge: warning: rho_opt mass drift " << drift << " at t=" << t_diag
              << "\n";
  return rho;
}

Eigen::ArrayXd BridgeDynamics::control_from(const PositiveGridFunction& log_phi) const {
  const double s2 = problem_->sigma() * problem_->sigma();
  const GroupGrid& grid = problem_->grid();
  if (grid.group == GroupId::so2) {
    const auto fft = CircleFft::shared(grid.size());
    return s2 * spectral_derivative(*fft, log_phi.log_values());
  }
  return s2 * fd_derivative(log_phi.log_values(), grid.spacing);
}

DensityGrid BridgeDynamics::density_at(double t) const {
  const auto [phi, phihat] = propagate_potentials(t);
  return density_from(phi, phihat, t);
}

Eigen::ArrayXd BridgeDynamics::control_radial_at(double t) const {
  return control_from(propagate_potentials(t).first);
}

std::vector<TangentVector> BridgeDynamics::control_at(double t) const {
  const Eigen::ArrayXd radial = control_radial_at(t);
  std::vector<TangentVector> out(static_cast<std::size_t>(radial.size()));
  const bool so2 = problem_->grid().group == GroupId::so2;
  for (Eigen::Index i = 0; i < radial.size(); ++i) {
    TangentVector& v = out[static_cast<std::size_t>(i)];
    v.group = problem_->grid().group;
    v.coords = so2 ? Eigen::Vector3d(radial[i], 0.0, 0.0) : Eigen::Vector3d(0.0, 0.0, radial[i]);
  }
  return out;
}

Eigen::ArrayXd BridgeDynamics::value_function_at(double t) const {
  const auto [phi, phihat] = propagate_potentials(t);
  (void)phihat;
  return problem_->sigma() * problem_->sigma() * phi.log_values();
}

double BridgeDynamics::fokker_planck_residual(double t, double dt, bool zero_control) const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("fokker_planck_residual: dt must be finite and > 0");
  if (t - dt < 0.0 || t + dt > 1.0)
    throw std::invalid_argument("fokker_planck_residual: stencil leaves [0, 1]");

  const Eigen::ArrayXd rho_minus = density_at(t - dt).values;
  const Eigen::ArrayXd rho_plus = density_at(t + dt).values;
  const Eigen::ArrayXd rho = density_at(t).values;
  const Eigen::ArrayXd drho_dt = (rho_plus - rho_minus) / (2.0 * dt);

  const GroupGrid& grid = problem_->grid();
  const double s2 = problem_->sigma() * problem_->sigma();

  Eigen::ArrayXd transport = Eigen::ArrayXd::Zero(rho.size());
  Eigen::ArrayXd lap_rho(rho.size());
  if (grid.group == GroupId::so2) {
    const auto fft = CircleFft::shared(grid.size());
    Eigen::ArrayXd neg_m2(grid.size() / 2 + 1);
    for (Eigen::Index m = 0; m < neg_m2.size(); ++m)
      neg_m2[m] = -static_cast<double>(m) * static_cast<double>(m);
    lap_rho = apply_spectral_multiplier(*fft, rho, neg_m2);
    if (!zero_control) {
      const Eigen::ArrayXd s = value_function_at(t);
      const Eigen::ArrayXd flux = rho * spectral_derivative(*fft, s);
      transport = spectral_derivative(*fft, flux);
    }
  } else {
    // Class-function Laplacian: Lap f = f'' + cot(theta/2) f'.
    const Eigen::ArrayXd cot_half = (grid.nodes / 2.0).cos() / (grid.nodes / 2.0).sin();
    const Eigen::ArrayXd rho_p = fd_derivative(rho, grid.spacing);
    lap_rho = fd_second_derivative(rho, grid.spacing) + cot_half * rho_p;
    if (!zero_control) {
      const Eigen::ArrayXd s = value_function_at(t);
      const Eigen::ArrayXd s_p = fd_derivative(s, grid.spacing);
      const Eigen::ArrayXd s_pp = fd_second_derivative(s, grid.spacing);
      // div(rho grad S) = rho' S' + rho (S'' + cot(theta/2) S')
      transport = rho_p * s_p + rho * (s_pp + cot_half * s_p);
    }
  }

  const Eigen::ArrayXd residual = drho_dt + transport - 0.5 * s2 * lap_rho;
  return std::sqrt((grid.weights * residual.square()).sum());
}

std::vector<double> uniform_times(int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("uniform_times: need at least 2 samples");
  std::vector<double> times(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k)
    times[static_cast<std::size_t>(k)] = static_cast<double>(k) / (n_samples - 1);
  times.back() = 1.0;
  return times;
}

BridgeSolution make_bridge_solution(const BridgeDynamics& dynamics,
                                    const std::vector<double>& times) {
  if (times.empty()) throw std::invalid_argument("make_bridge_solution: empty time grid");
  for (std::size_t k = 0; k < times.size(); ++k) {
    require_unit_time(times[k], "make_bridge_solution");
    if (k > 0 && times[k] <= times[k - 1])
      throw std::invalid_argument("make_bridge_solution: times must be strictly increasing");
  }

  BridgeSolution sol;
  sol.problem = dynamics.problem_ptr();
  sol.time_grid = times;
  sol.rho_opt.reserve(times.size());
  sol.log_phi.reserve(times.size());
  sol.log_phihat.reserve(times.size());
  sol.value_function.reserve(times.size());
  sol.control_radial.reserve(times.size());
  sol.control.reserve(times.size());
  const double s2 = dynamics.problem().sigma() * dynamics.problem().sigma();
  const bool so2 = dynamics.problem().grid().group == GroupId::so2;
  for (const double t : times) {
    auto [phi, phihat] = dynamics.propagate_potentials(t);
    sol.rho_opt.push_back(dynamics.density_from(phi, phihat, t));
    sol.value_function.push_back(s2 * phi.log_values());
    sol.control_radial.push_back(dynamics.control_from(phi));
    std::vector<TangentVector> ctrl(static_cast<std::size_t>(sol.control_radial.back().size()));
    for (Eigen::Index i = 0; i < sol.control_radial.back().size(); ++i) {
      ctrl[static_cast<std::size_t>(i)].group = dynamics.problem().grid().group;
      const double m = sol.control_radial.back()[i];
      ctrl[static_cast<std::size_t>(i)].coords =
          so2 ? Eigen::Vector3d(m, 0.0, 0.0) : Eigen::Vector3d(0.0, 0.0, m);
    }
    sol.control.push_back(std::move(ctrl));
    sol.log_phi.push_back(std::move(phi));
    sol.log_phihat.push_back(std::move(phihat));
  }
  return sol;
}

}  // namespace liebridge
