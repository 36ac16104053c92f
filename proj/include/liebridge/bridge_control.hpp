#pragma once

#include "liebridge/sinkhorn.hpp"

#include <utility>
#include <vector>

namespace liebridge {

// Time-indexed view of a solved bridge.  Wraps the converged potentials and
// answers queries at any t in [0, 1]:
//   phi(.,t)    = T_{1-t} phi1        (backward potential)
//   phihat(.,t) = T_t phihat0         (forward potential)
//   rho_opt     = phi . phihat        (never renormalised)
//   S           = sigma^2 log phi     (value function)
//   Omega_opt   = sigma^2 d/dtheta log phi  (radial controller component)
// Queries are pure and safe to call concurrently.
class BridgeDynamics {
 public:
  BridgeDynamics(std::shared_ptr<const BridgeProblem> problem, SchrodingerPotentials potentials);

  // (log phi, log phihat) at t; the t=1 phi and t=0 phihat are returned
  // bit-exact (no operator is applied).  t outside [0,1] throws.
  std::pair<PositiveGridFunction, PositiveGridFunction> propagate_potentials(double t) const;

  // exp(log phi + log phihat); unit mass must emerge from the math.  Drift
  // beyond 1e-6 prints a diagnostic, beyond 1e-4 throws std::runtime_error
  // (kernel truncation or grid inadequate for this problem).
  DensityGrid density_at(double t) const;

  // Scalar controller field per node: sigma^2 d/dtheta log phi, spectral on
  // so2, 2nd-order centred differences (one-sided at the interval ends) on
  // the so3 class grid.
  Eigen::ArrayXd control_radial_at(double t) const;

  // Same computations on potentials already propagated to some t (t_diag is
  // only quoted in mass-drift diagnostics); lets batch assembly propagate
  // once per time instead of once per queried quantity.
  DensityGrid density_from(const PositiveGridFunction& log_phi,
                           const PositiveGridFunction& log_phihat, double t_diag) const;
  Eigen::ArrayXd control_from(const PositiveGridFunction& log_phi) const;

  // Same field as TangentVectors: coords[0] on so2; (0, 0, m) on so3_class,
  // the algebra vector at the class representative with rotation axis e_z.
  std::vector<TangentVector> control_at(double t) const;

  // Value function S = sigma^2 log phi at t.
  Eigen::ArrayXd value_function_at(double t) const;

  // Haar-weighted L2 norm of the discrete forward-equation residual
  //   (rho(t+dt) - rho(t-dt)) / (2 dt) + div(rho grad S) - (sigma^2/2) Lap rho
  // at time t.  Spatial operators are spectral (so2) or radial finite
  // differences with Lap f = f'' + cot(theta/2) f' (so3 class functions).
  // zero_control drops the div term (uncontrolled heat flow, for contrast).
  // Requires dt > 0 and t +- dt inside [0, 1].
  double fokker_planck_residual(double t, double dt, bool zero_control = false) const;

  const BridgeProblem& problem() const { return *problem_; }
  const std::shared_ptr<const BridgeProblem>& problem_ptr() const { return problem_; }
  const SchrodingerPotentials& potentials() const { return potentials_; }

 private:
  std::shared_ptr<const BridgeProblem> problem_;
  SchrodingerPotentials potentials_;
};

// Materialised bridge: everything the CLI serialises and the simulator
// consumes, sampled on a fixed time grid.  Assembled once, immutable after.
struct BridgeSolution {
  std::shared_ptr<const BridgeProblem> problem;
  std::vector<double> time_grid;
  std::vector<DensityGrid> rho_opt;
  std::vector<PositiveGridFunction> log_phi;
  std::vector<PositiveGridFunction> log_phihat;
  std::vector<Eigen::ArrayXd> value_function;
  std::vector<Eigen::ArrayXd> control_radial;
  std::vector<std::vector<TangentVector>> control;
};

// times must be sorted, within [0, 1], and non-empty.
BridgeSolution make_bridge_solution(const BridgeDynamics& dynamics,
                                    const std::vector<double>& times);

// n_samples uniform times on [0, 1] (default figure-style sampling is 21).
std::vector<double> uniform_times(int n_samples = 21);

}  // namespace liebridge
