#pragma once

#include "liebridge/heat_semigroup.hpp"
#include "liebridge/hilbert_metric.hpp"

#include <optional>
#include <vector>

namespace liebridge {

// One Schrödinger bridge instance: steer rho0 to rho1 over t in [0, 1] under
// diffusion strength sigma.  Immutable after construction; owns an operator
// cache so repeated semigroup requests (T_1 during the solve, interior times
// afterwards) are built once.
class BridgeProblem {
 public:
  // Both densities must live on `grid`; throws std::invalid_argument
  // otherwise (positivity and unit mass are DensityGrid's own contract,
  // revalidated here so aggregate-built inputs cannot sneak through).
  BridgeProblem(std::shared_ptr<const GroupGrid> grid, DensityGrid rho0, DensityGrid rho1,
                KernelSpec kernel);

  const GroupGrid& grid() const { return *grid_; }
  const std::shared_ptr<const GroupGrid>& grid_ptr() const { return grid_; }
  const DensityGrid& rho0() const { return rho0_; }
  const DensityGrid& rho1() const { return rho1_; }
  const KernelSpec& kernel() const { return kernel_; }
  double sigma() const { return kernel_.sigma; }

  const OperatorCache& cache() const { return cache_; }
  // The horizon map T_1; built on first use, shared afterwards.
  std::shared_ptr<const SemigroupOperator> t1() const { return cache_.at(1.0); }

 private:
  std::shared_ptr<const GroupGrid> grid_;
  DensityGrid rho0_;
  DensityGrid rho1_;
  KernelSpec kernel_;
  OperatorCache cache_;
};

// Converged potential pair of the Schrödinger system
//   rho0 = phihat0 . T_1 phi1,   rho1 = phi1 . T_1 phihat0,
// stored in the log domain, unique up to reciprocal scaling.
struct SchrodingerPotentials {
  PositiveGridFunction log_phi1;
  PositiveGridFunction log_phihat0;
};

struct ConvergenceReport {
  int iterations = 0;
  // dH_trace[k] = d_H(phi1 after step k+1, phi1 after step k).
  std::vector<double> dh_trace;
  // Geometric mean of successive trace ratios over entries above the noise
  // floor; 0 when fewer than two usable entries exist.
  double contraction_estimate = 0.0;
  // max of the two marginal residuals below.
  double terminal_residual = 0.0;
  // Relative sup-norm residuals of the two marginal equations.
  double marginal_residual_rho0 = 0.0;
  double marginal_residual_rho1 = 0.0;
  bool converged = false;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 500;
  // Defaults to log(1) = 0 everywhere; must match the grid size if set.
  std::optional<Eigen::ArrayXd> initial_log_phi1;
};

struct SolveResult {
  SchrodingerPotentials potentials;
  ConvergenceReport report;
};

// One sup-normalised Sinkhorn step
//   phi1 <- N( rho1 / T_1( rho0 / T_1 phi1 ) ),
// every intermediate in the log domain.  Throws std::runtime_error if any
// intermediate goes non-finite (kernel underflow outside the validated
// sigma/t regime).
PositiveGridFunction sinkhorn_step(const BridgeProblem& p, const PositiveGridFunction& log_phi1);

// Fixed-point iteration of sinkhorn_step until d_H between consecutive
// iterates falls below tol or max_iter is hit (converged=false then; the
// trace is still returned).  phihat0 is recovered post hoc as rho0 / T_1 phi1
// and both marginal residuals are recomputed and stored.
SolveResult solve(const BridgeProblem& p, const SolveOptions& options = {});

}  // namespace liebridge
