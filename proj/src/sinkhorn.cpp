#include "liebridge/sinkhorn.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace liebridge {

namespace {
// Trace entries below this are dominated by rounding noise of the log-domain
// applies; ratios between them say nothing about the contraction factor.
constexpr double kTraceFloor = 1e-14;

void require_density_on(const GroupGrid& grid, const DensityGrid& rho, const char* name) {
  if (!rho.grid || !same_grid(*rho.grid, grid))
    throw std::invalid_argument(std::string("BridgeProblem: ") + name +
                                " does not live on the problem grid");
  if (rho.values.size() != static_cast<Eigen::Index>(grid.size()))
    throw std::invalid_argument(std::string("BridgeProblem: ") + name + " has wrong size");
  for (Eigen::Index i = 0; i < rho.values.size(); ++i) {
    if (!std::isfinite(rho.values[i]) || rho.values[i] <= 0.0)
      throw std::invalid_argument(std::string("BridgeProblem: ") + name +
                                  " must be strictly positive");
  }
  if (std::abs(rho.mass() - 1.0) > 1e-10)
    throw std::invalid_argument(std::string("BridgeProblem: ") + name + " must have unit mass");
}
}  // namespace

BridgeProblem::BridgeProblem(std::shared_ptr<const GroupGrid> grid, DensityGrid rho0,
                             DensityGrid rho1, KernelSpec kernel)
    : grid_(std::move(grid)),
      rho0_(std::move(rho0)),
      rho1_(std::move(rho1)),
      kernel_(kernel),
      cache_(grid_, kernel) {
  if (!grid_) throw std::invalid_argument("BridgeProblem: null grid");
  if (!std::isfinite(kernel_.sigma) || kernel_.sigma <= 0.0)
    throw std::invalid_argument("BridgeProblem: kernel sigma must be finite and > 0");
  if (kernel_.truncation < 0)
    throw std::invalid_argument("BridgeProblem: kernel truncation must be >= 0");
  require_density_on(*grid_, rho0_, "rho0");
  require_density_on(*grid_, rho1_, "rho1");
}

PositiveGridFunction sinkhorn_step(const BridgeProblem& p, const PositiveGridFunction& log_phi1) {
  if (!same_grid(log_phi1.grid(), p.grid()))
    throw std::invalid_argument("sinkhorn_step: phi1 lives on another grid");
  const auto t1 = p.t1();
  const PositiveGridFunction phihat0 = pointwise_ratio(p.rho0(), t1->apply(log_phi1));
  const PositiveGridFunction next = pointwise_ratio(p.rho1(), t1->apply(phihat0));
  if (!next.log_values().isFinite().all())
    throw std::runtime_error(
        "sinkhorn_step: non-finite iterate (kernel underflow; sigma or horizon outside the "
        "validated regime)");
  return normalize_sup(next);
}

SolveResult solve(const BridgeProblem& p, const SolveOptions& options) {
  if (!(options.tol > 0.0) || !std::isfinite(options.tol))
    throw std::invalid_argument("solve: tol must be finite and > 0");
  if (options.max_iter < 1) throw std::invalid_argument("solve: max_iter must be >= 1");

  const auto n = static_cast<Eigen::Index>(p.grid().size());
  Eigen::ArrayXd init = Eigen::ArrayXd::Zero(n);
  if (options.initial_log_phi1) {
    if (options.initial_log_phi1->size() != n)
      throw std::invalid_argument("solve: initial_log_phi1 size does not match grid");
    init = *options.initial_log_phi1;
  }

  PositiveGridFunction phi1 = normalize_sup(PositiveGridFunction(p.grid_ptr(), init));

  ConvergenceReport report;
  for (int k = 0; k < options.max_iter; ++k) {
    PositiveGridFunction next = sinkhorn_step(p, phi1);
    const double d = hilbert_distance(next, phi1);
    report.dh_trace.push_back(d);
    phi1 = std::move(next);
    report.iterations = k + 1;
    if (d < options.tol) {
      report.converged = true;
      break;
    }
  }

  // Contraction estimate: geometric mean of consecutive trace ratios where
  // both entries are above the noise floor.
  double log_sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k + 1 < report.dh_trace.size(); ++k) {
    const double a = report.dh_trace[k];
    const double b = report.dh_trace[k + 1];
    if (a > kTraceFloor && b > kTraceFloor) {
      log_sum += std::log(b / a);
      ++count;
    }
  }
  report.contraction_estimate = count > 0 ? std::exp(log_sum / count) : 0.0;

  const auto t1 = p.t1();
  PositiveGridFunction phihat0 = pointwise_ratio(p.rho0(), t1->apply(phi1));

  const Eigen::ArrayXd lhs0 = (phihat0.log_values() + t1->apply(phi1).log_values()).exp();
  const Eigen::ArrayXd lhs1 = (phi1.log_values() + t1->apply(phihat0).log_values()).exp();
  report.marginal_residual_rho0 =
      (lhs0 - p.rho0().values).abs().maxCoeff() / p.rho0().values.abs().maxCoeff();
  report.marginal_residual_rho1 =
      (lhs1 - p.rho1().values).abs().maxCoeff() / p.rho1().values.abs().maxCoeff();
  report.terminal_residual =
      std::max(report.marginal_residual_rho0, report.marginal_residual_rho1);

  return SolveResult{SchrodingerPotentials{std::move(phi1), std::move(phihat0)},
                     std::move(report)};
}

}  // namespace liebridge
