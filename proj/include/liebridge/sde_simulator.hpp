#pragma once

#include "liebridge/bridge_control.hpp"

#include <cstdint>
#include <vector>

namespace liebridge {

// Particle cloud on the group at a common time.  Each particle owns an
// independent RNG stream derived from the ensemble seed by the documented
// splitting rule  state_p = seed + p  (splitmix64 over that state), so
// trajectories are bit-reproducible for a given seed regardless of the
// thread count, and the streams survive in rng_state across steps.
struct ParticleEnsemble {
  GroupId group = GroupId::so2;
  double time = 0.0;
  std::uint64_t rng_seed = 0;
  std::vector<RotationElement> states;
  std::vector<std::uint64_t> rng_state;

  std::size_t size() const { return states.size(); }
};

// splitmix64 step: advances state and returns a 64-bit output.
std::uint64_t splitmix64_next(std::uint64_t& state);
// Uniform on (0, 1): ((x >> 11) + 0.5) * 2^-53, never exactly 0 or 1.
double uniform01(std::uint64_t& state);
// Standard normal by Box-Muller; consumes exactly two uniforms per call.
double standard_normal(std::uint64_t& state);

// Controller sampled on grid nodes, interpolated linearly at particle
// coordinates: periodically on so2, clamped at the interval ends on the so3
// class grid (nodes are cell midpoints).
struct ControlField {
  std::shared_ptr<const GroupGrid> grid;
  Eigen::ArrayXd radial;
};

double eval_control(const ControlField& field, double angle);

// Draws n particles at t=0 from rho0: inverse CDF over node masses plus a
// uniform jitter inside the node cell (so2), or rejection sampling of the
// rotation angle against the piecewise-linear Haar-weighted class density
// with a uniformly random axis (so3).  n < 1000 is rejected.
ParticleEnsemble sample_initial_ensemble(const DensityGrid& rho0, std::size_t n_particles,
                                         std::uint64_t seed);

// One geometric Euler-Maruyama step
//   R <- R . exp(hat(Omega dt + sigma sqrt(dt) xi)),   xi ~ N(0, I_dim)
// which stays on the manifold exactly.  For the field overload the control
// is m(theta) along the particle's own rotation axis; the TangentVector
// overload applies a constant algebra element (axis fixed in the body
// frame).  sigma >= 0, dt > 0.
ParticleEnsemble step(ParticleEnsemble ens, const ControlField& control, double sigma, double dt);
ParticleEnsemble step(ParticleEnsemble ens, const TangentVector& control, double sigma,
                      double dt);

// Haar-weighted histogram on the grid: value[i] = share of particles in node
// i's cell divided by the cell's Haar weight, so it estimates a density and
// sums to 1 against the weights.
Eigen::ArrayXd empirical_density(const GroupGrid& grid, const ParticleEnsemble& ens);

// Total variation between two grid densities after rebinning cells into
// n_bins cell-aligned groups (bin of cell i = i * n_bins / N).
double tv_distance_rebinned(const GroupGrid& grid, const Eigen::ArrayXd& density_a,
                            const Eigen::ArrayXd& density_b, int n_bins = 64);

struct CheckpointStats {
  double time = 0.0;
  Eigen::ArrayXd empirical;  // Haar-weighted histogram on the solution grid
  double tv_distance = 0.0;  // to rho_opt(., time), 64-bin rebinned
};

struct SimulationResult {
  std::vector<CheckpointStats> checkpoints;
  // max over particles and checkpoints of the orthogonality defect; 0 on so2
  // where states are stored as angles.
  double max_orthogonality_defect = 0.0;
};

// Closed-loop validation: integrates n_particles from rho0 to t=1 in n_steps
// uniform steps under the solved controller, interpolated linearly in time
// between the solution's time-grid slices and linearly in space on the grid.
// Histograms and TV distances are recorded at each checkpoint time (default:
// the solution's whole time grid), each snapped to the nearest step boundary
// (within dt/2 by construction).
SimulationResult simulate_bridge(const BridgeSolution& sol, std::size_t n_particles,
                                 int n_steps, std::uint64_t seed,
                                 std::vector<double> checkpoint_times = {});

}  // namespace liebridge
