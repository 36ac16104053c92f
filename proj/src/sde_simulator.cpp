#include "liebridge/sde_simulator.hpp"

#include "liebridge/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace liebridge {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

void require_step_params(double sigma, double dt) {
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw std::invalid_argument("step: sigma must be finite and >= 0");
  if (!std::isfinite(dt) || dt <= 0.0)
    throw std::invalid_argument("step: dt must be finite and > 0");
}

// Advances every particle by one exponential-map step; omega maps a state to
// algebra coordinates (coords[0] used on so2).  The per-particle RNG stream
// makes the result independent of the parallel chunking.
template <typename OmegaFn>
void advance(ParticleEnsemble& ens, double sigma, double dt, const OmegaFn& omega) {
  const double noise = sigma * std::sqrt(dt);
  if (ens.group == GroupId::so2) {
    parallel_for(ens.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        const double drift = omega(ens.states[p])[0] * dt;
        const double dw = noise * standard_normal(ens.rng_state[p]);
        ens.states[p].angle = wrap_angle(ens.states[p].angle + drift + dw);
      }
    });
  } else {
    parallel_for(ens.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        Eigen::Vector3d w = omega(ens.states[p]) * dt;
        for (int i = 0; i < 3; ++i) w[i] += noise * standard_normal(ens.rng_state[p]);
        ens.states[p].R = ens.states[p].R * exp_so3(w);
      }
    });
  }
  ens.time += dt;
}

// Linear interpolation of a nodal field at an angle; no copies, no checks
// (callers validate sizes once).
double lerp_radial(const GroupGrid& grid, const Eigen::ArrayXd& radial, double angle) {
  const auto n = radial.size();
  const double h = grid.spacing;
  if (grid.group == GroupId::so2) {
    const double x = wrap_angle(angle) / h;
    auto i0 = static_cast<Eigen::Index>(std::floor(x));
    if (i0 >= n) i0 = 0;  // guards x == n from rounding
    const double frac = x - static_cast<double>(i0);
    return (1.0 - frac) * radial[i0] + frac * radial[(i0 + 1) % n];
  }
  // class grid: nodes at (i + 1/2) h, clamp beyond the outermost nodes
  const double x = angle / h - 0.5;
  if (x <= 0.0) return radial[0];
  if (x >= static_cast<double>(n - 1)) return radial[n - 1];
  const auto i0 = static_cast<Eigen::Index>(std::floor(x));
  const double frac = x - static_cast<double>(i0);
  return (1.0 - frac) * radial[i0] + frac * radial[i0 + 1];
}

// Control vector for the grid-field case: scalar on so2; m(theta) along the
// particle's own rotation axis on so3 (the axis is ill-defined only at
// theta = 0, where m vanishes for class potentials, so e_z is a safe stand-in).
Eigen::Vector3d field_omega(const ControlField& field, const RotationElement& g) {
  if (g.group == GroupId::so2) return {eval_control(field, g.angle), 0.0, 0.0};
  const Eigen::Vector3d v = log_so3(g.R);
  const double theta = v.norm();
  const Eigen::Vector3d axis = theta > 1e-12 ? (v / theta).eval() : Eigen::Vector3d(0, 0, 1);
  return eval_control(field, theta) * axis;
}

std::size_t cell_of_angle(const GroupGrid& grid, double angle) {
  const auto n = grid.size();
  if (grid.group == GroupId::so2) {
    // nearest node: cells are centred on the nodes
    const auto c = static_cast<std::size_t>(std::llround(wrap_angle(angle) / grid.spacing));
    return c % n;
  }
  // midpoint nodes: cell i covers [i h, (i+1) h)
  const double x = std::floor(angle / grid.spacing);
  if (x <= 0.0) return 0;
  return std::min(n - 1, static_cast<std::size_t>(x));
}
}  // namespace

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return (static_cast<double>(splitmix64_next(state) >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::uint64_t& state) {
  const double u1 = uniform01(state);
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double eval_control(const ControlField& field, double angle) {
  if (!field.grid) throw std::invalid_argument("eval_control: null grid");
  if (field.radial.size() != static_cast<Eigen::Index>(field.grid->size()))
    throw std::invalid_argument("eval_control: field size does not match grid");
  return lerp_radial(*field.grid, field.radial, angle);
}

ParticleEnsemble sample_initial_ensemble(const DensityGrid& rho0, std::size_t n_particles,
                                         std::uint64_t seed) {
  if (n_particles < 1000)
    throw std::invalid_argument("sample_initial_ensemble: need at least 1000 particles");
  if (!rho0.grid) throw std::invalid_argument("sample_initial_ensemble: null grid");
  const GroupGrid& grid = *rho0.grid;
  const auto n_nodes = static_cast<Eigen::Index>(grid.size());

  ParticleEnsemble ens;
  ens.group = grid.group;
  ens.time = 0.0;
  ens.rng_seed = seed;
  ens.states.resize(n_particles);
  ens.rng_state.resize(n_particles);
  for (std::size_t p = 0; p < n_particles; ++p)
    ens.rng_state[p] = seed + static_cast<std::uint64_t>(p);

  if (grid.group == GroupId::so2) {
    // inverse CDF over node masses, then a uniform jitter inside the cell
    Eigen::ArrayXd cum(n_nodes);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_nodes; ++i) {
      acc += rho0.values[i] * grid.weights[i];
      cum[i] = acc;
    }
    cum /= acc;
    parallel_for(n_particles, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        const double u = uniform01(ens.rng_state[p]);
        Eigen::Index lo = 0, hi = n_nodes - 1;
        while (lo < hi) {
          const Eigen::Index mid = (lo + hi) / 2;
          if (cum[mid] < u)
            lo = mid + 1;
          else
            hi = mid;
        }
        const double jitter = (uniform01(ens.rng_state[p]) - 0.5) * grid.spacing;
        ens.states[p] = make_rotation_so2(wrap_angle(grid.nodes[lo] + jitter));
      }
    });
    return ens;
  }

  // Rejection sampling of the rotation angle against the piecewise-linear
  // interpolant of g(theta) = rho(theta) * haar(theta); below the first node
  // the interpolant runs linearly to g(0) = 0, above the last it is constant.
  Eigen::ArrayXd g = rho0.values * grid.weights / grid.spacing;
  const double bound = g.maxCoeff();
  const double h = grid.spacing;
  const auto g_at = [&](double theta) {
    const double x = theta / h - 0.5;
    if (x <= 0.0) return g[0] * theta / (0.5 * h);
    if (x >= static_cast<double>(n_nodes - 1)) return g[n_nodes - 1];
    const auto i0 = static_cast<Eigen::Index>(std::floor(x));
    const double frac = x - static_cast<double>(i0);
    return (1.0 - frac) * g[i0] + frac * g[i0 + 1];
  };
  parallel_for(n_particles, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double theta = 0.0;
      bool accepted = false;
      for (int it = 0; it < 100000 && !accepted; ++it) {
        theta = kPi * uniform01(ens.rng_state[p]);
        accepted = uniform01(ens.rng_state[p]) * bound <= g_at(theta);
      }
      if (!accepted)
        throw std::runtime_error("sample_initial_ensemble: rejection sampling stalled");
      const double z = 2.0 * uniform01(ens.rng_state[p]) - 1.0;
      const double psi = kTwoPi * uniform01(ens.rng_state[p]);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const Eigen::Vector3d axis(r * std::cos(psi), r * std::sin(psi), z);
      ens.states[p] = make_rotation_so3(exp_so3(theta * axis));
    }
  });
  return ens;
}

ParticleEnsemble step(ParticleEnsemble ens, const ControlField& control, double sigma,
                      double dt) {
  require_step_params(sigma, dt);
  if (!control.grid || control.grid->group != ens.group)
    throw std::invalid_argument("step: control field group does not match ensemble");
  advance(ens, sigma, dt,
          [&](const RotationElement& g) { return field_omega(control, g); });
  return ens;
}

ParticleEnsemble step(ParticleEnsemble ens, const TangentVector& control, double sigma,
                      double dt) {
  require_step_params(sigma, dt);
  if (control.group != ens.group)
    throw std::invalid_argument("step: control group does not match ensemble");
  advance(ens, sigma, dt, [&](const RotationElement&) { return control.coords; });
  return ens;
}

Eigen::ArrayXd empirical_density(const GroupGrid& grid, const ParticleEnsemble& ens) {
  if (grid.group != ens.group)
    throw std::invalid_argument("empirical_density: grid group does not match ensemble");
  if (ens.states.empty()) throw std::invalid_argument("empirical_density: empty ensemble");
  Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const RotationElement& g : ens.states) {
    const double angle = grid.group == GroupId::so2 ? g.angle : rotation_angle(g.R);
    counts[static_cast<Eigen::Index>(cell_of_angle(grid, angle))] += 1.0;
  }
  return counts / (static_cast<double>(ens.size()) * grid.weights);
}

double tv_distance_rebinned(const GroupGrid& grid, const Eigen::ArrayXd& density_a,
                            const Eigen::ArrayXd& density_b, int n_bins) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (density_a.size() != n || density_b.size() != n)
    throw std::invalid_argument("tv_distance_rebinned: density size does not match grid");
  if (n_bins < 1 || static_cast<Eigen::Index>(n_bins) > n)
    throw std::invalid_argument("tv_distance_rebinned: n_bins must be in [1, grid size]");
  Eigen::ArrayXd pa = Eigen::ArrayXd::Zero(n_bins);
  Eigen::ArrayXd pb = Eigen::ArrayXd::Zero(n_bins);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto b = static_cast<Eigen::Index>(static_cast<std::size_t>(i) *
                                             static_cast<std::size_t>(n_bins) /
                                             static_cast<std::size_t>(n));
    pa[b] += density_a[i] * grid.weights[i];
    pb[b] += density_b[i] * grid.weights[i];
  }
  return 0.5 * (pa - pb).abs().sum();
}

SimulationResult simulate_bridge(const BridgeSolution& sol, std::size_t n_particles,
                                 int n_steps, std::uint64_t seed,
                                 std::vector<double> checkpoint_times) {
  if (!sol.problem) throw std::invalid_argument("simulate_bridge: solution has no problem");
  if (sol.time_grid.empty() || sol.time_grid.size() != sol.control_radial.size() ||
      sol.time_grid.size() != sol.rho_opt.size())
    throw std::invalid_argument("simulate_bridge: inconsistent solution");
  if (n_steps < 1) throw std::invalid_argument("simulate_bridge: n_steps must be >= 1");
  if (checkpoint_times.empty()) checkpoint_times = sol.time_grid;

  const auto grid_ptr = sol.problem->grid_ptr();
  const GroupGrid& grid = *grid_ptr;
  const double dt = 1.0 / n_steps;
  const double sigma = sol.problem->sigma();

  // Each checkpoint must sit on the solution time grid (for the rho_opt
  // reference) and is recorded at its nearest step boundary.
  struct Checkpoint {
    double time;
    std::size_t slice;  // index into sol arrays
    int step;           // step boundary where the histogram is taken
  };
  std::vector<Checkpoint> cps;
  for (const double t : checkpoint_times) {
    std::size_t slice = sol.time_grid.size();
    for (std::size_t j = 0; j < sol.time_grid.size(); ++j) {
      if (std::abs(sol.time_grid[j] - t) < 1e-9) {
        slice = j;
        break;
      }
    }
    if (slice == sol.time_grid.size())
      throw std::invalid_argument("simulate_bridge: checkpoint time not on the solution grid");
    const int k = static_cast<int>(std::llround(t * n_steps));
    cps.push_back({t, slice, std::min(std::max(k, 0), n_steps)});
  }
  std::vector<std::vector<std::size_t>> cp_at_step(static_cast<std::size_t>(n_steps) + 1);
  for (std::size_t c = 0; c < cps.size(); ++c)
    cp_at_step[static_cast<std::size_t>(cps[c].step)].push_back(c);

  // Piecewise-linear time interpolation of the control slices, precombined
  // into one field per step (control is evaluated at the step's left edge).
  std::vector<Eigen::ArrayXd> field(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    std::size_t j = 0;
    while (j + 2 < sol.time_grid.size() && sol.time_grid[j + 1] <= t) ++j;
    if (sol.time_grid.size() == 1) {
      field[static_cast<std::size_t>(k)] = sol.control_radial[0];
    } else {
      const double t0 = sol.time_grid[j], t1 = sol.time_grid[j + 1];
      double lam = (t - t0) / (t1 - t0);
      lam = std::min(1.0, std::max(0.0, lam));
      field[static_cast<std::size_t>(k)] =
          (1.0 - lam) * sol.control_radial[j] + lam * sol.control_radial[j + 1];
    }
  }

  ParticleEnsemble ens = sample_initial_ensemble(sol.problem->rho0(), n_particles, seed);

  // Trajectory-major integration: cells[c * n + p] is particle p's cell at
  // checkpoint c; per-particle RNG keeps the result thread-count invariant.
  std::vector<std::uint32_t> cells(cps.size() * n_particles);
  std::vector<double> defect(n_particles, 0.0);
  const double noise = sigma * std::sqrt(dt);
  const bool so2 = grid.group == GroupId::so2;

  parallel_for(n_particles, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double theta = so2 ? ens.states[p].angle : 0.0;
      Eigen::Matrix3d r = ens.states[p].R;
      std::uint64_t rng = ens.rng_state[p];
      for (int k = 0; k <= n_steps; ++k) {
        for (const std::size_t c : cp_at_step[static_cast<std::size_t>(k)]) {
          const double angle = so2 ? theta : rotation_angle(r);
          cells[c * n_particles + p] =
              static_cast<std::uint32_t>(cell_of_angle(grid, angle));
          if (!so2) {
            const double d =
                (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
            defect[p] = std::max(defect[p], d);
          }
        }
        if (k == n_steps) break;
        const Eigen::ArrayXd& slice = field[static_cast<std::size_t>(k)];
        if (so2) {
          const double drift = lerp_radial(grid, slice, theta) * dt;
          theta = wrap_angle(theta + drift + noise * standard_normal(rng));
        } else {
          const Eigen::Vector3d v = log_so3(r);
          const double ang = v.norm();
          const Eigen::Vector3d axis =
              ang > 1e-12 ? (v / ang).eval() : Eigen::Vector3d(0, 0, 1);
          Eigen::Vector3d w = lerp_radial(grid, slice, ang) * dt * axis;
          for (int i = 0; i < 3; ++i) w[i] += noise * standard_normal(rng);
          r = r * exp_so3(w);
        }
      }
      ens.rng_state[p] = rng;
      if (so2)
        ens.states[p].angle = theta;
      else
        ens.states[p].R = r;
    }
  });
  ens.time = 1.0;

  SimulationResult result;
  for (std::size_t c = 0; c < cps.size(); ++c) {
    Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t p = 0; p < n_particles; ++p)
      counts[static_cast<Eigen::Index>(cells[c * n_particles + p])] += 1.0;
    CheckpointStats stats;
    stats.time = cps[c].time;
    stats.empirical = counts / (static_cast<double>(n_particles) * grid.weights);
    stats.tv_distance = tv_distance_rebinned(
        grid, stats.empirical, sol.rho_opt[cps[c].slice].values,
        static_cast<int>(std::min<std::size_t>(64, grid.size())));
    result.checkpoints.push_back(std::move(stats));
  }
  for (const double d : defect)
    result.max_orthogonality_defect = std::max(result.max_orthogonality_defect, d);
  return result;
}

}  // namespace liebridge
