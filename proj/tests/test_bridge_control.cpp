#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "liebridge/bridge_control.hpp"
#include "liebridge/fft.hpp"

#include <cmath>
#include <memory>
#include <numbers>

using namespace liebridge;

namespace {
constexpr double kPi = std::numbers::pi;

std::shared_ptr<const BridgeProblem> so2_problem(std::size_t n = 512) {
  auto g = make_grid(GroupId::so2, n);
  return std::make_shared<BridgeProblem>(g, make_von_mises_so2(g, 40.0, kPi / 6.0),
                                         make_von_mises_so2(g, 40.0, 11.0 * kPi / 6.0),
                                         KernelSpec{1.0, 0});
}

std::shared_ptr<const BridgeProblem> so3_problem() {
  auto g = make_grid(GroupId::so3_class, 400);
  return std::make_shared<BridgeProblem>(g, make_von_mises_so3_class(g, 30.0, 1.0),
                                         make_von_mises_so3_class(g, 30.0, 2.0),
                                         KernelSpec{0.5, 0});
}

const BridgeDynamics& so2_dynamics() {
  static const BridgeDynamics dyn = [] {
    auto p = so2_problem();
    return BridgeDynamics(p, solve(*p).potentials);
  }();
  return dyn;
}

const BridgeDynamics& so3_dynamics() {
  static const BridgeDynamics dyn = [] {
    auto p = so3_problem();
    return BridgeDynamics(p, solve(*p).potentials);
  }();
  return dyn;
}

// 4th-order centred first derivative on the periodic so2 grid; sharper than
// the production stencil so it can serve as an oracle for the spectral path.
Eigen::ArrayXd fd4_periodic(const Eigen::ArrayXd& f, double h) {
  const Eigen::Index n = f.size();
  Eigen::ArrayXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto at = [&](Eigen::Index k) { return f[((k % n) + n) % n]; };
    out[i] = (8.0 * (at(i + 1) - at(i - 1)) - (at(i + 2) - at(i - 2))) / (12.0 * h);
  }
  return out;
}
}  // namespace

TEST_CASE("boundary potentials are returned bit-exact") {
  const BridgeDynamics& dyn = so2_dynamics();
  const auto [phi1, phihat1] = dyn.propagate_potentials(1.0);
  CHECK((phi1.log_values() == dyn.potentials().log_phi1.log_values()).all());
  const auto [phi0, phihat0] = dyn.propagate_potentials(0.0);
  CHECK((phihat0.log_values() == dyn.potentials().log_phihat0.log_values()).all());
  CHECK_THROWS_AS(dyn.propagate_potentials(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(dyn.propagate_potentials(1.01), std::invalid_argument);
}

TEST_CASE("propagation obeys the two-hop semigroup identity") {
  const BridgeDynamics& dyn = so2_dynamics();
  const auto& cache = dyn.problem().cache();
  const auto [phi, phihat] = dyn.propagate_potentials(0.75);
  const Eigen::ArrayXd two_hop = cache.at(0.25)->apply(
      cache.at(0.5)->apply(dyn.potentials().log_phihat0.log_values(), Domain::log),
      Domain::log);
  CHECK((phihat.log_values() - two_hop).abs().maxCoeff() < 1e-7);
}

TEST_CASE("interpolating density matches both endpoints") {
  for (const bool so3 : {false, true}) {
    const BridgeDynamics& dyn = so3 ? so3_dynamics() : so2_dynamics();
    const auto& p = dyn.problem();
    const DensityGrid at0 = dyn.density_at(0.0);
    const DensityGrid at1 = dyn.density_at(1.0);
    CHECK((at0.values - p.rho0().values).abs().maxCoeff() / p.rho0().values.maxCoeff() <
          1e-8);
    CHECK((at1.values - p.rho1().values).abs().maxCoeff() / p.rho1().values.maxCoeff() <
          1e-8);
  }
}

TEST_CASE("interpolating density conserves mass") {
  for (const bool so3 : {false, true}) {
    const BridgeDynamics& dyn = so3 ? so3_dynamics() : so2_dynamics();
    for (const double t : uniform_times(21)) {
      CHECK(std::abs(dyn.density_at(t).mass() - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("value function and density are consistent with the potentials") {
  const BridgeDynamics& dyn = so2_dynamics();
  const double s2 = dyn.problem().sigma() * dyn.problem().sigma();
  for (const double t : {0.0, 0.31, 1.0}) {
    const auto [phi, phihat] = dyn.propagate_potentials(t);
    CHECK((dyn.value_function_at(t) - s2 * phi.log_values()).abs().maxCoeff() < 1e-12);
    const DensityGrid rho = dyn.density_at(t);
    CHECK((rho.values - (phi.log_values() + phihat.log_values()).exp())
              .abs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("uniform endpoints give a static bridge with zero control") {
  auto g = make_grid(GroupId::so2, 128);
  const DensityGrid u = make_uniform_density(g);
  auto p = std::make_shared<BridgeProblem>(g, u, u, KernelSpec{1.0, 0});
  const BridgeDynamics dyn(p, solve(*p).potentials);
  for (const double t : {0.0, 0.4, 1.0}) {
    CHECK((dyn.density_at(t).values - 1.0).abs().maxCoeff() < 1e-10);
    CHECK(dyn.control_radial_at(t).abs().maxCoeff() < 1e-10);
  }
  CHECK(dyn.fokker_planck_residual(0.5, 0.01) < 1e-10);
}

TEST_CASE("solution is invariant to solver initialisation") {
  auto p = so2_problem(256);
  const SolveResult a = solve(*p);
  SolveOptions opt;
  opt.initial_log_phi1 = Eigen::ArrayXd::Constant(256, std::log(1000.0));
  const SolveResult b = solve(*p, opt);
  const BridgeDynamics da(p, a.potentials), db(p, b.potentials);
  for (const double t : uniform_times(21)) {
    CHECK((da.density_at(t).values - db.density_at(t).values).abs().maxCoeff() < 1e-10);
    CHECK((da.control_radial_at(t) - db.control_radial_at(t)).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("so2 controller gradient matches a high-order stencil") {
  const BridgeDynamics& dyn = so2_dynamics();
  const auto& g = dyn.problem().grid();
  const double s2 = dyn.problem().sigma() * dyn.problem().sigma();
  for (const double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const Eigen::ArrayXd omega = dyn.control_radial_at(t);
    const auto [phi, phihat] = dyn.propagate_potentials(t);
    const Eigen::ArrayXd ref = s2 * fd4_periodic(phi.log_values(), g.spacing);
    const double rel = (omega - ref).abs().maxCoeff() / ref.abs().maxCoeff();
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("so2 controller steers along the shorter arc") {
  const BridgeDynamics& dyn = so2_dynamics();
  const auto& g = dyn.problem().grid();
  Eigen::Index i0 = 0;
  (g.nodes - kPi / 6.0).abs().minCoeff(&i0);
  // the mass starts at pi/6 and must cross 0, so the initial drift there is
  // clockwise (negative)
  CHECK(dyn.control_radial_at(0.0)[i0] < 0.0);

  // argmax of the interpolant never enters the far half of the circle
  for (const double t : uniform_times(21)) {
    Eigen::Index imax = 0;
    dyn.density_at(t).values.maxCoeff(&imax);
    const double loc = g.nodes[imax];
    CHECK_FALSE((loc > kPi / 2.0 + 1e-9 && loc < 3.0 * kPi / 2.0 - 1e-9));
  }
}

TEST_CASE("so3 controller structure and argmax drift") {
  const BridgeDynamics& dyn = so3_dynamics();
  const auto& g = dyn.problem().grid();
  const std::vector<TangentVector> ctl = dyn.control_at(0.5);
  REQUIRE(ctl.size() == g.size());
  const Eigen::ArrayXd radial = dyn.control_radial_at(0.5);
  for (std::size_t i = 0; i < ctl.size(); ++i) {
    CHECK(ctl[i].group == GroupId::so3_class);
    CHECK(ctl[i].coords[0] == 0.0);
    CHECK(ctl[i].coords[1] == 0.0);
    CHECK(ctl[i].coords[2] == radial[static_cast<Eigen::Index>(i)]);
  }

  double prev = -1.0;
  for (const double t : uniform_times(21)) {
    Eigen::Index imax = 0;
    dyn.density_at(t).values.maxCoeff(&imax);
    const double loc = g.nodes[imax];
    CHECK(loc >= prev - g.spacing * (1.0 + 1e-12));  // monotone within one cell
    prev = std::max(prev, loc);
  }
  Eigen::Index ifirst = 0, ilast = 0;
  dyn.density_at(0.0).values.maxCoeff(&ifirst);
  dyn.density_at(1.0).values.maxCoeff(&ilast);
  CHECK(std::abs(g.nodes[ifirst] - 1.0) < 2.0 * g.spacing);
  CHECK(std::abs(g.nodes[ilast] - 2.0) < 2.0 * g.spacing);
}

TEST_CASE("fokker planck residual shrinks under refinement") {
  auto coarse_grid = make_grid(GroupId::so2, 256);
  auto coarse = std::make_shared<BridgeProblem>(
      coarse_grid, make_von_mises_so2(coarse_grid, 40.0, kPi / 6.0),
      make_von_mises_so2(coarse_grid, 40.0, 11.0 * kPi / 6.0), KernelSpec{1.0, 0});
  const BridgeDynamics dyn_coarse(coarse, solve(*coarse).potentials);
  const BridgeDynamics& dyn_fine = so2_dynamics();

  const double r_coarse = dyn_coarse.fokker_planck_residual(0.5, 0.02);
  const double r_fine = dyn_fine.fokker_planck_residual(0.5, 0.01);
  CHECK(r_fine > 0.0);
  CHECK(r_coarse / r_fine >= 3.0);

  // dropping the transport term must leave a much larger defect
  const double r_zero = dyn_fine.fokker_planck_residual(0.5, 0.01, true);
  CHECK(r_zero > 10.0 * r_fine);
}

TEST_CASE("so3 fokker planck residual is also small") {
  const BridgeDynamics& dyn = so3_dynamics();
  const double r = dyn.fokker_planck_residual(0.5, 0.01);
  const double r_zero = dyn.fokker_planck_residual(0.5, 0.01, true);
  CHECK(r < 0.1 * r_zero);
}

TEST_CASE("fokker planck residual argument guards") {
  const BridgeDynamics& dyn = so2_dynamics();
  CHECK_THROWS_AS(dyn.fokker_planck_residual(0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(dyn.fokker_planck_residual(1.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(dyn.fokker_planck_residual(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dyn.fokker_planck_residual(0.5, -0.1), std::invalid_argument);
}

TEST_CASE("mass drift guard trips on inconsistent potentials") {
  auto g = make_grid(GroupId::so2, 64);
  const DensityGrid u = make_uniform_density(g);
  auto p = std::make_shared<BridgeProblem>(g, u, u, KernelSpec{1.0, 0});
  // phi = 1, phihat = 2: the product has mass 2, far past the hard limit
  const SchrodingerPotentials bogus{
      PositiveGridFunction(g, Eigen::ArrayXd::Zero(64)),
      PositiveGridFunction(g, Eigen::ArrayXd::Constant(64, std::log(2.0)))};
  const BridgeDynamics dyn(p, bogus);
  CHECK_THROWS_AS(dyn.density_at(0.5), std::runtime_error);

  // drift in the diagnostic band (1e-6, 1e-4) warns but still returns
  const SchrodingerPotentials mild{
      PositiveGridFunction(g, Eigen::ArrayXd::Zero(64)),
      PositiveGridFunction(g, Eigen::ArrayXd::Constant(64, std::log(1.0 + 5e-6)))};
  const BridgeDynamics dyn2(p, mild);
  const DensityGrid d = dyn2.density_at(0.5);
  CHECK(std::abs(d.mass() - 1.0) > 1e-6);
  CHECK(std::abs(d.mass() - 1.0) < 1e-4);
}

TEST_CASE("bridge solution assembly") {
  const BridgeDynamics& dyn = so2_dynamics();
  const std::vector<double> times = uniform_times(5);
  const BridgeSolution sol = make_bridge_solution(dyn, times);
  REQUIRE(sol.time_grid == times);
  REQUIRE(sol.rho_opt.size() == 5);
  REQUIRE(sol.control_radial.size() == 5);
  REQUIRE(sol.control.size() == 5);
  REQUIRE(sol.log_phi.size() == 5);
  REQUIRE(sol.value_function.size() == 5);
  CHECK(sol.problem.get() == dyn.problem_ptr().get());

  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK((sol.rho_opt[k].values - dyn.density_at(times[k]).values).abs().maxCoeff() <
          1e-13);
    CHECK((sol.control_radial[k] - dyn.control_radial_at(times[k])).abs().maxCoeff() <
          1e-13);
    CHECK((sol.rho_opt[k].values -
           (sol.log_phi[k].log_values() + sol.log_phihat[k].log_values()).exp())
              .abs()
              .maxCoeff() < 1e-14);
  }

  CHECK_THROWS_AS(make_bridge_solution(dyn, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_bridge_solution(dyn, {0.5, 0.25}), std::invalid_argument);
  CHECK_THROWS_AS(make_bridge_solution(dyn, {0.0, 1.5}), std::invalid_argument);

  const std::vector<double> u21 = uniform_times();
  REQUIRE(u21.size() == 21);
  CHECK(u21.front() == 0.0);
  CHECK(u21.back() == 1.0);
  CHECK(std::abs(u21[7] - 0.35) < 1e-15);
  CHECK_THROWS_AS(uniform_times(1), std::invalid_argument);
}
