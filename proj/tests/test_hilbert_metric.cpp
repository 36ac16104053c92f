#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "liebridge/hilbert_metric.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace liebridge;

namespace {
constexpr double kPi = std::numbers::pi;

std::mt19937_64 rng(77001u);

Eigen::ArrayXd random_log_values(Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::ArrayXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = u(rng);
  return out;
}
}  // namespace

TEST_CASE("construction guards") {
  const auto g = make_grid(GroupId::so2, 16);
  Eigen::ArrayXd lv = Eigen::ArrayXd::Zero(16);
  CHECK_NOTHROW(PositiveGridFunction(g, lv));
  lv[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(PositiveGridFunction(g, lv), std::invalid_argument);
  lv[2] = std::nan("");
  CHECK_THROWS_AS(PositiveGridFunction(g, lv), std::invalid_argument);
  CHECK_THROWS_AS(PositiveGridFunction(g, Eigen::ArrayXd::Zero(15)), std::invalid_argument);
  CHECK_THROWS_AS(PositiveGridFunction(nullptr, Eigen::ArrayXd::Zero(16)),
                  std::invalid_argument);

  Eigen::ArrayXd v = Eigen::ArrayXd::Ones(16);
  CHECK_NOTHROW(PositiveGridFunction::from_values(g, v));
  v[5] = 0.0;
  CHECK_THROWS_AS(PositiveGridFunction::from_values(g, v), std::invalid_argument);
  v[5] = -1.0;
  CHECK_THROWS_AS(PositiveGridFunction::from_values(g, v), std::invalid_argument);
}

TEST_CASE("analytic distance between 1 and 2 + cos") {
  // max ratio 3 at theta = 0, min ratio 1 at theta = pi, both on the grid
  // for even n: d_H = log 3.
  const auto g = make_grid(GroupId::so2, 512);
  const PositiveGridFunction one(g, Eigen::ArrayXd::Zero(512));
  const PositiveGridFunction f =
      PositiveGridFunction::from_values(g, 2.0 + g->nodes.cos());
  CHECK(std::abs(hilbert_distance(one, f) - std::log(3.0)) < 1e-12);
  CHECK(std::abs(hilbert_distance(f, one) - std::log(3.0)) < 1e-12);
}

TEST_CASE("distance is projective") {
  const auto g = make_grid(GroupId::so2, 64);
  for (int c = 0; c < 50; ++c) {
    const PositiveGridFunction x(g, random_log_values(64, 3.0));
    const PositiveGridFunction y(g, random_log_values(64, 3.0));
    const double d = hilbert_distance(x, y);
    CHECK(d >= 0.0);
    CHECK(hilbert_distance(x, x) == 0.0);

    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const double la = u(rng), lb = u(rng);
    const PositiveGridFunction xs(g, x.log_values() + la);
    const PositiveGridFunction ys(g, y.log_values() + lb);
    CHECK(std::abs(hilbert_distance(xs, ys) - d) < 1e-12);
    CHECK(hilbert_distance(xs, x) < 1e-12);  // scalar multiples are null
  }
}

TEST_CASE("pseudo-metric properties") {
  const auto g = make_grid(GroupId::so3_class, 40);
  for (int c = 0; c < 50; ++c) {
    const PositiveGridFunction x(g, random_log_values(40, 2.0));
    const PositiveGridFunction y(g, random_log_values(40, 2.0));
    const PositiveGridFunction z(g, random_log_values(40, 2.0));
    CHECK(hilbert_distance(x, y) == hilbert_distance(y, x));
    CHECK(hilbert_distance(x, z) <=
          hilbert_distance(x, y) + hilbert_distance(y, z) + 1e-12);
  }
}

TEST_CASE("normalize_sup") {
  const auto g = make_grid(GroupId::so2, 32);
  const PositiveGridFunction x(g, random_log_values(32, 5.0));
  const PositiveGridFunction nx = normalize_sup(x);
  CHECK(nx.log_values().maxCoeff() == 0.0);  // max shifted to exactly zero
  CHECK(hilbert_distance(nx, x) < 1e-12);

  // idempotent to the bit
  const PositiveGridFunction nnx = normalize_sup(nx);
  CHECK((nnx.log_values() == nx.log_values()).all());

  // constants collapse to exactly one
  const PositiveGridFunction c(g, Eigen::ArrayXd::Constant(32, -3.7));
  CHECK((normalize_sup(c).log_values() == 0.0).all());
}

TEST_CASE("pointwise_ratio identities") {
  const auto g = make_grid(GroupId::so2, 48);
  const PositiveGridFunction f(g, random_log_values(48, 2.0));
  const PositiveGridFunction h(g, random_log_values(48, 2.0));

  // R_f(f) = 1
  CHECK((pointwise_ratio(f, f).log_values() == 0.0).all());

  // involution R_f(R_f(h)) = h; exact up to one rounding of a - (a - b)
  const PositiveGridFunction twice = pointwise_ratio(f, pointwise_ratio(f, h));
  CHECK((twice.log_values() - h.log_values()).abs().maxCoeff() < 1e-14);
}

TEST_CASE("pointwise_ratio is an isometry") {
  const auto g = make_grid(GroupId::so3_class, 64);
  for (int c = 0; c < 50; ++c) {
    const PositiveGridFunction f(g, random_log_values(64, 2.5));
    const PositiveGridFunction a(g, random_log_values(64, 2.5));
    const PositiveGridFunction b(g, random_log_values(64, 2.5));
    const double before = hilbert_distance(a, b);
    const double after = hilbert_distance(pointwise_ratio(f, a), pointwise_ratio(f, b));
    CHECK(std::abs(after - before) < 1e-12);
  }
}

TEST_CASE("density numerator variant") {
  const auto g = make_grid(GroupId::so2, 16);
  const DensityGrid rho = make_von_mises_so2(g, 2.0, kPi / 3.0);
  const PositiveGridFunction h(g, random_log_values(16, 1.0));
  const PositiveGridFunction r = pointwise_ratio(rho, h);
  CHECK((r.log_values() - (rho.values.log() - h.log_values())).abs().maxCoeff() < 1e-14);

  DensityGrid broken = rho;  // aggregate copy bypasses make_density
  broken.values[4] = 0.0;
  CHECK_THROWS_AS(pointwise_ratio(broken, h), std::invalid_argument);
}

TEST_CASE("grid mismatch is rejected") {
  const auto a = make_grid(GroupId::so2, 16);
  const auto b = make_grid(GroupId::so2, 32);
  const auto c = make_grid(GroupId::so3_class, 16);
  const PositiveGridFunction fa(a, Eigen::ArrayXd::Zero(16));
  const PositiveGridFunction fb(b, Eigen::ArrayXd::Zero(32));
  const PositiveGridFunction fc(c, Eigen::ArrayXd::Zero(16));
  CHECK_THROWS_AS(hilbert_distance(fa, fb), std::invalid_argument);
  CHECK_THROWS_AS(hilbert_distance(fa, fc), std::invalid_argument);
  CHECK_THROWS_AS(pointwise_ratio(fa, fb), std::invalid_argument);
}
