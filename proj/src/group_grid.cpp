#include "liebridge/group_grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace liebridge {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double GroupGrid::domain_length() const {
  return group == GroupId::so2 ? kTwoPi : kPi;
}

std::shared_ptr<const GroupGrid> make_grid(GroupId group, std::size_t n_nodes) {
  if (n_nodes < 8)
    throw std::invalid_argument("make_grid: need at least 8 nodes, got " +
                                std::to_string(n_nodes));
  auto g = std::make_shared<GroupGrid>();
  g->group = group;
  const auto n = static_cast<Eigen::Index>(n_nodes);
  g->nodes.resize(n);
  g->weights.resize(n);
  if (group == GroupId::so2) {
    g->spacing = kTwoPi / static_cast<double>(n_nodes);
    for (Eigen::Index i = 0; i < n; ++i) {
      g->nodes[i] = static_cast<double>(i) * g->spacing;
      g->weights[i] = 1.0 / static_cast<double>(n_nodes);
    }
  } else {
    // Midpoint rule for the class measure (2/pi) sin^2(theta/2) dtheta on
    // (0, pi).  The rule integrates cos(k theta) exactly for 0 < k < 2M, so
    // the weights sum to 1 and characters up to l < M are orthonormal to
    // rounding.
    g->spacing = kPi / static_cast<double>(n_nodes);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double theta = (static_cast<double>(i) + 0.5) * g->spacing;
      const double s = std::sin(0.5 * theta);
      g->nodes[i] = theta;
      g->weights[i] = (2.0 / kPi) * s * s * g->spacing;
    }
  }
  return g;
}

bool same_grid(const GroupGrid& a, const GroupGrid& b) {
  return a.group == b.group && a.size() == b.size() && a.spacing == b.spacing;
}

DensityGrid make_density(std::shared_ptr<const GroupGrid> grid, Eigen::ArrayXd values) {
  if (!grid) throw std::invalid_argument("make_density: null grid");
  if (static_cast<std::size_t>(values.size()) != grid->size())
    throw std::invalid_argument("make_density: value count does not match grid");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0)
      throw std::invalid_argument("make_density: values must be finite and > 0");
  }
  const double mass = (values * grid->weights).sum();
  if (std::abs(mass - 1.0) > 1e-10)
    throw std::invalid_argument("make_density: discrete mass " + std::to_string(mass) +
                                " is not 1 within 1e-10");
  return DensityGrid{std::move(grid), std::move(values)};
}

DensityGrid normalize_density(std::shared_ptr<const GroupGrid> grid,
                              const Eigen::ArrayXd& values) {
  if (!grid) throw std::invalid_argument("normalize_density: null grid");
  if (static_cast<std::size_t>(values.size()) != grid->size())
    throw std::invalid_argument("normalize_density: value count does not match grid");
  const double mass = (values * grid->weights).sum();
  if (!std::isfinite(mass) || mass <= 0.0)
    throw std::invalid_argument("normalize_density: values have non-positive mass");
  return make_density(std::move(grid), values / mass);
}

DensityGrid make_uniform_density(std::shared_ptr<const GroupGrid> grid) {
  if (!grid) throw std::invalid_argument("make_uniform_density: null grid");
  Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(grid->size()));
  return normalize_density(std::move(grid), ones);
}

namespace {

DensityGrid von_mises_on_grid(std::shared_ptr<const GroupGrid> grid, double kappa,
                              double loc) {
  // log rho = kappa cos(theta - loc) - log Z, Z by discrete quadrature; the
  // max is subtracted before exponentiation so kappa up to several hundred
  // stays representable.
  Eigen::ArrayXd logv = kappa * (grid->nodes - loc).cos();
  const double shift = logv.maxCoeff();
  logv -= shift;
  const double z = (logv.exp() * grid->weights).sum();
  Eigen::ArrayXd values = (logv - std::log(z)).exp();
  return make_density(std::move(grid), std::move(values));
}

}  // namespace

DensityGrid make_von_mises_so2(std::shared_ptr<const GroupGrid> grid, double kappa,
                               double loc) {
  if (!grid) throw std::invalid_argument("make_von_mises_so2: null grid");
  if (grid->group != GroupId::so2)
    throw std::invalid_argument("make_von_mises_so2: grid is not an SO(2) grid");
  if (!std::isfinite(kappa) || kappa <= 0.0)
    throw std::invalid_argument("make_von_mises_so2: kappa must be > 0");
  if (!std::isfinite(loc))
    throw std::invalid_argument("make_von_mises_so2: loc must be finite");
  return von_mises_on_grid(std::move(grid), kappa, loc);
}

DensityGrid make_von_mises_so3_class(std::shared_ptr<const GroupGrid> grid, double kappa,
                                     double omega_norm) {
  if (!grid) throw std::invalid_argument("make_von_mises_so3_class: null grid");
  if (grid->group != GroupId::so3_class)
    throw std::invalid_argument("make_von_mises_so3_class: grid is not an SO(3) class grid");
  if (!std::isfinite(kappa) || kappa <= 0.0)
    throw std::invalid_argument("make_von_mises_so3_class: kappa must be > 0");
  if (!(omega_norm > 0.0) || omega_norm > kPi)
    throw std::invalid_argument("make_von_mises_so3_class: omega_norm must lie in (0, pi]");
  return von_mises_on_grid(std::move(grid), kappa, omega_norm);
}

Eigen::Matrix2d hat_so2(double a) {
  Eigen::Matrix2d A;
  A << 0.0, -a, a, 0.0;
  return A;
}

namespace {
void require_skew(const Eigen::MatrixXd& A, const char* who) {
  const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  if (sym.cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument(std::string(who) +
                                ": symmetric part exceeds 1e-8, input is not skew");
}
}  // namespace

double vee_so2(const Eigen::Matrix2d& A) {
  require_skew(A, "vee_so2");
  return 0.5 * (A(1, 0) - A(0, 1));
}

Eigen::Matrix3d hat_so3(const Eigen::Vector3d& w) {
  Eigen::Matrix3d A;
  A << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return A;
}

Eigen::Vector3d vee_so3(const Eigen::Matrix3d& A) {
  require_skew(A, "vee_so3");
  const Eigen::Matrix3d S = 0.5 * (A - A.transpose());
  return Eigen::Vector3d(S(2, 1), S(0, 2), S(1, 0));
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d W = hat_so3(w);
  if (theta < 1e-8) return Eigen::Matrix3d::Identity() + W + 0.5 * (W * W);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * W + b * (W * W);
}

double rotation_angle(const Eigen::Matrix3d& R) {
  const double c = 0.5 * (R.trace() - 1.0);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) {
  const double theta = rotation_angle(R);
  const Eigen::Vector3d skew(0.5 * (R(2, 1) - R(1, 2)),
                             0.5 * (R(0, 2) - R(2, 0)),
                             0.5 * (R(1, 0) - R(0, 1)));
  if (theta < 1e-8) return skew;  // log R = skew + O(theta^3)
  if (theta < kPi - 1e-4) return (theta / std::sin(theta)) * skew;
  // Near pi: sin(theta) cancels, recover the axis from the symmetric part,
  //   (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T.
  const Eigen::Matrix3d outer =
      (0.5 * (R + R.transpose()) - std::cos(theta) * Eigen::Matrix3d::Identity()) /
      (1.0 - std::cos(theta));
  int k = 0;
  outer.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = outer.col(k) / std::sqrt(outer(k, k));
  // Away from exactly pi the skew part still carries the sign.
  if (skew.norm() > 1e-12 && axis.dot(skew) < 0.0) axis = -axis;
  return theta * axis;
}

RotationElement make_rotation_so2(double angle) {
  RotationElement g;
  g.group = GroupId::so2;
  g.angle = std::fmod(angle, kTwoPi);
  if (g.angle < 0.0) g.angle += kTwoPi;
  return g;
}

RotationElement make_rotation_so3(const Eigen::Matrix3d& R) {
  RotationElement g;
  g.group = GroupId::so3_class;
  g.R = R;
  return g;
}

bool rotation_is_valid(const RotationElement& g, double tol) {
  if (g.group == GroupId::so2) return std::isfinite(g.angle);
  const Eigen::Matrix3d defect =
      g.R.transpose() * g.R - Eigen::Matrix3d::Identity();
  return defect.cwiseAbs().maxCoeff() <= tol &&
         std::abs(g.R.determinant() - 1.0) <= tol;
}

}  // namespace liebridge
