#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>

namespace liebridge {

enum class GroupId { so2, so3_class };

// Discretisation of SO(2) (uniform angles) or of the conjugacy classes of
// SO(3) (rotation-angle coordinate, midpoint nodes).  Weights are normalised
// Haar masses: they sum to 1 and quadrature against them approximates the
// group integral.  The SO(3) class measure is (2/pi) sin^2(theta/2) dtheta
// on (0, pi); midpoint nodes keep theta = 0 off the grid.
struct GroupGrid {
  GroupId group = GroupId::so2;
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
  double spacing = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(nodes.size()); }
  double domain_length() const;  // 2*pi (so2) or pi (so3_class)
};

// n_nodes >= 8; throws std::invalid_argument below that.
std::shared_ptr<const GroupGrid> make_grid(GroupId group, std::size_t n_nodes);

// Structural equality: same group, node count and spacing.
bool same_grid(const GroupGrid& a, const GroupGrid& b);

// Probability density w.r.t. normalised Haar measure sampled on grid nodes.
// Contract: strictly positive values, sum(values * weights) = 1 within 1e-10.
struct DensityGrid {
  std::shared_ptr<const GroupGrid> grid;
  Eigen::ArrayXd values;

  double mass() const { return (values * grid->weights).sum(); }
};

// Validating constructor; throws std::invalid_argument on non-finite or
// non-positive values, size mismatch, or mass further than 1e-10 from 1.
DensityGrid make_density(std::shared_ptr<const GroupGrid> grid, Eigen::ArrayXd values);

// Normalises arbitrary strictly positive values to unit discrete mass.
DensityGrid normalize_density(std::shared_ptr<const GroupGrid> grid,
                              const Eigen::ArrayXd& values);

DensityGrid make_uniform_density(std::shared_ptr<const GroupGrid> grid);

// von Mises family exp(kappa * cos(theta - loc)), normalised by discrete
// quadrature; the normaliser is computed in the log domain with the max
// subtracted before exponentiation, so large kappa cannot overflow.
// kappa <= 0 is rejected.
DensityGrid make_von_mises_so2(std::shared_ptr<const GroupGrid> grid,
                               double kappa, double loc);

// Class analogue exp(kappa * cos(theta - omega_norm)) on the rotation angle;
// omega_norm must lie in (0, pi].
DensityGrid make_von_mises_so3_class(std::shared_ptr<const GroupGrid> grid,
                                     double kappa, double omega_norm);

// Lie algebra coordinates <-> matrices.  vee rejects input whose symmetric
// part exceeds 1e-8 in any entry.
Eigen::Matrix2d hat_so2(double a);
double vee_so2(const Eigen::Matrix2d& A);
Eigen::Matrix3d hat_so3(const Eigen::Vector3d& w);
Eigen::Vector3d vee_so3(const Eigen::Matrix3d& A);

// Rodrigues formula
//   exp(hat(w)) = I + sin|w|/|w| hat(w) + (1-cos|w|)/|w|^2 hat(w)^2,
// with the second-order Taylor expansion I + hat(w) + hat(w)^2/2 below
// |w| = 1e-8 where the trigonometric quotients lose accuracy.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w);

// Rotation angle |log R| in [0, pi].
double rotation_angle(const Eigen::Matrix3d& R);

// Principal logarithm as axis*angle coordinates; stable near 0 and pi.
Eigen::Vector3d log_so3(const Eigen::Matrix3d& R);

// Group element tagged by group id; exactly one representation is meaningful.
struct RotationElement {
  GroupId group = GroupId::so2;
  double angle = 0.0;                               // so2
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // so3_class
};

RotationElement make_rotation_so2(double angle);
RotationElement make_rotation_so3(const Eigen::Matrix3d& R);

// Orthogonality defect max|R^T R - I| and |det R - 1| both within tol.
bool rotation_is_valid(const RotationElement& g, double tol = 1e-10);

// Lie algebra vector tagged by group; so2 uses coords[0] only.
struct TangentVector {
  GroupId group = GroupId::so2;
  Eigen::Vector3d coords = Eigen::Vector3d::Zero();

  int dim() const { return group == GroupId::so2 ? 1 : 3; }
};

}  // namespace liebridge
