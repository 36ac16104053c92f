#pragma once

#include "liebridge/group_grid.hpp"

namespace liebridge {

// Strictly positive grid function stored by its finite log values.  The class
// is the natural carrier for Hilbert-metric arguments: the metric is blind to
// positive scalar factors, and all arithmetic stays in the log domain.
class PositiveGridFunction {
 public:
  PositiveGridFunction(std::shared_ptr<const GroupGrid> grid, Eigen::ArrayXd log_values);

  // Takes strictly positive linear-domain values; throws otherwise.
  static PositiveGridFunction from_values(std::shared_ptr<const GroupGrid> grid,
                                          const Eigen::ArrayXd& values);

  const Eigen::ArrayXd& log_values() const { return log_values_; }
  Eigen::ArrayXd values() const { return log_values_.exp(); }
  const GroupGrid& grid() const { return *grid_; }
  const std::shared_ptr<const GroupGrid>& grid_ptr() const { return grid_; }
  std::size_t size() const { return static_cast<std::size_t>(log_values_.size()); }

 private:
  std::shared_ptr<const GroupGrid> grid_;
  Eigen::ArrayXd log_values_;
};

// Hilbert projective distance
//   d_H(x, y) = log max_i(x_i / y_i) - log min_i(x_i / y_i),
// a pseudo-metric on the positive cone: zero exactly on scalar multiples.
double hilbert_distance(const PositiveGridFunction& x, const PositiveGridFunction& y);

// Divides by the sup norm; log values are shifted so the maximum is exactly 0.
// Idempotent, and a d_H-null operation.
PositiveGridFunction normalize_sup(const PositiveGridFunction& x);

// R_f(g) = f / g pointwise, a d_H isometry for fixed positive f.
PositiveGridFunction pointwise_ratio(const PositiveGridFunction& f,
                                     const PositiveGridFunction& g);

// Density numerator variant; rejects any zero value in f (outside the cone).
PositiveGridFunction pointwise_ratio(const DensityGrid& f, const PositiveGridFunction& g);

}  // namespace liebridge
