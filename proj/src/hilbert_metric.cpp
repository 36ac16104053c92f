#include "liebridge/hilbert_metric.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace liebridge {

PositiveGridFunction::PositiveGridFunction(std::shared_ptr<const GroupGrid> grid,
                                           Eigen::ArrayXd log_values)
    : grid_(std::move(grid)), log_values_(std::move(log_values)) {
  if (!grid_) throw std::invalid_argument("PositiveGridFunction: null grid");
  if (static_cast<std::size_t>(log_values_.size()) != grid_->size())
    throw std::invalid_argument("PositiveGridFunction: size does not match grid");
  for (Eigen::Index i = 0; i < log_values_.size(); ++i) {
    if (!std::isfinite(log_values_[i]))
      throw std::invalid_argument(
          "PositiveGridFunction: log values must be finite (function strictly positive)");
  }
}

PositiveGridFunction PositiveGridFunction::from_values(
    std::shared_ptr<const GroupGrid> grid, const Eigen::ArrayXd& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0)
      throw std::invalid_argument("PositiveGridFunction: values must be finite and > 0");
  }
  return PositiveGridFunction(std::move(grid), values.log());
}

namespace {
void require_same_grid(const PositiveGridFunction& x, const PositiveGridFunction& y,
                       const char* who) {
  if (!same_grid(x.grid(), y.grid()))
    throw std::invalid_argument(std::string(who) + ": arguments live on different grids");
}
}  // namespace

double hilbert_distance(const PositiveGridFunction& x, const PositiveGridFunction& y) {
  require_same_grid(x, y, "hilbert_distance");
  const Eigen::ArrayXd d = x.log_values() - y.log_values();
  return d.maxCoeff() - d.minCoeff();
}

PositiveGridFunction normalize_sup(const PositiveGridFunction& x) {
  return PositiveGridFunction(x.grid_ptr(), x.log_values() - x.log_values().maxCoeff());
}

PositiveGridFunction pointwise_ratio(const PositiveGridFunction& f,
                                     const PositiveGridFunction& g) {
  require_same_grid(f, g, "pointwise_ratio");
  return PositiveGridFunction(f.grid_ptr(), f.log_values() - g.log_values());
}

PositiveGridFunction pointwise_ratio(const DensityGrid& f, const PositiveGridFunction& g) {
  if (!f.grid || !same_grid(*f.grid, g.grid()))
    throw std::invalid_argument("pointwise_ratio: arguments live on different grids");
  for (Eigen::Index i = 0; i < f.values.size(); ++i) {
    if (!(f.values[i] > 0.0))
      throw std::invalid_argument("pointwise_ratio: density has a zero value, not in the cone");
  }
  return PositiveGridFunction(g.grid_ptr(), f.values.log() - g.log_values());
}

}  // namespace liebridge
