#include "liebridge/heat_semigroup.hpp"

#include "liebridge/parallel.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace liebridge {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kClamp = 1e-300;  // floor for truncated kernel values before log

void require_time(double t, const char* who) {
  if (!std::isfinite(t) || t <= 0.0)
    throw std::invalid_argument(std::string(who) + ": t must be finite and > 0");
}

void require_kernel_so2(const HeatKernelSO2& k) {
  if (!std::isfinite(k.sigma) || k.sigma <= 0.0)
    throw std::invalid_argument("HeatKernelSO2: sigma must be > 0");
  if (k.m_max < 1) throw std::invalid_argument("HeatKernelSO2: m_max must be >= 1");
}

void require_kernel_so3(const HeatKernelSO3& k) {
  if (!std::isfinite(k.sigma) || k.sigma <= 0.0)
    throw std::invalid_argument("HeatKernelSO3: sigma must be > 0");
  if (k.l_max < 1) throw std::invalid_argument("HeatKernelSO3: l_max must be >= 1");
}
}  // namespace

double so3_character(int l, double theta) {
  if (l < 0) throw std::invalid_argument("so3_character: l must be >= 0");
  // chi_l(theta) = sin((l+1/2) theta) / sin(theta/2); near theta = 0 use
  // chi_l = (2l+1)(1 - l(l+1) theta^2 / 6) + O(theta^4).
  if (std::abs(theta) < 1e-6) {
    const double ll1 = static_cast<double>(l) * (l + 1.0);
    return (2.0 * l + 1.0) * (1.0 - ll1 * theta * theta / 6.0);
  }
  return std::sin((l + 0.5) * theta) / std::sin(0.5 * theta);
}

double kernel_value_so2(const HeatKernelSO2& k, double t, double dtheta) {
  require_kernel_so2(k);
  require_time(t, "kernel_value_so2");
  const double s2t = k.sigma * k.sigma * t * 0.5;
  double sum = 1.0;
  for (int m = 1; m <= k.m_max; ++m) {
    const double decay = std::exp(-s2t * m * m);
    if (decay == 0.0) break;  // all further terms underflow
    sum += 2.0 * decay * std::cos(m * dtheta);
  }
  return std::max(sum, kClamp);
}

double kernel_value_so3(const HeatKernelSO3& k, double t, double theta12) {
  require_kernel_so3(k);
  require_time(t, "kernel_value_so3");
  if (!(theta12 >= 0.0) || theta12 > kPi + 1e-12)
    throw std::invalid_argument("kernel_value_so3: theta12 must lie in [0, pi]");
  const double s2t = k.sigma * k.sigma * t * 0.5;
  double sum = 0.0;
  for (int l = 0; l <= k.l_max; ++l) {
    const double decay = std::exp(-s2t * l * (l + 1.0));
    if (decay == 0.0) break;
    sum += (2.0 * l + 1.0) * decay * so3_character(l, theta12);
  }
  return std::max(sum, kClamp);
}

double class_kernel_value_so3(const HeatKernelSO3& k, double t, double th1, double th2) {
  require_kernel_so3(k);
  require_time(t, "class_kernel_value_so3");
  const double s2t = k.sigma * k.sigma * t * 0.5;
  double sum = 0.0;
  for (int l = 0; l <= k.l_max; ++l) {
    const double decay = std::exp(-s2t * l * (l + 1.0));
    if (decay == 0.0) break;
    // grouped so the value is bitwise symmetric in (th1, th2)
    sum += decay * (so3_character(l, th1) * so3_character(l, th2));
  }
  return std::max(sum, kClamp);
}

SemigroupOperator SemigroupOperator::make(std::shared_ptr<const GroupGrid> grid,
                                          const HeatKernelSO2& kernel, double t) {
  if (!grid || grid->group != GroupId::so2)
    throw std::invalid_argument("SemigroupOperator: HeatKernelSO2 needs an SO(2) grid");
  require_kernel_so2(kernel);
  require_time(t, "SemigroupOperator");

  SemigroupOperator op;
  op.grid_ = std::move(grid);
  op.t_ = t;
  op.sigma_ = kernel.sigma;
  const std::size_t n = op.grid_->size();
  op.fft_ = CircleFft::shared(n);

  const double s2t = kernel.sigma * kernel.sigma * t * 0.5;
  op.multipliers_.resize(static_cast<Eigen::Index>(n / 2 + 1));
  for (std::size_t m = 0; m <= n / 2; ++m) {
    op.multipliers_[static_cast<Eigen::Index>(m)] =
        (m <= static_cast<std::size_t>(kernel.m_max))
            ? std::exp(-s2t * static_cast<double>(m) * static_cast<double>(m))
            : 0.0;
  }

  op.log_kernel_row_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t d = 0; d < n; ++d) {
    const double v = kernel_value_so2(kernel, t, static_cast<double>(d) * op.grid_->spacing);
    op.log_kernel_row_[static_cast<Eigen::Index>(d)] = std::log(v);
  }
  return op;
}

SemigroupOperator SemigroupOperator::make(std::shared_ptr<const GroupGrid> grid,
                                          const HeatKernelSO3& kernel, double t) {
  if (!grid || grid->group != GroupId::so3_class)
    throw std::invalid_argument("SemigroupOperator: HeatKernelSO3 needs an SO(3) class grid");
  require_kernel_so3(kernel);
  require_time(t, "SemigroupOperator");

  SemigroupOperator op;
  op.grid_ = std::move(grid);
  op.t_ = t;
  op.sigma_ = kernel.sigma;
  const auto m = static_cast<Eigen::Index>(op.grid_->size());
  const Eigen::Index nl = kernel.l_max + 1;

  // Class kernel matrix A = B B^T with B[:, l] = e^{-l(l+1) sigma^2 t/4} chi_l;
  // the rank update keeps A bitwise symmetric.
  const double s2t = kernel.sigma * kernel.sigma * t * 0.5;
  Eigen::MatrixXd b(m, nl);
  for (Eigen::Index l = 0; l < nl; ++l) {
    const double half_decay = std::exp(-0.5 * s2t * static_cast<double>(l) * (l + 1.0));
    for (Eigen::Index i = 0; i < m; ++i)
      b(i, l) = half_decay * so3_character(static_cast<int>(l), op.grid_->nodes[i]);
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  a.selfadjointView<Eigen::Lower>().rankUpdate(b);
  a = a.selfadjointView<Eigen::Lower>();

  op.lin_.resize(m, m);
  op.log_kw_.resize(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = op.grid_->weights[j];
    const double logw = std::log(w);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = std::max(a(i, j), kClamp);
      op.lin_(i, j) = v * w;
      op.log_kw_(i, j) = std::log(v) + logw;
    }
  }
  return op;
}

Eigen::ArrayXd SemigroupOperator::apply(const Eigen::ArrayXd& f, Domain domain) const {
  const auto n = static_cast<Eigen::Index>(grid_->size());
  if (f.size() != n)
    throw std::invalid_argument("SemigroupOperator::apply: size does not match grid");

  if (domain == Domain::linear) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(f[i]) || f[i] < 0.0)
        throw std::invalid_argument("SemigroupOperator::apply: linear domain requires f >= 0");
    }
    if (grid_->group == GroupId::so2) return apply_spectral_multiplier(*fft_, f, multipliers_);
    return (lin_ * f.matrix()).array();
  }

  // Log domain: out_i = logsumexp_j(log k(i,j) + log w_j + f_j); exact for any
  // finite f (no overflow, no underflow of the dominant terms).
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(f[i]))
      throw std::invalid_argument("SemigroupOperator::apply: log domain requires finite f");
  }
  Eigen::ArrayXd out(n);
  if (grid_->group == GroupId::so2) {
    const double logw = -std::log(static_cast<double>(n));
    const double* row = log_kernel_row_.data();
    const double* g = f.data();
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        // d = (i - j) mod n, split to avoid the modulo in the hot loop
        for (std::size_t j = 0; j <= i; ++j) mx = std::max(mx, row[i - j] + g[j]);
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j)
          mx = std::max(mx, row[i + static_cast<std::size_t>(n) - j] + g[j]);
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += std::exp(row[i - j] + g[j] - mx);
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j)
          acc += std::exp(row[i + static_cast<std::size_t>(n) - j] + g[j] - mx);
        out[static_cast<Eigen::Index>(i)] = mx + std::log(acc) + logw;
      }
    });
  } else {
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto row = log_kw_.row(static_cast<Eigen::Index>(i));
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) mx = std::max(mx, row[j] + f[j]);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) acc += std::exp(row[j] + f[j] - mx);
        out[static_cast<Eigen::Index>(i)] = mx + std::log(acc);
      }
    });
  }
  return out;
}

PositiveGridFunction SemigroupOperator::apply(const PositiveGridFunction& f) const {
  if (!same_grid(f.grid(), *grid_))
    throw std::invalid_argument("SemigroupOperator::apply: function lives on another grid");
  return PositiveGridFunction(grid_, apply(f.log_values(), Domain::log));
}

HeatKernelSO2 KernelSpec::so2(const GroupGrid& grid) const {
  HeatKernelSO2 k;
  k.sigma = sigma;
  k.m_max = truncation > 0 ? truncation : static_cast<int>(grid.size() / 2);
  return k;
}

HeatKernelSO3 KernelSpec::so3() const {
  HeatKernelSO3 k;
  k.sigma = sigma;
  k.l_max = truncation > 0 ? truncation : 60;
  return k;
}

OperatorCache::OperatorCache(std::shared_ptr<const GroupGrid> grid, KernelSpec spec)
    : grid_(std::move(grid)), spec_(spec) {
  if (!grid_) throw std::invalid_argument("OperatorCache: null grid");
  // Dense SO(3) operators are ~2.5 MB each; keep the cache small there.
  capacity_ = grid_->group == GroupId::so2 ? 1024 : 8;
}

std::shared_ptr<const SemigroupOperator> OperatorCache::build(double t) const {
  if (grid_->group == GroupId::so2)
    return std::make_shared<const SemigroupOperator>(
        SemigroupOperator::make(grid_, spec_.so2(*grid_), t));
  return std::make_shared<const SemigroupOperator>(
      SemigroupOperator::make(grid_, spec_.so3(), t));
}

std::shared_ptr<const SemigroupOperator> OperatorCache::at(double t) const {
  const auto key = std::bit_cast<std::uint64_t>(t);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  auto op = build(t);
  cache_.emplace(key, op);
  insertion_order_.push_back(key);
  while (cache_.size() > capacity_) {
    cache_.erase(insertion_order_.front());
    insertion_order_.pop_front();
  }
  return op;
}

}  // namespace liebridge
