#pragma once

#include "liebridge/fft.hpp"
#include "liebridge/group_grid.hpp"
#include "liebridge/hilbert_metric.hpp"

#include <list>
#include <map>
#include <memory>
#include <mutex>

namespace liebridge {

// Heat kernel of the generator (sigma^2/2) * Laplace-Beltrami on SO(2),
// written against normalised Haar measure:
//   k_t(dtheta) = sum_{|m| <= m_max} e^{-sigma^2 m^2 t / 2} e^{i m dtheta}
//               = 1 + 2 sum_{m=1}^{m_max} e^{-sigma^2 m^2 t / 2} cos(m dtheta).
// Truncation is benign once the top multiplier has decayed, i.e. for
// t >= t_min ~ 2/(sigma^2 m_max^2); far tail values below double-precision
// cancellation noise (~1e-15 relative to k_t(0)) are clamped at 1e-300.
struct HeatKernelSO2 {
  double sigma = 1.0;
  int m_max = 256;
};

// Heat kernel on SO(3) as a character series over irreducible representations,
//   k_t(theta12) = sum_{l=0}^{l_max} (2l+1) e^{-l(l+1) sigma^2 t / 2} chi_l(theta12),
//   chi_l(theta) = sin((l + 1/2) theta) / sin(theta / 2),  chi_l(0) = 2l + 1,
// where theta12 is the rotation angle between the two arguments.  Valid for
// t >= t_min = 2/(sigma^2 l_max^2); below that the truncated series may dip
// negative and values are clamped at 1e-300.
struct HeatKernelSO3 {
  double sigma = 0.5;
  int l_max = 60;
};

// chi_l with the removable singularity at theta = 0 handled explicitly.
double so3_character(int l, double theta);

// Point-pair kernel values; t <= 0 (or non-finite) is rejected.
double kernel_value_so2(const HeatKernelSO2& k, double t, double dtheta);
double kernel_value_so3(const HeatKernelSO3& k, double t, double theta12);

// Class-class kernel: the conjugation average of the point-pair kernel,
//   k_t(th1, th2) = sum_l e^{-l(l+1) sigma^2 t / 2} chi_l(th1) chi_l(th2)
// (Schur orthogonality averages chi_l(g x g^-1 y) to chi_l(x) chi_l(y)/(2l+1)).
// This is the kernel of T_t acting on class functions; its th2 -> 0 limit is
// kernel_value_so3.
double class_kernel_value_so3(const HeatKernelSO3& k, double t, double th1, double th2);

enum class Domain { linear, log };

// Heat semigroup T_t materialised for one (grid, t):
//  - so2: spectral multipliers e^{-sigma^2 m^2 t/2} applied by FFT in the
//    linear domain, plus the circulant log-kernel row for log-sum-exp applies;
//  - so3_class: dense matrix K[i][j] = k_t(th_i, th_j) * w_j and its log.
// T_t is stochastic (T_t 1 = 1), positivity-preserving and self-adjoint for
// the discrete Haar inner product.  apply() is pure and safe to call
// concurrently.
class SemigroupOperator {
 public:
  static SemigroupOperator make(std::shared_ptr<const GroupGrid> grid,
                                const HeatKernelSO2& kernel, double t);
  static SemigroupOperator make(std::shared_ptr<const GroupGrid> grid,
                                const HeatKernelSO3& kernel, double t);

  // Domain::linear treats f as values (requires f >= 0); Domain::log treats f
  // as log values and evaluates log(T_t exp(f)) by log-sum-exp, which cannot
  // overflow for finite input.
  Eigen::ArrayXd apply(const Eigen::ArrayXd& f, Domain domain) const;

  PositiveGridFunction apply(const PositiveGridFunction& f) const;

  double time() const { return t_; }
  double sigma() const { return sigma_; }
  const GroupGrid& grid() const { return *grid_; }
  const std::shared_ptr<const GroupGrid>& grid_ptr() const { return grid_; }

 private:
  SemigroupOperator() = default;

  std::shared_ptr<const GroupGrid> grid_;
  double t_ = 0.0;
  double sigma_ = 0.0;

  // so2 state
  std::shared_ptr<const CircleFft> fft_;
  Eigen::ArrayXd multipliers_;     // index |m| = 0 .. N/2
  Eigen::ArrayXd log_kernel_row_;  // log k_t(d * h), clamped, d = 0 .. N-1

  // so3_class state
  Eigen::MatrixXd lin_;     // K[i][j] = k_t(th_i, th_j) w_j
  Eigen::MatrixXd log_kw_;  // log(K[i][j]) with the weight folded in
};

// Kernel parameters for one bridge problem; picks the group-appropriate
// family from a shared (sigma, truncation) pair.
struct KernelSpec {
  double sigma = 1.0;
  int truncation = 0;  // 0 = default: N/2 (so2) or 60 (so3_class)

  HeatKernelSO2 so2(const GroupGrid& grid) const;
  HeatKernelSO3 so3() const;
};

// Insert-or-get cache of semigroup operators keyed by t.  Thread safe; bounded
// (oldest entries evicted) so dense SO(3) operators cannot exhaust memory.
class OperatorCache {
 public:
  OperatorCache(std::shared_ptr<const GroupGrid> grid, KernelSpec spec);

  std::shared_ptr<const SemigroupOperator> at(double t) const;
  // Builds without touching the cache (used for one-shot times).
  std::shared_ptr<const SemigroupOperator> build(double t) const;

  const GroupGrid& grid() const { return *grid_; }
  const KernelSpec& spec() const { return spec_; }

 private:
  std::shared_ptr<const GroupGrid> grid_;
  KernelSpec spec_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::map<std::uint64_t, std::shared_ptr<const SemigroupOperator>> cache_;
  mutable std::list<std::uint64_t> insertion_order_;
};

}  // namespace liebridge
