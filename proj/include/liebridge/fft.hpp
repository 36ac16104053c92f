#pragma once

#include <complex>
#include <cstddef>
#include <memory>

#include <Eigen/Dense>

namespace liebridge {

// Complex-to-complex FFT of fixed length backed by FFTW.  Plan creation is
// serialised (FFTW's planner is not thread safe); execution goes through the
// new-array interface with unaligned plans, which is safe for concurrent use
// on distinct buffers.
class CircleFft {
 public:
  explicit CircleFft(std::size_t n);
  ~CircleFft();
  CircleFft(const CircleFft&) = delete;
  CircleFft& operator=(const CircleFft&) = delete;

  std::size_t size() const { return n_; }

  // In-place unnormalised transforms; inverse leaves the factor n to the caller.
  void forward(std::complex<double>* data) const;
  void inverse(std::complex<double>* data) const;

  // Process-wide instance cache keyed by length.
  static std::shared_ptr<const CircleFft> shared(std::size_t n);

 private:
  std::size_t n_;
  void* plan_fwd_;
  void* plan_inv_;
};

// d/dtheta on the uniform circle grid by Fourier multiplier i*m; the Nyquist
// mode (even n) carries no sign information and is zeroed.
Eigen::ArrayXd spectral_derivative(const CircleFft& fft, const Eigen::ArrayXd& f);

// Applies a real multiplier to each Fourier mode of f; mult is indexed by the
// absolute frequency |m| = 0 .. n/2 and must be symmetric in m by contract.
Eigen::ArrayXd apply_spectral_multiplier(const CircleFft& fft, const Eigen::ArrayXd& f,
                                         const Eigen::ArrayXd& mult_abs_m);

}  // namespace liebridge
