#include "liebridge/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace liebridge {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

CircleFft::CircleFft(std::size_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("CircleFft: length must be >= 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  std::vector<std::complex<double>> scratch(n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  plan_fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_inv_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan_fwd_ == nullptr || plan_inv_ == nullptr)
    throw std::runtime_error("CircleFft: FFTW plan creation failed");
}

CircleFft::~CircleFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

void CircleFft::forward(std::complex<double>* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), buf, buf);
}

void CircleFft::inverse(std::complex<double>* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_inv_), buf, buf);
}

std::shared_ptr<const CircleFft> CircleFft::shared(std::size_t n) {
  static std::mutex cache_mutex;
  static std::map<std::size_t, std::shared_ptr<const CircleFft>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto fft = std::make_shared<const CircleFft>(n);
  cache.emplace(n, fft);
  return fft;
}

Eigen::ArrayXd spectral_derivative(const CircleFft& fft, const Eigen::ArrayXd& f) {
  const std::size_t n = fft.size();
  if (static_cast<std::size_t>(f.size()) != n)
    throw std::invalid_argument("spectral_derivative: size mismatch");
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = f[static_cast<Eigen::Index>(i)];
  fft.forward(buf.data());
  for (std::size_t j = 0; j < n; ++j) {
    // Signed frequency of FFT slot j; Nyquist (j = n/2 for even n) zeroed.
    long m = static_cast<long>(j);
    if (2 * j > n) m -= static_cast<long>(n);
    if (2 * j == n) m = 0;
    buf[j] *= std::complex<double>(0.0, static_cast<double>(m));
  }
  fft.inverse(buf.data());
  Eigen::ArrayXd out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[static_cast<Eigen::Index>(i)] = buf[i].real() / static_cast<double>(n);
  return out;
}

Eigen::ArrayXd apply_spectral_multiplier(const CircleFft& fft, const Eigen::ArrayXd& f,
                                         const Eigen::ArrayXd& mult_abs_m) {
  const std::size_t n = fft.size();
  if (static_cast<std::size_t>(f.size()) != n)
    throw std::invalid_argument("apply_spectral_multiplier: size mismatch");
  if (static_cast<std::size_t>(mult_abs_m.size()) != n / 2 + 1)
    throw std::invalid_argument("apply_spectral_multiplier: need n/2+1 multipliers");
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = f[static_cast<Eigen::Index>(i)];
  fft.forward(buf.data());
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t m = (2 * j > n) ? n - j : j;
    buf[j] *= mult_abs_m[static_cast<Eigen::Index>(m)];
  }
  fft.inverse(buf.data());
  Eigen::ArrayXd out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[static_cast<Eigen::Index>(i)] = buf[i].real() / static_cast<double>(n);
  return out;
}

}  // namespace liebridge
