#pragma once

// Test-only spectral helpers: iterative radix-2 FFT, magnitude spectra and
// interpolated peak picking.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qtest {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place forward FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len)
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
  }
}

/// |X[k]| for k in [0, n/2], zero-padding x to n (a power of two >= x.size()).
inline std::vector<double> magnitude_spectrum(std::span<const double> x, std::size_t n = 0) {
  if (n == 0) n = next_pow2(x.size());
  std::vector<std::complex<double>> a(n);
  for (std::size_t i = 0; i < x.size() && i < n; ++i) a[i] = x[i];
  fft(a);
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(a[k]);
  return mag;
}

/// Frequency of the largest spectral peak above min_hz, refined by parabolic
/// interpolation of log magnitudes.
inline double peak_frequency(std::span<const double> x, double rate, std::size_t n = 0, double min_hz = 1.0) {
  if (n == 0) n = next_pow2(x.size());
  const auto mag = magnitude_spectrum(x, n);
  const double bin_hz = rate / static_cast<double>(n);
  std::size_t best = 1;
  for (std::size_t k = 1; k + 1 < mag.size(); ++k)
    if (static_cast<double>(k) * bin_hz >= min_hz && mag[k] > mag[best]) best = k;
  if (best == 0 || best + 1 >= mag.size()) return static_cast<double>(best) * bin_hz;
  const double a = std::log(mag[best - 1] + 1e-300);
  const double b = std::log(mag[best] + 1e-300);
  const double c = std::log(mag[best + 1] + 1e-300);
  const double denom = a - 2.0 * b + c;
  const double delta = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return (static_cast<double>(best) + delta) * bin_hz;
}

inline double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double e = 0.0;
  for (double v : x) e += v * v;
  return std::sqrt(e / static_cast<double>(x.size()));
}

}  // namespace qtest
