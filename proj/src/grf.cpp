#include "opkit/grf.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "opkit/fft.hpp"

namespace opkit::data {

namespace {

constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

double amplitude(const GrfSpec& spec, double k_sq) {
  return spec.sigma * std::pow(kFourPiSq * k_sq + spec.tau * spec.tau,
                               -0.5 * spec.alpha);
}

std::int64_t signed_freq(std::int64_t k, std::int64_t n) {
  return k <= n / 2 ? k : k - n;
}

}  // namespace

void check_grf_spec(const GrfSpec& spec, int d) {
  check_arg(spec.tau > 0.0, "grf: tau must be positive, got " +
                                std::to_string(spec.tau));
  check_arg(spec.alpha > 0.5 * d,
            "grf: alpha must exceed d/2 = " + std::to_string(0.5 * d) +
                ", got " + std::to_string(spec.alpha));
  check_arg(spec.sigma >= 0.0, "grf: sigma must be nonnegative, got " +
                                   std::to_string(spec.sigma));
}

Tensor sample_grf_2d(std::int64_t n, const GrfSpec& spec, Rng& rng) {
  check_arg(n >= 4, "grf: grid needs at least 4 points per side");
  check_grf_spec(spec, 2);
  const std::int64_t h = fft::half_bins(n);
  const bool even = n % 2 == 0;
  std::vector<std::complex<double>> s(static_cast<std::size_t>(n * h),
                                      {0.0, 0.0});
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;

  // Free bins in row-major order; rows past n/2 of the self-conjugate
  // columns are mirrors, filled afterwards.
  for (std::int64_t k1 = 0; k1 < n; ++k1) {
    for (std::int64_t k2 = 0; k2 < h; ++k2) {
      const bool conj_col = k2 == 0 || (even && k2 == n / 2);
      if (conj_col && k1 > n / 2) continue;
      if (k1 == 0 && k2 == 0) continue;  // zero mean
      const double f1 = static_cast<double>(signed_freq(k1, n));
      const double f2 = static_cast<double>(k2);
      const double amp = amplitude(spec, f1 * f1 + f2 * f2);
      const bool self_conj = conj_col && (k1 == 0 || (even && k1 == n / 2));
      if (self_conj) {
        s[static_cast<std::size_t>(k1 * h + k2)] = {amp * rng.normal(), 0.0};
      } else {
        const double re = rng.normal();
        const double im = rng.normal();
        s[static_cast<std::size_t>(k1 * h + k2)] = {amp * re * inv_sqrt2,
                                                    amp * im * inv_sqrt2};
      }
    }
  }
  for (std::int64_t k2 = 0; k2 < h; ++k2) {
    const bool conj_col = k2 == 0 || (even && k2 == n / 2);
    if (!conj_col) continue;
    for (std::int64_t k1 = n / 2 + 1; k1 < n; ++k1)
      s[static_cast<std::size_t>(k1 * h + k2)] =
          std::conj(s[static_cast<std::size_t>((n - k1) * h + k2)]);
  }
  Tensor spectrum = Tensor::from_complex({n, h}, std::move(s));
  return fft::irfftn_raw(spectrum, {n, n});
}

Tensor sample_grf_1d(std::int64_t n, const GrfSpec& spec, Rng& rng) {
  check_arg(n >= 4, "grf: grid needs at least 4 points");
  check_grf_spec(spec, 1);
  const std::int64_t h = fft::half_bins(n);
  const bool even = n % 2 == 0;
  std::vector<std::complex<double>> s(static_cast<std::size_t>(h), {0.0, 0.0});
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (std::int64_t k = 1; k < h; ++k) {
    const double amp =
        amplitude(spec, static_cast<double>(k) * static_cast<double>(k));
    if (even && k == n / 2) {
      s[static_cast<std::size_t>(k)] = {amp * rng.normal(), 0.0};
    } else {
      const double re = rng.normal();
      const double im = rng.normal();
      s[static_cast<std::size_t>(k)] = {amp * re * inv_sqrt2,
                                        amp * im * inv_sqrt2};
    }
  }
  Tensor spectrum = Tensor::from_complex({h}, std::move(s));
  return fft::irfftn_raw(spectrum, {n});
}

double grf_point_variance_2d(std::int64_t n, const GrfSpec& spec) {
  double acc = 0.0;
  for (std::int64_t k1 = 0; k1 < n; ++k1)
    for (std::int64_t k2 = 0; k2 < n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double f1 = static_cast<double>(signed_freq(k1, n));
      const double f2 = static_cast<double>(signed_freq(k2, n));
      const double amp = amplitude(spec, f1 * f1 + f2 * f2);
      acc += amp * amp;
    }
  const double cells = static_cast<double>(n) * static_cast<double>(n);
  return acc / (cells * cells);
}

double grf_point_variance_1d(std::int64_t n, const GrfSpec& spec) {
  double acc = 0.0;
  for (std::int64_t k = 1; k < n; ++k) {
    const double f = static_cast<double>(signed_freq(k, n));
    const double amp = amplitude(spec, f * f);
    acc += amp * amp;
  }
  return acc / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace opkit::data
