#include "opkit/burgers.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "opkit/fft.hpp"

namespace opkit::data {

namespace {

using cd = std::complex<double>;

bool power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<cd> spectrum_of(const std::vector<double>& u) {
  Tensor t = Tensor::from_values({static_cast<std::int64_t>(u.size())},
                                 std::vector<double>(u));
  Tensor s = fft::rfftn_raw(t, 1);
  std::vector<cd> out(static_cast<std::size_t>(s.numel()));
  for (std::int64_t i = 0; i < s.numel(); ++i)
    out[static_cast<std::size_t>(i)] = s.cat(i);
  return out;
}

std::vector<double> field_of(const std::vector<cd>& s, std::int64_t n) {
  Tensor t =
      Tensor::from_complex({static_cast<std::int64_t>(s.size())},
                           std::vector<cd>(s));
  Tensor u = fft::irfftn_raw(t, {n});
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = u.rat(i);
  return out;
}

}  // namespace

Tensor solve_burgers(const Tensor& u0, double nu, double t_final) {
  check_arg(u0.is_real() && u0.rank() == 1,
            "solve_burgers: initial state must be a real [n] tensor");
  const std::int64_t n = u0.dim(0);
  check_arg(power_of_two(n) && n >= 16,
            "solve_burgers: n must be a power of two >= 16, got " +
                std::to_string(n));
  check_arg(nu > 0.0, "solve_burgers: viscosity must be positive, got " +
                          std::to_string(nu));
  check_arg(t_final >= 0.0, "solve_burgers: time must be nonnegative");

  const std::int64_t h = fft::half_bins(n);
  const double dx = 1.0 / static_cast<double>(n);

  // Angular wavenumbers and the 2/3 dealiasing mask (Nyquist removed).
  std::vector<double> kappa(static_cast<std::size_t>(h));
  std::vector<double> mask(static_cast<std::size_t>(h));
  for (std::int64_t k = 0; k < h; ++k) {
    kappa[static_cast<std::size_t>(k)] =
        2.0 * std::numbers::pi * static_cast<double>(k);
    mask[static_cast<std::size_t>(k)] = 3 * k <= n && k < n / 2 ? 1.0 : 0.0;
  }

  std::vector<double> u(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = u0.rat(i);
  std::vector<cd> uhat = spectrum_of(u);

  // Spectrum of -u u_x with masked inputs and a masked result.
  auto advection = [&](const std::vector<cd>& s) {
    std::vector<cd> sm(static_cast<std::size_t>(h)), dm(static_cast<std::size_t>(h));
    for (std::int64_t k = 0; k < h; ++k) {
      const double m = mask[static_cast<std::size_t>(k)];
      sm[static_cast<std::size_t>(k)] = m * s[static_cast<std::size_t>(k)];
      dm[static_cast<std::size_t>(k)] =
          m * cd{0.0, kappa[static_cast<std::size_t>(k)]} *
          s[static_cast<std::size_t>(k)];
    }
    const std::vector<double> uu = field_of(sm, n);
    const std::vector<double> ux = field_of(dm, n);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
      w[static_cast<std::size_t>(i)] = -uu[static_cast<std::size_t>(i)] *
                                       ux[static_cast<std::size_t>(i)];
    std::vector<cd> what = spectrum_of(w);
    for (std::int64_t k = 0; k < h; ++k)
      what[static_cast<std::size_t>(k)] *= mask[static_cast<std::size_t>(k)];
    return what;
  };

  double t = 0.0;
  while (t < t_final) {
    const std::vector<double> state = field_of(uhat, n);
    double umax = 0.0;
    for (double v : state) {
      if (!std::isfinite(v))
        throw std::runtime_error(
            "solve_burgers: state became non-finite at t = " +
            std::to_string(t));
      umax = std::max(umax, std::abs(v));
    }
    double dt = 0.4 * dx * dx / nu;
    if (umax > 0.0) dt = std::min(dt, 0.5 * dx / umax);
    dt = std::min(dt, t_final - t);

    // Integrating-factor RK4: exact diffusion propagators between stages.
    std::vector<double> e_half(static_cast<std::size_t>(h)),
        e_full(static_cast<std::size_t>(h));
    for (std::int64_t k = 0; k < h; ++k) {
      const double kk = kappa[static_cast<std::size_t>(k)];
      e_half[static_cast<std::size_t>(k)] = std::exp(-nu * kk * kk * dt * 0.5);
      e_full[static_cast<std::size_t>(k)] = std::exp(-nu * kk * kk * dt);
    }

    const std::vector<cd> k1 = advection(uhat);
    std::vector<cd> stage(static_cast<std::size_t>(h));
    for (std::int64_t k = 0; k < h; ++k)
      stage[static_cast<std::size_t>(k)] =
          e_half[static_cast<std::size_t>(k)] *
          (uhat[static_cast<std::size_t>(k)] +
           0.5 * dt * k1[static_cast<std::size_t>(k)]);
    const std::vector<cd> k2 = advection(stage);
    for (std::int64_t k = 0; k < h; ++k)
      stage[static_cast<std::size_t>(k)] =
          e_half[static_cast<std::size_t>(k)] *
              uhat[static_cast<std::size_t>(k)] +
          0.5 * dt * k2[static_cast<std::size_t>(k)];
    const std::vector<cd> k3 = advection(stage);
    for (std::int64_t k = 0; k < h; ++k)
      stage[static_cast<std::size_t>(k)] =
          e_full[static_cast<std::size_t>(k)] *
              uhat[static_cast<std::size_t>(k)] +
          dt * e_half[static_cast<std::size_t>(k)] *
              k3[static_cast<std::size_t>(k)];
    const std::vector<cd> k4 = advection(stage);
    for (std::int64_t k = 0; k < h; ++k) {
      const double eh = e_half[static_cast<std::size_t>(k)];
      const double ef = e_full[static_cast<std::size_t>(k)];
      uhat[static_cast<std::size_t>(k)] =
          ef * uhat[static_cast<std::size_t>(k)] +
          dt / 6.0 *
              (ef * k1[static_cast<std::size_t>(k)] +
               2.0 * eh *
                   (k2[static_cast<std::size_t>(k)] +
                    k3[static_cast<std::size_t>(k)]) +
               k4[static_cast<std::size_t>(k)]);
    }
    t += dt;
  }

  std::vector<double> out = field_of(uhat, n);
  for (double v : out)
    if (!std::isfinite(v))
      throw std::runtime_error("solve_burgers: final state is non-finite");
  return Tensor::from_values({n}, std::move(out));
}

}  // namespace opkit::data
