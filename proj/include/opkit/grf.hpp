#pragma once

#include <cstdint>

#include "opkit/rng.hpp"
#include "opkit/tensor.hpp"

namespace opkit::data {

// Periodic Gaussian random field with spectral amplitude
// sigma * (4 pi^2 |k|^2 + tau^2)^(-alpha/2) at integer wavevector k.
struct GrfSpec {
  double tau = 3.0;
  double alpha = 2.0;
  double sigma = 1.0;
};

void check_grf_spec(const GrfSpec& spec, int d);

// Zero-mean real field on the n x n periodic grid; consumes draws from rng
// in a fixed documented order, so a seeded generator reproduces the field.
Tensor sample_grf_2d(std::int64_t n, const GrfSpec& spec, Rng& rng);

// One-dimensional counterpart on n points.
Tensor sample_grf_1d(std::int64_t n, const GrfSpec& spec, Rng& rng);

// Pointwise variance of the field implied by the spectrum, for validation.
double grf_point_variance_2d(std::int64_t n, const GrfSpec& spec);
double grf_point_variance_1d(std::int64_t n, const GrfSpec& spec);

}  // namespace opkit::data
