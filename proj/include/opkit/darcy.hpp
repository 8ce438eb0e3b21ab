#pragma once

#include <cstdint>

#include "opkit/tensor.hpp"

namespace opkit::data {

// Two-phase medium: a_hi where the field is nonnegative, a_lo elsewhere.
Tensor darcy_coefficient(const Tensor& field, double a_hi = 12.0,
                         double a_lo = 3.0);

// Solves -div(a grad u) = f on the unit square with u = 0 on the boundary.
// Inputs live on the (n x n) vertex grid x_i = i / (n - 1) including the
// boundary; 5-point finite volumes with harmonic face coefficients, solved
// by conjugate gradients to relative residual 1e-8.
Tensor solve_darcy(const Tensor& a, const Tensor& f);

// Constant forcing f = 1.
Tensor solve_darcy(const Tensor& a);

}  // namespace opkit::data
