#pragma once

#include <cstdint>

#include "opkit/tensor.hpp"

namespace opkit::data {

// Viscous Burgers equation u_t + u u_x = nu u_xx on the periodic unit
// interval, advanced from u0 to time t_final. Pseudo-spectral: the advection
// term is formed in physical space under the 2/3 dealiasing rule, diffusion
// is applied exactly in spectral space, and the remaining dynamics use RK4
// with dt = min(0.5 dx / max|u|, 0.4 dx^2 / nu) refreshed every step.
Tensor solve_burgers(const Tensor& u0, double nu, double t_final);

}  // namespace opkit::data
