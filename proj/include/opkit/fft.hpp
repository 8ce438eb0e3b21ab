#pragma once

#include <vector>

#include "opkit/tensor.hpp"

namespace opkit::fft {

/// Complex-to-complex DFT along `axes` (absolute indices). sign -1 is the
/// forward transform, +1 the inverse; `normalize` divides by the axis length
/// after each axis. Mixed-radix: radix-2 fast path, recursive decimation by
/// the smallest prime factor otherwise, naive transform at prime lengths.
/// Not recorded on the tape.
Tensor c2c(const Tensor& x, const std::vector<int>& axes, int sign,
           bool normalize);

/// Real-to-half-complex transform over the trailing `spatial_dims` axes,
/// unnormalized (a constant c on n points puts c·n at k=0). The last axis
/// keeps bins [0, n_d/2]. Not recorded on the tape.
Tensor rfftn_raw(const Tensor& x, int spatial_dims);

/// Inverse of rfftn_raw, normalized by 1/prod(sizes). `sizes` are the full
/// spatial sizes n_1..n_d. Not recorded on the tape.
Tensor irfftn_raw(const Tensor& s, const Shape& sizes);

/// Differentiable counterparts; the backward passes account for the
/// double-counted bins of the Hermitian half spectrum.
Tensor rfftn(const Tensor& x, int spatial_dims);
Tensor irfftn(const Tensor& s, Shape sizes);

/// Half-spectrum length of a full axis: floor(n/2) + 1.
inline std::int64_t half_bins(std::int64_t n) { return n / 2 + 1; }

}  // namespace opkit::fft
