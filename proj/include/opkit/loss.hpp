#pragma once

#include <cstdint>

#include "opkit/tensor.hpp"

namespace opkit::train {

// Which functional distance the trainer minimizes. Both reduce per-sample
// ratios by a batch mean, so every sample counts equally regardless of its
// own magnitude.
struct LossSpec {
  enum class Kind { RelativeLp, H1 };
  Kind kind = Kind::RelativeLp;
  double p = 2.0;
};

/// Mean over the batch of ||pred - target||_p / ||target||_p with discrete
/// p-norms over channels and grid points. The grid-spacing factor cancels
/// in the ratio, so values are comparable across resolutions. Inputs are
/// real [B, ...] with matching shapes; differentiable.
/// Throws std::invalid_argument when a target sample has zero norm, naming
/// the sample index.
Tensor relative_lp_loss(const Tensor& pred, const Tensor& target, double p);

/// Squared Sobolev H1 norm per sample, [B]. Computed spectrally on the
/// trailing `spatial_dims` axes under the periodic convention:
/// sum_k (1 + 4 pi^2 |k|^2) |u_hat_k|^2 / N^2 with Hermitian double-count
/// weights, which equals mean|u|^2 + mean|grad u|^2. Differentiable.
Tensor h1_norm_sq(const Tensor& u, int spatial_dims);

/// Mean over the batch of ||pred - target||_H1 / ||target||_H1.
Tensor h1_loss(const Tensor& pred, const Tensor& target, int spatial_dims);

/// Dispatches on spec.kind.
Tensor apply_loss(const LossSpec& spec, const Tensor& pred,
                  const Tensor& target, int spatial_dims);

}  // namespace opkit::train
