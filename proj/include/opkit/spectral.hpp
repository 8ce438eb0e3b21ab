#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "opkit/tensor.hpp"

namespace opkit::spectral {

/// Retained Fourier mode counts per spatial dimension, m_1..m_d.
struct ModeSpec {
  std::vector<std::int64_t> modes;

  int dims() const { return static_cast<int>(modes.size()); }
};

/// Rejects grids too small for the requested modes: every axis needs
/// n_i >= 2 m_i. Never clamps.
void check_modes(const ModeSpec& spec, const Shape& sizes);

/// Shape of the retained-mode block: 2m_1,..,2m_{d-1}, m_d.
Shape kept_shape(const ModeSpec& spec);

/// Number of retained modes, prod(kept_shape).
std::int64_t mode_count(const ModeSpec& spec);

/// Per-mode channel mixing weights.
struct SpectralWeights {
  enum class Kind { Dense, Tucker };
  Kind kind = Kind::Dense;
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  /// Dense kind: complex [2m_1,..,2m_{d-1}, m_d, C_in, C_out].
  Tensor dense;
  /// Tucker kind: complex core [r_1,..,r_{d+2}] and one factor matrix per
  /// dense axis, factor k of shape [axis_k, r_k].
  Tensor core;
  std::vector<Tensor> factors;

  std::vector<Tensor*> trainable();
  std::vector<const Tensor*> trainable() const;
  /// Complex-entry count of the parameterization.
  std::int64_t complex_entries() const;
};

/// Keeps the low positive and low negative frequencies of a half spectrum
/// `s` with trailing spatial layout [n_1,..,n_{d-1}, floor(n_d/2)+1]: full
/// axes keep [0, m_i) and [n_i - m_i, n_i), the Hermitian axis keeps
/// [0, m_d). Differentiable.
Tensor truncate_modes(const Tensor& s, const ModeSpec& spec,
                      const Shape& sizes);

/// Scatters a retained-mode block back into a half spectrum for grids of
/// `sizes`, zeros elsewhere. Inverse of truncate_modes on the kept set.
Tensor expand_modes(const Tensor& t, const ModeSpec& spec, const Shape& sizes);

/// Batched per-mode channel mixing: x [B, C_in, K] and weights [K, C_in,
/// C_out] produce [B, C_out, K], out[b,co,k] = sum_ci x[b,ci,k] * w[k,ci,co].
/// Complex, differentiable.
Tensor mode_mix(const Tensor& x, const Tensor& w);

/// Fourier-space convolution layer: transform, truncate to the retained
/// modes, mix channels per mode, scatter back, inverse transform. Input
/// x is [B, C_in, n_1..n_d]; output [B, C_out, out sizes]. `output_sizes`
/// synthesizes the result on a different grid via spectrum zero-padding or
/// truncation. `mode_mask` (complex [1, 1, kept modes], usually from
/// make_mode_mask) zeroes retained coefficients before mixing, so masked
/// modes contribute nothing forward and their weights get zero gradient.
/// Differentiable in x and the weights.
Tensor spectral_conv(const Tensor& x, const SpectralWeights& w,
                     const ModeSpec& spec,
                     const std::optional<Shape>& output_sizes = std::nullopt,
                     const Tensor* mode_mask = nullptr);

/// 0/1 mask over the retained-mode block that keeps only frequencies below
/// the `active` counts, matching the truncation layout of a smaller spec.
Tensor make_mode_mask(const ModeSpec& spec,
                      const std::vector<std::int64_t>& active);

/// Dense weight tensor of a Tucker parameterization: core contracted with
/// every factor along its axis. Differentiable.
Tensor tucker_reconstruct(const SpectralWeights& w);

/// Fresh weights with real and imaginary parts i.i.d. uniform in (-s, s),
/// s = 1/(C_in*C_out). For the Tucker kind, `rank_fractions` holds either
/// one fraction for every dense axis or one per axis; rank_k =
/// ceil(fraction * axis_k).
SpectralWeights init_spectral_weights(const ModeSpec& spec,
                                      std::int64_t in_channels,
                                      std::int64_t out_channels,
                                      SpectralWeights::Kind kind,
                                      const std::vector<double>& rank_fractions,
                                      std::uint64_t seed);

/// Changes the grid of x [B, C, n_1..n_d] to `new_sizes` by zero-padding or
/// truncating its spectrum; exact on band-limited content. Differentiable.
Tensor spectral_resample(const Tensor& x, const Shape& new_sizes);

}  // namespace opkit::spectral
