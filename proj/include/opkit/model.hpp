#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opkit/graph.hpp"
#include "opkit/grid.hpp"
#include "opkit/nn.hpp"
#include "opkit/spectral.hpp"
#include "opkit/tensor.hpp"

namespace opkit::models {

struct Factorization {
  enum class Kind { None, Tucker };
  Kind kind = Kind::None;
  double rank_fraction = 1.0;
};

struct FnoConfig {
  int d = 2;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t hidden_channels = 32;
  std::int64_t n_layers = 4;
  spectral::ModeSpec modes;
  double padding_fraction = 0.0;
  Factorization factorization;
  bool positional_embedding = true;
  std::uint64_t seed = 0;
};

struct FnoBlock {
  spectral::SpectralWeights weights;
  nn::Linear skip;
};

struct FnoModel {
  FnoConfig config;
  nn::Perceptron lift;
  std::vector<FnoBlock> blocks;
  nn::Perceptron proj;

  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
};

FnoModel make_fno(const FnoConfig& config);

// Lifting, n_layers spectral blocks with pointwise skips, projection.
// output_sizes switches the result to a different grid via spectral
// resampling of the hidden field. mode_mask (from spectral::make_mode_mask)
// restricts every block to a sub-band of the retained modes.
grid::GridFunction fno_forward(const FnoModel& model,
                               const grid::GridFunction& x,
                               const std::optional<Shape>& output_sizes = {},
                               const Tensor* mode_mask = nullptr);

struct GnoConfig {
  int d = 2;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t hidden_channels = 16;
  std::int64_t kernel_hidden = 32;
  double radius = 0.25;
  std::uint64_t seed = 0;
};

struct GnoModel {
  GnoConfig config;
  nn::Perceptron lift;
  nn::Perceptron kernel;
  nn::Perceptron proj;

  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
};

GnoModel make_gno(const GnoConfig& config);

// Pointwise lifting, kernel integral from sources onto the query set, gelu,
// pointwise projection.
graph::PointCloud gno_forward(const GnoModel& model,
                              const graph::PointCloud& in_cloud,
                              const Tensor& query_coords);

// Trainable scalars; complex entries count twice.
std::int64_t parameter_count(const FnoModel& model);
std::int64_t parameter_count(const GnoModel& model);

}  // namespace opkit::models
