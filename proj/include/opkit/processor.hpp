#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "opkit/grid.hpp"
#include "opkit/tensor.hpp"

namespace opkit::data {

// Per-channel affine normalization fitted over samples and grid points.
// Statistics are scalars per channel, so a normalizer fitted at one
// resolution applies at any other.
class Normalizer {
 public:
  static constexpr double kEps = 1e-8;

  void fit(const Tensor& batch);  // [B, C, n...] real
  bool fitted() const { return fitted_; }
  std::int64_t channels() const;

  Tensor encode(const Tensor& batch) const;
  Tensor decode(const Tensor& batch) const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& std_dev() const { return std_; }
  void restore(std::vector<double> mean, std::vector<double> std_dev);

 private:
  void require_fitted() const;
  std::vector<double> mean_;
  std::vector<double> std_;
  bool fitted_ = false;
};

// Assembles model-ready samples: input normalization plus optional
// positional channels and domain padding; postprocess returns model outputs
// to physical units so losses read in physical space.
class DataProcessor {
 public:
  struct Options {
    bool normalize_in = true;
    bool normalize_out = true;
    bool embed = false;
    std::optional<double> pad_fraction;
  };

  explicit DataProcessor(Options options) : options_(options) {}

  void fit(const Tensor& x_train, const Tensor& y_train);

  struct Prepared {
    Tensor data;
    std::optional<grid::PadRecord> pad;
  };
  Prepared preprocess(const grid::GridFunction& x) const;
  Tensor encode_target(const Tensor& y) const;
  Tensor postprocess(const Tensor& model_output) const;

  /// Reinstates persisted statistics instead of fitting.
  void restore_input(std::vector<double> mean, std::vector<double> std_dev);
  void restore_output(std::vector<double> mean, std::vector<double> std_dev);

  const Options& options() const { return options_; }
  const Normalizer& input_normalizer() const { return in_norm_; }
  const Normalizer& output_normalizer() const { return out_norm_; }

 private:
  Options options_;
  Normalizer in_norm_;
  Normalizer out_norm_;
};

}  // namespace opkit::data
