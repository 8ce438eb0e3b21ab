#include "opkit/processor.hpp"

#include <cmath>
#include <string>

#include "opkit/ops.hpp"

namespace opkit::data {

namespace {

Tensor channel_constant(const std::vector<double>& values,
                        std::int64_t rank) {
  Shape shape(static_cast<std::size_t>(rank), 1);
  shape[1] = static_cast<std::int64_t>(values.size());
  return Tensor::from_values(shape, std::vector<double>(values));
}

void check_batch(const Tensor& batch) {
  check_arg(batch.is_real() && batch.rank() >= 3,
            "normalizer expects real [B, C, n...] data, got " +
                batch.shape_str());
}

}  // namespace

void Normalizer::fit(const Tensor& batch) {
  check_batch(batch);
  const std::int64_t c = batch.dim(1);
  std::int64_t inner = 1;
  for (std::int64_t k = 2; k < batch.rank(); ++k) inner *= batch.dim(k);
  const std::int64_t b = batch.dim(0);
  mean_.assign(static_cast<std::size_t>(c), 0.0);
  std_.assign(static_cast<std::size_t>(c), 0.0);
  const double count = static_cast<double>(b * inner);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double acc = 0.0, acc2 = 0.0;
    for (std::int64_t i = 0; i < b; ++i)
      for (std::int64_t j = 0; j < inner; ++j) {
        const double v = batch.rat((i * c + ch) * inner + j);
        acc += v;
        acc2 += v * v;
      }
    const double mu = acc / count;
    mean_[static_cast<std::size_t>(ch)] = mu;
    std_[static_cast<std::size_t>(ch)] =
        std::sqrt(std::max(0.0, acc2 / count - mu * mu));
  }
  fitted_ = true;
}

std::int64_t Normalizer::channels() const {
  require_fitted();
  return static_cast<std::int64_t>(mean_.size());
}

void Normalizer::require_fitted() const {
  if (!fitted_)
    throw std::logic_error("normalizer used before fitting any statistics");
}

Tensor Normalizer::encode(const Tensor& batch) const {
  require_fitted();
  check_batch(batch);
  check_arg(batch.dim(1) == channels(),
            "normalizer fitted for " + std::to_string(channels()) +
                " channels, got " + std::to_string(batch.dim(1)));
  std::vector<double> scale(mean_.size());
  for (std::size_t i = 0; i < scale.size(); ++i)
    scale[i] = 1.0 / (std_[i] + kEps);
  return ops::mul(ops::sub(batch, channel_constant(mean_, batch.rank())),
                  channel_constant(scale, batch.rank()));
}

Tensor Normalizer::decode(const Tensor& batch) const {
  require_fitted();
  check_batch(batch);
  check_arg(batch.dim(1) == channels(),
            "normalizer fitted for " + std::to_string(channels()) +
                " channels, got " + std::to_string(batch.dim(1)));
  std::vector<double> scale(mean_.size());
  for (std::size_t i = 0; i < scale.size(); ++i) scale[i] = std_[i] + kEps;
  return ops::add(ops::mul(batch, channel_constant(scale, batch.rank())),
                  channel_constant(mean_, batch.rank()));
}

void Normalizer::restore(std::vector<double> mean,
                         std::vector<double> std_dev) {
  check_arg(!mean.empty() && mean.size() == std_dev.size(),
            "normalizer statistics must be non-empty and aligned");
  mean_ = std::move(mean);
  std_ = std::move(std_dev);
  fitted_ = true;
}

void DataProcessor::fit(const Tensor& x_train, const Tensor& y_train) {
  if (options_.normalize_in) in_norm_.fit(x_train);
  if (options_.normalize_out) out_norm_.fit(y_train);
}

DataProcessor::Prepared DataProcessor::preprocess(
    const grid::GridFunction& x) const {
  Tensor data = options_.normalize_in ? in_norm_.encode(x.data) : x.data;
  grid::GridFunction staged{data, x.bounds};
  if (options_.embed) staged = grid::grid_embedding(staged);
  Prepared out{staged.data, std::nullopt};
  if (options_.pad_fraction) {
    auto [padded, record] = grid::domain_pad(staged, *options_.pad_fraction);
    out.data = padded;
    out.pad = record;
  }
  return out;
}

Tensor DataProcessor::encode_target(const Tensor& y) const {
  return options_.normalize_out ? out_norm_.encode(y) : y;
}

Tensor DataProcessor::postprocess(const Tensor& model_output) const {
  return options_.normalize_out ? out_norm_.decode(model_output)
                                : model_output;
}

void DataProcessor::restore_input(std::vector<double> mean,
                                  std::vector<double> std_dev) {
  in_norm_.restore(std::move(mean), std::move(std_dev));
}

void DataProcessor::restore_output(std::vector<double> mean,
                                   std::vector<double> std_dev) {
  out_norm_.restore(std::move(mean), std::move(std_dev));
}

}  // namespace opkit::data
