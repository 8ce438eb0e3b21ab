#include "opkit/model.hpp"

#include <string>

#include "opkit/ops.hpp"
#include "opkit/rng.hpp"

namespace opkit::models {

namespace {

// Channels sit on axis 1 of grid data; pointwise maps act along the last
// axis, so shuttle the channel axis back and forth.
Tensor channels_last(const Tensor& x) {
  std::vector<int> perm{0};
  for (int k = 2; k < x.rank(); ++k) perm.push_back(k);
  perm.push_back(1);
  return ops::transpose(x, perm);
}

Tensor channels_first(const Tensor& x) {
  std::vector<int> perm{0, static_cast<int>(x.rank()) - 1};
  for (int k = 1; k + 1 < x.rank(); ++k) perm.push_back(k);
  return ops::transpose(x, perm);
}

Tensor pointwise(const nn::Perceptron& p, const Tensor& grid_data) {
  return channels_first(p.apply(channels_last(grid_data)));
}

Tensor pointwise(const nn::Linear& lin, const Tensor& grid_data) {
  return channels_first(lin.apply(channels_last(grid_data)));
}

void collect(std::vector<std::pair<std::string, Tensor*>>& out,
             const std::string& prefix, nn::Perceptron& p) {
  out.emplace_back(prefix + ".l1.w", &p.l1.w);
  out.emplace_back(prefix + ".l1.b", &p.l1.b);
  out.emplace_back(prefix + ".l2.w", &p.l2.w);
  out.emplace_back(prefix + ".l2.b", &p.l2.b);
}

template <typename Model>
std::vector<std::pair<std::string, const Tensor*>> as_const_params(
    const Model& model) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, ptr] : const_cast<Model&>(model).named_params())
    out.emplace_back(name, ptr);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> FnoModel::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect(out, "lift", lift);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "block" + std::to_string(i);
    FnoBlock& blk = blocks[i];
    if (blk.weights.kind == spectral::SpectralWeights::Kind::Dense) {
      out.emplace_back(prefix + ".spectral.dense", &blk.weights.dense);
    } else {
      out.emplace_back(prefix + ".spectral.core", &blk.weights.core);
      for (std::size_t f = 0; f < blk.weights.factors.size(); ++f)
        out.emplace_back(prefix + ".spectral.factor" + std::to_string(f),
                         &blk.weights.factors[f]);
    }
    out.emplace_back(prefix + ".skip.w", &blk.skip.w);
    out.emplace_back(prefix + ".skip.b", &blk.skip.b);
  }
  collect(out, "proj", proj);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> FnoModel::named_params()
    const {
  return as_const_params(*this);
}

FnoModel make_fno(const FnoConfig& config) {
  check_arg(config.d == 1 || config.d == 2,
            "spatial rank must be 1 or 2, got " + std::to_string(config.d));
  check_arg(config.n_layers >= 1, "need at least one layer");
  check_arg(config.hidden_channels >= 1 && config.in_channels >= 1 &&
                config.out_channels >= 1,
            "channel counts must be >= 1");
  check_arg(config.modes.dims() == config.d,
            "modes list length " + std::to_string(config.modes.dims()) +
                " does not match spatial rank " + std::to_string(config.d));
  check_arg(config.padding_fraction >= 0.0 && config.padding_fraction < 0.5,
            "padding fraction must lie in [0, 0.5)");
  check_arg(config.factorization.rank_fraction > 0.0 &&
                config.factorization.rank_fraction <= 1.0,
            "rank fraction must lie in (0, 1]");

  FnoModel model;
  model.config = config;
  Rng rng(config.seed);
  const std::int64_t in_eff =
      config.in_channels + (config.positional_embedding ? config.d : 0);
  model.lift = nn::init_perceptron(in_eff, config.hidden_channels,
                                   config.hidden_channels, rng);
  const bool tucker = config.factorization.kind == Factorization::Kind::Tucker;
  for (std::int64_t i = 0; i < config.n_layers; ++i) {
    FnoBlock blk;
    blk.weights = spectral::init_spectral_weights(
        config.modes, config.hidden_channels, config.hidden_channels,
        tucker ? spectral::SpectralWeights::Kind::Tucker
               : spectral::SpectralWeights::Kind::Dense,
        tucker ? std::vector<double>{config.factorization.rank_fraction}
               : std::vector<double>{},
        rng.next_u64());
    blk.skip = nn::init_linear(config.hidden_channels, config.hidden_channels,
                               rng);
    model.blocks.push_back(std::move(blk));
  }
  model.proj = nn::init_perceptron(config.hidden_channels,
                                   config.hidden_channels,
                                   config.out_channels, rng);
  return model;
}

grid::GridFunction fno_forward(const FnoModel& model,
                               const grid::GridFunction& x,
                               const std::optional<Shape>& output_sizes,
                               const Tensor* mode_mask) {
  const FnoConfig& cfg = model.config;
  check_arg(x.spatial_rank() == cfg.d,
            "input has spatial rank " + std::to_string(x.spatial_rank()) +
                ", model expects " + std::to_string(cfg.d));
  check_arg(x.channels() == cfg.in_channels,
            "input has " + std::to_string(x.channels()) +
                " channels, model expects " + std::to_string(cfg.in_channels));
  if (output_sizes)
    check_arg(static_cast<int>(output_sizes->size()) == cfg.d,
              "output size list must have one entry per spatial dim");

  Tensor h = cfg.positional_embedding ? grid::grid_embedding(x).data : x.data;
  h = pointwise(model.lift, h);

  auto [padded, record] =
      grid::domain_pad(grid::GridFunction{h, x.bounds}, cfg.padding_fraction);
  h = padded;
  Shape inner_sizes;
  for (std::int64_t k = 2; k < h.rank(); ++k) inner_sizes.push_back(h.dim(k));
  spectral::check_modes(cfg.modes, inner_sizes);

  for (std::size_t i = 0; i < model.blocks.size(); ++i) {
    const FnoBlock& blk = model.blocks[i];
    Tensor conv =
        spectral::spectral_conv(h, blk.weights, cfg.modes, {}, mode_mask);
    Tensor skip = pointwise(blk.skip, h);
    h = ops::add(conv, skip);
    if (i + 1 < model.blocks.size()) h = ops::gelu(h);
  }

  grid::GridFunction inner = grid::domain_unpad(h, record, x.bounds);
  Tensor field = inner.data;
  if (output_sizes && *output_sizes != record.original)
    field = spectral::spectral_resample(field, *output_sizes);
  return grid::make_grid(pointwise(model.proj, field), x.bounds);
}

std::vector<std::pair<std::string, Tensor*>> GnoModel::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect(out, "lift", lift);
  collect(out, "kernel", kernel);
  collect(out, "proj", proj);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> GnoModel::named_params()
    const {
  return as_const_params(*this);
}

GnoModel make_gno(const GnoConfig& config) {
  check_arg(config.d >= 1, "coordinate dimension must be >= 1");
  check_arg(config.in_channels >= 1 && config.out_channels >= 1 &&
                config.hidden_channels >= 1 && config.kernel_hidden >= 1,
            "channel counts must be >= 1");
  check_arg(config.radius > 0.0, "radius must be positive");

  GnoModel model;
  model.config = config;
  Rng rng(config.seed);
  model.lift = nn::init_perceptron(config.in_channels, config.hidden_channels,
                                   config.hidden_channels, rng);
  model.kernel = nn::init_perceptron(
      2 * config.d, config.kernel_hidden,
      config.hidden_channels * config.hidden_channels, rng);
  model.proj = nn::init_perceptron(config.hidden_channels,
                                   config.hidden_channels,
                                   config.out_channels, rng);
  return model;
}

graph::PointCloud gno_forward(const GnoModel& model,
                              const graph::PointCloud& in_cloud,
                              const Tensor& query_coords) {
  const GnoConfig& cfg = model.config;
  check_arg(query_coords.is_real() && query_coords.rank() == 2,
            "query coordinates must be a real [N, d] tensor");
  check_arg(query_coords.dim(1) == cfg.d,
            "query coordinates have dimension " +
                std::to_string(query_coords.dim(1)) + ", model expects " +
                std::to_string(cfg.d));
  check_arg(in_cloud.dim() == cfg.d,
            "source cloud has dimension " + std::to_string(in_cloud.dim()) +
                ", model expects " + std::to_string(cfg.d));
  check_arg(in_cloud.features.dim(1) == cfg.in_channels,
            "source features have " + std::to_string(in_cloud.features.dim(1)) +
                " channels, model expects " + std::to_string(cfg.in_channels));

  Tensor lifted = model.lift.apply(in_cloud.features);
  graph::PointCloud sources{in_cloud.coords, lifted};
  graph::PointCloud queries = graph::make_cloud(query_coords);
  graph::NeighborIndex index =
      graph::radius_search(query_coords, in_cloud.coords, cfg.radius);
  Tensor mixed = graph::kernel_integral(
      queries, sources, index,
      [&model](const Tensor& pc) { return model.kernel.apply(pc); },
      cfg.hidden_channels);
  Tensor out = model.proj.apply(ops::gelu(mixed));
  return graph::PointCloud{query_coords, out};
}

namespace {

template <typename Model>
std::int64_t count_params(const Model& model) {
  std::int64_t total = 0;
  for (auto& [name, ptr] : model.named_params())
    total += ptr->numel() * (ptr->is_complex() ? 2 : 1);
  return total;
}

}  // namespace

std::int64_t parameter_count(const FnoModel& model) {
  return count_params(model);
}

std::int64_t parameter_count(const GnoModel& model) {
  return count_params(model);
}

}  // namespace opkit::models
