#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "opkit/tensor.hpp"

namespace opkit::grid {

// A batched field sampled on a uniform endpoint-exclusive grid: point i along
// dim k sits at low_k + i * (high_k - low_k) / n_k.
struct GridFunction {
  Tensor data;  // [B, C, n_1, .., n_d] real
  std::vector<std::pair<double, double>> bounds;

  std::int64_t batch() const { return data.dim(0); }
  std::int64_t channels() const { return data.dim(1); }
  int spatial_rank() const { return static_cast<int>(data.rank()) - 2; }
  Shape spatial_sizes() const;
};

GridFunction make_grid(Tensor data,
                       std::vector<std::pair<double, double>> bounds);

// Unit bounds on every dim.
GridFunction make_grid(Tensor data);

// Appends d channels holding the normalized coordinates i / n_k in [0, 1).
GridFunction grid_embedding(const GridFunction& x);

struct PadRecord {
  Shape original;             // spatial sizes before padding
  std::vector<std::int64_t> pad;  // zeros appended per dim
};

// Pads each spatial dim on the high side with round(fraction * n_k) zeros,
// keeping the padded physical extent resolution-independent.
std::pair<Tensor, PadRecord> domain_pad(const GridFunction& x,
                                        double fraction);
GridFunction domain_unpad(const Tensor& y, const PadRecord& record,
                          std::vector<std::pair<double, double>> bounds);

}  // namespace opkit::grid
