#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "opkit/tensor.hpp"

namespace opkit::graph {

// A finite set of points with per-point feature rows.
struct PointCloud {
  Tensor coords;    // [N, d] real
  Tensor features;  // [N, C] real

  std::int64_t size() const { return coords.dim(0); }
  std::int64_t dim() const { return coords.dim(1); }
};

PointCloud make_cloud(Tensor coords, Tensor features);
PointCloud make_cloud(Tensor coords);

// Flattened adjacency: sources for query i live at
// indices[offsets[i] .. offsets[i+1]).
struct NeighborIndex {
  std::vector<std::int64_t> offsets;
  std::vector<std::int64_t> indices;
  double radius = 0.0;
};

// Exact brute-force search; boundary inclusive, per-query sources in
// ascending index order.
NeighborIndex radius_search(const Tensor& queries, const Tensor& sources,
                            double radius);

// Number of queries with an empty neighborhood.
std::int64_t isolated_count(const NeighborIndex& index);

// Maps stacked pair coordinates [P, 2d] to flattened kernel matrices
// [P, out_channels * in_channels].
using KernelFn = std::function<Tensor(const Tensor&)>;

// out(x_i) = mean over neighbors j of kappa(x_i, y_j) @ v(y_j).
// Queries with no neighbors yield zero rows; their count is written to
// *isolated when the pointer is non-null. The per-query mean denominator is
// always recomputed from the index, so uniformly duplicating the source set
// (with a matching index) leaves outputs unchanged up to roundoff.
Tensor kernel_integral(const PointCloud& queries, const PointCloud& sources,
                       const NeighborIndex& index, const KernelFn& kernel,
                       std::int64_t out_channels,
                       std::int64_t* isolated = nullptr);

}  // namespace opkit::graph
