#include "opkit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opkit/ops.hpp"

namespace opkit::graph {

namespace {

void check_coords(const Tensor& coords, const char* what) {
  check_arg(coords.is_real() && coords.rank() == 2,
            std::string(what) + ": coordinates must be a real [N, d] tensor");
  check_arg(coords.dim(0) >= 1,
            std::string(what) + ": need at least one point");
  for (std::int64_t i = 0; i < coords.numel(); ++i)
    check_arg(std::isfinite(coords.rat(i)),
              std::string(what) + ": coordinates must be finite");
}

}  // namespace

PointCloud make_cloud(Tensor coords, Tensor features) {
  check_coords(coords, "make_cloud");
  check_arg(features.is_real() && features.rank() == 2 &&
                features.dim(0) == coords.dim(0),
            "make_cloud: features must be a real [N, C] tensor with one row "
            "per point");
  return PointCloud{std::move(coords), std::move(features)};
}

PointCloud make_cloud(Tensor coords) {
  check_coords(coords, "make_cloud");
  Tensor features = Tensor::zeros({coords.dim(0), 0});
  return PointCloud{std::move(coords), std::move(features)};
}

NeighborIndex radius_search(const Tensor& queries, const Tensor& sources,
                            double radius) {
  check_coords(queries, "radius_search");
  check_coords(sources, "radius_search");
  check_arg(radius > 0.0, "radius_search: radius must be positive, got " +
                              std::to_string(radius));
  check_arg(queries.dim(1) == sources.dim(1),
            "radius_search: query dimension " + std::to_string(queries.dim(1)) +
                " does not match source dimension " +
                std::to_string(sources.dim(1)));
  const std::int64_t nq = queries.dim(0);
  const std::int64_t ns = sources.dim(0);
  const std::int64_t d = queries.dim(1);
  const double r2 = radius * radius;

  NeighborIndex out;
  out.radius = radius;
  out.offsets.reserve(static_cast<std::size_t>(nq + 1));
  out.offsets.push_back(0);
  for (std::int64_t i = 0; i < nq; ++i) {
    for (std::int64_t j = 0; j < ns; ++j) {
      double dist2 = 0.0;
      for (std::int64_t k = 0; k < d; ++k) {
        const double delta = queries.rat(i * d + k) - sources.rat(j * d + k);
        dist2 += delta * delta;
      }
      if (dist2 <= r2) out.indices.push_back(j);
    }
    out.offsets.push_back(static_cast<std::int64_t>(out.indices.size()));
  }
  return out;
}

std::int64_t isolated_count(const NeighborIndex& index) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i + 1 < index.offsets.size(); ++i)
    if (index.offsets[i + 1] == index.offsets[i]) ++n;
  return n;
}

Tensor kernel_integral(const PointCloud& queries, const PointCloud& sources,
                       const NeighborIndex& index, const KernelFn& kernel,
                       std::int64_t out_channels, std::int64_t* isolated) {
  check_coords(queries.coords, "kernel_integral");
  check_coords(sources.coords, "kernel_integral");
  check_arg(out_channels >= 1, "kernel_integral: out_channels must be >= 1");
  const std::int64_t nq = queries.size();
  const std::int64_t ns = sources.size();
  const std::int64_t d = queries.dim();
  check_arg(sources.dim() == d,
            "kernel_integral: query and source dimensions differ");
  check_arg(sources.features.rank() == 2 && sources.features.dim(0) == ns,
            "kernel_integral: source features must be [N_src, C_in]");
  const std::int64_t cin = sources.features.dim(1);
  check_arg(cin >= 1, "kernel_integral: source features are empty");
  check_arg(static_cast<std::int64_t>(index.offsets.size()) == nq + 1,
            "kernel_integral: index covers " +
                std::to_string(static_cast<std::int64_t>(
                    index.offsets.size()) - 1) +
                " queries, cloud has " + std::to_string(nq));
  check_arg(index.offsets.front() == 0 &&
                index.offsets.back() ==
                    static_cast<std::int64_t>(index.indices.size()),
            "kernel_integral: offsets do not span the index list");
  for (std::size_t i = 0; i + 1 < index.offsets.size(); ++i)
    check_arg(index.offsets[i] <= index.offsets[i + 1],
              "kernel_integral: offsets must be nondecreasing");
  for (std::int64_t j : index.indices)
    check_arg(j >= 0 && j < ns,
              "kernel_integral: source index " + std::to_string(j) +
                  " out of range for " + std::to_string(ns) + " points");

  if (isolated) *isolated = isolated_count(index);

  const std::int64_t pairs = static_cast<std::int64_t>(index.indices.size());
  if (pairs == 0) return Tensor::zeros({nq, out_channels});

  // Accumulate each neighborhood in a geometry-determined order (squared
  // distance, then source index) so that relabeling the points cannot
  // reorder any floating-point sum.
  std::vector<std::int64_t> query_of_pair(static_cast<std::size_t>(pairs));
  std::vector<double> dist2(static_cast<std::size_t>(pairs));
  for (std::int64_t i = 0; i < nq; ++i)
    for (std::int64_t p = index.offsets[static_cast<std::size_t>(i)];
         p < index.offsets[static_cast<std::size_t>(i + 1)]; ++p) {
      query_of_pair[static_cast<std::size_t>(p)] = i;
      const std::int64_t j = index.indices[static_cast<std::size_t>(p)];
      double acc = 0.0;
      for (std::int64_t k = 0; k < d; ++k) {
        const double delta =
            queries.coords.rat(i * d + k) - sources.coords.rat(j * d + k);
        acc += delta * delta;
      }
      dist2[static_cast<std::size_t>(p)] = acc;
    }
  std::vector<std::int64_t> slot(static_cast<std::size_t>(pairs));
  for (std::int64_t p = 0; p < pairs; ++p)
    slot[static_cast<std::size_t>(p)] = p;
  for (std::int64_t i = 0; i < nq; ++i) {
    const auto lo = slot.begin() + index.offsets[static_cast<std::size_t>(i)];
    const auto hi =
        slot.begin() + index.offsets[static_cast<std::size_t>(i + 1)];
    std::sort(lo, hi, [&](std::int64_t a, std::int64_t b) {
      const double da = dist2[static_cast<std::size_t>(a)];
      const double db = dist2[static_cast<std::size_t>(b)];
      if (da != db) return da < db;
      return index.indices[static_cast<std::size_t>(a)] <
             index.indices[static_cast<std::size_t>(b)];
    });
  }
  std::vector<std::int64_t> ordered(static_cast<std::size_t>(pairs));
  for (std::int64_t p = 0; p < pairs; ++p)
    ordered[static_cast<std::size_t>(p)] =
        index.indices[static_cast<std::size_t>(
            slot[static_cast<std::size_t>(p)])];

  Tensor xq = ops::gather_rows(queries.coords, query_of_pair);
  Tensor ys = ops::gather_rows(sources.coords, ordered);
  Tensor pair_coords = ops::concat({xq, ys}, 1);  // [P, 2d]

  Tensor kmat = kernel(pair_coords);
  check_arg(kmat.is_real() && kmat.rank() == 2 && kmat.dim(0) == pairs &&
                kmat.dim(1) == out_channels * cin,
            "kernel_integral: kernel must return [P, " +
                std::to_string(out_channels * cin) + "], got " +
                kmat.shape_str());
  kmat = ops::reshape(kmat, {pairs, out_channels, cin});

  Tensor v = ops::gather_rows(sources.features, ordered);
  v = ops::reshape(v, {pairs, 1, cin});
  Tensor per_pair =
      ops::reduce_sum_axis(ops::mul(kmat, v), 2);  // [P, out_channels]
  Tensor summed = ops::segment_sum(per_pair, index.offsets);

  std::vector<double> inv_count(static_cast<std::size_t>(nq));
  for (std::int64_t i = 0; i < nq; ++i) {
    const std::int64_t c = index.offsets[static_cast<std::size_t>(i + 1)] -
                           index.offsets[static_cast<std::size_t>(i)];
    inv_count[static_cast<std::size_t>(i)] =
        c > 0 ? 1.0 / static_cast<double>(c) : 0.0;
  }
  Tensor weights = Tensor::from_values({nq, 1}, std::move(inv_count));
  return ops::mul(summed, weights);
}

}  // namespace opkit::graph
