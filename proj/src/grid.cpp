#include "opkit/grid.hpp"

#include <cmath>
#include <string>

#include "opkit/ops.hpp"

namespace opkit::grid {

namespace {

void check_grid(const Tensor& data,
                const std::vector<std::pair<double, double>>& bounds) {
  check_arg(data.is_real(), "grid data must be real");
  const int d = static_cast<int>(data.rank()) - 2;
  check_arg(d == 1 || d == 2,
            "grid data must be [B, C, n1] or [B, C, n1, n2], got " +
                data.shape_str());
  check_arg(static_cast<int>(bounds.size()) == d,
            "expected " + std::to_string(d) + " bound pairs, got " +
                std::to_string(bounds.size()));
  for (int k = 0; k < d; ++k) {
    check_arg(data.dim(2 + k) >= 2, "spatial dim " + std::to_string(k) +
                                        " needs at least 2 points");
    check_arg(bounds[static_cast<std::size_t>(k)].first <
                  bounds[static_cast<std::size_t>(k)].second,
              "bounds for dim " + std::to_string(k) + " must satisfy low < high");
  }
}

}  // namespace

Shape GridFunction::spatial_sizes() const {
  Shape s;
  for (std::int64_t k = 2; k < data.rank(); ++k) s.push_back(data.dim(k));
  return s;
}

GridFunction make_grid(Tensor data,
                       std::vector<std::pair<double, double>> bounds) {
  check_grid(data, bounds);
  return GridFunction{std::move(data), std::move(bounds)};
}

GridFunction make_grid(Tensor data) {
  std::vector<std::pair<double, double>> bounds(
      static_cast<std::size_t>(data.rank() - 2), {0.0, 1.0});
  return make_grid(std::move(data), std::move(bounds));
}

GridFunction grid_embedding(const GridFunction& x) {
  const int d = x.spatial_rank();
  const std::int64_t b = x.batch();
  const Shape sizes = x.spatial_sizes();
  std::int64_t cells = 1;
  for (std::int64_t n : sizes) cells *= n;

  std::vector<Tensor> parts{x.data};
  for (int k = 0; k < d; ++k) {
    std::vector<double> v(static_cast<std::size_t>(b * cells));
    const std::int64_t nk = sizes[static_cast<std::size_t>(k)];
    std::int64_t inner = 1;
    for (int j = k + 1; j < d; ++j) inner *= sizes[static_cast<std::size_t>(j)];
    for (std::int64_t i = 0; i < b * cells; ++i) {
      const std::int64_t cell = i % cells;
      const std::int64_t idx = (cell / inner) % nk;
      v[static_cast<std::size_t>(i)] =
          static_cast<double>(idx) / static_cast<double>(nk);
    }
    Shape shape{b, 1};
    for (std::int64_t n : sizes) shape.push_back(n);
    parts.push_back(Tensor::from_values(shape, std::move(v)));
  }
  return GridFunction{ops::concat(parts, 1), x.bounds};
}

std::pair<Tensor, PadRecord> domain_pad(const GridFunction& x,
                                        double fraction) {
  check_arg(fraction >= 0.0 && fraction < 0.5,
            "padding fraction must lie in [0, 0.5), got " +
                std::to_string(fraction));
  PadRecord record;
  record.original = x.spatial_sizes();
  Tensor out = x.data;
  for (int k = 0; k < x.spatial_rank(); ++k) {
    const std::int64_t n = record.original[static_cast<std::size_t>(k)];
    const std::int64_t p =
        static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(n)));
    record.pad.push_back(p);
    if (p > 0) out = ops::unslice(out, 2 + k, 0, n + p);
  }
  return {std::move(out), std::move(record)};
}

GridFunction domain_unpad(const Tensor& y, const PadRecord& record,
                          std::vector<std::pair<double, double>> bounds) {
  check_arg(y.rank() == static_cast<std::int64_t>(record.original.size()) + 2,
            "padded tensor rank does not match the pad record");
  Tensor out = y;
  for (std::size_t k = 0; k < record.original.size(); ++k) {
    const std::int64_t n = record.original[k];
    check_arg(y.dim(static_cast<std::int64_t>(2 + k)) == n + record.pad[k],
              "padded dim " + std::to_string(k) + " has size " +
                  std::to_string(y.dim(static_cast<std::int64_t>(2 + k))) +
                  ", record expects " + std::to_string(n + record.pad[k]));
    if (record.pad[k] > 0)
      out = ops::slice(out, static_cast<int>(2 + k), 0, n);
  }
  return make_grid(std::move(out), std::move(bounds));
}

}  // namespace opkit::grid
