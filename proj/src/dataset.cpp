#include "opkit/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "opkit/burgers.hpp"
#include "opkit/darcy.hpp"
#include "record_io.hpp"

namespace opkit::data {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%" PRIu64, v);
  return buf;
}

}  // namespace

const Tensor& DatasetFile::tensor(const std::string& name) const {
  for (const auto& [key, value] : tensors)
    if (key == name) return value;
  throw std::invalid_argument("dataset has no tensor named " + name);
}

std::string DatasetFile::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  throw std::invalid_argument("dataset has no metadata key " + key);
}

void write_nodf(const std::string& path, const DatasetFile& file) {
  namespace d = io::detail;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  d::put_bytes(os, "NODF", 4);
  d::put_u32(os, kNodfVersion);
  std::string block;
  for (const auto& [key, value] : file.metadata)
    block += key + "=" + value + "\n";
  d::put_u32(os, static_cast<std::uint32_t>(block.size()));
  d::put_bytes(os, block.data(), block.size());
  for (const auto& [name, t] : file.tensors) d::write_record(os, name, t);
  os.flush();
  if (!os) throw std::runtime_error("failed writing " + path);
}

DatasetFile read_nodf(const std::string& path) {
  namespace d = io::detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  const std::string magic = d::get_str(is, 4, "magic");
  if (magic != "NODF")
    throw std::runtime_error(path + " is not a dataset (bad magic)");
  const std::uint32_t version = d::get_u32(is, "version");
  if (version != kNodfVersion)
    throw std::runtime_error("dataset version " + std::to_string(version) +
                             " unsupported, expected " +
                             std::to_string(kNodfVersion));
  DatasetFile file;
  const std::uint32_t block_len = d::get_u32(is, "metadata length");
  const std::string block = d::get_str(is, block_len, "metadata block");
  std::size_t pos = 0;
  while (pos < block.size()) {
    const std::size_t eol = block.find('\n', pos);
    const std::string line =
        block.substr(pos, eol == std::string::npos ? eol : eol - pos);
    pos = eol == std::string::npos ? block.size() : eol + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + " has a malformed metadata line: " +
                               line);
    file.metadata.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  std::string name;
  Tensor value;
  while (d::read_record(is, name, value, false))
    file.tensors.emplace_back(name, value);
  return file;
}

DatasetFile generate_dataset(const GenerateSpec& spec,
                             const std::string& path) {
  check_arg(spec.count >= 1, "generate_dataset: count must be >= 1");
  const std::int64_t n = spec.resolution;
  DatasetFile file;

  if (spec.kind == DatasetKind::Darcy) {
    check_grf_spec(spec.darcy.grf, 2);
    std::vector<double> xs, ys;
    xs.reserve(static_cast<std::size_t>(spec.count * n * n));
    ys.reserve(static_cast<std::size_t>(spec.count * n * n));
    for (std::int64_t i = 0; i < spec.count; ++i) {
      Rng rng(spec.seed + static_cast<std::uint64_t>(i));
      Tensor field = sample_grf_2d(n, spec.darcy.grf, rng);
      Tensor a = darcy_coefficient(field, spec.darcy.a_hi, spec.darcy.a_lo);
      Tensor u = solve_darcy(a);
      for (std::int64_t k = 0; k < n * n; ++k) xs.push_back(a.rat(k));
      for (std::int64_t k = 0; k < n * n; ++k) ys.push_back(u.rat(k));
    }
    file.tensors.emplace_back(
        "x", Tensor::from_values({spec.count, n, n}, std::move(xs)));
    file.tensors.emplace_back(
        "y", Tensor::from_values({spec.count, n, n}, std::move(ys)));
    file.metadata = {{"kind", "darcy"},
                     {"count", fmt_u64(static_cast<std::uint64_t>(spec.count))},
                     {"resolution", fmt_u64(static_cast<std::uint64_t>(n))},
                     {"seed", fmt_u64(spec.seed)},
                     {"tau", fmt_double(spec.darcy.grf.tau)},
                     {"alpha", fmt_double(spec.darcy.grf.alpha)},
                     {"sigma", fmt_double(spec.darcy.grf.sigma)},
                     {"a_hi", fmt_double(spec.darcy.a_hi)},
                     {"a_lo", fmt_double(spec.darcy.a_lo)}};
  } else {
    check_grf_spec(spec.burgers.grf, 1);
    std::vector<double> xs, ys;
    xs.reserve(static_cast<std::size_t>(spec.count * n));
    ys.reserve(static_cast<std::size_t>(spec.count * n));
    for (std::int64_t i = 0; i < spec.count; ++i) {
      Rng rng(spec.seed + static_cast<std::uint64_t>(i));
      Tensor u0 = sample_grf_1d(n, spec.burgers.grf, rng);
      Tensor uT = solve_burgers(u0, spec.burgers.nu, spec.burgers.t_final);
      for (std::int64_t k = 0; k < n; ++k) xs.push_back(u0.rat(k));
      for (std::int64_t k = 0; k < n; ++k) ys.push_back(uT.rat(k));
    }
    file.tensors.emplace_back(
        "x", Tensor::from_values({spec.count, n}, std::move(xs)));
    file.tensors.emplace_back(
        "y", Tensor::from_values({spec.count, n}, std::move(ys)));
    file.metadata = {{"kind", "burgers"},
                     {"count", fmt_u64(static_cast<std::uint64_t>(spec.count))},
                     {"resolution", fmt_u64(static_cast<std::uint64_t>(n))},
                     {"seed", fmt_u64(spec.seed)},
                     {"tau", fmt_double(spec.burgers.grf.tau)},
                     {"alpha", fmt_double(spec.burgers.grf.alpha)},
                     {"sigma", fmt_double(spec.burgers.grf.sigma)},
                     {"nu", fmt_double(spec.burgers.nu)},
                     {"t_final", fmt_double(spec.burgers.t_final)}};
  }

  write_nodf(path, file);
  return file;
}

grid::GridFunction subsample(const grid::GridFunction& x, std::int64_t factor) {
  check_arg(factor >= 1, "subsample: factor must be >= 1");
  if (factor == 1) return x;
  const Shape sizes = x.spatial_sizes();
  Shape coarse;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    check_arg(sizes[k] % factor == 0,
              "subsample: factor " + std::to_string(factor) +
                  " does not divide spatial dim " + std::to_string(k) +
                  " of size " + std::to_string(sizes[k]));
    coarse.push_back(sizes[k] / factor);
  }
  const std::int64_t b = x.batch();
  const std::int64_t c = x.channels();
  Shape out_shape{b, c};
  for (std::int64_t s : coarse) out_shape.push_back(s);
  std::int64_t cells = 1;
  for (std::int64_t s : coarse) cells *= s;

  std::vector<double> out(static_cast<std::size_t>(b * c * cells));
  const int d = x.spatial_rank();
  std::int64_t write = 0;
  for (std::int64_t bc = 0; bc < b * c; ++bc) {
    if (d == 1) {
      const std::int64_t n = sizes[0];
      for (std::int64_t i = 0; i < coarse[0]; ++i)
        out[static_cast<std::size_t>(write++)] =
            x.data.rat(bc * n + i * factor);
    } else {
      const std::int64_t n0 = sizes[0], n1 = sizes[1];
      for (std::int64_t i = 0; i < coarse[0]; ++i)
        for (std::int64_t j = 0; j < coarse[1]; ++j)
          out[static_cast<std::size_t>(write++)] =
              x.data.rat((bc * n0 + i * factor) * n1 + j * factor);
    }
  }
  return grid::make_grid(Tensor::from_values(out_shape, std::move(out)),
                         x.bounds);
}

}  // namespace opkit::data
