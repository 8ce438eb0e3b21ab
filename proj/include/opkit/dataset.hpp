#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "opkit/grf.hpp"
#include "opkit/grid.hpp"
#include "opkit/tensor.hpp"

namespace opkit::data {

// Container layout: magic "NODF", version u32, length-prefixed metadata
// block of key=value lines, then named tensor records in the checkpoint
// record encoding. Little-endian throughout; round trips are bit-exact.
inline constexpr std::uint32_t kNodfVersion = 1;

struct DatasetFile {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  std::string meta(const std::string& key) const;
};

void write_nodf(const std::string& path, const DatasetFile& file);
DatasetFile read_nodf(const std::string& path);

enum class DatasetKind { Darcy, Burgers };

struct DarcyParams {
  GrfSpec grf{3.0, 2.0, 1.0};
  double a_hi = 12.0;
  double a_lo = 3.0;
};

struct BurgersParams {
  GrfSpec grf{5.0, 2.5, 25.0};
  double nu = 0.01;
  double t_final = 1.0;
};

struct GenerateSpec {
  DatasetKind kind = DatasetKind::Darcy;
  std::int64_t count = 1;
  std::int64_t resolution = 32;
  DarcyParams darcy;
  BurgersParams burgers;
  std::uint64_t seed = 0;
};

// Sample i draws from an Rng seeded with (seed + i), so any subrange of
// samples regenerates independently. Inputs land in tensor "x", outputs in
// "y"; metadata echoes kind, resolution, parameters, and seed.
DatasetFile generate_dataset(const GenerateSpec& spec,
                             const std::string& path);

// Strided decimation keeping indices 0, factor, 2*factor, ...; bounds kept.
grid::GridFunction subsample(const grid::GridFunction& x, std::int64_t factor);

}  // namespace opkit::data
