#pragma once

#include <string>
#include <utility>
#include <vector>

#include "opkit/model.hpp"
#include "opkit/processor.hpp"
#include "opkit/tensor.hpp"

namespace opkit::io {

// Container layout: magic "NOCK", version u32, length-prefixed UTF-8 config
// block, then repeated records {name_len u32, name, dtype u8 (0 = f64,
// 1 = c128), ndim u8, dims u64[], payload}. All integers and payload words
// little-endian; round trips are bit-exact.
inline constexpr std::uint32_t kNockVersion = 1;

struct NockFile {
  std::string config;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_nock(const std::string& path, const std::string& config,
                const std::vector<std::pair<std::string, const Tensor*>>& tensors);
NockFile read_nock(const std::string& path);

}  // namespace opkit::io

namespace opkit::models {

// When `processor` is given, its normalizer statistics ride along in
// reserved "processor.*" records so a later eval reproduces the exact
// input/output scaling.
void save_checkpoint(const FnoModel& model, const std::string& path,
                     const data::DataProcessor* processor = nullptr);
FnoModel load_fno_checkpoint(const std::string& path,
                             data::DataProcessor* processor = nullptr);

void save_checkpoint(const GnoModel& model, const std::string& path);
GnoModel load_gno_checkpoint(const std::string& path);

}  // namespace opkit::models
