#include "opkit/checkpoint.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "record_io.hpp"

namespace opkit::io {

void write_nock(
    const std::string& path, const std::string& config,
    const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  namespace d = detail;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  d::put_bytes(os, "NOCK", 4);
  d::put_u32(os, kNockVersion);
  d::put_u32(os, static_cast<std::uint32_t>(config.size()));
  d::put_bytes(os, config.data(), config.size());
  for (const auto& [name, t] : tensors) d::write_record(os, name, *t);
  os.flush();
  if (!os) throw std::runtime_error("failed writing " + path);
}

NockFile read_nock(const std::string& path) {
  namespace d = detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  const std::string magic = d::get_str(is, 4, "magic");
  if (magic != "NOCK")
    throw std::runtime_error(path + " is not a checkpoint (bad magic)");
  const std::uint32_t version = d::get_u32(is, "version");
  if (version != kNockVersion)
    throw std::runtime_error("checkpoint version " + std::to_string(version) +
                             " unsupported, expected " +
                             std::to_string(kNockVersion));
  NockFile file;
  const std::uint32_t config_len = d::get_u32(is, "config length");
  file.config = d::get_str(is, config_len, "config block");

  std::string name;
  Tensor value;
  while (d::read_record(is, name, value, true))
    file.tensors.emplace_back(name, value);
  return file;
}

}  // namespace opkit::io

namespace opkit::models {

namespace {

using nlohmann::json;

json fno_config_json(const FnoConfig& c) {
  json j;
  j["kind"] = "fno";
  j["d"] = c.d;
  j["in_channels"] = c.in_channels;
  j["out_channels"] = c.out_channels;
  j["hidden_channels"] = c.hidden_channels;
  j["n_layers"] = c.n_layers;
  j["modes"] = c.modes.modes;
  j["padding_fraction"] = c.padding_fraction;
  j["factorization"] =
      c.factorization.kind == Factorization::Kind::Tucker ? "tucker" : "none";
  j["rank_fraction"] = c.factorization.rank_fraction;
  j["positional_embedding"] = c.positional_embedding;
  j["seed"] = c.seed;
  return j;
}

FnoConfig fno_config_from_json(const json& j) {
  if (j.at("kind").get<std::string>() != "fno")
    throw std::runtime_error("checkpoint holds a " +
                             j.at("kind").get<std::string>() +
                             " model, expected fno");
  FnoConfig c;
  c.d = j.at("d").get<int>();
  c.in_channels = j.at("in_channels").get<std::int64_t>();
  c.out_channels = j.at("out_channels").get<std::int64_t>();
  c.hidden_channels = j.at("hidden_channels").get<std::int64_t>();
  c.n_layers = j.at("n_layers").get<std::int64_t>();
  c.modes.modes = j.at("modes").get<std::vector<std::int64_t>>();
  c.padding_fraction = j.at("padding_fraction").get<double>();
  c.factorization.kind = j.at("factorization").get<std::string>() == "tucker"
                             ? Factorization::Kind::Tucker
                             : Factorization::Kind::None;
  c.factorization.rank_fraction = j.at("rank_fraction").get<double>();
  c.positional_embedding = j.at("positional_embedding").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json gno_config_json(const GnoConfig& c) {
  json j;
  j["kind"] = "gno";
  j["d"] = c.d;
  j["in_channels"] = c.in_channels;
  j["out_channels"] = c.out_channels;
  j["hidden_channels"] = c.hidden_channels;
  j["kernel_hidden"] = c.kernel_hidden;
  j["radius"] = c.radius;
  j["seed"] = c.seed;
  return j;
}

GnoConfig gno_config_from_json(const json& j) {
  if (j.at("kind").get<std::string>() != "gno")
    throw std::runtime_error("checkpoint holds a " +
                             j.at("kind").get<std::string>() +
                             " model, expected gno");
  GnoConfig c;
  c.d = j.at("d").get<int>();
  c.in_channels = j.at("in_channels").get<std::int64_t>();
  c.out_channels = j.at("out_channels").get<std::int64_t>();
  c.hidden_channels = j.at("hidden_channels").get<std::int64_t>();
  c.kernel_hidden = j.at("kernel_hidden").get<std::int64_t>();
  c.radius = j.at("radius").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

template <typename Model>
void fill_params(Model& model, const io::NockFile& file,
                 const std::string& path) {
  std::map<std::string, const Tensor*> loaded;
  for (const auto& [name, value] : file.tensors)
    if (name.rfind("processor.", 0) != 0) loaded[name] = &value;
  auto params = model.named_params();
  if (loaded.size() != params.size())
    throw std::runtime_error(path + " holds " + std::to_string(loaded.size()) +
                             " tensors, config implies " +
                             std::to_string(params.size()));
  for (auto& [name, slot] : params) {
    auto it = loaded.find(name);
    if (it == loaded.end())
      throw std::runtime_error(path + " is missing tensor " + name);
    const Tensor& value = *it->second;
    if (value.shape() != slot->shape() || value.kind() != slot->kind())
      throw std::runtime_error("tensor " + name + " in " + path +
                               " has shape " + value.shape_str() +
                               ", config implies " + slot->shape_str());
    *slot = value;
  }
}

json parse_config(const io::NockFile& file, const std::string& path) {
  json j = json::parse(file.config, nullptr, false);
  if (j.is_discarded())
    throw std::runtime_error(path + " carries an unreadable config block");
  return j;
}

}  // namespace

namespace {

std::vector<double> stats_vector(const Tensor& t, const std::string& name,
                                 const std::string& path) {
  if (!t.is_real() || t.rank() != 1)
    throw std::runtime_error(name + " in " + path +
                             " should be a real vector");
  return t.rvec();
}

}  // namespace

void save_checkpoint(const FnoModel& model, const std::string& path,
                     const data::DataProcessor* processor) {
  auto tensors = model.named_params();
  std::vector<Tensor> extra;
  if (processor) {
    extra.reserve(4);
    auto push = [&](const char* name, const std::vector<double>& v) {
      extra.push_back(Tensor::from_values(
          {static_cast<std::int64_t>(v.size())}, v));
      tensors.emplace_back(name, &extra.back());
    };
    if (processor->input_normalizer().fitted()) {
      push("processor.in_mean", processor->input_normalizer().mean());
      push("processor.in_std", processor->input_normalizer().std_dev());
    }
    if (processor->output_normalizer().fitted()) {
      push("processor.out_mean", processor->output_normalizer().mean());
      push("processor.out_std", processor->output_normalizer().std_dev());
    }
  }
  io::write_nock(path, fno_config_json(model.config).dump(), tensors);
}

FnoModel load_fno_checkpoint(const std::string& path,
                             data::DataProcessor* processor) {
  io::NockFile file = io::read_nock(path);
  FnoModel model = make_fno(fno_config_from_json(parse_config(file, path)));
  fill_params(model, file, path);
  if (processor) {
    std::map<std::string, const Tensor*> stats;
    for (const auto& [name, value] : file.tensors)
      if (name.rfind("processor.", 0) == 0) stats[name] = &value;
    auto has = [&](const char* a, const char* b) {
      return stats.count(a) != 0 && stats.count(b) != 0;
    };
    const bool in_fitted = has("processor.in_mean", "processor.in_std");
    const bool out_fitted = has("processor.out_mean", "processor.out_std");
    *processor = data::DataProcessor(
        {in_fitted, out_fitted, false, std::nullopt});
    if (in_fitted)
      processor->restore_input(
          stats_vector(*stats["processor.in_mean"], "processor.in_mean", path),
          stats_vector(*stats["processor.in_std"], "processor.in_std", path));
    if (out_fitted)
      processor->restore_output(
          stats_vector(*stats["processor.out_mean"], "processor.out_mean",
                       path),
          stats_vector(*stats["processor.out_std"], "processor.out_std",
                       path));
  }
  return model;
}

void save_checkpoint(const GnoModel& model, const std::string& path) {
  io::write_nock(path, gno_config_json(model.config).dump(),
                 model.named_params());
}

GnoModel load_gno_checkpoint(const std::string& path) {
  io::NockFile file = io::read_nock(path);
  GnoModel model = make_gno(gno_config_from_json(parse_config(file, path)));
  fill_params(model, file, path);
  return model;
}

}  // namespace opkit::models
