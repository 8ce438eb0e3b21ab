#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "opkit/burgers.hpp"
#include "opkit/checkpoint.hpp"
#include "opkit/config.hpp"
#include "opkit/darcy.hpp"
#include "opkit/kernels.hpp"
#include "opkit/dataset.hpp"
#include "opkit/fft.hpp"
#include "opkit/grf.hpp"
#include "opkit/grid.hpp"
#include "opkit/loss.hpp"
#include "opkit/model.hpp"
#include "opkit/ops.hpp"
#include "opkit/processor.hpp"
#include "opkit/rng.hpp"
#include "opkit/tape.hpp"
#include "opkit/tensor.hpp"
#include "opkit/trainer.hpp"

namespace fs = std::filesystem;
using opkit::GradMap;
using opkit::Rng;
using opkit::Shape;
using opkit::Tape;
using opkit::Tensor;
namespace cli = opkit::cli;
namespace data = opkit::data;
namespace grid = opkit::grid;
namespace models = opkit::models;
namespace train = opkit::train;

namespace {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

data::DatasetKind parse_kind(const std::string& kind) {
  if (kind == "darcy") return data::DatasetKind::Darcy;
  if (kind == "burgers") return data::DatasetKind::Burgers;
  throw std::invalid_argument("unknown dataset kind \"" + kind +
                              "\"; expected darcy or burgers");
}

// Datasets store fields as [count, grid...]; models want an explicit
// channel axis.
Tensor with_channel_axis(const Tensor& t) {
  Shape s = t.shape();
  s.insert(s.begin() + 1, 1);
  return opkit::ops::reshape(t, s);
}

Tensor without_channel_axis(const Tensor& t) {
  Shape s = t.shape();
  s.erase(s.begin() + 1);
  return opkit::ops::reshape(t, s);
}

struct LoadedData {
  grid::GridFunction x;
  grid::GridFunction y;
  std::int64_t resolution = 0;
  int d = 0;
  std::string kind;
};

LoadedData load_grid_dataset(const std::string& path) {
  data::DatasetFile file = data::read_nodf(path);
  LoadedData out;
  out.kind = file.meta("kind");
  out.d = out.kind == "burgers" ? 1 : 2;
  const Tensor& x = file.tensor("x");
  out.resolution = x.dim(x.rank() - 1);
  out.x = grid::make_grid(with_channel_axis(x));
  out.y = grid::make_grid(with_channel_axis(file.tensor("y")));
  return out;
}

grid::GridFunction rows_of(const grid::GridFunction& g, std::int64_t lo,
                           std::int64_t hi) {
  return grid::make_grid(opkit::kernels::slice(g.data, 0, lo, hi), g.bounds);
}

// Validation split at a coarser resolution must come from strided
// subsampling of the stored grid.
grid::GridFunction at_resolution(const grid::GridFunction& g,
                                 std::int64_t native, std::int64_t res) {
  if (res == native) return g;
  if (res < 1 || native % res != 0)
    throw std::invalid_argument(
        "resolution " + std::to_string(res) +
        " is not reachable from the stored resolution " +
        std::to_string(native) + " by subsampling");
  return data::subsample(g, native / res);
}

int cmd_generate(const std::string& kind, std::int64_t count,
                 std::int64_t res, std::uint64_t seed,
                 const std::string& out) {
  data::GenerateSpec spec;
  spec.kind = parse_kind(kind);
  spec.count = count;
  spec.resolution = res;
  spec.seed = seed;
  data::generate_dataset(spec, out);
  std::cout << "wrote " << out << ": " << count << " samples, "
            << fs::file_size(out) << " bytes\n";
  return 0;
}

models::FnoConfig model_config_from(const cli::RunConfig& cfg, int d) {
  if (cfg.get("model.kind") != "fno")
    throw std::invalid_argument(
        "model.kind " + cfg.get("model.kind") +
        " is not trainable here; the training loop drives grid models (fno)");
  models::FnoConfig mc;
  mc.d = d;
  mc.in_channels = 1;
  mc.out_channels = 1;
  mc.hidden_channels = cfg.get_i64("model.hidden_channels");
  mc.n_layers = cfg.get_i64("model.n_layers");
  mc.modes.modes = cfg.get_i64_list("model.modes");
  if (static_cast<int>(mc.modes.modes.size()) != d)
    throw std::invalid_argument(
        "model.modes lists " + std::to_string(mc.modes.modes.size()) +
        " axes, data is " + std::to_string(d) + "-dimensional");
  mc.padding_fraction = cfg.get_double("model.padding_fraction");
  const std::string fac = cfg.get("model.factorization");
  if (fac == "tucker") {
    mc.factorization.kind = models::Factorization::Kind::Tucker;
    mc.factorization.rank_fraction = cfg.get_double("model.rank_fraction");
  } else if (fac != "none") {
    throw std::invalid_argument("model.factorization " + fac +
                                " is not one of none, tucker");
  }
  mc.positional_embedding = cfg.get_bool("model.positional_embedding");
  mc.seed = cfg.get_u64("seed") + 2;
  return mc;
}

train::TrainConfig train_config_from(const cli::RunConfig& cfg) {
  train::TrainConfig tc;
  tc.epochs = cfg.get_i64("train.epochs");
  tc.batch_size = cfg.get_i64("train.batch_size");
  const std::string loss = cfg.get("train.loss");
  if (loss == "h1") {
    tc.loss.kind = train::LossSpec::Kind::H1;
  } else if (loss == "l2") {
    tc.loss = {train::LossSpec::Kind::RelativeLp, 2.0};
  } else if (loss == "lp") {
    tc.loss = {train::LossSpec::Kind::RelativeLp, cfg.get_double("train.loss_p")};
  } else {
    throw std::invalid_argument("train.loss " + loss +
                                " is not one of l2, lp, h1");
  }
  tc.lr = {cfg.get_double("train.lr"), cfg.get_double("train.lr_gamma"),
           cfg.get_i64("train.lr_step")};
  const auto start = cfg.get_i64_list("train.modes_start");
  if (!start.empty())
    tc.modes = train::ModeSchedule{start, cfg.get_i64("train.modes_increment"),
                                   cfg.get_i64("train.modes_step")};
  tc.seed = cfg.get_u64("seed");
  return tc;
}

int cmd_train(const std::string& config_path) {
  cli::RunConfig cfg = cli::RunConfig::parse_file(config_path);
  const fs::path out_dir = cfg.get("output_dir");
  fs::create_directories(out_dir);

  LoadedData ds = load_grid_dataset(cfg.get("data.path"));
  const std::int64_t total = ds.x.batch();
  std::int64_t val_count = cfg.get_i64("data.val_count");
  std::int64_t train_count = cfg.get_i64("data.train_count");
  if (val_count == 0 && total >= 2) val_count = std::max<std::int64_t>(1, total / 5);
  if (train_count == 0) train_count = total - val_count;
  if (train_count < 1 || val_count < 0 || train_count + val_count > total)
    throw std::invalid_argument(
        "split train=" + std::to_string(train_count) + " val=" +
        std::to_string(val_count) + " does not fit " + std::to_string(total) +
        " samples");

  grid::GridFunction xt = rows_of(ds.x, 0, train_count);
  grid::GridFunction yt = rows_of(ds.y, 0, train_count);

  data::DataProcessor proc({true, true, false, std::nullopt});
  proc.fit(xt.data, yt.data);

  models::FnoModel model = models::make_fno(model_config_from(cfg, ds.d));
  train::TrainConfig tc = train_config_from(cfg);

  std::map<std::int64_t, train::ValSet> vals;
  if (val_count > 0) {
    grid::GridFunction xv = rows_of(ds.x, train_count, train_count + val_count);
    grid::GridFunction yv = rows_of(ds.y, train_count, train_count + val_count);
    std::vector<std::int64_t> resolutions = cfg.get_i64_list("data.resolutions");
    if (resolutions.empty()) resolutions.push_back(ds.resolution);
    for (std::int64_t res : resolutions)
      vals[res] = {at_resolution(xv, ds.resolution, res),
                   at_resolution(yv, ds.resolution, res)};
  }

  tc.on_epoch = [](const train::EpochRecord& row) {
    std::cout << "epoch " << row.epoch << " train_loss="
              << fmt_g17(row.train_loss) << " lr=" << fmt_g17(row.lr)
              << " modes=" << train::active_modes_str(row.active_modes);
    for (const auto& [res, v] : row.val)
      std::cout << " val@" << res << "=" << fmt_g17(v);
    std::cout << "\n" << std::flush;
  };

  train::TrainReport report = train::train(model, xt, yt, vals, proc, tc);

  cfg.write_resolved((out_dir / "resolved.cfg").string());
  train::write_report_csv(report, (out_dir / "report.csv").string());

  nlohmann::json summary;
  for (const std::string& key : cfg.keys()) summary["config"][key] = cfg.get(key);
  summary["best_epoch"] = report.best_epoch();
  summary["parameter_count"] = models::parameter_count(model);
  summary["aborted"] = report.aborted;
  if (!report.rows.empty()) {
    const train::EpochRecord& last = report.rows.back();
    summary["final"]["train_loss"] = last.train_loss;
    for (const auto& [res, v] : last.val)
      summary["final"]["val_relL2"][std::to_string(res)] = v;
  }
  {
    std::ofstream js(out_dir / "summary.json", std::ios::trunc);
    js << summary.dump(2) << "\n";
    if (!js) throw std::runtime_error("failed writing summary.json");
  }

  if (report.aborted) {
    models::save_checkpoint(model, (out_dir / "model.partial.nock").string(),
                            &proc);
    std::cerr << "training aborted: " << report.abort_reason << "\n";
    return 1;
  }
  models::save_checkpoint(model, (out_dir / "model.nock").string(), &proc);
  std::cout << "run complete: " << (out_dir / "model.nock").string() << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             std::vector<std::int64_t> resolutions, bool with_h1) {
  data::DataProcessor proc({false, false, false, std::nullopt});
  models::FnoModel model = models::load_fno_checkpoint(checkpoint, &proc);
  LoadedData ds = load_grid_dataset(data_path);
  if (resolutions.empty()) resolutions.push_back(ds.resolution);
  for (std::int64_t res : resolutions) {
    grid::GridFunction x = at_resolution(ds.x, ds.resolution, res);
    grid::GridFunction y = at_resolution(ds.y, ds.resolution, res);
    grid::GridFunction pred = train::predict(model, x, proc);
    const double rel = train::relative_lp_loss(pred.data, y.data, 2.0).rat(0);
    std::cout << "res=" << res << " relL2=" << fmt_g17(rel);
    if (with_h1) {
      const double h1 = train::h1_loss(pred.data, y.data, ds.d).rat(0);
      std::cout << " h1=" << fmt_g17(h1);
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_infer(const std::string& checkpoint, const std::string& input,
              const std::string& out, std::vector<std::int64_t> output_res) {
  data::DataProcessor proc({false, false, false, std::nullopt});
  models::FnoModel model = models::load_fno_checkpoint(checkpoint, &proc);
  data::DatasetFile file = data::read_nodf(input);
  grid::GridFunction x = grid::make_grid(with_channel_axis(file.tensor("x")));

  std::optional<Shape> sizes;
  if (!output_res.empty()) sizes = Shape(output_res.begin(), output_res.end());
  grid::GridFunction pred = train::predict(model, x, proc, sizes);

  data::DatasetFile result;
  result.metadata = {{"kind", "prediction"},
                     {"source", input},
                     {"checkpoint", checkpoint},
                     {"count", std::to_string(pred.batch())}};
  result.tensors.emplace_back("y_pred", without_channel_axis(pred.data));
  data::write_nodf(out, result);
  std::cout << "wrote " << out << ": " << pred.batch() << " predictions\n";
  return 0;
}

// A compact on-demand health check: transform identities against direct
// summation, derivative checks against finite differences, and the solver
// against a manufactured solution.
namespace selftest {

std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const auto n = static_cast<std::int64_t>(x.size());
  std::vector<std::complex<double>> out(x.size());
  for (std::int64_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::int64_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi *
                         static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[static_cast<std::size_t>(t)] *
             std::complex<double>{std::cos(ang), std::sin(ang)};
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

bool fft_ok() {
  Rng rng(100);
  for (std::int64_t n : {2, 3, 4, 5, 7, 8, 12, 16, 48}) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& a : v) a = rng.normal();
    Tensor t = Tensor::from_values({1, 1, n}, v);
    Tensor spec = opkit::fft::rfftn(t, 1);
    const auto want = naive_dft(v);
    for (std::int64_t k = 0; k < opkit::fft::half_bins(n); ++k)
      if (std::abs(spec.cat(k) - want[static_cast<std::size_t>(k)]) > 1e-9)
        return false;
    Tensor back = opkit::fft::irfftn(spec, {n});
    for (std::int64_t i = 0; i < n; ++i)
      if (std::abs(back.rat(i) - v[static_cast<std::size_t>(i)]) > 1e-9)
        return false;
  }
  return true;
}

bool grad_ok() {
  models::FnoConfig mc;
  mc.d = 1;
  mc.in_channels = 1;
  mc.out_channels = 1;
  mc.hidden_channels = 2;
  mc.n_layers = 1;
  mc.modes.modes = {2};
  mc.positional_embedding = false;
  mc.seed = 101;
  models::FnoModel model = models::make_fno(mc);
  Rng rng(102);
  std::vector<double> xv(8);
  for (auto& a : xv) a = rng.normal();
  grid::GridFunction x = grid::make_grid(Tensor::from_values({1, 1, 8}, xv));

  auto loss_value = [&] {
    Tensor out = models::fno_forward(model, x).data;
    double acc = 0.0;
    for (std::int64_t i = 0; i < out.numel(); ++i)
      acc += out.rat(i) * out.rat(i);
    return acc;
  };

  Tape tape;
  GradMap grads;
  {
    Tape::Scope scope(tape);
    Tensor out = models::fno_forward(model, x).data;
    grads = tape.backward(
        opkit::ops::reduce_sum(opkit::ops::mul(out, out)));
  }

  const double eps = 1e-6;
  for (auto& [name, p] : model.named_params()) {
    const Tensor g = grads.grad(*p);
    const Tensor saved = *p;
    const int parts = saved.is_complex() ? 2 : 1;
    for (std::int64_t j = 0; j < saved.numel(); ++j)
      for (int part = 0; part < parts; ++part) {
        auto shifted = [&](double delta) {
          if (saved.is_real()) {
            std::vector<double> v = saved.rvec();
            v[static_cast<std::size_t>(j)] += delta;
            *p = Tensor::from_values(saved.shape(), std::move(v));
          } else {
            std::vector<std::complex<double>> v = saved.cvec();
            v[static_cast<std::size_t>(j)] +=
                part == 0 ? std::complex<double>{delta, 0.0}
                          : std::complex<double>{0.0, delta};
            *p = Tensor::from_complex(saved.shape(), std::move(v));
          }
          return loss_value();
        };
        const double fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        *p = saved;
        const double an = saved.is_real()
                              ? g.rat(j)
                              : (part == 0 ? g.cat(j).real() : g.cat(j).imag());
        if (std::abs(fd - an) / std::max(1.0, std::abs(fd)) > 1e-4)
          return false;
      }
  }
  return true;
}

bool darcy_ok() {
  auto error_at = [](std::int64_t n) {
    std::vector<double> f(static_cast<std::size_t>(n * n));
    std::vector<double> exact(f.size());
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1);
        const double y = static_cast<double>(j) / static_cast<double>(n - 1);
        const double s = std::sin(std::numbers::pi * x) *
                         std::sin(std::numbers::pi * y);
        exact[static_cast<std::size_t>(i * n + j)] = s;
        f[static_cast<std::size_t>(i * n + j)] =
            2.0 * std::numbers::pi * std::numbers::pi * s;
      }
    Tensor u = data::solve_darcy(Tensor::full({n, n}, 1.0),
                                 Tensor::from_values({n, n}, std::move(f)));
    double worst = 0.0;
    for (std::int64_t i = 0; i < n * n; ++i)
      worst = std::max(worst,
                       std::abs(u.rat(i) - exact[static_cast<std::size_t>(i)]));
    return worst;
  };
  const double ratio = error_at(16) / error_at(32);
  return ratio > 3.2 && ratio < 4.8;
}

bool burgers_ok() {
  Rng rng(103);
  Tensor g = data::sample_grf_1d(64, {5.0, 2.5, 25.0}, rng);
  double peak = 0.0;
  for (std::int64_t i = 0; i < 64; ++i)
    peak = std::max(peak, std::abs(g.rat(i)));
  std::vector<double> v(64);
  for (std::int64_t i = 0; i < 64; ++i)
    v[static_cast<std::size_t>(i)] = 0.3 + g.rat(i) / peak;
  Tensor u0 = Tensor::from_values({64}, std::move(v));
  Tensor uT = data::solve_burgers(u0, 0.01, 0.5);
  double m0 = 0.0, mT = 0.0;
  for (std::int64_t i = 0; i < 64; ++i) {
    m0 += u0.rat(i);
    mT += uT.rat(i);
  }
  return std::abs(m0 - mT) / 64.0 < 1e-10;
}

int run() {
  int failed = 0;
  const std::pair<const char*, bool (*)()> checks[] = {
      {"fft vs direct summation", fft_ok},
      {"model gradients vs finite differences", grad_ok},
      {"darcy manufactured-solution order", darcy_ok},
      {"burgers mean conservation", burgers_ok},
  };
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      std::cout << "selftest " << name << ": FAIL (" << e.what() << ")\n";
      ++failed;
      continue;
    }
    std::cout << "selftest " << name << (ok ? ": ok" : ": FAIL") << "\n";
    if (!ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace selftest

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-learning toolkit"};
  app.require_subcommand(1);

  std::string kind = "darcy", out, config_path, checkpoint, data_path, input;
  std::int64_t count = 0, res = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> resolutions, output_res;
  bool with_h1 = false;

  CLI::App* gen = app.add_subcommand("generate", "sample a PDE dataset");
  gen->add_option("--kind", kind, "darcy or burgers");
  gen->add_option("--count", count, "number of samples")->required();
  gen->add_option("--res", res, "grid resolution")->required();
  gen->add_option("--seed", seed, "base RNG seed");
  gen->add_option("--out", out, "output .nodf path")->required();

  CLI::App* tr = app.add_subcommand("train", "train a model from a config");
  tr->add_option("--config", config_path, "key=value run config")->required();

  CLI::App* ev = app.add_subcommand("eval", "score a checkpoint on a dataset");
  ev->add_option("--checkpoint", checkpoint, "model.nock path")->required();
  ev->add_option("--data", data_path, "dataset .nodf path")->required();
  ev->add_option("--res", resolutions, "evaluation resolutions");
  ev->add_flag("--h1", with_h1, "also report the relative H1 metric");

  CLI::App* in = app.add_subcommand("infer", "predict from an input file");
  in->add_option("--checkpoint", checkpoint, "model.nock path")->required();
  in->add_option("--input", input, "input .nodf with tensor \"x\"")->required();
  in->add_option("--out", out, "output .nodf path")->required();
  in->add_option("--output-res", output_res, "output grid sizes");

  CLI::App* st = app.add_subcommand("selftest", "run built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      if (count < 1) {
        std::cerr << "usage error: --count must be at least 1\n";
        return 2;
      }
      if (res < 2) {
        std::cerr << "usage error: --res must be at least 2\n";
        return 2;
      }
      return cmd_generate(kind, count, res, seed, out);
    }
    if (tr->parsed()) return cmd_train(config_path);
    if (ev->parsed()) return cmd_eval(checkpoint, data_path, resolutions, with_h1);
    if (in->parsed()) return cmd_infer(checkpoint, input, out, output_res);
    if (st->parsed()) return selftest::run();
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
