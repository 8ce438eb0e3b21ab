#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "opkit/grid.hpp"
#include "opkit/kernels.hpp"
#include "opkit/loss.hpp"
#include "opkit/model.hpp"
#include "opkit/ops.hpp"
#include "opkit/optim.hpp"
#include "opkit/processor.hpp"
#include "opkit/rng.hpp"
#include "opkit/spectral.hpp"
#include "opkit/tape.hpp"
#include "opkit/tensor.hpp"
#include "opkit/trainer.hpp"
#include "oracles.hpp"

using opkit::GradMap;
using opkit::Rng;
using opkit::Shape;
using opkit::Tape;
using opkit::Tensor;
namespace train = opkit::train;
namespace models = opkit::models;
namespace grid = opkit::grid;
namespace spectral = opkit::spectral;
namespace K = opkit::kernels;

namespace {

Tensor random_real(const Shape& shape, std::uint64_t seed, double scale = 1.0,
                   double offset = 0.0) {
  Rng rng(seed);
  std::int64_t n = 1;
  for (auto s : shape) n *= s;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = offset + scale * rng.normal();
  return Tensor::from_values(shape, std::move(v));
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.kind() != b.kind()) return false;
  if (a.is_real()) {
    for (std::int64_t i = 0; i < a.numel(); ++i)
      if (a.rat(i) != b.rat(i)) return false;
  } else {
    for (std::int64_t i = 0; i < a.numel(); ++i)
      if (a.cat(i) != b.cat(i)) return false;
  }
  return true;
}

models::FnoConfig tiny_1d_config(std::vector<std::int64_t> modes,
                                 std::uint64_t seed) {
  models::FnoConfig cfg;
  cfg.d = 1;
  cfg.in_channels = 1;
  cfg.out_channels = 1;
  cfg.hidden_channels = 4;
  cfg.n_layers = 1;
  cfg.modes.modes = std::move(modes);
  cfg.positional_embedding = false;
  cfg.padding_fraction = 0.0;
  cfg.seed = seed;
  return cfg;
}

double h1_norm_sq_oracle(const std::vector<double>& u,
                         const std::vector<std::int64_t>& sizes) {
  const std::vector<oracles::cd> spectrum = oracles::dftn_real(u, sizes);
  double total = 1.0;
  for (auto n : sizes) total *= static_cast<double>(n);
  const double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
  const auto d = static_cast<int>(sizes.size());
  double acc = 0.0;
  for (std::size_t kf = 0; kf < spectrum.size(); ++kf) {
    std::int64_t rem = static_cast<std::int64_t>(kf);
    double ksq = 0.0;
    for (int a = d - 1; a >= 0; --a) {
      std::int64_t k = rem % sizes[static_cast<std::size_t>(a)];
      rem /= sizes[static_cast<std::size_t>(a)];
      if (k > sizes[static_cast<std::size_t>(a)] / 2)
        k -= sizes[static_cast<std::size_t>(a)];
      ksq += static_cast<double>(k) * static_cast<double>(k);
    }
    acc += (1.0 + four_pi_sq * ksq) * std::norm(spectrum[kf]);
  }
  return acc / (total * total);
}

}  // namespace

TEST_CASE("relative loss on hand-checked values") {
  Tensor t = Tensor::from_values({1, 2}, {1.0, 1.0});
  Tensor p = Tensor::from_values({1, 2}, {1.0, 2.0});
  CHECK(train::relative_lp_loss(t, t, 2.0).rat(0) == 0.0);
  CHECK(train::relative_lp_loss(Tensor::zeros({1, 2}), t, 2.0).rat(0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(train::relative_lp_loss(p, t, 2.0).rat(0) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(train::relative_lp_loss(p, t, 1.0).rat(0) ==
        doctest::Approx(0.5).epsilon(1e-14));

  // Batch reduction averages per-sample ratios.
  Tensor t2 = Tensor::from_values({2, 2}, {1.0, 1.0, 2.0, 2.0});
  Tensor p2 = Tensor::from_values({2, 2}, {1.0, 2.0, 2.0, 2.0});
  CHECK(train::relative_lp_loss(p2, t2, 2.0).rat(0) ==
        doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("relative loss rejects degenerate targets and exponents") {
  Tensor t = Tensor::from_values({2, 2}, {1.0, 1.0, 0.0, 0.0});
  Tensor p = Tensor::full({2, 2}, 1.0);
  CHECK_THROWS_WITH_AS(train::relative_lp_loss(p, t, 2.0),
                       doctest::Contains("sample 1"), std::invalid_argument);
  CHECK_THROWS_AS(train::relative_lp_loss(p, p, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(
      train::relative_lp_loss(p, Tensor::full({2, 3}, 1.0), 2.0),
      std::invalid_argument);
}

TEST_CASE("relative loss is scale covariant and resolution agnostic") {
  Tensor t = random_real({2, 1, 16}, 21, 1.0, 0.5);
  Tensor p = random_real({2, 1, 16}, 22, 1.0, 0.4);
  const double base = train::relative_lp_loss(p, t, 2.0).rat(0);
  const double scaled =
      train::relative_lp_loss(opkit::ops::scale(p, -7.5),
                              opkit::ops::scale(t, -7.5), 2.0)
          .rat(0);
  CHECK(std::abs(base - scaled) < 1e-12);

  for (std::int64_t n : {8, 16, 32}) {
    Tensor u = random_real({1, 1, n}, 23, 1.0, 1.0);
    CHECK(train::relative_lp_loss(u, u, 2.0).rat(0) == 0.0);
  }
}

TEST_CASE("relative loss gradients match finite differences") {
  for (double p : {2.0, 3.0}) {
    Tensor pred = random_real({2, 1, 6}, 24, 0.5, 0.3);
    Tensor target = random_real({2, 1, 6}, 25, 0.5, 1.0);
    const double err = oracles::gradient_check(
        [&](const std::vector<Tensor>& ls) {
          return train::relative_lp_loss(ls[0], target, p);
        },
        {pred});
    CHECK(err < 1e-5);
  }
}

TEST_CASE("h1 norm matches the closed form for a single mode") {
  const std::int64_t n = 32;
  std::vector<double> u(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    u[static_cast<std::size_t>(i)] =
        std::sin(2.0 * std::numbers::pi * static_cast<double>(i) /
                 static_cast<double>(n));
  Tensor ut = Tensor::from_values({1, 1, n}, u);
  const double got = train::h1_norm_sq(ut, 1).rat(0);
  const double closed = (1.0 + 4.0 * std::numbers::pi * std::numbers::pi) / 2.0;
  CHECK(got == doctest::Approx(closed).epsilon(1e-12));
  CHECK(std::abs(got - h1_norm_sq_oracle(u, {n})) < 1e-9);
}

TEST_CASE("h1 norm matches the naive spectral oracle on random fields") {
  Tensor u1 = random_real({1, 1, 12}, 26);
  CHECK(std::abs(train::h1_norm_sq(u1, 1).rat(0) -
                 h1_norm_sq_oracle(u1.rvec(), {12})) < 1e-9);
  Tensor u2 = random_real({1, 1, 6, 8}, 27);
  CHECK(std::abs(train::h1_norm_sq(u2, 2).rat(0) -
                 h1_norm_sq_oracle(u2.rvec(), {6, 8})) < 1e-9);
  Tensor u3 = random_real({1, 1, 5, 6}, 28);
  CHECK(std::abs(train::h1_norm_sq(u3, 2).rat(0) -
                 h1_norm_sq_oracle(u3.rvec(), {5, 6})) < 1e-9);
}

TEST_CASE("h1 loss behaves like a relative metric") {
  Tensor a = Tensor::full({1, 1, 8}, 3.0);
  Tensor b = Tensor::full({1, 1, 8}, 4.0);
  CHECK(train::h1_loss(a, b, 1).rat(0) ==
        doctest::Approx(0.25).epsilon(1e-12));
  Tensor u = random_real({2, 1, 8, 8}, 29, 1.0, 0.5);
  CHECK(train::h1_loss(u, u, 2).rat(0) == 0.0);
  CHECK_THROWS_AS(train::h1_loss(u, Tensor::zeros({2, 1, 8, 8}), 2),
                  std::invalid_argument);
}

TEST_CASE("h1 loss gradients match finite differences") {
  Tensor pred = random_real({1, 1, 6}, 30, 0.5, 0.2);
  Tensor target = random_real({1, 1, 6}, 31, 0.5, 1.0);
  const double err = oracles::gradient_check(
      [&](const std::vector<Tensor>& ls) {
        return train::h1_loss(ls[0], target, 1);
      },
      {pred});
  CHECK(err < 1e-5);
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
  Tensor w = random_real({3}, 32);
  w.set_requires_grad(true);
  Tensor before = w;
  train::Adam adam({{"w", &w}}, {});
  for (int i = 0; i < 5; ++i) adam.step(GradMap{});
  CHECK(adam.step_count() == 5);
  CHECK(bit_equal(w, before));
}

TEST_CASE("adam first step follows the bias-corrected update") {
  Tensor w = Tensor::from_values({1}, {1.0});
  w.set_requires_grad(true);
  train::Adam adam({{"w", &w}}, {0.1});
  Tape tape;
  {
    Tape::Scope scope(tape);
    Tensor loss = opkit::ops::mul(w, w);
    GradMap g = tape.backward(opkit::ops::reduce_sum(loss));
    adam.step(g);
  }
  CHECK(w.rat(0) == doctest::Approx(0.9).epsilon(1e-7));

  // Constant unit gradient keeps the bias-corrected step at lr exactly.
  Tensor z = Tensor::from_values({1}, {1.0});
  z.set_requires_grad(true);
  train::Adam adam2({{"z", &z}}, {0.1});
  for (int i = 0; i < 3; ++i) {
    Tape t2;
    Tape::Scope scope(t2);
    GradMap g = t2.backward(opkit::ops::reduce_sum(z));
    adam2.step(g);
  }
  CHECK(z.rat(0) == doctest::Approx(0.7).epsilon(1e-7));
}

TEST_CASE("adam updates parameters independently") {
  Tensor a = Tensor::from_values({1}, {1.0});
  Tensor b = Tensor::from_values({1}, {2.0});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Tensor b_before = b;
  train::Adam adam({{"a", &a}, {"b", &b}}, {0.1});
  Tape tape;
  {
    Tape::Scope scope(tape);
    GradMap g = tape.backward(opkit::ops::reduce_sum(a));
    adam.step(g);
  }
  CHECK(a.rat(0) < 1.0);
  CHECK(bit_equal(b, b_before));
}

TEST_CASE("adam treats a complex entry as an independent pair") {
  Tensor c = Tensor::from_complex({1}, {{1.0, 2.0}});
  c.set_requires_grad(true);
  train::Adam adam({{"c", &c}}, {0.1});
  Tape tape;
  {
    Tape::Scope scope(tape);
    Tensor sq = opkit::ops::real_part(opkit::ops::mul(c, opkit::ops::conj(c)));
    GradMap g = tape.backward(opkit::ops::reduce_sum(sq));
    adam.step(g);
  }
  // Gradients (2, 4) both produce a first step of size lr.
  CHECK(c.cat(0).real() == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(c.cat(0).imag() == doctest::Approx(1.9).epsilon(1e-7));
}

TEST_CASE("adam rejects non-finite gradients by name") {
  Tensor w = Tensor::from_values({2}, {1.0, 1.0});
  w.set_requires_grad(true);
  train::Adam adam({{"w2", &w}}, {});
  GradMap g;
  g.insert(w.id(), Tensor::from_values(
                       {2}, {0.0, std::numeric_limits<double>::quiet_NaN()}));
  CHECK_THROWS_WITH_AS(adam.step(g), doctest::Contains("w2"),
                       std::runtime_error);
}

TEST_CASE("step decay schedule") {
  train::LrSchedule s{1e-3, 0.5, 10};
  CHECK(train::step_lr(s, 0) == 1e-3);
  CHECK(train::step_lr(s, 9) == 1e-3);
  CHECK(train::step_lr(s, 25) == doctest::Approx(2.5e-4).epsilon(1e-15));
  train::LrSchedule flat{2e-4, 1.0, 5};
  CHECK(train::step_lr(flat, 1000) == 2e-4);
  CHECK_THROWS_AS(train::step_lr({1e-3, 1.5, 10}, 0), std::invalid_argument);
  CHECK_THROWS_AS(train::step_lr({1e-3, 0.5, 0}, 0), std::invalid_argument);
}

TEST_CASE("incremental mode schedule") {
  train::ModeSchedule s{{2, 2}, 2, 5};
  CHECK(train::incremental_modes(s, 0, {8, 8}) ==
        std::vector<std::int64_t>{2, 2});
  CHECK(train::incremental_modes(s, 12, {8, 8}) ==
        std::vector<std::int64_t>{6, 6});
  CHECK(train::incremental_modes(s, 100, {8, 8}) ==
        std::vector<std::int64_t>{8, 8});
  CHECK_THROWS_AS(train::incremental_modes({{9}, 1, 1}, 0, {8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(train::incremental_modes({{2}, -1, 1}, 0, {8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(train::incremental_modes({{2, 2}, 1, 1}, 0, {8}),
                  std::invalid_argument);
}

TEST_CASE("mode masks single out the low-frequency block") {
  spectral::ModeSpec spec1;
  spec1.modes = {4};
  Tensor m1 = spectral::make_mode_mask(spec1, {2});
  CHECK(m1.shape() == Shape{1, 1, 4});
  const double want1[4] = {1.0, 1.0, 0.0, 0.0};
  for (int i = 0; i < 4; ++i) CHECK(m1.cat(i).real() == want1[i]);

  spectral::ModeSpec spec2;
  spec2.modes = {2, 2};
  Tensor m2 = spectral::make_mode_mask(spec2, {1, 1});
  CHECK(m2.shape() == Shape{1, 1, 4, 2});
  // Rows hold frequencies {0, 1, -2, -1}; columns {0, 1}.
  const double want2[8] = {1, 0, 0, 0, 0, 0, 1, 0};
  for (int i = 0; i < 8; ++i) CHECK(m2.cat(i).real() == want2[i]);

  CHECK_THROWS_AS(spectral::make_mode_mask(spec1, {5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(spectral::make_mode_mask(spec1, {0}),
                  std::invalid_argument);
}

TEST_CASE("masked forward equals the smaller model") {
  models::FnoModel a = models::make_fno(tiny_1d_config({4}, 40));
  models::FnoModel b = a;
  b.config.modes.modes = {2};
  for (std::size_t i = 0; i < b.blocks.size(); ++i)
    b.blocks[i].weights.dense =
        K::slice(a.blocks[i].weights.dense, 0, 0, 2).set_requires_grad(true);

  auto x = grid::make_grid(random_real({2, 1, 16}, 41));
  Tensor mask = spectral::make_mode_mask(a.config.modes, {2});
  Tensor ya = models::fno_forward(a, x, {}, &mask).data;
  Tensor yb = models::fno_forward(b, x).data;
  double worst = 0.0;
  for (std::int64_t i = 0; i < ya.numel(); ++i)
    worst = std::max(worst, std::abs(ya.rat(i) - yb.rat(i)));
  CHECK(worst < 1e-12);
}

TEST_CASE("masked modes receive exactly zero gradient") {
  models::FnoModel m = models::make_fno(tiny_1d_config({4}, 42));
  auto x = grid::make_grid(random_real({1, 1, 16}, 43));
  Tensor mask = spectral::make_mode_mask(m.config.modes, {2});

  Tape tape;
  GradMap grads;
  {
    Tape::Scope scope(tape);
    grid::GridFunction out = models::fno_forward(m, x, {}, &mask);
    grads = tape.backward(opkit::ops::reduce_sum(
        opkit::ops::mul(out.data, out.data)));
  }
  const Tensor g = grads.grad(m.blocks[0].weights.dense);
  const std::int64_t chans = 4 * 4;
  double live = 0.0;
  for (std::int64_t mode = 0; mode < 4; ++mode)
    for (std::int64_t c = 0; c < chans; ++c) {
      const std::complex<double> v = g.cat(mode * chans + c);
      if (mode < 2)
        live += std::abs(v);
      else
        CHECK(v == std::complex<double>{0.0, 0.0});
    }
  CHECK(live > 0.0);
}

namespace {

struct SyntheticSet {
  grid::GridFunction x;
  grid::GridFunction y;
};

// Inputs are smooth random fields; targets apply a fixed affine map, which
// a one-layer network can learn quickly.
SyntheticSet synthetic_1d(std::int64_t count, std::int64_t n,
                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xv(static_cast<std::size_t>(count * n));
  std::vector<double> yv(static_cast<std::size_t>(count * n));
  for (std::int64_t s = 0; s < count; ++s) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal();
    for (std::int64_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      const double u = a + b * std::sin(2.0 * std::numbers::pi * t) +
                       c * std::cos(2.0 * std::numbers::pi * t);
      xv[static_cast<std::size_t>(s * n + i)] = u;
      yv[static_cast<std::size_t>(s * n + i)] = 0.5 * u + 1.0;
    }
  }
  return {grid::make_grid(Tensor::from_values({count, 1, n}, std::move(xv))),
          grid::make_grid(Tensor::from_values({count, 1, n}, std::move(yv)))};
}

train::TrainConfig quick_config(std::int64_t epochs, double lr0) {
  train::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.lr = {lr0, 1.0, 1};
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("zero epochs leave the model at initialization") {
  models::FnoModel m = models::make_fno(tiny_1d_config({4}, 50));
  std::vector<Tensor> before;
  for (auto& [name, p] : m.named_params()) before.push_back(*p);
  auto set = synthetic_1d(8, 16, 51);
  opkit::data::DataProcessor proc({true, true, false, std::nullopt});
  proc.fit(set.x.data, set.y.data);

  auto report = train::train(m, set.x, set.y, {}, proc, quick_config(0, 1e-3));
  CHECK(report.rows.empty());
  CHECK_FALSE(report.aborted);
  CHECK(report.best_epoch() == -1);
  std::size_t k = 0;
  for (auto& [name, p] : m.named_params()) CHECK(bit_equal(*p, before[k++]));
}

TEST_CASE("zero learning rate reproduces the evaluation loss") {
  models::FnoModel m = models::make_fno(tiny_1d_config({4}, 52));
  std::vector<Tensor> before;
  for (auto& [name, p] : m.named_params()) before.push_back(*p);
  auto set = synthetic_1d(8, 16, 53);
  opkit::data::DataProcessor proc({true, true, false, std::nullopt});
  proc.fit(set.x.data, set.y.data);

  train::TrainConfig cfg = quick_config(1, 0.0);
  cfg.batch_size = 8;  // one batch, so the epoch mean is a single term
  const double eval0 = train::evaluate(m, set.x, set.y, proc);
  auto report = train::train(m, set.x, set.y, {}, proc, cfg);
  REQUIRE(report.rows.size() == 1);
  CHECK(std::abs(report.rows[0].train_loss - eval0) < 1e-12);
  std::size_t k = 0;
  for (auto& [name, p] : m.named_params()) CHECK(bit_equal(*p, before[k++]));
}

TEST_CASE("a short run reduces the training loss") {
  models::FnoConfig mc = tiny_1d_config({4}, 54);
  mc.hidden_channels = 8;
  models::FnoModel m = models::make_fno(mc);
  auto set = synthetic_1d(32, 32, 55);
  opkit::data::DataProcessor proc({true, true, false, std::nullopt});
  proc.fit(set.x.data, set.y.data);

  auto val = synthetic_1d(8, 32, 56);
  std::map<std::int64_t, train::ValSet> vals;
  vals[32] = {val.x, val.y};
  auto fine = synthetic_1d(8, 64, 57);
  vals[64] = {fine.x, fine.y};

  train::TrainConfig cfg = quick_config(5, 2e-3);
  auto report = train::train(m, set.x, set.y, vals, proc, cfg);
  REQUIRE(report.rows.size() == 5);
  CHECK(report.rows.back().train_loss < report.rows.front().train_loss);
  for (const auto& row : report.rows) {
    REQUIRE(row.val.size() == 2);
    CHECK(row.val[0].first == 32);
    CHECK(row.val[1].first == 64);
    CHECK(row.val[0].second > 0.0);
  }
  CHECK(report.best_epoch() >= 0);
}

TEST_CASE("training is deterministic given the seed") {
  auto run = [] {
    models::FnoModel m = models::make_fno(tiny_1d_config({4}, 60));
    auto set = synthetic_1d(16, 16, 61);
    opkit::data::DataProcessor proc({true, true, false, std::nullopt});
    proc.fit(set.x.data, set.y.data);
    std::map<std::int64_t, train::ValSet> vals;
    auto v = synthetic_1d(4, 16, 62);
    vals[16] = {v.x, v.y};
    auto report =
        train::train(m, set.x, set.y, vals, proc, quick_config(3, 1e-3));
    std::vector<Tensor> params;
    for (auto& [name, p] : m.named_params()) params.push_back(*p);
    return std::make_pair(report, params);
  };
  auto [r1, p1] = run();
  auto [r2, p2] = run();
  REQUIRE(r1.rows.size() == r2.rows.size());
  for (std::size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r1.rows[i].train_loss == r2.rows[i].train_loss);
    CHECK(r1.rows[i].lr == r2.rows[i].lr);
    CHECK(r1.rows[i].active_modes == r2.rows[i].active_modes);
    CHECK(r1.rows[i].val == r2.rows[i].val);
  }
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(bit_equal(p1[i], p2[i]));
}

TEST_CASE("mode schedule widens the active band during training") {
  models::FnoModel m = models::make_fno(tiny_1d_config({4}, 63));
  auto set = synthetic_1d(8, 16, 64);
  opkit::data::DataProcessor proc({true, true, false, std::nullopt});
  proc.fit(set.x.data, set.y.data);

  train::TrainConfig cfg = quick_config(4, 1e-3);
  cfg.modes = train::ModeSchedule{{2}, 2, 2};
  auto report = train::train(m, set.x, set.y, {}, proc, cfg);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.rows[0].active_modes == std::vector<std::int64_t>{2});
  CHECK(report.rows[1].active_modes == std::vector<std::int64_t>{2});
  CHECK(report.rows[2].active_modes == std::vector<std::int64_t>{4});
  CHECK(report.rows[3].active_modes == std::vector<std::int64_t>{4});
}

TEST_CASE("a schedule that never widens freezes the masked weights to zero") {
  models::FnoModel m = models::make_fno(tiny_1d_config({4}, 65));
  auto set = synthetic_1d(8, 16, 66);
  opkit::data::DataProcessor proc({true, true, false, std::nullopt});
  proc.fit(set.x.data, set.y.data);

  train::TrainConfig cfg = quick_config(2, 1e-3);
  cfg.modes = train::ModeSchedule{{2}, 0, 1};
  train::train(m, set.x, set.y, {}, proc, cfg);
  const Tensor& w = m.blocks[0].weights.dense;
  const std::int64_t chans = 4 * 4;
  for (std::int64_t mode = 2; mode < 4; ++mode)
    for (std::int64_t c = 0; c < chans; ++c)
      CHECK(w.cat(mode * chans + c) == std::complex<double>{0.0, 0.0});

  // With the leftovers zeroed, the full forward pass now equals the
  // masked one that trained.
  auto probe = grid::make_grid(random_real({1, 1, 16}, 67));
  Tensor mask = spectral::make_mode_mask(m.config.modes, {2});
  Tensor masked = models::fno_forward(m, probe, {}, &mask).data;
  Tensor full = models::fno_forward(m, probe).data;
  for (std::int64_t i = 0; i < full.numel(); ++i)
    CHECK(full.rat(i) == doctest::Approx(masked.rat(i)).epsilon(1e-13));
}

TEST_CASE("a poisoned batch aborts and rolls back") {
  models::FnoModel m = models::make_fno(tiny_1d_config({4}, 70));
  std::vector<Tensor> before;
  for (auto& [name, p] : m.named_params()) before.push_back(*p);
  auto set = synthetic_1d(8, 16, 71);
  opkit::data::DataProcessor proc({true, true, false, std::nullopt});
  proc.fit(set.x.data, set.y.data);
  std::vector<double> xv = set.x.data.rvec();
  xv[5] = std::numeric_limits<double>::quiet_NaN();
  grid::GridFunction bad_x =
      grid::make_grid(Tensor::from_values(set.x.data.shape(), std::move(xv)));

  auto report =
      train::train(m, bad_x, set.y, {}, proc, quick_config(2, 1e-3));
  CHECK(report.aborted);
  CHECK(report.abort_reason.find("non-finite") != std::string::npos);
  CHECK(report.rows.empty());
  std::size_t k = 0;
  for (auto& [name, p] : m.named_params()) CHECK(bit_equal(*p, before[k++]));
}

TEST_CASE("training report round trips through csv") {
  train::TrainReport report;
  train::EpochRecord r0;
  r0.epoch = 0;
  r0.train_loss = 0.5;
  r0.lr = 1e-3;
  r0.active_modes = {8, 8};
  r0.wall_ms = 12.0;
  r0.val = {{16, 0.25}, {32, 0.375}};
  report.rows.push_back(r0);

  const std::string path = "report_test.csv";
  train::write_report_csv(report, path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "epoch,train_loss,lr,active_modes,wall_ms,"
                  "val_relL2@16,val_relL2@32");
  CHECK(line == "0,0.5,0.001,8x8,12,0.25,0.375");
  std::remove(path.c_str());
}

TEST_CASE("prediction refuses a processor that pads or embeds") {
  models::FnoModel m = models::make_fno(tiny_1d_config({4}, 72));
  auto set = synthetic_1d(2, 16, 73);
  opkit::data::DataProcessor proc({true, true, true, std::nullopt});
  proc.fit(set.x.data, set.y.data);
  CHECK_THROWS_AS(train::predict(m, set.x, proc), std::invalid_argument);
}
