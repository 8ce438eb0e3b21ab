#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "opkit/graph.hpp"
#include "opkit/nn.hpp"
#include "opkit/ops.hpp"
#include "opkit/rng.hpp"
#include "opkit/tensor.hpp"
#include "oracles.hpp"

using opkit::Shape;
using opkit::Tensor;
namespace graph = opkit::graph;
namespace nn = opkit::nn;
namespace ops = opkit::ops;

namespace {

// kappa(x, y) = 1 + 2y for 1-D clouds with scalar channels.
Tensor affine_kernel_1d(const Tensor& pair_coords) {
  Tensor y = ops::slice(pair_coords, 1, 1, 2);
  return ops::add(ops::scale(y, 2.0), Tensor::scalar(1.0));
}

// Constant identity matrix over channels.
graph::KernelFn identity_kernel(std::int64_t ch) {
  return [ch](const Tensor& pair_coords) {
    const std::int64_t p = pair_coords.dim(0);
    std::vector<double> v(static_cast<std::size_t>(p * ch * ch), 0.0);
    for (std::int64_t i = 0; i < p; ++i)
      for (std::int64_t c = 0; c < ch; ++c)
        v[static_cast<std::size_t>((i * ch + c) * ch + c)] = 1.0;
    return Tensor::from_values({p, ch * ch}, std::move(v));
  };
}

Tensor line_coords(const std::vector<double>& xs) {
  std::vector<double> v = xs;
  return Tensor::from_values({static_cast<std::int64_t>(xs.size()), 1},
                             std::move(v));
}

}  // namespace

TEST_CASE("radius search validates arguments") {
  Tensor pts = line_coords({0.0, 1.0});
  CHECK_THROWS_AS(graph::radius_search(pts, pts, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(graph::radius_search(pts, pts, -1.0), std::invalid_argument);
  Tensor pts2 = Tensor::from_values({1, 2}, {0.0, 0.0});
  CHECK_THROWS_AS(graph::radius_search(pts, pts2, 0.5),
                  std::invalid_argument);
}

TEST_CASE("isolated points only see themselves") {
  Tensor pts = line_coords({0.0, 1.0});
  auto idx = graph::radius_search(pts, pts, 0.5);
  CHECK(idx.offsets == std::vector<std::int64_t>{0, 1, 2});
  CHECK(idx.indices == std::vector<std::int64_t>{0, 1});
  CHECK(graph::isolated_count(idx) == 0);
}

TEST_CASE("unit-square grid neighborhoods match hand enumeration") {
  // 3x3 grid with spacing 0.5; radius 0.5 reaches axis neighbors only.
  std::vector<double> coords;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      coords.push_back(0.5 * i);
      coords.push_back(0.5 * j);
    }
  Tensor pts = Tensor::from_values({9, 2}, std::move(coords));
  auto idx = graph::radius_search(pts, pts, 0.5);
  // Center point is row 4 (i=1, j=1).
  const std::int64_t lo = idx.offsets[4], hi = idx.offsets[5];
  CHECK(hi - lo == 5);
  std::vector<std::int64_t> center(idx.indices.begin() + lo,
                                   idx.indices.begin() + hi);
  CHECK(center == std::vector<std::int64_t>{1, 3, 4, 5, 7});
  // Corner point row 0: itself plus two axis neighbors.
  CHECK(idx.offsets[1] - idx.offsets[0] == 3);
}

TEST_CASE("all sources fall inside a diameter-sized radius") {
  Tensor q = line_coords({0.1, 0.9});
  Tensor s = line_coords({0.0, 0.3, 0.6, 1.0});
  auto idx = graph::radius_search(q, s, 2.0);
  CHECK(idx.offsets == std::vector<std::int64_t>{0, 4, 8});
  for (std::int64_t i = 0; i < 8; ++i) CHECK(idx.indices[i] == i % 4);
}

TEST_CASE("search order is ascending per query") {
  opkit::Rng rng(5);
  std::vector<double> coords(40);
  for (double& c : coords) c = rng.uniform01();
  Tensor pts = Tensor::from_values({20, 2}, std::move(coords));
  auto idx = graph::radius_search(pts, pts, 0.4);
  for (std::size_t i = 0; i + 1 < idx.offsets.size(); ++i)
    for (std::int64_t p = idx.offsets[i] + 1; p < idx.offsets[i + 1]; ++p)
      CHECK(idx.indices[p - 1] < idx.indices[p]);
}

TEST_CASE("constant identity kernel preserves constant features") {
  opkit::Rng rng(6);
  std::vector<double> coords(30);
  for (double& c : coords) c = rng.uniform01();
  Tensor pts = Tensor::from_values({15, 2}, std::move(coords));
  std::vector<double> feat;
  for (int i = 0; i < 15; ++i) {
    feat.push_back(2.5);
    feat.push_back(-1.0);
  }
  auto cloud = graph::make_cloud(pts, Tensor::from_values({15, 2}, feat));
  auto idx = graph::radius_search(pts, pts, 0.6);
  Tensor out =
      graph::kernel_integral(cloud, cloud, idx, identity_kernel(2), 2);
  for (std::int64_t i = 0; i < 15; ++i) {
    CHECK(out.rat(2 * i) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(out.rat(2 * i + 1) == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("three-point transform matches the hand-computed mean") {
  Tensor q = line_coords({0.0});
  Tensor s = line_coords({0.1, 0.2, 0.4});
  auto qc = graph::make_cloud(q, Tensor::from_values({1, 1}, {0.0}));
  auto sc = graph::make_cloud(s, Tensor::from_values({3, 1}, {2.0, -1.0, 3.0}));
  auto idx = graph::radius_search(q, s, 1.0);
  Tensor out = graph::kernel_integral(qc, sc, idx, affine_kernel_1d, 1);
  // kappa = {1.2, 1.4, 1.8}; mean of {1.2*2, 1.4*-1, 1.8*3} = 6.4/3.
  CHECK(out.rat(0) == doctest::Approx(6.4 / 3.0).epsilon(1e-12));
}

TEST_CASE("empty neighborhoods yield zero rows and a diagnostic count") {
  Tensor q = line_coords({0.0, 10.0, 0.05});
  Tensor s = line_coords({0.0, 0.1});
  auto qc = graph::make_cloud(q, Tensor::zeros({3, 1}));
  auto sc = graph::make_cloud(s, Tensor::from_values({2, 1}, {5.0, 7.0}));
  auto idx = graph::radius_search(q, s, 0.2);
  std::int64_t isolated = -1;
  Tensor out =
      graph::kernel_integral(qc, sc, idx, identity_kernel(1), 1, &isolated);
  CHECK(isolated == 1);
  CHECK(out.rat(0) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(out.rat(1) == 0.0);
  CHECK(out.rat(2) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("inconsistent index is rejected") {
  Tensor q = line_coords({0.0, 1.0});
  Tensor s = line_coords({0.0, 1.0});
  auto qc = graph::make_cloud(q, Tensor::zeros({2, 1}));
  auto sc = graph::make_cloud(s, Tensor::zeros({2, 1}));

  graph::NeighborIndex short_index{{0, 1}, {0}, 0.5};
  CHECK_THROWS_AS(
      graph::kernel_integral(qc, sc, short_index, identity_kernel(1), 1),
      std::invalid_argument);
  graph::NeighborIndex bad_source{{0, 1, 2}, {0, 9}, 0.5};
  CHECK_THROWS_AS(
      graph::kernel_integral(qc, sc, bad_source, identity_kernel(1), 1),
      std::invalid_argument);
  graph::NeighborIndex decreasing{{0, 2, 1}, {0, 1}, 0.5};
  CHECK_THROWS_AS(
      graph::kernel_integral(qc, sc, decreasing, identity_kernel(1), 1),
      std::invalid_argument);
}

TEST_CASE("permuting sources with a matching index is exact") {
  opkit::Rng rng(7);
  std::vector<double> coords(24), feat(36);
  for (double& c : coords) c = rng.uniform01();
  for (double& f : feat) f = rng.normal();
  Tensor q = Tensor::from_values({5, 2},
                                 {0.2, 0.2, 0.8, 0.3, 0.5, 0.5, 0.1, 0.9,
                                  0.7, 0.7});
  Tensor s = Tensor::from_values({12, 2}, coords);
  auto sc = graph::make_cloud(s, Tensor::from_values({12, 3}, feat));
  auto qc = graph::make_cloud(q, Tensor::zeros({5, 1}));
  auto idx = graph::radius_search(q, s, 0.45);

  nn::Perceptron kernel;
  {
    opkit::Rng krng(8);
    kernel = nn::init_perceptron(4, 6, 3 * 3, krng);
  }
  auto kfn = [&kernel](const Tensor& pc) { return kernel.apply(pc); };
  Tensor base = graph::kernel_integral(qc, sc, idx, kfn, 3);

  // Rotate the source rows and retarget the index at the same points in the
  // same positions.
  const std::int64_t ns = 12;
  std::vector<std::int64_t> to_new(static_cast<std::size_t>(ns));
  std::vector<double> pc(24), pf(36);
  for (std::int64_t old = 0; old < ns; ++old) {
    const std::int64_t fresh = (old + 5) % ns;
    to_new[static_cast<std::size_t>(old)] = fresh;
    for (int k = 0; k < 2; ++k)
      pc[static_cast<std::size_t>(fresh * 2 + k)] = s.rat(old * 2 + k);
    for (int k = 0; k < 3; ++k)
      pf[static_cast<std::size_t>(fresh * 3 + k)] =
          sc.features.rat(old * 3 + k);
  }
  auto permuted = graph::make_cloud(Tensor::from_values({12, 2}, pc),
                                    Tensor::from_values({12, 3}, pf));
  graph::NeighborIndex pidx = idx;
  for (std::int64_t& j : pidx.indices) j = to_new[static_cast<std::size_t>(j)];
  Tensor moved = graph::kernel_integral(qc, permuted, pidx, kfn, 3);
  for (std::int64_t i = 0; i < base.numel(); ++i)
    CHECK(moved.rat(i) == base.rat(i));
}

TEST_CASE("uniform duplication with recomputed weights is stable") {
  Tensor q = line_coords({0.5});
  Tensor s = line_coords({0.3, 0.5, 0.7});
  auto qc = graph::make_cloud(q, Tensor::zeros({1, 1}));
  auto sc = graph::make_cloud(s, Tensor::from_values({3, 1}, {1.0, 4.0, -2.0}));
  auto idx = graph::radius_search(q, s, 0.5);
  Tensor base = graph::kernel_integral(qc, sc, idx, affine_kernel_1d, 1);

  auto dup = graph::make_cloud(
      line_coords({0.3, 0.5, 0.7, 0.3, 0.5, 0.7}),
      Tensor::from_values({6, 1}, {1.0, 4.0, -2.0, 1.0, 4.0, -2.0}));
  graph::NeighborIndex didx{{0, 6}, {0, 1, 2, 3, 4, 5}, 0.5};
  Tensor doubled = graph::kernel_integral(qc, dup, didx, affine_kernel_1d, 1);
  CHECK(doubled.rat(0) == doctest::Approx(base.rat(0)).epsilon(1e-12));

  // Duplicating a single source point shifts the mean.
  auto one_dup = graph::make_cloud(
      line_coords({0.3, 0.5, 0.7, 0.5}),
      Tensor::from_values({4, 1}, {1.0, 4.0, -2.0, 4.0}));
  graph::NeighborIndex oidx{{0, 4}, {0, 1, 2, 3}, 0.5};
  Tensor skewed = graph::kernel_integral(qc, one_dup, oidx, affine_kernel_1d, 1);
  CHECK(std::abs(skewed.rat(0) - base.rat(0)) > 1e-3);
}

TEST_CASE("gradients flow to kernel parameters and features") {
  Tensor q = Tensor::from_values({3, 1}, {0.2, 0.5, 0.8});
  Tensor s = Tensor::from_values({4, 1}, {0.1, 0.4, 0.6, 0.9});
  Tensor feat = Tensor::from_values(
      {4, 2}, oracles::test_values(8, 40));
  auto idx = graph::radius_search(q, s, 0.35);
  REQUIRE(idx.indices.size() > 0);

  nn::Perceptron proto;
  {
    opkit::Rng krng(41);
    proto = nn::init_perceptron(2, 5, 2 * 2, krng);
  }
  auto f = [&](const std::vector<Tensor>& ls) {
    nn::Perceptron k;
    k.l1 = {ls[0], ls[1]};
    k.l2 = {ls[2], ls[3]};
    auto qc = graph::make_cloud(q, Tensor::zeros({3, 1}));
    auto sc = graph::make_cloud(s, ls[4]);
    Tensor out = graph::kernel_integral(
        qc, sc, idx, [&k](const Tensor& pc) { return k.apply(pc); }, 2);
    Tensor probe = Tensor::from_values(
        out.shape(), oracles::test_values(out.numel(), 42));
    return ops::reduce_sum(ops::mul(out, probe));
  };
  std::vector<Tensor> leaves;
  for (Tensor* p : proto.params()) leaves.push_back(p->detached());
  leaves.push_back(feat);
  CHECK(oracles::gradient_check(f, leaves) < 1e-5);
}

TEST_CASE("refinement tightens the transform") {
  // Smooth kernel and features on [0,1]; halving the spacing three times
  // must shrink successive output differences.
  nn::Perceptron kernel;
  {
    opkit::Rng krng(43);
    kernel = nn::init_perceptron(2, 8, 1, krng);
  }
  auto kfn = [&kernel](const Tensor& pc) { return kernel.apply(pc); };
  Tensor q = line_coords({0.3, 0.5, 0.7});
  auto qc = graph::make_cloud(q, Tensor::zeros({3, 1}));

  auto run = [&](std::int64_t n) {
    std::vector<double> xs(static_cast<std::size_t>(n)),
        vs(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(n);
      xs[static_cast<std::size_t>(i)] = x;
      vs[static_cast<std::size_t>(i)] =
          std::sin(2.0 * std::numbers::pi * x) + 0.5 * x;
    }
    auto sc = graph::make_cloud(
        Tensor::from_values({n, 1}, xs), Tensor::from_values({n, 1}, vs));
    auto idx = graph::radius_search(q, sc.coords, 0.2501);
    return graph::kernel_integral(qc, sc, idx, kfn, 1);
  };

  Tensor a = run(16), b = run(32), c = run(64), d = run(128);
  auto diff = [](const Tensor& u, const Tensor& v) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < u.numel(); ++i)
      acc = std::max(acc, std::abs(u.rat(i) - v.rat(i)));
    return acc;
  };
  const double d1 = diff(a, b), d2 = diff(b, c), d3 = diff(c, d);
  CHECK(d1 > d2);
  CHECK(d2 > d3);
}
