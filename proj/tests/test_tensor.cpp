#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <stdexcept>

#include "opkit/kernels.hpp"
#include "opkit/tensor.hpp"
#include "oracles.hpp"

using opkit::ElemKind;
using opkit::Shape;
using opkit::Tensor;
namespace K = opkit::kernels;

TEST_CASE("factories and basic accessors") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.rank() == 2);
  CHECK(z.is_real());
  for (std::int64_t i = 0; i < 6; ++i) CHECK(z.rat(i) == 0.0);

  Tensor f = Tensor::full({4}, 2.5);
  CHECK(f.rat(3) == 2.5);

  Tensor s = Tensor::scalar(7.0);
  CHECK(s.rank() == 0);
  CHECK(s.numel() == 1);
  CHECK(s.rat(0) == 7.0);

  Tensor c = Tensor::from_complex({2}, {{1.0, 2.0}, {3.0, -4.0}});
  CHECK(c.is_complex());
  CHECK(c.cat(1) == std::complex<double>{3.0, -4.0});

  CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("copies share storage and stay immutable") {
  Tensor a = Tensor::from_values({2}, {1.0, 2.0});
  Tensor b = a;
  CHECK(a.id() == b.id());
  Tensor c = K::scale(a, 2.0);
  CHECK(c.id() != a.id());
  CHECK(a.rat(0) == 1.0);
  CHECK(c.rat(0) == 2.0);
}

TEST_CASE("broadcast shape rules") {
  CHECK(K::broadcast_shape({2, 3}, {3}) == Shape{2, 3});
  CHECK(K::broadcast_shape({2, 1, 4}, {1, 5, 1}) == Shape{2, 5, 4});
  CHECK(K::broadcast_shape({}, {3}) == Shape{3});
  CHECK_THROWS_AS(K::broadcast_shape({2, 3}, {2, 4}), std::invalid_argument);
}

TEST_CASE("elementwise ops with broadcasting") {
  Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor row = Tensor::from_values({2}, {10, 20});
  Tensor sum = K::ewise(K::BinOp::Add, a, row);
  CHECK(sum.rat(0) == 11);
  CHECK(sum.rat(1) == 22);
  CHECK(sum.rat(2) == 13);
  CHECK(sum.rat(3) == 24);

  Tensor col = Tensor::from_values({2, 1}, {100, 200});
  Tensor prod = K::ewise(K::BinOp::Mul, a, col);
  CHECK(prod.rat(0) == 100);
  CHECK(prod.rat(3) == 800);

  Tensor scalar = Tensor::scalar(2.0);
  Tensor div = K::ewise(K::BinOp::Div, a, scalar);
  CHECK(div.rat(3) == 2.0);

  Tensor cx = Tensor::from_complex({2}, {{1, 1}, {0, 2}});
  CHECK_THROWS_AS(K::ewise(K::BinOp::Add, a, cx), std::invalid_argument);
}

TEST_CASE("reduce_to folds broadcast axes back") {
  Tensor g = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = K::reduce_to(g, {3});
  CHECK(r.shape() == Shape{3});
  CHECK(r.rat(0) == 5);
  CHECK(r.rat(1) == 7);
  CHECK(r.rat(2) == 9);

  Tensor r2 = K::reduce_to(g, {2, 1});
  CHECK(r2.shape() == Shape{2, 1});
  CHECK(r2.rat(0) == 6);
  CHECK(r2.rat(1) == 15);

  Tensor all = K::reduce_to(g, {});
  CHECK(all.rat(0) == 21);
}

TEST_CASE("transpose and reshape") {
  Tensor a = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor t = K::transpose(a, {1, 0});
  CHECK(t.shape() == Shape{3, 2});
  CHECK(t.rat(0) == 1);
  CHECK(t.rat(1) == 4);
  CHECK(t.rat(2) == 2);
  CHECK(t.rat(5) == 6);

  Tensor r = K::reshape(a, {3, 2});
  CHECK(r.rat(2) == 3);
  CHECK_THROWS_AS(K::reshape(a, {4}), std::invalid_argument);
  CHECK_THROWS_AS(K::transpose(a, {0, 0}), std::invalid_argument);

  Tensor abc = Tensor::from_values({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  Tensor p = K::transpose(abc, {2, 0, 1});
  CHECK(p.shape() == Shape{2, 2, 2});
  // p[i][j][k] = abc[j][k][i]
  CHECK(p.rat(0) == 0);
  CHECK(p.rat(1) == 2);
  CHECK(p.rat(4) == 1);
  CHECK(p.rat(7) == 7);
}

TEST_CASE("slice, unslice, concat") {
  Tensor a = Tensor::from_values({2, 4}, {0, 1, 2, 3, 4, 5, 6, 7});
  Tensor s = K::slice(a, 1, 1, 3);
  CHECK(s.shape() == Shape{2, 2});
  CHECK(s.rat(0) == 1);
  CHECK(s.rat(3) == 6);

  Tensor u = K::unslice(s, 1, 1, 4);
  CHECK(u.shape() == Shape{2, 4});
  CHECK(u.rat(0) == 0);
  CHECK(u.rat(1) == 1);
  CHECK(u.rat(2) == 2);
  CHECK(u.rat(3) == 0);

  Tensor b = Tensor::from_values({2, 1}, {9, 10});
  Tensor c = K::concat({K::slice(a, 1, 0, 2), b}, 1);
  CHECK(c.shape() == Shape{2, 3});
  CHECK(c.rat(2) == 9);
  CHECK(c.rat(5) == 10);

  CHECK_THROWS_AS(K::slice(a, 1, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(K::slice(a, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("contract matches the brute-force oracle") {
  const auto av = oracles::test_values(2 * 3 * 4, 1);
  const auto bv = oracles::test_values(4 * 3 * 5, 2);
  Tensor a = Tensor::from_values({2, 3, 4}, av);
  Tensor b = Tensor::from_values({4, 3, 5}, bv);
  // Contract a axes (2,1) with b axes (0,1): out [2, 5].
  Tensor c = K::contract(a, b, {{2, 0}, {1, 1}});
  CHECK(c.shape() == Shape{2, 5});
  for (std::int64_t i = 0; i < 2; ++i)
    for (std::int64_t j = 0; j < 5; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < 4; ++k)
        for (std::int64_t l = 0; l < 3; ++l)
          acc += av[static_cast<std::size_t>(i * 12 + l * 4 + k)] *
                 bv[static_cast<std::size_t>(k * 15 + l * 5 + j)];
      CHECK(c.rat(i * 5 + j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("matrix contraction is bitwise equal to the k-ascending oracle") {
  const std::int64_t M = 7, Kd = 13, N = 5;
  const auto av = oracles::test_values(M * Kd, 3);
  const auto bv = oracles::test_values(Kd * N, 4);
  Tensor a = Tensor::from_values({M, Kd}, av);
  Tensor b = Tensor::from_values({Kd, N}, bv);
  Tensor c = K::contract(a, b, {{1, 0}});
  const auto ref = oracles::matmul_naive(av, bv, M, Kd, N);
  for (std::int64_t i = 0; i < M * N; ++i)
    CHECK(c.rat(i) == ref[static_cast<std::size_t>(i)]);
}

TEST_CASE("complex contract conjugates nothing on the forward path") {
  using cd = std::complex<double>;
  Tensor a = Tensor::from_complex({2, 2}, {{1, 1}, {2, -1}, {0, 3}, {1, 0}});
  Tensor b = Tensor::from_complex({2}, {{1, -2}, {2, 1}});
  Tensor c = K::contract(a, b, {{1, 0}});
  const cd r0 = cd{1, 1} * cd{1, -2} + cd{2, -1} * cd{2, 1};
  const cd r1 = cd{0, 3} * cd{1, -2} + cd{1, 0} * cd{2, 1};
  CHECK(std::abs(c.cat(0) - r0) < 1e-14);
  CHECK(std::abs(c.cat(1) - r1) < 1e-14);
}

TEST_CASE("outer product via empty contraction axes") {
  Tensor a = Tensor::from_values({2}, {1, 2});
  Tensor b = Tensor::from_values({3}, {1, 10, 100});
  Tensor c = K::contract(a, b, {});
  CHECK(c.shape() == Shape{2, 3});
  CHECK(c.rat(5) == 200);
}

TEST_CASE("segment and gather kernels") {
  Tensor a = Tensor::from_values({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor g = K::gather_rows(a, {2, 0, 2});
  CHECK(g.shape() == Shape{3, 2});
  CHECK(g.rat(0) == 5);
  CHECK(g.rat(2) == 1);
  CHECK(g.rat(4) == 5);

  Tensor sc = K::scatter_add_rows(g, {2, 0, 2}, 4);
  CHECK(sc.shape() == Shape{4, 2});
  CHECK(sc.rat(0) == 1);
  CHECK(sc.rat(4) == 10);  // rows 0 and 2 of g both land on row 2
  CHECK(sc.rat(6) == 0);

  Tensor seg = K::segment_sum(a, {0, 1, 1, 4});
  CHECK(seg.shape() == Shape{3, 2});
  CHECK(seg.rat(0) == 1);
  CHECK(seg.rat(2) == 0);  // empty segment
  CHECK(seg.rat(4) == 15);
  CHECK(seg.rat(5) == 18);

  Tensor back = K::segment_broadcast(seg, {0, 1, 1, 4});
  CHECK(back.shape() == Shape{4, 2});
  CHECK(back.rat(0) == 1);
  CHECK(back.rat(2) == 15);
  CHECK(back.rat(6) == 15);
}

TEST_CASE("gelu matches high-precision reference values") {
  Tensor x = Tensor::from_values({3}, {1.0, 0.5, -1.25});
  Tensor y = K::gelu(x);
  CHECK(y.rat(0) == doctest::Approx(0.8411919906082767).epsilon(1e-12));
  CHECK(y.rat(1) == doctest::Approx(0.3457140098251439).epsilon(1e-12));
  CHECK(y.rat(2) == doctest::Approx(-0.1322857970302854).epsilon(1e-12));
}

TEST_CASE("complex split and join") {
  Tensor z = Tensor::from_complex({2}, {{1, 2}, {3, 4}});
  Tensor re = K::real_part(z);
  Tensor im = K::imag_part(z);
  CHECK(re.rat(1) == 3);
  CHECK(im.rat(1) == 4);
  Tensor back = K::make_complex(re, im);
  CHECK(back.cat(0) == std::complex<double>{1, 2});
  Tensor cj = K::conj(z);
  CHECK(cj.cat(1) == std::complex<double>{3, -4});
  CHECK_THROWS_AS(K::real_part(re), std::invalid_argument);
}
