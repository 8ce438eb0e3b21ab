#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <stdexcept>
#include <vector>

#include "opkit/ops.hpp"
#include "opkit/tape.hpp"
#include "opkit/tensor.hpp"
#include "oracles.hpp"

using opkit::GradMap;
using opkit::Shape;
using opkit::Tape;
using opkit::Tensor;
namespace ops = opkit::ops;

TEST_CASE("no node is recorded for leaf creation") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor a = Tensor::from_values({3}, {1, 2, 3}, true);
  Tensor b = Tensor::full({3}, 2.0, true);
  CHECK(tape.size() == 0);
  Tensor c = ops::mul(a, b);
  // One node per leaf once actually used, plus the op node.
  CHECK(tape.size() == 3);
  (void)c;
}

TEST_CASE("backward of a constant root yields no gradients") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor a = Tensor::from_values({2}, {1, 2}, true);
  Tensor c = Tensor::scalar(5.0);
  GradMap g = tape.backward(c);
  CHECK(g.size() == 0);
  Tensor ga = g.grad(a);
  CHECK(ga.rat(0) == 0.0);
  CHECK(ga.rat(1) == 0.0);
}

TEST_CASE("backward rejects non-scalar and complex roots") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor a = Tensor::from_values({2}, {1, 2}, true);
  Tensor y = ops::mul(a, a);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
  Tensor z = Tensor::from_complex({}, {{1, 1}}, true);
  Tensor zc = ops::conj(z);
  CHECK_THROWS_AS(tape.backward(zc), std::invalid_argument);
}

TEST_CASE("square function gradient") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor w = Tensor::scalar(1.0).set_requires_grad(true);
  Tensor loss = ops::mul(w, w);
  GradMap g = tape.backward(loss);
  CHECK(g.grad(w).rat(0) == doctest::Approx(2.0));
}

TEST_CASE("gradients accumulate across reuse") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor a = Tensor::from_values({2}, {3, 4}, true);
  // f = sum(a*a) + sum(a) -> df/da = 2a + 1
  Tensor loss = ops::add(ops::reduce_sum(ops::mul(a, a)), ops::reduce_sum(a));
  GradMap g = tape.backward(loss);
  CHECK(g.grad(a).rat(0) == doctest::Approx(7.0));
  CHECK(g.grad(a).rat(1) == doctest::Approx(9.0));
}

TEST_CASE("detach blocks the gradient path") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor a = Tensor::from_values({2}, {3, 4}, true);
  Tensor loss = ops::reduce_sum(ops::mul(ops::detach(a), a));
  GradMap g = tape.backward(loss);
  // Only the second factor contributes: df/da = detached(a).
  CHECK(g.grad(a).rat(0) == doctest::Approx(3.0));
  CHECK(g.grad(a).rat(1) == doctest::Approx(4.0));
}

TEST_CASE("ops outside a tape scope record nothing") {
  Tensor a = Tensor::from_values({2}, {1, 2}, true);
  Tensor y = ops::mul(a, a);
  CHECK(y.node() == -1);
  Tape tape;
  {
    Tape::Scope scope(tape);
    Tensor z = ops::mul(a, a);
    CHECK(z.node() >= 0);
  }
  Tensor w = ops::mul(a, a);
  CHECK(w.node() == -1);
}

TEST_CASE("stale nodes from another tape are treated as constants") {
  Tensor a = Tensor::from_values({2}, {1, 2}, true);
  Tensor y;
  {
    Tape old;
    Tape::Scope scope(old);
    y = ops::mul(a, a);
  }
  Tape tape;
  Tape::Scope scope(tape);
  Tensor loss = ops::reduce_sum(ops::mul(y, a));
  GradMap g = tape.backward(loss);
  // y is a constant here, so df/da = y.
  CHECK(g.grad(a).rat(0) == doctest::Approx(1.0));
  CHECK(g.grad(a).rat(1) == doctest::Approx(4.0));
}

TEST_CASE("finite differences: elementwise composite") {
  auto f = [](const std::vector<Tensor>& ls) {
    const Tensor& a = ls[0];
    const Tensor& b = ls[1];
    Tensor t = ops::add(ops::mul(a, b), ops::gelu(a));
    Tensor denom = ops::add(Tensor::scalar(2.0), ops::abs_pow(b, 2.0));
    return ops::reduce_sum(ops::div(t, denom));
  };
  Tensor a = Tensor::from_values({2, 3}, oracles::test_values(6, 11));
  Tensor b = Tensor::from_values({2, 3}, oracles::test_values(6, 12));
  CHECK(oracles::gradient_check(f, {a, b}) < 1e-6);
}

TEST_CASE("finite differences: broadcasting bias pattern") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor y = ops::add(ops::mul(ls[0], ls[1]), ls[2]);
    return ops::reduce_sum(ops::mul(y, y));
  };
  Tensor x = Tensor::from_values({2, 3}, oracles::test_values(6, 21));
  Tensor w = Tensor::from_values({1, 3}, oracles::test_values(3, 22));
  Tensor b = Tensor::from_values({3}, oracles::test_values(3, 23));
  CHECK(oracles::gradient_check(f, {x, w, b}) < 1e-6);
}

TEST_CASE("finite differences: relu, sqrt, pow, mean") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor p = ops::abs_pow(ls[0], 3.0);
    Tensor r = ops::relu(ls[0]);
    Tensor s = ops::sqrt_ew(ops::add(ops::mul(ls[0], ls[0]),
                                     Tensor::scalar(0.5)));
    Tensor total = ops::add(ops::add(p, r), ops::pow_pos(s, 1.7));
    return ops::reduce_mean(total);
  };
  // Values bounded away from the relu kink so central differences are clean.
  std::vector<double> vals = {0.8, -0.6, 1.4, -1.1, 0.3, -0.2};
  Tensor a = Tensor::from_values({6}, vals);
  CHECK(oracles::gradient_check(f, {a}) < 1e-6);
}

TEST_CASE("finite differences: general contraction") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor c = ops::contract(ls[0], ls[1], {{2, 0}, {0, 2}});
    return ops::reduce_sum(ops::mul(c, c));
  };
  Tensor a = Tensor::from_values({2, 3, 4}, oracles::test_values(24, 31));
  Tensor b = Tensor::from_values({4, 5, 2}, oracles::test_values(40, 32));
  CHECK(oracles::gradient_check(f, {a, b}) < 1e-6);
}

TEST_CASE("finite differences: matmul chain with transpose and reshape") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor h = ops::matmul(ls[0], ls[1]);          // [3, 3]
    Tensor t = ops::transpose(h, {1, 0});
    Tensor r = ops::reshape(t, {9});
    return ops::reduce_sum(ops::gelu(r));
  };
  Tensor a = Tensor::from_values({3, 2}, oracles::test_values(6, 41));
  Tensor b = Tensor::from_values({2, 3}, oracles::test_values(6, 42));
  CHECK(oracles::gradient_check(f, {a, b}) < 1e-6);
}

TEST_CASE("finite differences: slice and concat") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor joined = ops::concat({ls[0], ls[1]}, 1);
    Tensor mid = ops::slice(joined, 1, 1, 4);
    return ops::reduce_sum(ops::mul(mid, mid));
  };
  Tensor a = Tensor::from_values({2, 2}, oracles::test_values(4, 51));
  Tensor b = Tensor::from_values({2, 3}, oracles::test_values(6, 52));
  CHECK(oracles::gradient_check(f, {a, b}) < 1e-6);
}

TEST_CASE("finite differences: complex pipeline") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor z = ls[0];
    Tensor w = ls[1];
    Tensor prod = ops::mul(ops::conj(z), w);
    Tensor joined = ops::make_complex(ops::real_part(prod),
                                      ops::imag_part(ops::mul(z, w)));
    Tensor mag = ops::add(ops::mul(ops::real_part(joined), ops::real_part(joined)),
                          ops::mul(ops::imag_part(joined), ops::imag_part(joined)));
    return ops::reduce_sum(mag);
  };
  std::vector<std::complex<double>> zv, wv;
  auto raw = oracles::test_values(8, 61);
  for (int i = 0; i < 4; ++i) zv.push_back({raw[i], raw[i + 4]});
  auto raw2 = oracles::test_values(8, 62);
  for (int i = 0; i < 4; ++i) wv.push_back({raw2[i], raw2[i + 4]});
  Tensor z = Tensor::from_complex({4}, zv);
  Tensor w = Tensor::from_complex({4}, wv);
  CHECK(oracles::gradient_check(f, {z, w}) < 1e-6);
}

TEST_CASE("finite differences: complex contraction and division") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor c = ops::contract(ls[0], ls[1], {{1, 0}});
    Tensor d = ops::div(c, Tensor::from_complex({}, {{2.0, 1.0}}));
    Tensor re = ops::real_part(d);
    Tensor im = ops::imag_part(d);
    return ops::add(ops::reduce_sum(ops::mul(re, re)),
                    ops::reduce_sum(ops::mul(im, im)));
  };
  auto raw = oracles::test_values(12, 71);
  std::vector<std::complex<double>> av, bv;
  for (int i = 0; i < 6; ++i) av.push_back({raw[i], raw[i + 6]});
  auto raw2 = oracles::test_values(12, 72);
  for (int i = 0; i < 6; ++i) bv.push_back({raw2[i], raw2[i + 6]});
  Tensor a = Tensor::from_complex({2, 3}, av);
  Tensor b = Tensor::from_complex({3, 2}, bv);
  CHECK(oracles::gradient_check(f, {a, b}) < 1e-6);
}

TEST_CASE("finite differences: to_complex round trip") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor z = ops::to_complex(ls[0]);
    Tensor w = ops::mul(z, ops::conj(z));
    return ops::reduce_sum(ops::real_part(w));
  };
  Tensor a = Tensor::from_values({5}, oracles::test_values(5, 81));
  CHECK(oracles::gradient_check(f, {a}) < 1e-6);
}

TEST_CASE("finite differences: gather and segment ops") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor g = ops::gather_rows(ls[0], {0, 2, 2, 1});
    Tensor s = ops::segment_sum(g, {0, 2, 4});
    return ops::reduce_sum(ops::mul(s, s));
  };
  Tensor a = Tensor::from_values({3, 2}, oracles::test_values(6, 91));
  CHECK(oracles::gradient_check(f, {a}) < 1e-6);
}

TEST_CASE("reduce_sum_axis gradient") {
  auto f = [](const std::vector<Tensor>& ls) {
    Tensor s = ops::reduce_sum_axis(ls[0], 1);
    return ops::reduce_sum(ops::mul(s, s));
  };
  Tensor a = Tensor::from_values({2, 3, 2}, oracles::test_values(12, 95));
  CHECK(oracles::gradient_check(f, {a}) < 1e-6);
}

TEST_CASE("gradient map reports untouched leaves as zero") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor a = Tensor::from_values({2}, {1, 2}, true);
  Tensor b = Tensor::from_values({2}, {5, 6}, true);
  Tensor loss = ops::reduce_sum(ops::mul(a, a));
  GradMap g = tape.backward(loss);
  CHECK_FALSE(g.contains(b));
  CHECK(g.grad(b).rat(0) == 0.0);
  CHECK(g.grad(b).shape() == Shape{2});
}

TEST_CASE("tape reset clears recorded state") {
  Tape tape;
  {
    Tape::Scope scope(tape);
    Tensor a = Tensor::from_values({2}, {1, 2}, true);
    Tensor loss = ops::reduce_sum(ops::mul(a, a));
    (void)loss;
  }
  CHECK(tape.size() > 0);
  tape.reset();
  CHECK(tape.size() == 0);
}
