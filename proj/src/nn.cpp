#include "opkit/nn.hpp"

#include <cmath>

#include "opkit/ops.hpp"

namespace opkit::nn {

Tensor Linear::apply(const Tensor& x) const {
  check_arg(x.rank() >= 1 && x.dim(x.rank() - 1) == w.dim(0),
            "Linear::apply: input feature axis " +
                std::to_string(x.rank() ? x.dim(x.rank() - 1) : 0) +
                " does not match weight rows " + std::to_string(w.dim(0)));
  return ops::add(ops::matmul(x, w), b);
}

Tensor Perceptron::apply(const Tensor& x) const {
  return l2.apply(ops::gelu(l1.apply(x)));
}

std::vector<Tensor*> Perceptron::params() {
  return {&l1.w, &l1.b, &l2.w, &l2.b};
}

std::vector<const Tensor*> Perceptron::params() const {
  return {&l1.w, &l1.b, &l2.w, &l2.b};
}

Linear init_linear(std::int64_t in, std::int64_t out, Rng& rng) {
  check_arg(in >= 1 && out >= 1, "init_linear: feature counts must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> w(static_cast<std::size_t>(in * out));
  for (double& v : w) v = rng.uniform(-bound, bound);
  Linear lin;
  lin.w = Tensor::from_values({in, out}, std::move(w), true);
  lin.b = Tensor::zeros({out}, ElemKind::Real64, true);
  return lin;
}

Perceptron init_perceptron(std::int64_t in, std::int64_t hidden,
                           std::int64_t out, Rng& rng) {
  Perceptron p;
  p.l1 = init_linear(in, hidden, rng);
  p.l2 = init_linear(hidden, out, rng);
  return p;
}

}  // namespace opkit::nn
