#pragma once

#include <cstdint>
#include <vector>

#include "opkit/rng.hpp"
#include "opkit/tensor.hpp"

namespace opkit::nn {

// Affine map along the last axis: y = x @ w + b with w [in, out], b [out].
struct Linear {
  Tensor w;
  Tensor b;

  Tensor apply(const Tensor& x) const;
  std::int64_t in_features() const { return w.dim(0); }
  std::int64_t out_features() const { return w.dim(1); }
};

// Two affine layers with a GELU in between, applied along the last axis.
struct Perceptron {
  Linear l1;
  Linear l2;

  Tensor apply(const Tensor& x) const;
  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
};

// Weights uniform on (-1/sqrt(in), 1/sqrt(in)), biases zero.
Linear init_linear(std::int64_t in, std::int64_t out, Rng& rng);
Perceptron init_perceptron(std::int64_t in, std::int64_t hidden,
                           std::int64_t out, Rng& rng);

}  // namespace opkit::nn
