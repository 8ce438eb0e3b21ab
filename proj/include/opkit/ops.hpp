#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "opkit/tensor.hpp"

namespace opkit::ops {

/// Differentiable operations. Each call computes its result eagerly and, when
/// a tape is active and an input participates in differentiation, records a
/// backward closure on that tape.
///
/// Complex gradients follow the convention grad = dL/dRe + i dL/dIm, so for
/// products the backward multiplies by the conjugate of the other factor.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& axes);
/// Matrix product of the last axis of `a` with the first axis of `b`.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a, const std::vector<int>& perm);
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, std::int64_t lo, std::int64_t hi);
/// Zero-extends `axis` to length `full`, placing `a` at offset `lo`.
Tensor unslice(const Tensor& a, int axis, std::int64_t lo, std::int64_t full);

Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);

Tensor reduce_sum(const Tensor& a);
Tensor reduce_sum_axis(const Tensor& a, int axis);
Tensor reduce_mean(const Tensor& a);

/// |a|^p elementwise, real input, p > 1 for a differentiable result at 0.
Tensor abs_pow(const Tensor& a, double p);
/// a^p elementwise for strictly positive a.
Tensor pow_pos(const Tensor& a, double p);
Tensor sqrt_ew(const Tensor& a);

Tensor conj(const Tensor& a);
Tensor real_part(const Tensor& a);
Tensor imag_part(const Tensor& a);
Tensor make_complex(const Tensor& re, const Tensor& im);
Tensor to_complex(const Tensor& a);

Tensor gather_rows(const Tensor& a, std::vector<std::int64_t> idx);
Tensor segment_sum(const Tensor& a, std::vector<std::int64_t> offsets);

/// Same values, cut loose from the tape.
Tensor detach(const Tensor& a);

}  // namespace opkit::ops
