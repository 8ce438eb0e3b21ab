#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "opkit/tensor.hpp"

namespace opkit::kernels {

/// Shape both operands broadcast to; each axis pair must be equal or one of
/// them 1 (missing leading axes count as 1).
Shape broadcast_shape(const Shape& a, const Shape& b);

enum class BinOp { Add, Sub, Mul, Div };

/// Elementwise binary op with broadcasting. Operands must share a kind.
Tensor ewise(BinOp op, const Tensor& a, const Tensor& b);

/// Sums `g` down to `target` by reducing broadcast axes.
Tensor reduce_to(const Tensor& g, const Shape& target);

/// Negation, any kind.
Tensor neg(const Tensor& a);

/// Elementwise conjugate of a complex tensor.
Tensor conj(const Tensor& a);

Tensor real_part(const Tensor& a);
Tensor imag_part(const Tensor& a);
Tensor make_complex(const Tensor& re, const Tensor& im);

/// Multiplies every element by a real scalar, preserving kind.
Tensor scale(const Tensor& a, double s);

/// Tensor contraction over paired axes, `axes` listing (axis_of_a, axis_of_b).
/// Output axes are a's free axes then b's free axes, both in original order.
/// The reduction runs in ascending order of the flattened contracted index.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& axes);

Tensor transpose(const Tensor& a, const std::vector<int>& perm);
Tensor reshape(const Tensor& a, const Shape& shape);

/// Concatenates along `axis`; all other axis sizes must match.
Tensor concat(const std::vector<Tensor>& parts, int axis);
/// Copies the half-open slice [lo, hi) of `axis`.
Tensor slice(const Tensor& a, int axis, std::int64_t lo, std::int64_t hi);
/// Embeds `a` at offset `lo` of an `axis` widened to `full`, zeros elsewhere.
Tensor unslice(const Tensor& a, int axis, std::int64_t lo, std::int64_t full);

Tensor relu(const Tensor& a);
Tensor relu_grad(const Tensor& a, const Tensor& g);
Tensor gelu(const Tensor& a);
Tensor gelu_grad(const Tensor& a, const Tensor& g);

Tensor reduce_sum_all(const Tensor& a);
/// Sums over `axis`, dropping it.
Tensor reduce_sum_axis(const Tensor& a, int axis);

/// |a|^p elementwise on a real tensor.
Tensor abs_pow(const Tensor& a, double p);
/// d/da |a|^p = p |a|^{p-1} sign(a), with 0 at a = 0.
Tensor abs_pow_grad(const Tensor& a, double p, const Tensor& g);
/// a^p for strictly positive real a.
Tensor pow_pos(const Tensor& a, double p);
Tensor sqrt_ew(const Tensor& a);

Tensor to_complex(const Tensor& real);

/// Gathers rows `idx` of a 2-D tensor into an [idx.size(), cols] tensor.
Tensor gather_rows(const Tensor& a, const std::vector<std::int64_t>& idx);
/// Adds each row of `g` into row `idx[i]` of a zero [rows, cols] tensor.
Tensor scatter_add_rows(const Tensor& g, const std::vector<std::int64_t>& idx,
                        std::int64_t rows);
/// Sums contiguous row segments: row s of the output is the sum of rows
/// [offsets[s], offsets[s+1]) of `a`.
Tensor segment_sum(const Tensor& a, const std::vector<std::int64_t>& offsets);
/// Backward of segment_sum: repeats each output row across its segment.
Tensor segment_broadcast(const Tensor& g,
                         const std::vector<std::int64_t>& offsets);

}  // namespace opkit::kernels
