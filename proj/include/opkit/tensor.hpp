#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace opkit {

using Shape = std::vector<std::int64_t>;

enum class ElemKind : std::uint8_t { Real64 = 0, Complex128 = 1 };

class Tape;

namespace detail {

/// Backing store of a tensor. Exactly one of `re`/`cx` is populated,
/// matching `kind`. Treated as immutable once wrapped in a Tensor.
struct Storage {
  ElemKind kind = ElemKind::Real64;
  Shape shape;
  std::vector<double> re;
  std::vector<std::complex<double>> cx;
};

std::int64_t shape_numel(const Shape& s);

}  // namespace detail

/// Dense n-dimensional array of real64 or complex128 values, row-major.
///
/// Tensors are immutable after construction; copies share storage. A tensor
/// produced by a differentiable operation remembers its node on the tape that
/// was active at the time. Complex tensors never coerce to real implicitly:
/// use real_part/imag_part/complex_join.
class Tensor {
 public:
  Tensor() = default;

  // Leaf factories. No tape node is recorded for leaf creation.
  static Tensor zeros(Shape shape, ElemKind kind = ElemKind::Real64,
                      bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor from_complex(Shape shape,
                             std::vector<std::complex<double>> values,
                             bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return st_ != nullptr; }
  const Shape& shape() const { return st_->shape; }
  std::int64_t numel() const;
  int rank() const { return static_cast<int>(st_->shape.size()); }
  std::int64_t dim(int axis) const { return st_->shape[axis]; }
  ElemKind kind() const { return st_->kind; }
  bool is_real() const { return st_->kind == ElemKind::Real64; }
  bool is_complex() const { return st_->kind == ElemKind::Complex128; }

  const double* rdata() const { return st_->re.data(); }
  const std::complex<double>* cdata() const { return st_->cx.data(); }
  const std::vector<double>& rvec() const { return st_->re; }
  const std::vector<std::complex<double>>& cvec() const { return st_->cx; }

  double rat(std::int64_t flat) const { return st_->re[flat]; }
  std::complex<double> cat(std::int64_t flat) const { return st_->cx[flat]; }

  bool requires_grad() const { return requires_grad_; }
  /// Marks a leaf as differentiable. Must be called before the tensor is
  /// used on a tape.
  Tensor& set_requires_grad(bool rg) {
    requires_grad_ = rg;
    return *this;
  }

  /// Identity of the underlying storage; the key used by gradient maps.
  const void* id() const { return st_.get(); }

  std::int64_t node() const { return node_; }
  std::uint64_t tape_id() const { return tape_id_; }

  /// Same values with no tape linkage and requires_grad off.
  Tensor detached() const {
    Tensor t;
    t.st_ = st_;
    return t;
  }

  /// Wrap a filled storage. Internal; kernels build storages then freeze them.
  static Tensor wrap(detail::Storage&& st, bool requires_grad = false);

  std::string shape_str() const;

 private:
  std::shared_ptr<const detail::Storage> st_;
  bool requires_grad_ = false;
  std::int64_t node_ = -1;
  std::uint64_t tape_id_ = 0;

  friend class Tape;
};

/// Throws std::invalid_argument when `cond` is false.
inline void check_arg(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace opkit
