#include "opkit/tensor.hpp"

#include <sstream>

namespace opkit {

namespace detail {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (std::int64_t d : s) {
    check_arg(d >= 0, "negative dimension in shape");
    n *= d;
  }
  return n;
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, ElemKind kind, bool requires_grad) {
  detail::Storage st;
  st.kind = kind;
  const std::int64_t n = detail::shape_numel(shape);
  st.shape = std::move(shape);
  if (kind == ElemKind::Real64)
    st.re.assign(static_cast<std::size_t>(n), 0.0);
  else
    st.cx.assign(static_cast<std::size_t>(n), {0.0, 0.0});
  return wrap(std::move(st), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  detail::Storage st;
  st.kind = ElemKind::Real64;
  const std::int64_t n = detail::shape_numel(shape);
  st.shape = std::move(shape);
  st.re.assign(static_cast<std::size_t>(n), value);
  return wrap(std::move(st), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  const std::int64_t n = detail::shape_numel(shape);
  check_arg(static_cast<std::int64_t>(values.size()) == n,
            "value count does not match shape");
  detail::Storage st;
  st.kind = ElemKind::Real64;
  st.shape = std::move(shape);
  st.re = std::move(values);
  return wrap(std::move(st), requires_grad);
}

Tensor Tensor::from_complex(Shape shape,
                            std::vector<std::complex<double>> values,
                            bool requires_grad) {
  const std::int64_t n = detail::shape_numel(shape);
  check_arg(static_cast<std::int64_t>(values.size()) == n,
            "value count does not match shape");
  detail::Storage st;
  st.kind = ElemKind::Complex128;
  st.shape = std::move(shape);
  st.cx = std::move(values);
  return wrap(std::move(st), requires_grad);
}

Tensor Tensor::scalar(double value) { return full({}, value); }

Tensor Tensor::wrap(detail::Storage&& st, bool requires_grad) {
  Tensor t;
  t.st_ = std::make_shared<const detail::Storage>(std::move(st));
  t.requires_grad_ = requires_grad;
  return t;
}

std::int64_t Tensor::numel() const { return detail::shape_numel(st_->shape); }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < st_->shape.size(); ++i) {
    if (i) os << ", ";
    os << st_->shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace opkit
