#include "opkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <numeric>

namespace opkit::kernels {

namespace {

std::vector<std::int64_t> strides_of(const Shape& s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
    st[i] = st[i + 1] * s[i + 1];
  return st;
}

detail::Storage make_store(Shape shape, ElemKind kind) {
  detail::Storage st;
  st.kind = kind;
  const std::int64_t n = detail::shape_numel(shape);
  st.shape = std::move(shape);
  if (kind == ElemKind::Real64)
    st.re.resize(static_cast<std::size_t>(n));
  else
    st.cx.resize(static_cast<std::size_t>(n));
  return st;
}

// Per-axis element steps of `t` inside the coordinate system of `out_shape`,
// zero on axes where t broadcasts.
std::vector<std::int64_t> bcast_steps(const Shape& out_shape, const Shape& ts) {
  const int r = static_cast<int>(out_shape.size());
  const int rt = static_cast<int>(ts.size());
  std::vector<std::int64_t> steps(static_cast<std::size_t>(r), 0);
  const auto tstr = strides_of(ts);
  const int off = r - rt;
  for (int i = 0; i < rt; ++i)
    if (ts[i] != 1) steps[static_cast<std::size_t>(off + i)] = tstr[i];
  return steps;
}

template <typename T, typename F>
void bcast_loop(const Shape& os, const Shape& as, const Shape& bs, const T* a,
                const T* b, T* o, F f) {
  const std::int64_t n = detail::shape_numel(os);
  if (as == bs) {
    for (std::int64_t i = 0; i < n; ++i) o[i] = f(a[i], b[i]);
    return;
  }
  const int r = static_cast<int>(os.size());
  const auto sa = bcast_steps(os, as);
  const auto sb = bcast_steps(os, bs);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
  std::int64_t oa = 0, ob = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    o[i] = f(a[oa], b[ob]);
    for (int ax = r - 1; ax >= 0; --ax) {
      ++idx[static_cast<std::size_t>(ax)];
      oa += sa[static_cast<std::size_t>(ax)];
      ob += sb[static_cast<std::size_t>(ax)];
      if (idx[static_cast<std::size_t>(ax)] < os[ax]) break;
      idx[static_cast<std::size_t>(ax)] = 0;
      oa -= sa[static_cast<std::size_t>(ax)] * os[ax];
      ob -= sb[static_cast<std::size_t>(ax)] * os[ax];
    }
  }
}

template <typename T>
void apply_binop(BinOp op, const Shape& os, const Shape& as, const Shape& bs,
                 const T* a, const T* b, T* o) {
  switch (op) {
    case BinOp::Add:
      bcast_loop(os, as, bs, a, b, o, [](T x, T y) { return x + y; });
      break;
    case BinOp::Sub:
      bcast_loop(os, as, bs, a, b, o, [](T x, T y) { return x - y; });
      break;
    case BinOp::Mul:
      bcast_loop(os, as, bs, a, b, o, [](T x, T y) { return x * y; });
      break;
    case BinOp::Div:
      bcast_loop(os, as, bs, a, b, o, [](T x, T y) { return x / y; });
      break;
  }
}

template <typename T>
void matmul_mkn(const T* a, const T* b, T* o, std::int64_t M, std::int64_t K,
                std::int64_t N) {
  std::fill(o, o + M * N, T{});
  for (std::int64_t m = 0; m < M; ++m) {
    const T* arow = a + m * K;
    T* orow = o + m * N;
    for (std::int64_t k = 0; k < K; ++k) {
      const T av = arow[k];
      const T* brow = b + k * N;
      for (std::int64_t n = 0; n < N; ++n) orow[n] += av * brow[n];
    }
  }
}

template <typename T>
void transpose_copy(const Shape& in_shape, const std::vector<int>& perm,
                    const T* in, T* out) {
  const int r = static_cast<int>(in_shape.size());
  Shape os(static_cast<std::size_t>(r));
  const auto istr = strides_of(in_shape);
  std::vector<std::int64_t> step(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    os[static_cast<std::size_t>(i)] = in_shape[perm[static_cast<std::size_t>(i)]];
    step[static_cast<std::size_t>(i)] = istr[perm[static_cast<std::size_t>(i)]];
  }
  const std::int64_t n = detail::shape_numel(os);
  if (n == 0) return;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
  std::int64_t src = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = in[src];
    for (int ax = r - 1; ax >= 0; --ax) {
      ++idx[static_cast<std::size_t>(ax)];
      src += step[static_cast<std::size_t>(ax)];
      if (idx[static_cast<std::size_t>(ax)] < os[static_cast<std::size_t>(ax)])
        break;
      idx[static_cast<std::size_t>(ax)] = 0;
      src -= step[static_cast<std::size_t>(ax)] * os[static_cast<std::size_t>(ax)];
    }
  }
}

void same_kind(const Tensor& a, const Tensor& b, const char* what) {
  check_arg(a.kind() == b.kind(),
            std::string(what) + ": operands mix real and complex");
}

std::int64_t outer_of(const Shape& s, int axis) {
  std::int64_t n = 1;
  for (int i = 0; i < axis; ++i) n *= s[static_cast<std::size_t>(i)];
  return n;
}

std::int64_t inner_of(const Shape& s, int axis) {
  std::int64_t n = 1;
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i)
    n *= s[i];
  return n;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const int ra = static_cast<int>(a.size());
  const int rb = static_cast<int>(b.size());
  const int r = std::max(ra, rb);
  Shape out(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    const std::int64_t da = i < r - ra ? 1 : a[static_cast<std::size_t>(i - (r - ra))];
    const std::int64_t db = i < r - rb ? 1 : b[static_cast<std::size_t>(i - (r - rb))];
    check_arg(da == db || da == 1 || db == 1,
              "shapes do not broadcast: axis sizes " + std::to_string(da) +
                  " vs " + std::to_string(db));
    out[static_cast<std::size_t>(i)] = std::max(da, db);
  }
  return out;
}

Tensor ewise(BinOp op, const Tensor& a, const Tensor& b) {
  same_kind(a, b, "elementwise op");
  Shape os = broadcast_shape(a.shape(), b.shape());
  auto st = make_store(os, a.kind());
  if (a.is_real())
    apply_binop(op, st.shape, a.shape(), b.shape(), a.rdata(), b.rdata(),
                st.re.data());
  else
    apply_binop(op, st.shape, a.shape(), b.shape(), a.cdata(), b.cdata(),
                st.cx.data());
  return Tensor::wrap(std::move(st));
}

Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  check_arg(broadcast_shape(g.shape(), target) == g.shape(),
            "reduce_to target does not broadcast to the gradient shape");
  auto st = make_store(target, g.kind());
  const Shape& gs = g.shape();
  const int r = static_cast<int>(gs.size());
  const auto steps = bcast_steps(gs, target);
  const std::int64_t n = g.numel();
  std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
  std::int64_t dst = 0;
  if (g.is_real()) {
    const double* src = g.rdata();
    for (std::int64_t i = 0; i < n; ++i) {
      st.re[static_cast<std::size_t>(dst)] += src[i];
      for (int ax = r - 1; ax >= 0; --ax) {
        ++idx[static_cast<std::size_t>(ax)];
        dst += steps[static_cast<std::size_t>(ax)];
        if (idx[static_cast<std::size_t>(ax)] < gs[static_cast<std::size_t>(ax)])
          break;
        idx[static_cast<std::size_t>(ax)] = 0;
        dst -= steps[static_cast<std::size_t>(ax)] * gs[static_cast<std::size_t>(ax)];
      }
    }
  } else {
    const std::complex<double>* src = g.cdata();
    for (std::int64_t i = 0; i < n; ++i) {
      st.cx[static_cast<std::size_t>(dst)] += src[i];
      for (int ax = r - 1; ax >= 0; --ax) {
        ++idx[static_cast<std::size_t>(ax)];
        dst += steps[static_cast<std::size_t>(ax)];
        if (idx[static_cast<std::size_t>(ax)] < gs[static_cast<std::size_t>(ax)])
          break;
        idx[static_cast<std::size_t>(ax)] = 0;
        dst -= steps[static_cast<std::size_t>(ax)] * gs[static_cast<std::size_t>(ax)];
      }
    }
  }
  return Tensor::wrap(std::move(st));
}

Tensor neg(const Tensor& a) {
  auto st = make_store(a.shape(), a.kind());
  if (a.is_real()) {
    const double* s = a.rdata();
    for (std::size_t i = 0; i < st.re.size(); ++i) st.re[i] = -s[i];
  } else {
    const std::complex<double>* s = a.cdata();
    for (std::size_t i = 0; i < st.cx.size(); ++i) st.cx[i] = -s[i];
  }
  return Tensor::wrap(std::move(st));
}

Tensor conj(const Tensor& a) {
  check_arg(a.is_complex(), "conj expects a complex tensor");
  auto st = make_store(a.shape(), ElemKind::Complex128);
  const std::complex<double>* s = a.cdata();
  for (std::size_t i = 0; i < st.cx.size(); ++i) st.cx[i] = std::conj(s[i]);
  return Tensor::wrap(std::move(st));
}

Tensor real_part(const Tensor& a) {
  check_arg(a.is_complex(), "real_part expects a complex tensor");
  auto st = make_store(a.shape(), ElemKind::Real64);
  const std::complex<double>* s = a.cdata();
  for (std::size_t i = 0; i < st.re.size(); ++i) st.re[i] = s[i].real();
  return Tensor::wrap(std::move(st));
}

Tensor imag_part(const Tensor& a) {
  check_arg(a.is_complex(), "imag_part expects a complex tensor");
  auto st = make_store(a.shape(), ElemKind::Real64);
  const std::complex<double>* s = a.cdata();
  for (std::size_t i = 0; i < st.re.size(); ++i) st.re[i] = s[i].imag();
  return Tensor::wrap(std::move(st));
}

Tensor make_complex(const Tensor& re, const Tensor& im) {
  check_arg(re.is_real() && im.is_real(),
            "complex_join expects two real tensors");
  check_arg(re.shape() == im.shape(),
            "complex_join parts differ in shape: " + re.shape_str() + " vs " +
                im.shape_str());
  auto st = make_store(re.shape(), ElemKind::Complex128);
  const double* r = re.rdata();
  const double* i = im.rdata();
  for (std::size_t k = 0; k < st.cx.size(); ++k) st.cx[k] = {r[k], i[k]};
  return Tensor::wrap(std::move(st));
}

Tensor scale(const Tensor& a, double s) {
  auto st = make_store(a.shape(), a.kind());
  if (a.is_real()) {
    const double* p = a.rdata();
    for (std::size_t i = 0; i < st.re.size(); ++i) st.re[i] = p[i] * s;
  } else {
    const std::complex<double>* p = a.cdata();
    for (std::size_t i = 0; i < st.cx.size(); ++i) st.cx[i] = p[i] * s;
  }
  return Tensor::wrap(std::move(st));
}

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& axes) {
  same_kind(a, b, "contract");
  const int ra = a.rank();
  const int rb = b.rank();
  std::vector<bool> ca(static_cast<std::size_t>(ra), false);
  std::vector<bool> cb(static_cast<std::size_t>(rb), false);
  for (const auto& [ax_a, ax_b] : axes) {
    check_arg(ax_a >= 0 && ax_a < ra && ax_b >= 0 && ax_b < rb,
              "contract axis out of range");
    check_arg(!ca[static_cast<std::size_t>(ax_a)] &&
                  !cb[static_cast<std::size_t>(ax_b)],
              "contract axis listed twice");
    check_arg(a.dim(ax_a) == b.dim(ax_b),
              "contracted axes differ in size: " +
                  std::to_string(a.dim(ax_a)) + " vs " +
                  std::to_string(b.dim(ax_b)));
    ca[static_cast<std::size_t>(ax_a)] = true;
    cb[static_cast<std::size_t>(ax_b)] = true;
  }

  std::vector<int> perm_a;
  perm_a.reserve(static_cast<std::size_t>(ra));
  Shape out_shape;
  for (int i = 0; i < ra; ++i)
    if (!ca[static_cast<std::size_t>(i)]) {
      perm_a.push_back(i);
      out_shape.push_back(a.dim(i));
    }
  std::int64_t K = 1;
  for (const auto& [ax_a, ax_b] : axes) {
    perm_a.push_back(ax_a);
    K *= a.dim(ax_a);
  }
  std::vector<int> perm_b;
  perm_b.reserve(static_cast<std::size_t>(rb));
  for (const auto& [ax_a, ax_b] : axes) perm_b.push_back(ax_b);
  for (int i = 0; i < rb; ++i)
    if (!cb[static_cast<std::size_t>(i)]) {
      perm_b.push_back(i);
      out_shape.push_back(b.dim(i));
    }

  const Tensor ta = transpose(a, perm_a);
  const Tensor tb = transpose(b, perm_b);
  const std::int64_t M = ta.numel() / std::max<std::int64_t>(K, 1);
  const std::int64_t N = tb.numel() / std::max<std::int64_t>(K, 1);

  auto st = make_store(out_shape, a.kind());
  if (a.is_real())
    matmul_mkn(ta.rdata(), tb.rdata(), st.re.data(), M, K, N);
  else
    matmul_mkn(ta.cdata(), tb.cdata(), st.cx.data(), M, K, N);
  return Tensor::wrap(std::move(st));
}

Tensor transpose(const Tensor& a, const std::vector<int>& perm) {
  const int r = a.rank();
  check_arg(static_cast<int>(perm.size()) == r,
            "transpose permutation length does not match rank");
  std::vector<bool> seen(static_cast<std::size_t>(r), false);
  bool identity = true;
  for (int i = 0; i < r; ++i) {
    const int p = perm[static_cast<std::size_t>(i)];
    check_arg(p >= 0 && p < r && !seen[static_cast<std::size_t>(p)],
              "transpose permutation is not a permutation");
    seen[static_cast<std::size_t>(p)] = true;
    if (p != i) identity = false;
  }
  if (identity) return a.detached();
  Shape os(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i)
    os[static_cast<std::size_t>(i)] = a.dim(perm[static_cast<std::size_t>(i)]);
  auto st = make_store(os, a.kind());
  if (a.is_real())
    transpose_copy(a.shape(), perm, a.rdata(), st.re.data());
  else
    transpose_copy(a.shape(), perm, a.cdata(), st.cx.data());
  return Tensor::wrap(std::move(st));
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  check_arg(detail::shape_numel(shape) == a.numel(),
            "reshape changes element count: " + a.shape_str());
  detail::Storage st;
  st.kind = a.kind();
  st.shape = shape;
  if (a.is_real())
    st.re = a.rvec();
  else
    st.cx = a.cvec();
  return Tensor::wrap(std::move(st));
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  check_arg(!parts.empty(), "concat of zero tensors");
  const Tensor& first = parts.front();
  const int r = first.rank();
  check_arg(axis >= 0 && axis < r, "concat axis out of range");
  std::int64_t total = 0;
  for (const Tensor& p : parts) {
    check_arg(p.kind() == first.kind(), "concat mixes real and complex");
    check_arg(p.rank() == r, "concat rank mismatch");
    for (int i = 0; i < r; ++i)
      check_arg(i == axis || p.dim(i) == first.dim(i),
                "concat shapes differ off the concat axis");
    total += p.dim(axis);
  }
  Shape os = first.shape();
  os[static_cast<std::size_t>(axis)] = total;
  auto st = make_store(os, first.kind());
  const std::int64_t outer = outer_of(os, axis);
  const std::int64_t inner = inner_of(os, axis);
  std::int64_t at = 0;
  for (const Tensor& p : parts) {
    const std::int64_t len = p.dim(axis) * inner;
    for (std::int64_t o = 0; o < outer; ++o) {
      const std::int64_t dst = (o * total) * inner + at * inner;
      const std::int64_t src = o * len;
      if (first.is_real())
        std::copy_n(p.rdata() + src, len, st.re.data() + dst);
      else
        std::copy_n(p.cdata() + src, len, st.cx.data() + dst);
    }
    at += p.dim(axis);
  }
  return Tensor::wrap(std::move(st));
}

Tensor slice(const Tensor& a, int axis, std::int64_t lo, std::int64_t hi) {
  const int r = a.rank();
  check_arg(axis >= 0 && axis < r, "slice axis out of range");
  check_arg(0 <= lo && lo <= hi && hi <= a.dim(axis),
            "slice bounds out of range");
  Shape os = a.shape();
  os[static_cast<std::size_t>(axis)] = hi - lo;
  auto st = make_store(os, a.kind());
  const std::int64_t outer = outer_of(os, axis);
  const std::int64_t inner = inner_of(os, axis);
  const std::int64_t full = a.dim(axis);
  const std::int64_t len = (hi - lo) * inner;
  for (std::int64_t o = 0; o < outer; ++o) {
    const std::int64_t src = (o * full + lo) * inner;
    const std::int64_t dst = o * len;
    if (a.is_real())
      std::copy_n(a.rdata() + src, len, st.re.data() + dst);
    else
      std::copy_n(a.cdata() + src, len, st.cx.data() + dst);
  }
  return Tensor::wrap(std::move(st));
}

Tensor unslice(const Tensor& a, int axis, std::int64_t lo, std::int64_t full) {
  const int r = a.rank();
  check_arg(axis >= 0 && axis < r, "unslice axis out of range");
  check_arg(lo >= 0 && lo + a.dim(axis) <= full, "unslice bounds out of range");
  Shape os = a.shape();
  os[static_cast<std::size_t>(axis)] = full;
  auto st = make_store(os, a.kind());
  const std::int64_t outer = outer_of(os, axis);
  const std::int64_t inner = inner_of(os, axis);
  const std::int64_t len = a.dim(axis) * inner;
  for (std::int64_t o = 0; o < outer; ++o) {
    const std::int64_t dst = (o * full + lo) * inner;
    const std::int64_t src = o * len;
    if (a.is_real())
      std::copy_n(a.rdata() + src, len, st.re.data() + dst);
    else
      std::copy_n(a.cdata() + src, len, st.cx.data() + dst);
  }
  return Tensor::wrap(std::move(st));
}

Tensor relu(const Tensor& a) {
  check_arg(a.is_real(), "relu expects a real tensor");
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i)
    st.re[i] = s[i] > 0.0 ? s[i] : 0.0;
  return Tensor::wrap(std::move(st));
}

Tensor relu_grad(const Tensor& a, const Tensor& g) {
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  const double* gp = g.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i)
    st.re[i] = s[i] > 0.0 ? gp[i] : 0.0;
  return Tensor::wrap(std::move(st));
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& a) {
  check_arg(a.is_real(), "gelu expects a real tensor");
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i) {
    const double x = s[i];
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    st.re[i] = 0.5 * x * (1.0 + t);
  }
  return Tensor::wrap(std::move(st));
}

Tensor gelu_grad(const Tensor& a, const Tensor& g) {
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  const double* gp = g.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i) {
    const double x = s[i];
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
    st.re[i] = gp[i] * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du);
  }
  return Tensor::wrap(std::move(st));
}

Tensor reduce_sum_all(const Tensor& a) {
  if (a.is_real()) {
    double acc = 0.0;
    const double* s = a.rdata();
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) acc += s[i];
    return Tensor::full({}, acc);
  }
  std::complex<double> acc{0.0, 0.0};
  const std::complex<double>* s = a.cdata();
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) acc += s[i];
  return Tensor::from_complex({}, {acc});
}

Tensor reduce_sum_axis(const Tensor& a, int axis) {
  const int r = a.rank();
  check_arg(axis >= 0 && axis < r, "reduce axis out of range");
  Shape os;
  for (int i = 0; i < r; ++i)
    if (i != axis) os.push_back(a.dim(i));
  auto st = make_store(os, a.kind());
  const std::int64_t outer = outer_of(a.shape(), axis);
  const std::int64_t inner = inner_of(a.shape(), axis);
  const std::int64_t len = a.dim(axis);
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t k = 0; k < len; ++k) {
      const std::int64_t src = (o * len + k) * inner;
      const std::int64_t dst = o * inner;
      if (a.is_real())
        for (std::int64_t i = 0; i < inner; ++i)
          st.re[static_cast<std::size_t>(dst + i)] += a.rdata()[src + i];
      else
        for (std::int64_t i = 0; i < inner; ++i)
          st.cx[static_cast<std::size_t>(dst + i)] += a.cdata()[src + i];
    }
  return Tensor::wrap(std::move(st));
}

Tensor abs_pow(const Tensor& a, double p) {
  check_arg(a.is_real(), "abs_pow expects a real tensor");
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i)
    st.re[i] = std::pow(std::abs(s[i]), p);
  return Tensor::wrap(std::move(st));
}

Tensor abs_pow_grad(const Tensor& a, double p, const Tensor& g) {
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  const double* gp = g.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i) {
    const double x = s[i];
    if (x == 0.0) {
      st.re[i] = 0.0;
    } else {
      const double sign = x > 0.0 ? 1.0 : -1.0;
      st.re[i] = gp[i] * p * std::pow(std::abs(x), p - 1.0) * sign;
    }
  }
  return Tensor::wrap(std::move(st));
}

Tensor pow_pos(const Tensor& a, double p) {
  check_arg(a.is_real(), "pow_pos expects a real tensor");
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i) {
    check_arg(!(s[i] < 0.0), "pow_pos expects nonnegative values");
    st.re[i] = std::pow(s[i], p);
  }
  return Tensor::wrap(std::move(st));
}

Tensor sqrt_ew(const Tensor& a) {
  check_arg(a.is_real(), "sqrt expects a real tensor");
  auto st = make_store(a.shape(), ElemKind::Real64);
  const double* s = a.rdata();
  for (std::size_t i = 0; i < st.re.size(); ++i) {
    check_arg(!(s[i] < 0.0), "sqrt of a negative value");
    st.re[i] = std::sqrt(s[i]);
  }
  return Tensor::wrap(std::move(st));
}

Tensor to_complex(const Tensor& real) {
  check_arg(real.is_real(), "to_complex expects a real tensor");
  auto st = make_store(real.shape(), ElemKind::Complex128);
  const double* s = real.rdata();
  for (std::size_t i = 0; i < st.cx.size(); ++i) st.cx[i] = {s[i], 0.0};
  return Tensor::wrap(std::move(st));
}

Tensor gather_rows(const Tensor& a, const std::vector<std::int64_t>& idx) {
  check_arg(a.is_real() && a.rank() == 2, "gather_rows expects a real matrix");
  const std::int64_t rows = a.dim(0);
  const std::int64_t cols = a.dim(1);
  auto st = make_store({static_cast<std::int64_t>(idx.size()), cols},
                       ElemKind::Real64);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    check_arg(idx[i] >= 0 && idx[i] < rows, "gather_rows index out of range");
    std::copy_n(a.rdata() + idx[i] * cols, cols,
                st.re.data() + static_cast<std::int64_t>(i) * cols);
  }
  return Tensor::wrap(std::move(st));
}

Tensor scatter_add_rows(const Tensor& g, const std::vector<std::int64_t>& idx,
                        std::int64_t rows) {
  check_arg(g.is_real() && g.rank() == 2,
            "scatter_add_rows expects a real matrix");
  check_arg(g.dim(0) == static_cast<std::int64_t>(idx.size()),
            "scatter_add_rows index count mismatch");
  const std::int64_t cols = g.dim(1);
  auto st = make_store({rows, cols}, ElemKind::Real64);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* src = g.rdata() + static_cast<std::int64_t>(i) * cols;
    double* dst = st.re.data() + idx[i] * cols;
    for (std::int64_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  return Tensor::wrap(std::move(st));
}

Tensor segment_sum(const Tensor& a, const std::vector<std::int64_t>& offsets) {
  check_arg(a.is_real() && a.rank() == 2, "segment_sum expects a real matrix");
  check_arg(offsets.size() >= 1 && offsets.front() == 0 &&
                offsets.back() == a.dim(0),
            "segment offsets must start at 0 and end at the row count");
  const std::int64_t segs = static_cast<std::int64_t>(offsets.size()) - 1;
  const std::int64_t cols = a.dim(1);
  auto st = make_store({segs, cols}, ElemKind::Real64);
  for (std::int64_t s = 0; s < segs; ++s) {
    check_arg(offsets[static_cast<std::size_t>(s)] <=
                  offsets[static_cast<std::size_t>(s) + 1],
              "segment offsets must be nondecreasing");
    double* dst = st.re.data() + s * cols;
    for (std::int64_t r = offsets[static_cast<std::size_t>(s)];
         r < offsets[static_cast<std::size_t>(s) + 1]; ++r) {
      const double* src = a.rdata() + r * cols;
      for (std::int64_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  }
  return Tensor::wrap(std::move(st));
}

Tensor segment_broadcast(const Tensor& g,
                         const std::vector<std::int64_t>& offsets) {
  check_arg(g.is_real() && g.rank() == 2,
            "segment_broadcast expects a real matrix");
  const std::int64_t segs = static_cast<std::int64_t>(offsets.size()) - 1;
  check_arg(g.dim(0) == segs, "segment count mismatch");
  const std::int64_t cols = g.dim(1);
  auto st = make_store({offsets.back(), cols}, ElemKind::Real64);
  for (std::int64_t s = 0; s < segs; ++s) {
    const double* src = g.rdata() + s * cols;
    for (std::int64_t r = offsets[static_cast<std::size_t>(s)];
         r < offsets[static_cast<std::size_t>(s) + 1]; ++r)
      std::copy_n(src, cols, st.re.data() + r * cols);
  }
  return Tensor::wrap(std::move(st));
}

}  // namespace opkit::kernels
