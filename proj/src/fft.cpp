#include "opkit/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "opkit/kernels.hpp"
#include "opkit/ops.hpp"
#include "opkit/tape.hpp"

namespace opkit::fft {

namespace {

namespace K = opkit::kernels;
using cd = std::complex<double>;

const std::vector<cd>& twiddles(std::int64_t n, int sign) {
  thread_local std::map<std::pair<std::int64_t, int>, std::vector<cd>> cache;
  auto& slot = cache[{n, sign}];
  if (slot.empty()) {
    slot.resize(static_cast<std::size_t>(n));
    const double base = sign * 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::int64_t j = 0; j < n; ++j)
      slot[static_cast<std::size_t>(j)] = {std::cos(base * j),
                                           std::sin(base * j)};
  }
  return slot;
}

void fft_pow2(cd* a, std::int64_t n, int sign) {
  for (std::int64_t i = 1, j = 0; i < n; ++i) {
    std::int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::int64_t len = 2; len <= n; len <<= 1) {
    const auto& tw = twiddles(len, sign);
    const std::int64_t half = len / 2;
    for (std::int64_t i = 0; i < n; i += len)
      for (std::int64_t j = 0; j < half; ++j) {
        const cd u = a[i + j];
        const cd v = a[i + j + half] * tw[static_cast<std::size_t>(j)];
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
  }
}

std::int64_t smallest_prime_factor(std::int64_t n) {
  for (std::int64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) return p;
  return n;
}

void fft_any(std::vector<cd>& a, int sign);

void naive_dft(std::vector<cd>& a, int sign) {
  const auto n = static_cast<std::int64_t>(a.size());
  const auto& tw = twiddles(n, sign);
  std::vector<cd> out(a.size());
  for (std::int64_t k = 0; k < n; ++k) {
    cd acc{0.0, 0.0};
    for (std::int64_t j = 0; j < n; ++j)
      acc += a[static_cast<std::size_t>(j)] *
             tw[static_cast<std::size_t>((j * k) % n)];
    out[static_cast<std::size_t>(k)] = acc;
  }
  a.swap(out);
}

void fft_any(std::vector<cd>& a, int sign) {
  const auto n = static_cast<std::int64_t>(a.size());
  if (n <= 1) return;
  if ((n & (n - 1)) == 0) {
    fft_pow2(a.data(), n, sign);
    return;
  }
  const std::int64_t p = smallest_prime_factor(n);
  if (p == n) {
    naive_dft(a, sign);
    return;
  }
  const std::int64_t m = n / p;
  std::vector<std::vector<cd>> sub(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r) {
    auto& s = sub[static_cast<std::size_t>(r)];
    s.resize(static_cast<std::size_t>(m));
    for (std::int64_t t = 0; t < m; ++t)
      s[static_cast<std::size_t>(t)] = a[static_cast<std::size_t>(p * t + r)];
    fft_any(s, sign);
  }
  const auto& tw = twiddles(n, sign);
  for (std::int64_t k = 0; k < n; ++k) {
    cd acc{0.0, 0.0};
    const std::int64_t km = k % m;
    for (std::int64_t r = 0; r < p; ++r)
      acc += tw[static_cast<std::size_t>((r * k) % n)] *
             sub[static_cast<std::size_t>(r)][static_cast<std::size_t>(km)];
    a[static_cast<std::size_t>(k)] = acc;
  }
}

std::int64_t prefix_numel(const Shape& s, int upto) {
  std::int64_t n = 1;
  for (int i = 0; i < upto; ++i) n *= s[static_cast<std::size_t>(i)];
  return n;
}

std::int64_t suffix_numel(const Shape& s, int from) {
  std::int64_t n = 1;
  for (std::size_t i = static_cast<std::size_t>(from); i < s.size(); ++i)
    n *= s[i];
  return n;
}

void transform_axis(std::vector<cd>& data, const Shape& shape, int axis,
                    int sign, bool normalize) {
  const std::int64_t n = shape[static_cast<std::size_t>(axis)];
  if (n <= 1 && !normalize) return;
  const std::int64_t outer = prefix_numel(shape, axis);
  const std::int64_t inner = suffix_numel(shape, axis + 1);
  const double norm = normalize ? 1.0 / static_cast<double>(n) : 1.0;
  std::vector<cd> line(static_cast<std::size_t>(n));
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t base = o * n * inner + i;
      for (std::int64_t j = 0; j < n; ++j)
        line[static_cast<std::size_t>(j)] =
            data[static_cast<std::size_t>(base + j * inner)];
      fft_any(line, sign);
      for (std::int64_t j = 0; j < n; ++j)
        data[static_cast<std::size_t>(base + j * inner)] =
            line[static_cast<std::size_t>(j)] * norm;
    }
}

std::vector<int> check_axes(const Tensor& x, const std::vector<int>& axes) {
  std::vector<int> out;
  std::vector<bool> seen(static_cast<std::size_t>(x.rank()), false);
  for (int ax : axes) {
    check_arg(ax >= 0 && ax < x.rank(), "transform axis out of range");
    check_arg(!seen[static_cast<std::size_t>(ax)],
              "transform axis listed twice");
    seen[static_cast<std::size_t>(ax)] = true;
    out.push_back(ax);
  }
  return out;
}

std::vector<int> trailing_axes(const Tensor& t, int d) {
  std::vector<int> axes;
  for (int i = t.rank() - d; i < t.rank(); ++i) axes.push_back(i);
  return axes;
}

// Per-bin Parseval weight of the retained half axis: interior bins stand in
// for their conjugate mirror as well.
double half_weight(std::int64_t j, std::int64_t n) {
  if (j == 0) return 1.0;
  if (n % 2 == 0 && j == n / 2) return 1.0;
  return 2.0;
}

}  // namespace

Tensor c2c(const Tensor& x, const std::vector<int>& axes, int sign,
           bool normalize) {
  check_arg(x.is_complex(), "c2c expects a complex tensor");
  check_arg(sign == 1 || sign == -1, "c2c sign must be +1 or -1");
  const auto ax = check_axes(x, axes);
  std::vector<cd> data = x.cvec();
  for (int a : ax) transform_axis(data, x.shape(), a, sign, normalize);
  return Tensor::from_complex(x.shape(), std::move(data));
}

Tensor rfftn_raw(const Tensor& x, int spatial_dims) {
  check_arg(x.is_real(), "rfftn expects a real tensor");
  check_arg(spatial_dims >= 1 && spatial_dims <= x.rank(),
            "rfftn spatial dimension count out of range");
  const std::int64_t nd = x.dim(x.rank() - 1);
  check_arg(nd >= 1, "rfftn last spatial axis is empty");
  Tensor full = c2c(K::to_complex(x), trailing_axes(x, spatial_dims), -1,
                    false);
  return K::slice(full, x.rank() - 1, 0, half_bins(nd));
}

Tensor irfftn_raw(const Tensor& s, const Shape& sizes) {
  check_arg(s.is_complex(), "irfftn expects a complex spectrum");
  const int d = static_cast<int>(sizes.size());
  check_arg(d >= 1 && d <= s.rank(), "irfftn size count out of range");
  const int r = s.rank();
  for (int i = 0; i < d - 1; ++i)
    check_arg(s.dim(r - d + i) == sizes[static_cast<std::size_t>(i)],
              "irfftn spectrum shape does not match sizes");
  const std::int64_t nd = sizes[static_cast<std::size_t>(d - 1)];
  check_arg(s.dim(r - 1) == half_bins(nd),
            "irfftn last axis must hold floor(n/2)+1 bins");

  std::vector<int> lead;
  for (int i = r - d; i < r - 1; ++i) lead.push_back(i);
  Tensor t = lead.empty() ? s.detached() : c2c(s, lead, 1, true);

  // Conjugate-extend each trailing line to length nd, invert, keep the real
  // part.
  const std::int64_t h = half_bins(nd);
  const std::int64_t lines = t.numel() / h;
  const cd* src = t.cdata();
  Shape out_shape = s.shape();
  out_shape[static_cast<std::size_t>(r - 1)] = nd;
  std::vector<double> out(static_cast<std::size_t>(lines * nd));
  std::vector<cd> line(static_cast<std::size_t>(nd));
  const double norm = 1.0 / static_cast<double>(nd);
  for (std::int64_t l = 0; l < lines; ++l) {
    const cd* in = src + l * h;
    for (std::int64_t j = 0; j < h; ++j)
      line[static_cast<std::size_t>(j)] = in[j];
    for (std::int64_t j = h; j < nd; ++j)
      line[static_cast<std::size_t>(j)] = std::conj(in[nd - j]);
    fft_any(line, 1);
    for (std::int64_t j = 0; j < nd; ++j)
      out[static_cast<std::size_t>(l * nd + j)] =
          line[static_cast<std::size_t>(j)].real() * norm;
  }
  return Tensor::from_values(std::move(out_shape), std::move(out));
}

Tensor rfftn(const Tensor& x, int spatial_dims) {
  Tensor out = rfftn_raw(x, spatial_dims);
  Tape* tp = Tape::active();
  if (!tp || !tp->recording() || !tp->tracks(x)) return out;
  const std::int64_t ia = tp->input_id(x);
  const std::int64_t nd = x.dim(x.rank() - 1);
  const std::int64_t id = tp->record(
      [ia, spatial_dims, nd, last = x.rank() - 1](const Tensor& g, Tape& t) {
        Tensor full = K::unslice(g, last, 0, nd);
        Tensor back = c2c(full, trailing_axes(full, spatial_dims), 1, false);
        t.accumulate(ia, K::real_part(back));
      });
  tp->tag(out, id);
  return out;
}

Tensor irfftn(const Tensor& s, Shape sizes) {
  Tensor out = irfftn_raw(s, sizes);
  Tape* tp = Tape::active();
  if (!tp || !tp->recording() || !tp->tracks(s)) return out;
  const std::int64_t ia = tp->input_id(s);
  const std::int64_t id = tp->record([ia, sizes = std::move(sizes),
                                      last = s.rank() - 1](const Tensor& g,
                                                           Tape& t) {
    const int d = static_cast<int>(sizes.size());
    const std::int64_t nd = sizes[static_cast<std::size_t>(d - 1)];
    double vol = 1.0;
    for (std::int64_t n : sizes) vol *= static_cast<double>(n);
    Tensor spec = c2c(K::to_complex(g), trailing_axes(g, d), -1, false);
    spec = K::slice(spec, last, 0, half_bins(nd));
    // Interior half-axis bins carry the gradient of their mirror too.
    std::vector<cd> data = spec.cvec();
    const std::int64_t h = half_bins(nd);
    const std::int64_t lines = static_cast<std::int64_t>(data.size()) / h;
    for (std::int64_t l = 0; l < lines; ++l)
      for (std::int64_t j = 0; j < h; ++j)
        data[static_cast<std::size_t>(l * h + j)] *= half_weight(j, nd) / vol;
    t.accumulate(ia, Tensor::from_complex(spec.shape(), std::move(data)));
  });
  tp->tag(out, id);
  return out;
}

}  // namespace opkit::fft
