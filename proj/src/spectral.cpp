#include "opkit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>

#include "opkit/fft.hpp"
#include "opkit/kernels.hpp"
#include "opkit/ops.hpp"
#include "opkit/rng.hpp"
#include "opkit/tape.hpp"

namespace opkit::spectral {

namespace {

namespace K = opkit::kernels;
using cd = std::complex<double>;

Shape trailing_sizes(const Tensor& t, int d) {
  Shape s;
  for (int i = t.rank() - d; i < t.rank(); ++i) s.push_back(t.dim(i));
  return s;
}

Tensor zeros_like_axis(const Tensor& t, int axis, std::int64_t len) {
  Shape s = t.shape();
  s[static_cast<std::size_t>(axis)] = len;
  return Tensor::zeros(s, t.kind());
}

Tensor mode_mix_raw(const Tensor& x, const Tensor& w) {
  const std::int64_t B = x.dim(0);
  const std::int64_t Ci = x.dim(1);
  const std::int64_t Kn = x.dim(2);
  const std::int64_t Co = w.dim(2);
  const cd* xp = x.cdata();
  const cd* wp = w.cdata();
  std::vector<cd> out(static_cast<std::size_t>(B * Co * Kn));
  std::vector<cd> acc(static_cast<std::size_t>(Co));
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t k = 0; k < Kn; ++k) {
      std::fill(acc.begin(), acc.end(), cd{0.0, 0.0});
      for (std::int64_t ci = 0; ci < Ci; ++ci) {
        const cd xv = xp[(b * Ci + ci) * Kn + k];
        const cd* wrow = wp + (k * Ci + ci) * Co;
        for (std::int64_t co = 0; co < Co; ++co)
          acc[static_cast<std::size_t>(co)] += xv * wrow[co];
      }
      for (std::int64_t co = 0; co < Co; ++co)
        out[static_cast<std::size_t>((b * Co + co) * Kn + k)] =
            acc[static_cast<std::size_t>(co)];
    }
  return Tensor::from_complex({B, Co, Kn}, std::move(out));
}

Tensor mode_mix_grad_x(const Tensor& w, const Tensor& g, std::int64_t B,
                       std::int64_t Ci, std::int64_t Kn, std::int64_t Co) {
  const cd* wp = w.cdata();
  const cd* gp = g.cdata();
  std::vector<cd> gx(static_cast<std::size_t>(B * Ci * Kn));
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t k = 0; k < Kn; ++k)
      for (std::int64_t ci = 0; ci < Ci; ++ci) {
        const cd* wrow = wp + (k * Ci + ci) * Co;
        cd acc{0.0, 0.0};
        for (std::int64_t co = 0; co < Co; ++co)
          acc += std::conj(wrow[co]) * gp[(b * Co + co) * Kn + k];
        gx[static_cast<std::size_t>((b * Ci + ci) * Kn + k)] = acc;
      }
  return Tensor::from_complex({B, Ci, Kn}, std::move(gx));
}

Tensor mode_mix_grad_w(const Tensor& x, const Tensor& g, std::int64_t B,
                       std::int64_t Ci, std::int64_t Kn, std::int64_t Co) {
  const cd* xp = x.cdata();
  const cd* gp = g.cdata();
  std::vector<cd> gw(static_cast<std::size_t>(Kn * Ci * Co));
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t k = 0; k < Kn; ++k)
      for (std::int64_t ci = 0; ci < Ci; ++ci) {
        const cd xc = std::conj(xp[(b * Ci + ci) * Kn + k]);
        cd* grow = gw.data() + (k * Ci + ci) * Co;
        for (std::int64_t co = 0; co < Co; ++co)
          grow[co] += xc * gp[(b * Co + co) * Kn + k];
      }
  return Tensor::from_complex({Kn, Ci, Co}, std::move(gw));
}

}  // namespace

void check_modes(const ModeSpec& spec, const Shape& sizes) {
  check_arg(!spec.modes.empty(), "modes list is empty");
  check_arg(spec.modes.size() == sizes.size(),
            "mode spec rank does not match the grid rank");
  for (std::size_t i = 0; i < spec.modes.size(); ++i) {
    const std::int64_t m = spec.modes[i];
    check_arg(m >= 1, "mode count must be at least 1");
    check_arg(sizes[i] >= 2 * m,
              "grid axis " + std::to_string(i) + " has " +
                  std::to_string(sizes[i]) + " points but the mode spec needs " +
                  std::to_string(2 * m));
  }
}

Shape kept_shape(const ModeSpec& spec) {
  Shape s;
  const int d = spec.dims();
  for (int i = 0; i < d - 1; ++i) s.push_back(2 * spec.modes[static_cast<std::size_t>(i)]);
  s.push_back(spec.modes[static_cast<std::size_t>(d - 1)]);
  return s;
}

std::int64_t mode_count(const ModeSpec& spec) {
  return detail::shape_numel(kept_shape(spec));
}

std::vector<Tensor*> SpectralWeights::trainable() {
  if (kind == Kind::Dense) return {&dense};
  std::vector<Tensor*> out{&core};
  for (Tensor& f : factors) out.push_back(&f);
  return out;
}

std::vector<const Tensor*> SpectralWeights::trainable() const {
  if (kind == Kind::Dense) return {&dense};
  std::vector<const Tensor*> out{&core};
  for (const Tensor& f : factors) out.push_back(&f);
  return out;
}

std::int64_t SpectralWeights::complex_entries() const {
  std::int64_t n = 0;
  for (const Tensor* t : trainable()) n += t->numel();
  return n;
}

Tensor truncate_modes(const Tensor& s, const ModeSpec& spec,
                      const Shape& sizes) {
  check_arg(s.is_complex(), "truncate_modes expects a complex spectrum");
  const int d = spec.dims();
  check_arg(s.rank() >= d, "spectrum rank smaller than the mode spec");
  check_modes(spec, sizes);
  const int r = s.rank();
  for (int i = 0; i < d - 1; ++i)
    check_arg(s.dim(r - d + i) == sizes[static_cast<std::size_t>(i)],
              "spectrum shape does not match the stated sizes");
  check_arg(s.dim(r - 1) ==
                fft::half_bins(sizes[static_cast<std::size_t>(d - 1)]),
            "spectrum last axis does not hold floor(n/2)+1 bins");

  Tensor t = ops::slice(s, r - 1, 0, spec.modes[static_cast<std::size_t>(d - 1)]);
  for (int i = 0; i < d - 1; ++i) {
    const int axis = r - d + i;
    const std::int64_t n = sizes[static_cast<std::size_t>(i)];
    const std::int64_t m = spec.modes[static_cast<std::size_t>(i)];
    t = ops::concat({ops::slice(t, axis, 0, m), ops::slice(t, axis, n - m, n)},
                    axis);
  }
  return t;
}

Tensor expand_modes(const Tensor& t, const ModeSpec& spec, const Shape& sizes) {
  check_arg(t.is_complex(), "expand_modes expects a complex tensor");
  const int d = spec.dims();
  check_arg(t.rank() >= d, "tensor rank smaller than the mode spec");
  check_modes(spec, sizes);
  const int r = t.rank();
  const Shape kept = kept_shape(spec);
  for (int i = 0; i < d; ++i)
    check_arg(t.dim(r - d + i) == kept[static_cast<std::size_t>(i)],
              "retained-mode block has the wrong shape");

  Tensor out = t;
  const std::int64_t nd = sizes[static_cast<std::size_t>(d - 1)];
  const std::int64_t md = spec.modes[static_cast<std::size_t>(d - 1)];
  const std::int64_t h = fft::half_bins(nd);
  if (h > md)
    out = ops::concat({out, zeros_like_axis(out, r - 1, h - md)}, r - 1);
  for (int i = 0; i < d - 1; ++i) {
    const int axis = r - d + i;
    const std::int64_t n = sizes[static_cast<std::size_t>(i)];
    const std::int64_t m = spec.modes[static_cast<std::size_t>(i)];
    if (n == 2 * m) continue;
    Tensor front = ops::slice(out, axis, 0, m);
    Tensor back = ops::slice(out, axis, m, 2 * m);
    out = ops::concat({front, zeros_like_axis(front, axis, n - 2 * m), back},
                      axis);
  }
  return out;
}

Tensor mode_mix(const Tensor& x, const Tensor& w) {
  check_arg(x.is_complex() && w.is_complex(),
            "mode_mix expects complex operands");
  check_arg(x.rank() == 3 && w.rank() == 3, "mode_mix expects rank-3 operands");
  check_arg(x.dim(2) == w.dim(0), "mode_mix mode counts differ");
  check_arg(x.dim(1) == w.dim(1), "mode_mix channel counts differ");
  Tensor out = mode_mix_raw(x, w);
  Tape* tp = Tape::active();
  if (!tp || !tp->recording() || (!tp->tracks(x) && !tp->tracks(w))) return out;
  const std::int64_t ix = tp->tracks(x) ? tp->input_id(x) : -1;
  const std::int64_t iw = tp->tracks(w) ? tp->input_id(w) : -1;
  const std::int64_t B = x.dim(0), Ci = x.dim(1), Kn = x.dim(2), Co = w.dim(2);
  const std::int64_t id = tp->record(
      [ix, iw, xv = x.detached(), wv = w.detached(), B, Ci, Kn,
       Co](const Tensor& g, Tape& t) {
        if (ix >= 0) t.accumulate(ix, mode_mix_grad_x(wv, g, B, Ci, Kn, Co));
        if (iw >= 0) t.accumulate(iw, mode_mix_grad_w(xv, g, B, Ci, Kn, Co));
      });
  tp->tag(out, id);
  return out;
}

Tensor make_mode_mask(const ModeSpec& spec,
                      const std::vector<std::int64_t>& active) {
  const int d = spec.dims();
  check_arg(static_cast<int>(active.size()) == d,
            "active mode count does not match the spec rank");
  for (int i = 0; i < d; ++i)
    check_arg(active[static_cast<std::size_t>(i)] >= 1 &&
                  active[static_cast<std::size_t>(i)] <=
                      spec.modes[static_cast<std::size_t>(i)],
              "active modes for axis " + std::to_string(i) +
                  " must lie in [1, " +
                  std::to_string(spec.modes[static_cast<std::size_t>(i)]) + "]");

  const Shape kept = kept_shape(spec);
  Shape shape = kept;
  shape.insert(shape.begin(), {1, 1});
  std::vector<std::complex<double>> values(
      static_cast<std::size_t>(mode_count(spec)));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    bool keep = true;
    for (int ax = 0; ax < d; ++ax) {
      const std::int64_t m = spec.modes[static_cast<std::size_t>(ax)];
      const std::int64_t a = active[static_cast<std::size_t>(ax)];
      const std::int64_t p = idx[static_cast<std::size_t>(ax)];
      // Full axes store frequencies [0, m) then [-m, 0); the Hermitian
      // axis stores only [0, m).
      const bool ok = ax + 1 < d ? (p < a || p >= 2 * m - a) : p < a;
      if (!ok) {
        keep = false;
        break;
      }
    }
    values[flat] = keep ? 1.0 : 0.0;
    for (int ax = d - 1; ax >= 0; --ax) {
      if (++idx[static_cast<std::size_t>(ax)] <
          kept[static_cast<std::size_t>(ax)])
        break;
      idx[static_cast<std::size_t>(ax)] = 0;
    }
  }
  return Tensor::from_complex(shape, std::move(values));
}

Tensor spectral_conv(const Tensor& x, const SpectralWeights& w,
                     const ModeSpec& spec,
                     const std::optional<Shape>& output_sizes,
                     const Tensor* mode_mask) {
  const int d = spec.dims();
  check_arg(x.is_real(), "spectral_conv expects real grid data");
  check_arg(x.rank() == d + 2,
            "spectral_conv expects data [batch, channels, grid]; got rank " +
                std::to_string(x.rank()));
  check_arg(x.dim(1) == w.in_channels,
            "input has " + std::to_string(x.dim(1)) + " channels, weights expect " +
                std::to_string(w.in_channels));
  const Shape sizes = trailing_sizes(x, d);
  check_modes(spec, sizes);
  if (output_sizes) {
    check_arg(static_cast<int>(output_sizes->size()) == d,
              "output size count does not match the spatial rank");
    check_modes(spec, *output_sizes);
  }

  const std::int64_t B = x.dim(0);
  const std::int64_t Ci = w.in_channels;
  const std::int64_t Co = w.out_channels;
  const std::int64_t Kn = mode_count(spec);

  Tensor xh = fft::rfftn(x, d);
  Tensor tb = truncate_modes(xh, spec, sizes);
  if (mode_mask) {
    Shape want = kept_shape(spec);
    want.insert(want.begin(), {1, 1});
    check_arg(mode_mask->is_complex() && mode_mask->shape() == want,
              "mode mask must be complex of shape [1, 1, kept modes]");
    tb = ops::mul(tb, *mode_mask);
  }
  Tensor xt = ops::reshape(tb, {B, Ci, Kn});

  Tensor y;
  if (w.kind == SpectralWeights::Kind::Dense) {
    Tensor R = ops::reshape(w.dense, {Kn, Ci, Co});
    y = mode_mix(xt, R);
  } else {
    check_arg(w.factors.size() == static_cast<std::size_t>(d) + 2,
              "tucker weights need one factor per dense axis");
    const Tensor& u_ci = w.factors[static_cast<std::size_t>(d)];
    const Tensor& u_co = w.factors[static_cast<std::size_t>(d) + 1];
    const std::int64_t rci = u_ci.dim(1);
    const std::int64_t rco = u_co.dim(1);
    Tensor z = ops::transpose(ops::contract(xt, u_ci, {{1, 0}}), {0, 2, 1});
    Tensor core = w.core;
    for (int i = 0; i < d; ++i)
      core = ops::contract(core, w.factors[static_cast<std::size_t>(i)],
                           {{0, 1}});
    std::vector<int> perm;
    for (int i = 0; i < d; ++i) perm.push_back(2 + i);
    perm.push_back(0);
    perm.push_back(1);
    core = ops::reshape(ops::transpose(core, perm), {Kn, rci, rco});
    y = ops::transpose(ops::contract(mode_mix(z, core), u_co, {{1, 1}}),
                       {0, 2, 1});
  }

  Shape block = kept_shape(spec);
  block.insert(block.begin(), {B, Co});
  y = ops::reshape(y, block);

  const Shape& osz = output_sizes ? *output_sizes : sizes;
  Tensor spectrum = expand_modes(y, spec, osz);
  if (osz != sizes) {
    double factor = 1.0;
    for (int i = 0; i < d; ++i)
      factor *= static_cast<double>(osz[static_cast<std::size_t>(i)]) /
                static_cast<double>(sizes[static_cast<std::size_t>(i)]);
    spectrum = ops::scale(spectrum, factor);
  }
  return fft::irfftn(spectrum, osz);
}

Tensor tucker_reconstruct(const SpectralWeights& w) {
  check_arg(w.kind == SpectralWeights::Kind::Tucker,
            "tucker_reconstruct expects tucker weights");
  const auto axes = static_cast<int>(w.factors.size());
  check_arg(w.core.rank() == axes,
            "tucker core rank does not match the factor count");
  for (int k = 0; k < axes; ++k) {
    const Tensor& f = w.factors[static_cast<std::size_t>(k)];
    check_arg(f.rank() == 2, "tucker factors must be matrices");
    check_arg(f.dim(1) == w.core.dim(k),
              "factor " + std::to_string(k) + " rank " +
                  std::to_string(f.dim(1)) + " does not match core axis " +
                  std::to_string(w.core.dim(k)));
  }
  Tensor dense = w.core;
  for (int k = 0; k < axes; ++k)
    dense = ops::contract(dense, w.factors[static_cast<std::size_t>(k)],
                          {{0, 1}});
  return dense;
}

SpectralWeights init_spectral_weights(const ModeSpec& spec,
                                      std::int64_t in_channels,
                                      std::int64_t out_channels,
                                      SpectralWeights::Kind kind,
                                      const std::vector<double>& rank_fractions,
                                      std::uint64_t seed) {
  check_arg(in_channels >= 1 && out_channels >= 1,
            "channel counts must be positive");
  check_arg(!spec.modes.empty(), "modes list is empty");
  Shape axes = kept_shape(spec);
  axes.push_back(in_channels);
  axes.push_back(out_channels);

  const double s =
      1.0 / (static_cast<double>(in_channels) * static_cast<double>(out_channels));
  Rng rng(seed);
  auto draw = [&](const Shape& shape) {
    const std::int64_t n = detail::shape_numel(shape);
    std::vector<cd> v(static_cast<std::size_t>(n));
    for (auto& e : v) {
      const double re = rng.uniform(-s, s);
      const double im = rng.uniform(-s, s);
      e = {re, im};
    }
    return Tensor::from_complex(shape, std::move(v), true);
  };

  SpectralWeights w;
  w.kind = kind;
  w.in_channels = in_channels;
  w.out_channels = out_channels;
  if (kind == SpectralWeights::Kind::Dense) {
    w.dense = draw(axes);
    return w;
  }

  check_arg(rank_fractions.size() == 1 ||
                rank_fractions.size() == axes.size(),
            "rank fractions: give one overall or one per weight axis");
  Shape ranks(axes.size());
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const double f =
        rank_fractions.size() == 1 ? rank_fractions[0] : rank_fractions[k];
    check_arg(f > 0.0 && f <= 1.0, "rank fraction must lie in (0, 1]");
    ranks[k] = static_cast<std::int64_t>(
        std::ceil(f * static_cast<double>(axes[k])));
  }
  w.core = draw(ranks);
  for (std::size_t k = 0; k < axes.size(); ++k)
    w.factors.push_back(draw({axes[k], ranks[k]}));
  return w;
}

Tensor spectral_resample(const Tensor& x, const Shape& new_sizes) {
  const int d = static_cast<int>(new_sizes.size());
  check_arg(x.is_real(), "spectral_resample expects real grid data");
  check_arg(d >= 1 && x.rank() >= d + 1,
            "resample size count does not fit the tensor rank");
  const Shape sizes = trailing_sizes(x, d);
  if (sizes == new_sizes) return x;
  for (std::int64_t n : new_sizes)
    check_arg(n >= 2, "resample target axes need at least 2 points");

  const int r = x.rank();
  Tensor s = fft::rfftn(x, d);
  for (int i = 0; i < d - 1; ++i) {
    const int axis = r - d + i;
    const std::int64_t n = sizes[static_cast<std::size_t>(i)];
    const std::int64_t np = new_sizes[static_cast<std::size_t>(i)];
    if (n == np) continue;
    const std::int64_t keep = std::min(n, np);
    const std::int64_t pos = (keep + 1) / 2;
    const std::int64_t negc = keep - pos;
    Tensor front = ops::slice(s, axis, 0, pos);
    Tensor back = ops::slice(s, axis, n - negc, n);
    if (np > keep)
      s = ops::concat({front, zeros_like_axis(front, axis, np - keep), back},
                      axis);
    else
      s = ops::concat({front, back}, axis);
  }
  const std::int64_t h = fft::half_bins(sizes[static_cast<std::size_t>(d - 1)]);
  const std::int64_t hp =
      fft::half_bins(new_sizes[static_cast<std::size_t>(d - 1)]);
  if (hp < h)
    s = ops::slice(s, r - 1, 0, hp);
  else if (hp > h)
    s = ops::concat({s, zeros_like_axis(s, r - 1, hp - h)}, r - 1);

  double factor = 1.0;
  for (int i = 0; i < d; ++i)
    factor *= static_cast<double>(new_sizes[static_cast<std::size_t>(i)]) /
              static_cast<double>(sizes[static_cast<std::size_t>(i)]);
  s = ops::scale(s, factor);
  return fft::irfftn(s, new_sizes);
}

}  // namespace opkit::spectral
