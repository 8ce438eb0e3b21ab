#include "opkit/loss.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "opkit/fft.hpp"
#include "opkit/ops.hpp"

namespace opkit::train {

namespace {

// [B, ...] -> [B], summing everything but the leading axis.
Tensor per_sample_sum(const Tensor& a) {
  std::int64_t rest = 1;
  for (int i = 1; i < a.rank(); ++i) rest *= a.dim(i);
  return ops::reduce_sum_axis(ops::reshape(a, {a.dim(0), rest}), 1);
}

void require_positive_norms(const Tensor& norms, const char* what) {
  for (std::int64_t b = 0; b < norms.numel(); ++b)
    if (!(norms.rat(b) > 0.0))
      throw std::invalid_argument(std::string(what) + " target for sample " +
                                  std::to_string(b) + " has zero norm");
}

void require_same(const Tensor& pred, const Tensor& target) {
  check_arg(pred.is_real() && target.is_real(),
            "loss inputs must be real tensors");
  check_arg(pred.shape() == target.shape(),
            "loss inputs differ in shape: " + pred.shape_str() + " vs " +
                target.shape_str());
  check_arg(pred.rank() >= 2, "loss inputs need a leading batch axis");
}

}  // namespace

Tensor relative_lp_loss(const Tensor& pred, const Tensor& target, double p) {
  require_same(pred, target);
  check_arg(p >= 1.0, "relative loss needs p >= 1");

  Tensor num = per_sample_sum(ops::abs_pow(ops::sub(pred, target), p));
  Tensor den = per_sample_sum(ops::abs_pow(target, p));
  require_positive_norms(den, "relative loss");
  return ops::reduce_mean(ops::pow_pos(ops::div(num, den), 1.0 / p));
}

Tensor h1_norm_sq(const Tensor& u, int spatial_dims) {
  check_arg(u.is_real(), "h1_norm_sq expects a real tensor");
  check_arg(u.rank() >= spatial_dims + 1,
            "h1_norm_sq needs a batch axis ahead of the grid axes");

  Shape sizes;
  for (int i = u.rank() - spatial_dims; i < u.rank(); ++i)
    sizes.push_back(u.dim(i));
  Tensor uh = fft::rfftn(u, spatial_dims);

  // (1 + 4 pi^2 |k|^2) per retained bin, doubled where the Hermitian half
  // spectrum stands in for a conjugate pair.
  Shape wshape(static_cast<std::size_t>(u.rank()), 1);
  std::int64_t bins = 1;
  for (int i = 0; i < spatial_dims; ++i) {
    const std::int64_t n = sizes[static_cast<std::size_t>(i)];
    const std::int64_t len =
        i + 1 < spatial_dims ? n : fft::half_bins(n);
    wshape[static_cast<std::size_t>(u.rank() - spatial_dims + i)] = len;
    bins *= len;
  }
  const std::int64_t n_last = sizes.back();
  const std::int64_t h_last = fft::half_bins(n_last);
  std::vector<double> w(static_cast<std::size_t>(bins));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(spatial_dims), 0);
  const double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
  for (std::int64_t flat = 0; flat < bins; ++flat) {
    double ksq = 0.0;
    for (int ax = 0; ax < spatial_dims; ++ax) {
      const std::int64_t n = sizes[static_cast<std::size_t>(ax)];
      std::int64_t k = idx[static_cast<std::size_t>(ax)];
      if (ax + 1 < spatial_dims && k > n / 2) k -= n;
      ksq += static_cast<double>(k) * static_cast<double>(k);
    }
    const std::int64_t klast = idx[static_cast<std::size_t>(spatial_dims - 1)];
    const bool self_paired =
        klast == 0 || (n_last % 2 == 0 && klast == h_last - 1);
    w[static_cast<std::size_t>(flat)] =
        (1.0 + four_pi_sq * ksq) * (self_paired ? 1.0 : 2.0);
    for (int ax = spatial_dims - 1; ax >= 0; --ax) {
      const std::int64_t len =
          wshape[static_cast<std::size_t>(u.rank() - spatial_dims + ax)];
      if (++idx[static_cast<std::size_t>(ax)] < len) break;
      idx[static_cast<std::size_t>(ax)] = 0;
    }
  }
  Tensor weights = Tensor::from_values(wshape, std::move(w));

  double vol = 1.0;
  for (std::int64_t n : sizes) vol *= static_cast<double>(n);
  Tensor power = ops::real_part(ops::mul(uh, ops::conj(uh)));
  Tensor weighted = ops::mul(power, weights);
  std::int64_t rest = 1;
  for (int i = 1; i < u.rank() - spatial_dims; ++i) rest *= u.dim(i);
  Tensor flat = ops::reshape(weighted, {u.dim(0), rest * bins});
  return ops::scale(ops::reduce_sum_axis(flat, 1), 1.0 / (vol * vol));
}

Tensor h1_loss(const Tensor& pred, const Tensor& target, int spatial_dims) {
  require_same(pred, target);
  Tensor num = h1_norm_sq(ops::sub(pred, target), spatial_dims);
  Tensor den = h1_norm_sq(target, spatial_dims);
  require_positive_norms(den, "h1 loss");
  return ops::reduce_mean(ops::sqrt_ew(ops::div(num, den)));
}

Tensor apply_loss(const LossSpec& spec, const Tensor& pred,
                  const Tensor& target, int spatial_dims) {
  if (spec.kind == LossSpec::Kind::H1)
    return h1_loss(pred, target, spatial_dims);
  return relative_lp_loss(pred, target, spec.p);
}

}  // namespace opkit::train
