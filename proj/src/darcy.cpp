#include "opkit/darcy.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace opkit::data {

Tensor darcy_coefficient(const Tensor& field, double a_hi, double a_lo) {
  check_arg(field.is_real() && field.rank() == 2,
            "darcy_coefficient: field must be a real [n, n] tensor");
  check_arg(a_hi > 0.0 && a_lo > 0.0,
            "darcy_coefficient: phase values must be positive");
  std::vector<double> out(static_cast<std::size_t>(field.numel()));
  for (std::int64_t i = 0; i < field.numel(); ++i)
    out[static_cast<std::size_t>(i)] = field.rat(i) >= 0.0 ? a_hi : a_lo;
  return Tensor::from_values(field.shape(), std::move(out));
}

namespace {

double harmonic(double x, double y) { return 2.0 * x * y / (x + y); }

// Matrix-free application of the interior operator. Unknowns are the
// (n-2)^2 interior vertices in row-major order; boundary values are zero.
class DarcyOperator {
 public:
  DarcyOperator(const Tensor& a, std::int64_t n) : a_(a), n_(n), m_(n - 2) {}

  std::int64_t unknowns() const { return m_ * m_; }

  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const double h = 1.0 / static_cast<double>(n_ - 1);
    const double inv_h2 = 1.0 / (h * h);
    auto at = [&](std::int64_t i, std::int64_t j) -> double {
      if (i < 1 || i > m_ || j < 1 || j > m_) return 0.0;
      return u[static_cast<std::size_t>((i - 1) * m_ + (j - 1))];
    };
    for (std::int64_t i = 1; i <= m_; ++i) {
      for (std::int64_t j = 1; j <= m_; ++j) {
        const double ac = a_.rat(i * n_ + j);
        const double an = harmonic(ac, a_.rat((i - 1) * n_ + j));
        const double as = harmonic(ac, a_.rat((i + 1) * n_ + j));
        const double aw = harmonic(ac, a_.rat(i * n_ + (j - 1)));
        const double ae = harmonic(ac, a_.rat(i * n_ + (j + 1)));
        const double uc = at(i, j);
        out[static_cast<std::size_t>((i - 1) * m_ + (j - 1))] =
            inv_h2 * ((an + as + aw + ae) * uc - an * at(i - 1, j) -
                      as * at(i + 1, j) - aw * at(i, j - 1) -
                      ae * at(i, j + 1));
      }
    }
  }

 private:
  const Tensor& a_;
  std::int64_t n_;
  std::int64_t m_;
};

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace

Tensor solve_darcy(const Tensor& a, const Tensor& f) {
  check_arg(a.is_real() && a.rank() == 2 && a.dim(0) == a.dim(1),
            "solve_darcy: coefficient must be a real [n, n] tensor");
  const std::int64_t n = a.dim(0);
  check_arg(n >= 4, "solve_darcy: grid needs at least 4 points per side");
  check_arg(f.is_real() && f.shape() == a.shape(),
            "solve_darcy: forcing must match the coefficient grid");
  for (std::int64_t i = 0; i < a.numel(); ++i)
    check_arg(a.rat(i) > 0.0,
              "solve_darcy: coefficient must be positive everywhere");

  const std::int64_t m = n - 2;
  const std::int64_t mm = m * m;
  DarcyOperator op(a, n);

  std::vector<double> b(static_cast<std::size_t>(mm));
  for (std::int64_t i = 1; i <= m; ++i)
    for (std::int64_t j = 1; j <= m; ++j)
      b[static_cast<std::size_t>((i - 1) * m + (j - 1))] = f.rat(i * n + j);

  std::vector<double> u(static_cast<std::size_t>(mm), 0.0);
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm > 0.0) {
    std::vector<double> r = b;
    std::vector<double> p = r;
    std::vector<double> ap(static_cast<std::size_t>(mm));
    double rs = dot(r, r);
    const double target = 1e-8 * b_norm;
    const std::int64_t max_iters = 10 * n * n;
    std::int64_t it = 0;
    while (std::sqrt(rs) > target) {
      if (it++ >= max_iters)
        throw std::runtime_error(
            "solve_darcy: conjugate gradients stalled after " +
            std::to_string(max_iters) + " iterations, relative residual " +
            std::to_string(std::sqrt(rs) / b_norm));
      op.apply(p, ap);
      const double alpha = rs / dot(p, ap);
      for (std::int64_t k = 0; k < mm; ++k) {
        u[static_cast<std::size_t>(k)] += alpha * p[static_cast<std::size_t>(k)];
        r[static_cast<std::size_t>(k)] -= alpha * ap[static_cast<std::size_t>(k)];
      }
      const double rs_next = dot(r, r);
      const double beta = rs_next / rs;
      rs = rs_next;
      for (std::int64_t k = 0; k < mm; ++k)
        p[static_cast<std::size_t>(k)] =
            r[static_cast<std::size_t>(k)] + beta * p[static_cast<std::size_t>(k)];
    }
  }

  std::vector<double> full(static_cast<std::size_t>(n * n), 0.0);
  for (std::int64_t i = 1; i <= m; ++i)
    for (std::int64_t j = 1; j <= m; ++j)
      full[static_cast<std::size_t>(i * n + j)] =
          u[static_cast<std::size_t>((i - 1) * m + (j - 1))];
  return Tensor::from_values({n, n}, std::move(full));
}

Tensor solve_darcy(const Tensor& a) {
  return solve_darcy(a, Tensor::full(a.shape(), 1.0));
}

}  // namespace opkit::data
