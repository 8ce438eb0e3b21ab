#include "opkit/optim.hpp"

#include <cmath>
#include <complex>
#include <cstring>

namespace opkit::train {

namespace {

std::int64_t scalar_count(const Tensor& t) {
  return t.numel() * (t.is_complex() ? 2 : 1);
}

// The raw doubles behind a tensor: a complex entry contributes its real
// then imaginary part.
std::vector<double> raw_values(const Tensor& t) {
  std::vector<double> out(static_cast<std::size_t>(scalar_count(t)));
  if (t.is_real()) {
    std::memcpy(out.data(), t.rdata(), out.size() * sizeof(double));
  } else {
    const std::complex<double>* c = t.cdata();
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      out[static_cast<std::size_t>(2 * i)] = c[i].real();
      out[static_cast<std::size_t>(2 * i + 1)] = c[i].imag();
    }
  }
  return out;
}

Tensor from_raw(const Tensor& like, const std::vector<double>& values) {
  if (like.is_real()) return Tensor::from_values(like.shape(), values);
  std::vector<std::complex<double>> c(static_cast<std::size_t>(like.numel()));
  for (std::int64_t i = 0; i < like.numel(); ++i)
    c[static_cast<std::size_t>(i)] = {values[static_cast<std::size_t>(2 * i)],
                                      values[static_cast<std::size_t>(2 * i + 1)]};
  return Tensor::from_complex(like.shape(), std::move(c));
}

}  // namespace

Adam::Adam(std::vector<std::pair<std::string, Tensor*>> params,
           AdamConfig config)
    : config_(config) {
  check_arg(config.lr >= 0.0, "learning rate must be non-negative");
  check_arg(config.beta1 >= 0.0 && config.beta1 < 1.0 &&
                config.beta2 >= 0.0 && config.beta2 < 1.0,
            "adam betas must lie in [0, 1)");
  slots_.reserve(params.size());
  for (auto& [name, p] : params) {
    check_arg(p != nullptr, "null parameter handle for " + name);
    const auto n = static_cast<std::size_t>(scalar_count(*p));
    slots_.push_back(
        {std::move(name), p, std::vector<double>(n), std::vector<double>(n)});
  }
}

void Adam::step(const GradMap& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (Slot& slot : slots_) {
    const Tensor g = grads.grad(*slot.param);
    std::vector<double> gv = raw_values(g);
    for (double x : gv)
      if (!std::isfinite(x))
        throw std::runtime_error("non-finite gradient for parameter " +
                                 slot.name);
    std::vector<double> pv = raw_values(*slot.param);
    bool moved = false;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      slot.m[i] = config_.beta1 * slot.m[i] + (1.0 - config_.beta1) * gv[i];
      slot.v[i] =
          config_.beta2 * slot.v[i] + (1.0 - config_.beta2) * gv[i] * gv[i];
      const double mhat = slot.m[i] / bc1;
      const double vhat = slot.v[i] / bc2;
      const double delta = config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      if (delta != 0.0) {
        pv[i] -= delta;
        moved = true;
      }
    }
    if (moved)
      *slot.param = from_raw(*slot.param, pv).set_requires_grad(true);
  }
}

double step_lr(const LrSchedule& schedule, std::int64_t epoch) {
  check_arg(schedule.gamma > 0.0 && schedule.gamma <= 1.0,
            "lr decay factor must lie in (0, 1]");
  check_arg(schedule.step_size >= 1, "lr step size must be at least 1");
  check_arg(epoch >= 0, "epoch must be non-negative");
  return schedule.lr0 *
         std::pow(schedule.gamma, static_cast<double>(epoch / schedule.step_size));
}

std::vector<std::int64_t> incremental_modes(
    const ModeSchedule& schedule, std::int64_t epoch,
    const std::vector<std::int64_t>& max_modes) {
  check_arg(schedule.start.size() == max_modes.size(),
            "mode schedule rank does not match the model modes");
  check_arg(schedule.increment >= 0, "mode increment must be non-negative");
  check_arg(schedule.step >= 1, "mode schedule step must be at least 1");
  check_arg(epoch >= 0, "epoch must be non-negative");
  std::vector<std::int64_t> active(schedule.start.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    const std::int64_t s = schedule.start[i];
    const std::int64_t m = max_modes[i];
    check_arg(s >= 1 && s <= m,
              "start modes for axis " + std::to_string(i) +
                  " must lie in [1, " + std::to_string(m) + "]");
    active[i] = std::min(m, s + (epoch / schedule.step) * schedule.increment);
  }
  return active;
}

}  // namespace opkit::train
