#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "opkit/tape.hpp"
#include "opkit/tensor.hpp"

namespace opkit::train {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction and no weight decay. Parameters are owned by
// the model; the optimizer holds moment buffers over their raw scalar
// storage, treating a complex entry as an independent real/imaginary pair.
// step() replaces each parameter tensor with its updated value.
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, Tensor*>> params, AdamConfig config);

  /// Applies one update from the gradients of a backward pass. Parameters
  /// the pass never reached get zero gradient and stay bitwise unchanged.
  /// Throws std::runtime_error on a non-finite gradient, naming the
  /// parameter.
  void step(const GradMap& grads);

  void set_lr(double lr) { config_.lr = lr; }
  double lr() const { return config_.lr; }
  std::int64_t step_count() const { return t_; }

 private:
  struct Slot {
    std::string name;
    Tensor* param;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots_;
  AdamConfig config_;
  std::int64_t t_ = 0;
};

struct LrSchedule {
  double lr0 = 1e-3;
  double gamma = 1.0;
  std::int64_t step_size = 1;
};

/// lr0 * gamma^floor(epoch / step_size).
double step_lr(const LrSchedule& schedule, std::int64_t epoch);

struct ModeSchedule {
  std::vector<std::int64_t> start;
  std::int64_t increment = 0;
  std::int64_t step = 1;
};

/// Active mode counts at `epoch`: per axis min(max, start + floor(epoch /
/// step) * increment). Grows on the epoch clock only, so runs are
/// reproducible.
std::vector<std::int64_t> incremental_modes(
    const ModeSchedule& schedule, std::int64_t epoch,
    const std::vector<std::int64_t>& max_modes);

}  // namespace opkit::train
