#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opkit/grid.hpp"
#include "opkit/loss.hpp"
#include "opkit/model.hpp"
#include "opkit/optim.hpp"
#include "opkit/processor.hpp"

namespace opkit::train {

struct EpochRecord;

struct TrainConfig {
  std::int64_t epochs = 1;
  std::int64_t batch_size = 8;
  LossSpec loss;
  LrSchedule lr;
  std::optional<ModeSchedule> modes;
  std::uint64_t seed = 0;
  // Invoked after each completed epoch, e.g. for progress output.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double lr = 0.0;
  std::vector<std::int64_t> active_modes;
  double wall_ms = 0.0;
  // Relative L2 in physical space per validation resolution, ascending.
  std::vector<std::pair<std::int64_t, double>> val;
};

struct TrainReport {
  std::vector<EpochRecord> rows;
  bool aborted = false;
  std::string abort_reason;

  /// Epoch with the lowest mean validation error, falling back to the
  /// lowest train loss when no validation sets were configured. -1 when
  /// the report is empty.
  std::int64_t best_epoch() const;
};

struct ValSet {
  grid::GridFunction x;
  grid::GridFunction y;
};

/// Runs the optimization loop: per epoch, shuffle with an RNG seeded from
/// config.seed + 1, iterate batches (normalize input, forward, physical-space
/// loss against raw targets, backward, Adam step), then score relative L2 on
/// every validation resolution. A non-finite loss aborts the run and rolls
/// the model back to the end of the last completed epoch. Deterministic
/// apart from the wall_ms column.
TrainReport train(models::FnoModel& model, const grid::GridFunction& x_train,
                  const grid::GridFunction& y_train,
                  const std::map<std::int64_t, ValSet>& val,
                  const data::DataProcessor& processor,
                  const TrainConfig& config);

/// Mean relative L2 between model predictions and targets in physical
/// space, without touching any tape.
double evaluate(const models::FnoModel& model, const grid::GridFunction& x,
                const grid::GridFunction& y,
                const data::DataProcessor& processor);

/// Forward pass through normalization: encode, run the model, decode.
grid::GridFunction predict(const models::FnoModel& model,
                           const grid::GridFunction& x,
                           const data::DataProcessor& processor,
                           const std::optional<Shape>& output_sizes = {},
                           const Tensor* mode_mask = nullptr);

/// CSV with header epoch,train_loss,lr,active_modes,wall_ms and one
/// val_relL2@<res> column per validation resolution.
void write_report_csv(const TrainReport& report, const std::string& path);

std::string active_modes_str(const std::vector<std::int64_t>& modes);

}  // namespace opkit::train
