#include "opkit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "opkit/kernels.hpp"
#include "opkit/ops.hpp"
#include "opkit/rng.hpp"
#include "opkit/spectral.hpp"

namespace opkit::train {

namespace {

namespace K = opkit::kernels;

grid::GridFunction take_rows(const grid::GridFunction& g,
                             const std::vector<std::int64_t>& idx) {
  const Tensor& d = g.data;
  std::int64_t rest = 1;
  for (int i = 1; i < d.rank(); ++i) rest *= d.dim(i);
  Shape out_shape = d.shape();
  out_shape[0] = static_cast<std::int64_t>(idx.size());
  Tensor rows = K::gather_rows(K::reshape(d, {d.dim(0), rest}), idx);
  return grid::make_grid(K::reshape(rows, out_shape), g.bounds);
}

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Whether kept-block position p on axis `ax` of `d` survives truncation to
// `a` active modes out of `m`.
bool kept_active(int ax, int d, std::int64_t p, std::int64_t m,
                 std::int64_t a) {
  return ax + 1 < d ? (p < a || p >= 2 * m - a) : p < a;
}

// Makes the stored weights agree with the masked forward pass by zeroing
// every entry of a mode the schedule never activated.
void freeze_masked_weights(models::FnoModel& model,
                           const std::vector<std::int64_t>& active) {
  const auto& modes = model.config.modes.modes;
  const int d = static_cast<int>(modes.size());
  const Shape kept = spectral::kept_shape(model.config.modes);
  for (auto& block : model.blocks) {
    spectral::SpectralWeights& w = block.weights;
    if (w.kind == spectral::SpectralWeights::Kind::Dense) {
      std::vector<std::complex<double>> vals(w.dense.cvec());
      const std::int64_t chans = w.in_channels * w.out_channels;
      std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
      for (std::int64_t flat = 0; flat < w.dense.numel(); flat += chans) {
        bool keep = true;
        for (int ax = 0; ax < d && keep; ++ax)
          keep = kept_active(ax, d, idx[static_cast<std::size_t>(ax)],
                             modes[static_cast<std::size_t>(ax)],
                             active[static_cast<std::size_t>(ax)]);
        if (!keep)
          for (std::int64_t c = 0; c < chans; ++c)
            vals[static_cast<std::size_t>(flat + c)] = 0.0;
        for (int ax = d - 1; ax >= 0; --ax) {
          if (++idx[static_cast<std::size_t>(ax)] <
              kept[static_cast<std::size_t>(ax)])
            break;
          idx[static_cast<std::size_t>(ax)] = 0;
        }
      }
      w.dense = Tensor::from_complex(w.dense.shape(), std::move(vals))
                    .set_requires_grad(true);
    } else {
      for (int ax = 0; ax < d; ++ax) {
        Tensor& f = w.factors[static_cast<std::size_t>(ax)];
        std::vector<std::complex<double>> vals(f.cvec());
        const std::int64_t r = f.dim(1);
        for (std::int64_t p = 0; p < f.dim(0); ++p)
          if (!kept_active(ax, d, p, modes[static_cast<std::size_t>(ax)],
                           active[static_cast<std::size_t>(ax)]))
            for (std::int64_t j = 0; j < r; ++j)
              vals[static_cast<std::size_t>(p * r + j)] = 0.0;
        f = Tensor::from_complex(f.shape(), std::move(vals))
                .set_requires_grad(true);
      }
    }
  }
}

double mean_rel_l2(const models::FnoModel& model, const grid::GridFunction& x,
                   const grid::GridFunction& y,
                   const data::DataProcessor& processor,
                   const Tensor* mode_mask) {
  grid::GridFunction pred = predict(model, x, processor, {}, mode_mask);
  Tensor loss = relative_lp_loss(pred.data, y.data, 2.0);
  return loss.rat(0);
}

}  // namespace

grid::GridFunction predict(const models::FnoModel& model,
                           const grid::GridFunction& x,
                           const data::DataProcessor& processor,
                           const std::optional<Shape>& output_sizes,
                           const Tensor* mode_mask) {
  check_arg(!processor.options().embed &&
                !processor.options().pad_fraction.has_value(),
            "the model owns positional embedding and padding; configure the "
            "data processor for normalization only");
  auto prepared = processor.preprocess(x);
  grid::GridFunction encoded = grid::make_grid(prepared.data, x.bounds);
  grid::GridFunction out =
      models::fno_forward(model, encoded, output_sizes, mode_mask);
  return grid::make_grid(processor.postprocess(out.data), out.bounds);
}

double evaluate(const models::FnoModel& model, const grid::GridFunction& x,
                const grid::GridFunction& y,
                const data::DataProcessor& processor) {
  return mean_rel_l2(model, x, y, processor, nullptr);
}

TrainReport train(models::FnoModel& model, const grid::GridFunction& x_train,
                  const grid::GridFunction& y_train,
                  const std::map<std::int64_t, ValSet>& val,
                  const data::DataProcessor& processor,
                  const TrainConfig& config) {
  check_arg(config.epochs >= 0, "epoch count must be non-negative");
  check_arg(config.batch_size >= 1, "batch size must be at least 1");
  const std::int64_t n = x_train.batch();
  check_arg(n >= 1, "training set is empty");
  check_arg(y_train.batch() == n,
            "input and target batches differ: " + std::to_string(n) + " vs " +
                std::to_string(y_train.batch()));

  const std::vector<std::int64_t>& max_modes = model.config.modes.modes;
  auto params = model.named_params();
  Adam adam(params, AdamConfig{step_lr(config.lr, 0)});

  std::vector<Tensor> last_good;
  last_good.reserve(params.size());
  for (auto& [name, p] : params) last_good.push_back(*p);

  Rng shuffle_rng(config.seed + 1);
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  std::vector<std::int64_t> active = max_modes;
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = step_lr(config.lr, epoch);
    adam.set_lr(lr);

    active = config.modes
                 ? incremental_modes(*config.modes, epoch, max_modes)
                 : max_modes;
    Tensor mask_store;
    const Tensor* mask = nullptr;
    if (active != max_modes) {
      mask_store = spectral::make_mode_mask(model.config.modes, active);
      mask = &mask_store;
    }

    for (std::int64_t i = n - 1; i >= 1; --i) {
      const auto j = static_cast<std::int64_t>(
          shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }

    double loss_acc = 0.0;
    for (std::int64_t lo = 0; lo < n; lo += config.batch_size) {
      const std::int64_t hi = std::min(n, lo + config.batch_size);
      std::vector<std::int64_t> idx(order.begin() + lo, order.begin() + hi);
      grid::GridFunction bx = take_rows(x_train, idx);
      grid::GridFunction by = take_rows(y_train, idx);

      Tape tape;
      double batch_loss;
      {
        Tape::Scope scope(tape);
        grid::GridFunction pred = predict(model, bx, processor, {}, mask);
        Tensor loss =
            apply_loss(config.loss, pred.data, by.data, model.config.d);
        batch_loss = loss.rat(0);
        if (!std::isfinite(batch_loss)) {
          for (std::size_t k = 0; k < params.size(); ++k)
            *params[k].second = last_good[k];
          report.aborted = true;
          report.abort_reason = "non-finite loss in epoch " +
                                std::to_string(epoch) + " at sample offset " +
                                std::to_string(lo) +
                                "; restored the last completed epoch";
          return report;
        }
        GradMap grads = tape.backward(loss);
        adam.step(grads);
      }
      loss_acc += batch_loss * static_cast<double>(hi - lo);
    }

    for (std::size_t k = 0; k < params.size(); ++k)
      last_good[k] = *params[k].second;

    EpochRecord row;
    row.epoch = epoch;
    row.train_loss = loss_acc / static_cast<double>(n);
    row.lr = lr;
    row.active_modes = active;
    for (const auto& [res, vs] : val)
      row.val.emplace_back(res,
                           mean_rel_l2(model, vs.x, vs.y, processor, mask));
    row.wall_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();
    report.rows.push_back(std::move(row));
    if (config.on_epoch) config.on_epoch(report.rows.back());
  }

  if (config.modes && active != max_modes) freeze_masked_weights(model, active);
  return report;
}

std::int64_t TrainReport::best_epoch() const {
  if (rows.empty()) return -1;
  std::int64_t best = rows.front().epoch;
  double best_score = std::numeric_limits<double>::infinity();
  for (const EpochRecord& row : rows) {
    double score;
    if (row.val.empty()) {
      score = row.train_loss;
    } else {
      score = 0.0;
      for (const auto& [res, v] : row.val) score += v;
      score /= static_cast<double>(row.val.size());
    }
    if (score < best_score) {
      best_score = score;
      best = row.epoch;
    }
  }
  return best;
}

std::string active_modes_str(const std::vector<std::int64_t>& modes) {
  std::string out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(modes[i]);
  }
  return out;
}

void write_report_csv(const TrainReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "epoch,train_loss,lr,active_modes,wall_ms";
  if (!report.rows.empty())
    for (const auto& [res, v] : report.rows.front().val)
      out << ",val_relL2@" << res;
  out << '\n';
  for (const EpochRecord& row : report.rows) {
    out << row.epoch << ',' << fmt_g17(row.train_loss) << ',' << fmt_g17(row.lr)
        << ',' << active_modes_str(row.active_modes) << ','
        << fmt_g17(row.wall_ms);
    for (const auto& [res, v] : row.val) out << ',' << fmt_g17(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace opkit::train
