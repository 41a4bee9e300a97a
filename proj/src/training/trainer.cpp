#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "ifenn/errors.hpp"
#include "ifenn/training.hpp"

namespace ifenn::train {
namespace {

ad::Tensor normalized_block(std::span<const double> all, std::span<const std::size_t> cases, std::size_t per_case,
                            std::size_t n_t, std::size_t width, const ChannelStats& stats) {
  std::vector<double> v;
  v.reserve(cases.size() * per_case);
  for (std::size_t i : cases) {
    for (std::size_t k = 0; k < per_case; ++k) v.push_back(stats.normalize(all[i * per_case + k]));
  }
  return ad::Tensor::from({cases.size(), n_t, width}, std::move(v));
}

ad::Tensor normalized_labels(const Dataset& ds, std::span<const std::size_t> cases) {
  const std::size_t m = ds.n_t * ds.n_n * ds.n_c;
  std::vector<double> v;
  v.reserve(cases.size() * m);
  for (std::size_t i : cases) {
    const auto y = ds.case_labels(i);
    for (std::size_t k = 0; k < m; ++k) v.push_back(ds.normalization.labels[k % ds.n_c].normalize(y[k]));
  }
  return ad::Tensor::from({cases.size(), ds.n_t, ds.n_n, ds.n_c}, std::move(v));
}

void check_compatible(const net::OperatorModel& model, const Dataset& ds) {
  const auto& cfg = model.config();
  if (cfg.branches.empty() || cfg.branches.size() > 2) throw ConfigError("model must have one or two branches");
  if (cfg.branches[0].input_size != ds.n_l) {
    throw ConfigError("load branch expects " + std::to_string(cfg.branches[0].input_size) +
                      " sensors, dataset has N_l = " + std::to_string(ds.n_l));
  }
  if (cfg.branches.size() == 2 && cfg.branches[1].input_size != ds.n_s) {
    throw ConfigError("strain branch expects " + std::to_string(cfg.branches[1].input_size) +
                      " sensors, dataset has N_s = " + std::to_string(ds.n_s));
  }
  if (cfg.components != ds.n_c) {
    throw ConfigError("model predicts " + std::to_string(cfg.components) + " components, dataset has N_c = " +
                      std::to_string(ds.n_c));
  }
  if (cfg.trunk.input_size > ds.n_d) {
    throw ConfigError("trunk expects " + std::to_string(cfg.trunk.input_size) +
                      " coordinates, dataset has N_d = " + std::to_string(ds.n_d));
  }
}

std::vector<std::vector<double>> snapshot(const std::vector<ad::Tensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void restore(std::vector<ad::Tensor>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) std::copy(values[i].begin(), values[i].end(), params[i].mutable_data().begin());
}

}  // namespace

void prepare_model(net::OperatorModel& model, const Dataset& ds) {
  check_compatible(model, ds);
  const auto nodes = ds.nodes();
  mesh::Point lo = nodes.front(), hi = nodes.front();
  for (const auto& p : nodes) {
    for (std::size_t d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  for (std::size_t d = ds.n_d; d < 3; ++d) hi[d] = lo[d] + 1.0;
  model.set_coordinate_frame(lo, hi);
  model.set_nodes(nodes);
  std::vector<double> scale, shift;
  for (const auto& s : ds.normalization.labels) {
    scale.push_back(s.scale);
    shift.push_back(s.shift);
  }
  model.set_output_scaling(scale, shift);
}

std::vector<ad::Tensor> branch_inputs(const net::OperatorModel& model, const Dataset& ds,
                                      std::span<const std::size_t> cases) {
  check_compatible(model, ds);
  std::vector<ad::Tensor> in;
  in.push_back(normalized_block(ds.load, cases, ds.n_t * ds.n_l, ds.n_t, ds.n_l, ds.normalization.load));
  if (model.config().branches.size() == 2) {
    in.push_back(normalized_block(ds.strain, cases, ds.n_t * ds.n_s, ds.n_t, ds.n_s, ds.normalization.strain));
  }
  return in;
}

double evaluate_loss(const net::OperatorModel& model, const Dataset& ds, std::span<const std::size_t> cases,
                     LossKind kind, std::size_t batch_size) {
  if (cases.empty()) return 0.0;
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t b = 0; b < cases.size(); b += batch_size) {
    const auto part = cases.subspan(b, std::min(batch_size, cases.size() - b));
    const auto pred = model.forward(branch_inputs(model, ds, part), ds.times, net::OutputSpace::normalized);
    total += loss_tensor(kind, pred, normalized_labels(ds, part)).item();
    ++batches;
  }
  return total / double(batches);
}

TrainReport train(net::OperatorModel& model, const Dataset& ds, const TrainOptions& o) {
  if (ds.train.empty()) throw InvalidArgument("training split is empty");
  if (o.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (o.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  o.schedule.validate();
  check_compatible(model, ds);

  const auto t0 = std::chrono::steady_clock::now();
  auto params = model.parameters();
  ad::Adam adam(params);
  std::mt19937_64 rng(o.seed);
  std::vector<std::size_t> order = ds.train;
  const bool have_val = !ds.validation.empty();

  TrainReport report;
  report.best_validation = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best;
  for (int epoch = 0; epoch < o.epochs; ++epoch) {
    const double lr = o.schedule.rate(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += o.batch_size) {
      const auto part = std::span<const std::size_t>(order).subspan(b, std::min(o.batch_size, order.size() - b));
      ad::Tape tape;
      ad::TapeScope scope(tape);
      adam.zero_grad();
      const auto pred = model.forward(branch_inputs(model, ds, part), ds.times, net::OutputSpace::normalized);
      const auto loss = loss_tensor(o.loss, pred, normalized_labels(ds, part));
      const double value = loss.item();
      if (!std::isfinite(value)) throw TrainingDiverged("loss is not finite at epoch " + std::to_string(epoch), epoch);
      ad::backward(loss);
      try {
        adam.step(lr);
      } catch (const TrainingDiverged&) {
        throw TrainingDiverged("non-finite gradient at epoch " + std::to_string(epoch), epoch);
      }
      sum += value;
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    rec.train_loss = sum / double(batches);
    rec.validation_loss = have_val ? evaluate_loss(model, ds, ds.validation, o.loss, o.batch_size) : rec.train_loss;
    if (!std::isfinite(rec.validation_loss)) {
      throw TrainingDiverged("validation loss is not finite at epoch " + std::to_string(epoch), epoch);
    }
    report.history.push_back(rec);
    if (rec.validation_loss < report.best_validation) {
      report.best_validation = rec.validation_loss;
      report.best_epoch = epoch;
      if (o.keep_best) best = snapshot(params);
    }
    if (o.log && o.log_every > 0 && (epoch % o.log_every == 0 || epoch + 1 == o.epochs)) {
      *o.log << "epoch " << epoch << " lr " << lr << " train " << rec.train_loss << " validation "
             << rec.validation_loss << "\n";
    }
  }
  if (o.keep_best && !best.empty()) restore(params, best);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<double> predict(const net::OperatorModel& model, const Dataset& ds, std::span<const std::size_t> cases) {
  std::vector<double> out;
  out.reserve(cases.size() * ds.n_t * ds.n_n * ds.n_c);
  constexpr std::size_t kBatch = 16;
  for (std::size_t b = 0; b < cases.size(); b += kBatch) {
    const auto part = cases.subspan(b, std::min(kBatch, cases.size() - b));
    const auto pred = model.forward(branch_inputs(model, ds, part), ds.times, net::OutputSpace::physical);
    out.insert(out.end(), pred.data().begin(), pred.data().end());
  }
  return out;
}

TestReport evaluate_testset(const net::OperatorModel& model, const Dataset& ds, std::size_t bins) {
  if (ds.test.empty()) throw InvalidArgument("test split is empty");
  if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
  TestReport r;
  const auto pred = predict(model, ds, ds.test);
  std::vector<double> truth;
  for (std::size_t i : ds.test) {
    const auto y = ds.case_labels(i);
    truth.insert(truth.end(), y.begin(), y.end());
    r.ids.push_back(ds.case_ids[i]);
  }
  r.metrics = compute_metrics(pred, truth, r.ids, ds.n_t, ds.n_n, ds.n_c);
  for (const auto& c : r.metrics.cases) r.scores.push_back(c.components[0].l2_lc);

  const auto [lo, hi] = std::minmax_element(r.scores.begin(), r.scores.end());
  const double width = *hi > *lo ? (*hi - *lo) / double(bins) : 1.0;
  for (std::size_t b = 0; b <= bins; ++b) r.histogram_edges.push_back(*lo + width * double(b));
  r.histogram_counts.assign(bins, 0);
  for (double s : r.scores) r.histogram_counts[std::min(bins - 1, std::size_t((s - *lo) / width))]++;

  r.p10 = percentile_case(r.scores, r.ids, 10.0);
  r.p50 = percentile_case(r.scores, r.ids, 50.0);
  r.p90 = percentile_case(r.scores, r.ids, 90.0);
  return r;
}

}  // namespace ifenn::train
