#include <algorithm>
#include <cmath>
#include <numeric>

#include "ifenn/errors.hpp"
#include "ifenn/training.hpp"

namespace ifenn::train {

double l2_step(std::span<const double> y_pred, std::span<const double> y_true) {
  if (y_pred.size() != y_true.size()) throw InvalidArgument("metric operands differ in size");
  double ee = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    ee += e * e;
    yy += y_true[i] * y_true[i];
  }
  return yy > 0.0 ? std::sqrt(ee / yy) : std::sqrt(ee);
}

double rms(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s / double(values.size()));
}

double epsilon_tolerance(std::span<const double> y_true) {
  double m = 0.0;
  for (double v : y_true) m = std::max(m, std::abs(v));
  return 1e-5 * m;
}

std::vector<double> relative_error(std::span<const double> y_pred, std::span<const double> y_true, double eps_tol) {
  if (y_pred.size() != y_true.size()) throw InvalidArgument("metric operands differ in size");
  std::vector<double> out(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double den = std::abs(y_true[i]) + eps_tol;
    const double e = std::abs(y_true[i] - y_pred[i]);
    out[i] = den > 0.0 ? e / den : (e > 0.0 ? INFINITY : 0.0);
  }
  return out;
}

MetricReport compute_metrics(std::span<const double> y_pred, std::span<const double> y_true,
                             std::span<const std::size_t> case_ids, std::size_t n_t, std::size_t n_n,
                             std::size_t n_c) {
  const std::size_t per_case = n_t * n_n * n_c;
  if (y_pred.size() != y_true.size() || y_true.size() != case_ids.size() * per_case) {
    throw InvalidArgument("metric arrays do not match [cases, N_t, N_n, N_c]");
  }
  MetricReport r;
  r.eps_tol.assign(n_c, 0.0);
  std::vector<double> p(n_n), y(n_n);
  std::vector<std::vector<double>> lc(n_c);
  for (std::size_t i = 0; i < case_ids.size(); ++i) {
    CaseMetrics cm;
    cm.case_id = case_ids[i];
    cm.components.resize(n_c);
    for (std::size_t c = 0; c < n_c; ++c) {
      auto& comp = cm.components[c];
      for (std::size_t t = 0; t < n_t; ++t) {
        const std::size_t base = i * per_case + t * n_n * n_c;
        for (std::size_t n = 0; n < n_n; ++n) {
          p[n] = y_pred[base + n * n_c + c];
          y[n] = y_true[base + n * n_c + c];
          r.eps_tol[c] = std::max(r.eps_tol[c], std::abs(y[n]));
        }
        comp.l2_t.push_back(l2_step(p, y));
      }
      comp.l2_lc = rms(comp.l2_t);
      lc[c].push_back(comp.l2_lc);
    }
    r.cases.push_back(std::move(cm));
  }
  for (std::size_t c = 0; c < n_c; ++c) {
    r.l2_all.push_back(rms(lc[c]));
    r.eps_tol[c] *= 1e-5;
  }
  return r;
}

std::size_t percentile_case(std::span<const double> scores, std::span<const std::size_t> ids, double percent) {
  if (scores.empty() || scores.size() != ids.size()) throw InvalidArgument("percentile needs matching scores and ids");
  if (!(percent > 0.0 && percent <= 100.0)) throw InvalidArgument("percentile must be in (0, 100]");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] < scores[b] : ids[a] < ids[b];
  });
  const auto n = double(scores.size());
  const std::size_t rank = std::max<std::size_t>(1, std::size_t(std::ceil(percent / 100.0 * n - 1e-9)));
  const double v = scores[order[rank - 1]];
  std::size_t best = ids[order[rank - 1]];
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k] == v) best = std::min(best, ids[k]);
  }
  return best;
}

}  // namespace ifenn::train
