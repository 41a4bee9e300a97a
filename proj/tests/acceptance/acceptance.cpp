// Acceptance run: evaluates the eight release criteria and prints one
// PASS/FAIL line for each. Progress goes to stderr.
//
//   acceptance [--expect-fail N ...]
//
// The exit status is nonzero when a criterion fails that is not listed with
// --expect-fail. Listed criteria still print their real verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ifenn/cli.hpp"
#include "ifenn/coupling.hpp"
#include "ifenn/errors.hpp"
#include "oracles.hpp"

using namespace ifenn;
using ad::Tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// max over steps 1..N and nodes of |u_a - u_b| / max |u_b| at that step.
double max_u_rel_diff(const std::vector<fem::TransientState>& a, const std::vector<fem::TransientState>& b) {
  double worst = 0.0;
  for (std::size_t k = 1; k < b.size(); ++k) {
    const double ref = max_abs(b[k].u);
    if (ref == 0.0) continue;
    for (std::size_t i = 0; i < b[k].u.size(); ++i) worst = std::max(worst, std::abs(a[k].u[i] - b[k].u[i]) / ref);
  }
  return worst;
}

// ---- 1. keystone ---------------------------------------------------------------

double keystone_case(const train::Experiment& e) {
  const auto c = train::sample_load_case(e, 1, 0);
  const auto mono = train::simulate_case(e, c);
  coupling::OraclePredictor oracle(mono, fem::z_offset(e.material));
  auto ch = coupling::CouplingChannel::in_process();
  const auto hybrid = coupling::run_ifenn(e, c, oracle, ch);
  if (ch.strain_writes() != std::uint64_t(e.n_steps) || ch.field_reads() != std::uint64_t(e.n_steps)) return 1.0;
  return max_u_rel_diff(hybrid.states, mono);
}

Verdict criterion_keystone() {
  Verdict v;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int nodes : {4, 11}) {
    train::CubeOptions o;
    o.nodes_per_side = nodes;
    o.n_steps = 10;
    o.load_sensors_per_axis = 3;
    o.strain_sensors_per_axis = 3;
    const double d = keystone_case(train::make_cube_experiment(o));
    v.detail << " thermo " << nodes << "x" << nodes << " " << d << ";";
    worst = std::max(worst, d);

    train::ExcavationOptions x;
    x.divisions_x = nodes - 1;
    x.divisions_y = nodes - 1;
    x.n_steps = 10;
    x.strain_sensors_x = 3;
    x.strain_sensors_y = 3;
    const double p = keystone_case(train::make_excavation_experiment(x));
    v.detail << " poro " << nodes << "x" << nodes << " " << p << ";";
    worst = std::max(worst, p);
  }
  const double t = seconds_since(t0);
  v.detail << " time " << t << " s";
  v.require(worst < 1e-8, "max nodal rel diff < 1e-8");
  v.require(t < 10.0, "runtime < 10 s");
  return v;
}

// ---- 2. FEM correctness ----------------------------------------------------------

Verdict criterion_fem() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto t = oracle::unit_thermo();
  const auto p = oracle::unit_poro();
  double min_rate = 1e9;
  for (auto [mat, ms] : {std::pair{fem::Material(t), oracle::Manufactured::thermo(t)},
                         std::pair{fem::Material(p), oracle::Manufactured::poro(p)}}) {
    std::vector<std::pair<double, double>> errs;
    for (int n : {4, 8, 16, 32}) errs.push_back(oracle::manufactured_errors(mat, ms, n));
    v.detail << " " << fem::to_string(fem::problem_of(mat)) << " rates";
    for (std::size_t k = 1; k < errs.size(); ++k) {
      const double ru = std::log2(errs[k - 1].first / errs[k].first);
      const double rz = std::log2(errs[k - 1].second / errs[k].second);
      v.detail << " (" << ru << "," << rz << ")";
      min_rate = std::min({min_rate, ru, rz});
    }
    v.detail << ";";
  }
  const double mms_time = seconds_since(t0);
  v.require(min_rate >= 1.8, "L2 rate >= 1.8");
  v.require(mms_time < 60.0, "MMS < 60 s");

  auto mat = oracle::unit_poro();
  mat.k_solid = 1e3;
  const double H = 1.0, q = 1.0;
  const int divs[] = {1, 40};
  const double ext[] = {0.05, H};
  const auto m = mesh::build_structured_grid(2, divs, ext);
  fem::LoadSpec loads;
  loads.dirichlet = {{"left", 0, oracle::constant(0.0)},   {"right", 0, oracle::constant(0.0)},
                     {"bottom", 0, oracle::constant(0.0)}, {"bottom", 1, oracle::constant(0.0)},
                     {"top", 2, oracle::constant(0.0)}};
  loads.tractions.push_back({"top", [q](const mesh::Point&, double) { return mesh::Point{0.0, -q, 0.0}; }});
  const oracle::Terzaghi series(mat, H, q);
  const auto states = fem::run_monolithic_transient(m, mat, loads, 0.01, 40);
  auto max_error = [&](int j) {
    const std::size_t n = m.node_index(0, j);
    const double depth = H - m.node(n)[1];
    double e = 0.0;
    for (int k = 3; k <= 40; ++k) {
      e = std::max(e, std::abs(states[k].z[n] - series.pressure(depth, states[k].time)) / series.p0);
    }
    return e;
  };
  const double worst = std::max(max_error(0), max_error(20));
  v.detail << " MMS time " << mms_time << " s; Terzaghi max error at base and mid-height " << worst * 100
           << "% of p0 (quarter depth, not gated: " << max_error(30) * 100 << "%)";
  v.require(worst < 0.02, "Terzaghi within 2%");
  return v;
}

// ---- 3. network math ---------------------------------------------------------------

Verdict criterion_network() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  // scalar cell with unit weights and zero biases, x = 1, h = 0
  auto unit = net::GruCell::create(1, 1, rng);
  for (Tensor* p : unit.parameters()) std::fill(p->mutable_data().begin(), p->mutable_data().end(), 1.0);
  for (Tensor* b : {&unit.b_r, &unit.b_z, &unit.b_h}) std::fill(b->mutable_data().begin(), b->mutable_data().end(), 0.0);
  const double h1 = net::gru_step(unit, Tensor::from({1, 1}, {1.0}), Tensor::zeros({1, 1})).item();
  double gru_err = std::abs(h1 - (1.0 - oracle::sig(1.0)) * std::tanh(1.0));

  auto big = net::GruCell::create(5, 4, rng);
  for (Tensor* p : big.parameters()) {
    auto r = random_values(p->numel(), rng);
    std::copy(r.begin(), r.end(), p->mutable_data().begin());
  }
  const auto x = random_values(15, rng), h0 = random_values(12, rng);
  const auto out = net::gru_step(big, Tensor::from({3, 5}, x), Tensor::from({3, 4}, h0));
  for (std::size_t b = 0; b < 3; ++b) {
    const auto ref = oracle::gru_step(big, std::span(x).subspan(b * 5, 5), std::span(h0).subspan(b * 4, 4));
    for (std::size_t j = 0; j < 4; ++j) gru_err = std::max(gru_err, std::abs(out.data()[b * 4 + j] - ref[j]));
  }
  v.detail << " GRU max diff " << gru_err << ";";
  v.require(gru_err <= 1e-12, "GRU step within 1e-12");

  bool merge_exact = true;
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<std::size_t> w(1, 8);
    const std::size_t B = w(rng) % 3 + 1, T = w(rng) % 4 + 1, N = w(rng), C = w(rng) % 4 + 1;
    const std::size_t D1 = w(rng), D2 = w(rng);
    const auto b1 = Tensor::from({B, T, D1 * C}, random_values(B * T * D1 * C, rng));
    const auto b2 = Tensor::from({B, T, D2 * C}, random_values(B * T * D2 * C, rng));
    const auto tr = Tensor::from({N, (D1 + D2) * C}, random_values(N * (D1 + D2) * C, rng));
    const auto bias = Tensor::from({C}, random_values(C, rng));
    const auto got = ad::merge_reduce({b1, b2}, tr, bias, C);
    const auto ref = oracle::merge_reduce({b1, b2}, tr, bias, C);
    merge_exact = merge_exact && std::equal(ref.begin(), ref.end(), got.data().begin());
  }
  v.detail << " merge " << (merge_exact ? "bit-exact" : "differs") << ";";
  v.require(merge_exact, "merge_and_reduce equals brute force");

  net::ModelConfig cfg;
  cfg.branches = {{3, 2, 4, 0, 2, 2}, {4, 1, 4, 2, 1, 2}};
  cfg.trunk = {2, 2, 4, 4};
  cfg.components = 1;
  net::OperatorModel model(cfg, 31);
  std::vector<mesh::Point> nodes;
  for (int j = 0; j <= 2; ++j) {
    for (int i = 0; i <= 2; ++i) nodes.push_back({i / 2.0, j / 2.0, 0.0});
  }
  model.set_nodes(nodes);
  model.set_output_scaling({1.5}, {0.25});
  for (auto& p : model.parameters()) {
    if (p.rank() == 1) {
      const auto r = random_values(p.numel(), rng, -0.5, 0.5);
      for (std::size_t i = 0; i < r.size(); ++i) p.mutable_data()[i] += r[i];
    }
  }
  const auto load = Tensor::from({2, 3, 3}, random_values(18, rng, -2, 2));
  const auto strain = Tensor::from({2, 3, 4}, random_values(24, rng, -2, 2));
  const std::vector<double> times{600, 1200, 1800};
  const double fd = oracle::gradient_error(
      model.parameters(), [&] { return ad::sum(model.forward({load, strain}, times)); }, 1e-6);
  const double t = seconds_since(t0);
  v.detail << " full-model gradient rel error " << fd << "; time " << t << " s";
  v.require(fd < 1e-4, "finite-difference gradient < 1e-4");
  v.require(t < 30.0, "runtime < 30 s");
  return v;
}

// ---- 4. BC enforcement -------------------------------------------------------------

double bc_violation(const net::OperatorModel& model, const train::Dataset& ds, const train::Experiment& e) {
  const auto pred = train::predict(model, ds, ds.test);
  const std::size_t N = ds.n_n, T = ds.n_t;
  const auto left = mesh::boundary_nodes(e.mesh, "left");
  const auto top = mesh::boundary_nodes(e.mesh, "top");
  double worst = 0.0;
  for (std::size_t c = 0; c < ds.test.size(); ++c) {
    for (std::size_t k = 0; k < T; ++k) {
      const double t = ds.times[k];
      const double gamma = std::min(t / 1800.0, 1.0);
      const double* g = pred.data() + (c * T + k) * N;
      for (auto n : left) worst = std::max(worst, std::abs(g[n]));
      for (auto n : top) worst = std::max(worst, std::abs(g[n] - 10.0 * e.mesh.node(n)[0] * gamma));
    }
  }
  return worst;
}

// ---- 5/6. desk-scale training --------------------------------------------------------

struct Desk {
  cli::Config config;
  train::Experiment experiment;
  train::Dataset dataset;
};

Desk make_desk() {
  Desk d{cli::preset("cube"), {}, {}};
  d.experiment = cli::build_experiment(d.config);
  const auto cases =
      train::sample_load_cases(d.experiment, d.config.get_size("data.cases"), d.config.get_int("data.seed"));
  d.dataset = train::label_dataset(d.experiment, cases, cli::build_label_options(d.config));
  return d;
}

net::OperatorModel train_desk(const Desk& d, std::size_t norm_channels, train::TrainReport* report) {
  auto c = d.config;
  c.set("branch_strain.norm_channels", std::to_string(norm_channels));
  net::OperatorModel model(cli::build_model_config(c, d.experiment), std::uint64_t(c.get_int("model.seed")));
  train::prepare_model(model, d.dataset);
  model.set_bc(d.experiment.bc());
  auto opts = cli::build_train_options(c);
  opts.log = &std::cerr;
  opts.log_every = 250;
  *report = train::train(model, d.dataset, opts);
  return model;
}

/// Largest eps_rel over nodes with |y| >= 10% of the step's field max.
double masked_eps_rel(const fem::TransientState& hybrid, const fem::TransientState& mono, double z0, double eps_tol) {
  std::vector<double> p(mono.z.size()), y(mono.z.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    p[n] = hybrid.z[n] - z0;
    y[n] = mono.z[n] - z0;
  }
  const double cut = 0.1 * max_abs(y);
  double worst = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    if (std::abs(y[n]) >= cut) worst = std::max(worst, std::abs(y[n] - p[n]) / (std::abs(y[n]) + eps_tol));
  }
  return worst;
}

struct AccuracyResult {
  Verdict verdict;
  std::size_t median_case = 0;
};

AccuracyResult criterion_accuracy(const Desk& d, const net::OperatorModel& model, const train::TrainReport& rep,
                                  double train_seconds) {
  AccuracyResult r;
  auto& v = r.verdict;
  const auto& e = d.experiment;
  const auto test = train::evaluate_testset(model, d.dataset);
  r.median_case = test.p50;
  const auto lc = train::sample_load_case(e, d.dataset.seed, test.p50);
  const auto mono = train::simulate_case(e, lc);
  coupling::NetworkPredictor predictor(model, d.dataset.normalization, e, lc);
  auto ch = coupling::CouplingChannel::in_process();
  const auto hybrid = coupling::run_ifenn(e, lc, predictor, ch);
  const auto cmp = coupling::compare_vs_monolithic(e, hybrid.states, mono);
  const double z0 = fem::z_offset(e.material);

  double worst_any = 0.0;
  for (std::size_t k = 1; k < mono.size(); ++k) {
    worst_any = std::max(worst_any, masked_eps_rel(hybrid.states[k], mono[k], z0, cmp.eps_tol[0]));
  }
  const double final_eps = masked_eps_rel(hybrid.states.back(), mono.back(), z0, cmp.eps_tol[0]);
  const double ratio = cmp.l2_lc[0] / cmp.u_l2_lc;
  v.detail << " trained " << rep.history.size() << " epochs in " << train_seconds << " s (best epoch "
           << rep.best_epoch << "); test L2_all " << test.metrics.l2_all[0] << "; median case " << test.p50
           << ": final-step masked eps_rel " << final_eps << " (worst over all steps " << worst_any << "); L2_LC z "
           << cmp.l2_lc[0] << ", u " << cmp.u_l2_lc << ", ratio z/u " << ratio;
  v.require(final_eps < 0.10, "eps_rel < 10% at the final step");
  v.require(ratio >= 10.0, "L2_LC(u) <= 0.1 L2_LC(z)");
  v.require(train_seconds < 1800.0, "training within 30 min");
  return r;
}

Verdict criterion_stability(const Desk& d, const net::OperatorModel& with_norm, const net::OperatorModel& without_norm,
                            std::size_t case_id) {
  Verdict v;
  const auto& e = d.experiment;
  const auto cfg = cli::build_stability(d.config, e.n_steps);
  const auto lc = train::sample_load_case(e, d.dataset.seed, case_id);
  const auto reference = train::simulate_case(e, lc);
  coupling::NetworkPredictor p1(with_norm, d.dataset.normalization, e, lc);
  coupling::NetworkPredictor p0(without_norm, d.dataset.normalization, e, lc);
  const auto a = coupling::run_stability_study(e, lc, p1, reference, cfg);
  const auto b = coupling::run_stability_study(e, lc, p0, reference, cfg);

  std::ofstream csv("acceptance_stability.csv");
  csv << "step,z_groupnorm,strain_groupnorm,z_plain,strain_plain\n";
  std::cout << "stability curves (case " << case_id << ", switch_field " << cfg.switch_field << ", switch_strain "
            << cfg.switch_strain << ")\n  step  z[N_ch>0]  strain[N_ch>0]  z[N_ch=0]  strain[N_ch=0]\n";
  for (std::size_t k = 0; k < a.z_error.size(); ++k) {
    csv << k + 1 << "," << a.z_error[k] << "," << a.strain_error[k] << "," << b.z_error[k] << "," << b.strain_error[k]
        << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "  %4zu  %9.3e  %14.3e  %9.3e  %14.3e\n", k + 1, a.z_error[k], a.strain_error[k],
                  b.z_error[k], b.strain_error[k]);
    std::cout << line;
  }

  auto bound = [&](const std::vector<double>& z, double& mean, double& worst) {
    mean = 0.0;
    for (int k = 0; k < cfg.switch_field; ++k) mean += z[k];
    mean /= cfg.switch_field;
    const std::size_t n = z.size(), first = n - n / 3;
    worst = *std::max_element(z.begin() + first, z.end());
    return worst <= 3.0 * mean;
  };
  double m1, w1, m0, w0;
  const bool ok1 = bound(a.z_error, m1, w1);
  const bool ok0 = bound(b.z_error, m0, w0);
  v.detail << " N_ch>0: teacher-forced mean " << m1 << ", final-third max " << w1 << " (" << w1 / m1
           << "x); N_ch=0: mean " << m0 << ", final-third max " << w0 << " (" << w0 / m0 << "x, "
           << (ok0 ? "within" : "outside") << " the bound, not required)";
  v.require(ok1, "group-norm final third <= 3x teacher-forced mean");
  return v;
}

// ---- 7. timing --------------------------------------------------------------------

Verdict criterion_timing() {
  Verdict v;
  auto c = cli::preset("cube");
  c.set("experiment.nodes_per_side", "31");
  const auto e = cli::build_experiment(c);
  const auto lc = train::sample_load_case(e, 1, 0);
  std::vector<fem::StepStats> mono_stats;
  const auto mono = train::simulate_case(e, lc, &mono_stats);
  coupling::OraclePredictor oracle(mono, fem::z_offset(e.material));
  auto ch = coupling::CouplingChannel::in_process();
  const auto hybrid = coupling::run_ifenn(e, lc, oracle, ch);
  double ms = 0.0, hs = 0.0;
  bool ratio_ok = true;
  for (std::size_t k = 0; k < mono_stats.size(); ++k) {
    ms += mono_stats[k].solve_seconds;
    hs += hybrid.stats[k].solve_seconds;
    ratio_ok = ratio_ok && hybrid.stats[k].dofs * 3 == mono_stats[k].dofs * 2;
  }
  ms /= mono_stats.size();
  hs /= mono_stats.size();

  train::CubeOptions o3;
  o3.dim = 3;
  o3.nodes_per_side = 5;
  o3.n_steps = 1;
  o3.load_sensors_per_axis = 2;
  o3.strain_sensors_per_axis = 2;
  const auto e3 = train::make_cube_experiment(o3);
  const auto lc3 = train::sample_load_case(e3, 1, 0);
  std::vector<fem::StepStats> m3;
  const auto mono3 = train::simulate_case(e3, lc3, &m3);
  coupling::OraclePredictor oracle3(mono3, fem::z_offset(e3.material));
  auto ch3 = coupling::CouplingChannel::in_process();
  const auto h3 = coupling::run_ifenn(e3, lc3, oracle3, ch3);
  ratio_ok = ratio_ok && h3.stats[0].dofs * 4 == m3[0].dofs * 3;

  v.detail << " 2D 31x31: dofs " << mono_stats[0].dofs << " -> " << hybrid.stats[0].dofs << "; 3D 5^3: dofs "
           << m3[0].dofs << " -> " << h3.stats[0].dofs << "; mean solve per step monolithic " << ms
           << " s, mechanics-only " << hs << " s (desk-scale, directional only)";
  v.require(ratio_ok, "dof ratio n/(n+1)");
  v.require(hs < ms, "mechanics-only solve faster");
  return v;
}

// ---- 8. metrics -----------------------------------------------------------------------

Verdict criterion_metrics() {
  Verdict v;
  double err = 0.0;
  auto near = [&](double got, double want) { err = std::max(err, std::abs(got - want)); };
  const std::vector<double> yt{0.0, 5.0}, yp{-3.0, 1.0};
  near(train::compute_loss(train::LossKind::kL2, yp, yt), 5.0);
  near(train::compute_loss(train::LossKind::kSSE, yp, yt), 25.0);
  near(train::compute_loss(train::LossKind::kMSE, yp, yt), 12.5);
  near(train::compute_loss(train::LossKind::kL2Norm, yp, yt), 1.0);
  for (auto k : {train::LossKind::kL2, train::LossKind::kSSE, train::LossKind::kMSE, train::LossKind::kL2Norm}) {
    near(train::compute_loss(k, yt, yt), 0.0);
  }
  std::mt19937_64 rng(4);
  const auto a = random_values(37, rng), b = random_values(37, rng);
  near(train::compute_loss(train::LossKind::kSSE, a, b), 37.0 * train::compute_loss(train::LossKind::kMSE, a, b));
  const std::vector<double> steps{0.3, 0.4};
  near(train::rms(steps), std::sqrt((0.09 + 0.16) / 2.0));

  // two steps, two nodes: per-step L2 0.3 and 0.4 by construction
  const std::vector<double> truth{3.0, 4.0, 0.0, 5.0}, pred{3.0 - 0.9, 4.0 - 1.2, 1.2, 5.0 + 1.6};
  const std::size_t id[] = {0};
  const auto rep = train::compute_metrics(pred, truth, id, 2, 2, 1);
  near(rep.cases[0].components[0].l2_t[0], 0.3);
  near(rep.cases[0].components[0].l2_t[1], 0.4);
  near(rep.cases[0].components[0].l2_lc, std::sqrt(0.125));
  near(rep.l2_all[0], std::sqrt(0.125));
  near(rep.eps_tol[0], 5e-5);
  const auto eps = train::relative_error(pred, truth, 5e-5);
  near(eps[2], 1.2 / 5e-5);  // y_true = 0

  std::vector<double> scores;
  std::vector<std::size_t> ids;
  for (int i = 1; i <= 10; ++i) {
    scores.push_back(0.1 * i);
    ids.push_back(100 + (i * 7) % 10);
  }
  const bool ranks = train::percentile_case(scores, ids, 10) == ids[0] &&
                     train::percentile_case(scores, ids, 50) == ids[4] &&
                     train::percentile_case(std::vector<double>(4, 1.0), std::vector<std::size_t>{9, 3, 7, 5}, 50) == 3;
  v.detail << " worst deviation " << err << "; percentiles " << (ranks ? "ok" : "wrong");
  v.require(err <= 1e-12, "examples within 1e-12");
  v.require(ranks, "nearest-rank percentiles with lowest-id ties");

  // denormalization happens before the metrics
  train::CubeOptions o;
  o.nodes_per_side = 5;
  o.n_steps = 4;
  o.load_sensors_per_axis = 3;
  o.strain_sensors_per_axis = 3;
  const auto e = train::make_cube_experiment(o);
  train::LabelOptions lo;
  lo.n_test = 3;
  const auto ds = train::label_dataset(e, train::sample_load_cases(e, 8, 2), lo);
  net::ModelConfig cfg;
  cfg.branches = {{ds.n_l, 1, 8, 0, 1, 8}, {ds.n_s, 1, 8, 0, 1, 8}};
  cfg.trunk = {ds.n_d, 2, 16, 16};
  net::OperatorModel model(cfg, 4);
  train::prepare_model(model, ds);
  const auto test = train::evaluate_testset(model, ds);
  const auto normalized =
      model.forward(train::branch_inputs(model, ds, ds.test), ds.times, net::OutputSpace::normalized);
  const auto& st = ds.normalization.labels[0];
  std::vector<double> phys, truth_phys, truth_norm;
  for (double x : normalized.data()) phys.push_back(st.denormalize(x));
  for (std::size_t i : ds.test) {
    for (double y : ds.case_labels(i)) {
      truth_phys.push_back(y);
      truth_norm.push_back(st.normalize(y));
    }
  }
  const auto by_hand = train::compute_metrics(phys, truth_phys, test.ids, ds.n_t, ds.n_n, 1);
  const auto in_norm_space = train::compute_metrics(
      std::vector<double>(normalized.data().begin(), normalized.data().end()), truth_norm, test.ids, ds.n_t, ds.n_n, 1);
  const double diff = std::abs(test.metrics.l2_all[0] - by_hand.l2_all[0]) / by_hand.l2_all[0];
  v.detail << "; denormalized L2_all " << test.metrics.l2_all[0] << " vs hand route " << by_hand.l2_all[0]
           << " (normalized-space value " << in_norm_space.l2_all[0] << ")";
  v.require(diff <= 1e-12, "report uses denormalized values");
  v.require(std::abs(in_norm_space.l2_all[0] - by_hand.l2_all[0]) > 1e-6, "normalization changes the metric");
  return v;
}

template <typename F>
Verdict guarded(const char* name, F&& f) {
  std::cerr << "criterion " << name << " ..." << std::endl;
  try {
    return f();
  } catch (const std::exception& e) {
    Verdict v;
    v.pass = false;
    v.detail << " exception: " << e.what();
    return v;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      expect_fail.insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--expect-fail N ...]\n";
      return 2;
    }
  }
  const auto start = Clock::now();
  std::map<int, std::pair<std::string, Verdict>> results;
  auto record = [&](int n, const char* title, Verdict v) { results[n] = {title, std::move(v)}; };

  record(1, "keystone equivalence", guarded("1", criterion_keystone));
  record(2, "FEM correctness", guarded("2", criterion_fem));
  record(3, "network math", guarded("3", criterion_network));
  record(7, "timing (structural)", guarded("7", criterion_timing));
  record(8, "metrics conformance", guarded("8", criterion_metrics));

  std::cerr << "labeling the desk cube dataset ..." << std::endl;
  Desk desk;
  std::string desk_error;
  try {
    desk = make_desk();
  } catch (const std::exception& e) {
    desk_error = e.what();
  }
  if (desk_error.empty()) {
    std::cerr << "training the desk cube model (group norm) ..." << std::endl;
    train::TrainReport rep1, rep0;
    const auto t0 = Clock::now();
    std::optional<net::OperatorModel> model1;
    try {
      model1 = train_desk(desk, desk.config.get_size("branch_strain.norm_channels"), &rep1);
    } catch (const std::exception& e) {
      desk_error = e.what();
    }
    const double train_seconds = seconds_since(t0);
    if (model1) {
      record(4, "BC enforcement", guarded("4", [&] {
               Verdict v;
               const auto cfg = model1->config();
               net::OperatorModel untrained(cfg, 99);
               train::prepare_model(untrained, desk.dataset);
               untrained.set_bc(desk.experiment.bc());
               const double u = bc_violation(untrained, desk.dataset, desk.experiment);
               const double t = bc_violation(*model1, desk.dataset, desk.experiment);
               v.detail << " max |T~ - g| on left/top faces: untrained " << u << ", trained " << t;
               v.require(u <= 1e-12 && t <= 1e-12, "exact Dirichlet values");
               return v;
             }));
      std::size_t median = 0;
      record(5, "desk-scale accuracy", guarded("5", [&] {
               auto r = criterion_accuracy(desk, *model1, rep1, train_seconds);
               median = r.median_case;
               return std::move(r.verdict);
             }));
      std::cerr << "training the desk cube model (no group norm) ..." << std::endl;
      record(6, "stability contrast", guarded("6", [&] {
               const auto model0 = train_desk(desk, 0, &rep0);
               return criterion_stability(desk, *model1, model0, median);
             }));
    }
  }
  for (int n : {4, 5, 6}) {
    if (!results.count(n)) {
      Verdict v;
      v.pass = false;
      v.detail << " desk setup failed: " << desk_error;
      record(n, n == 4 ? "BC enforcement" : n == 5 ? "desk-scale accuracy" : "stability contrast", std::move(v));
    }
  }

  int unexpected = 0, passed = 0;
  for (auto& [n, r] : results) {
    const bool ok = r.second.pass;
    passed += ok;
    if (!ok && !expect_fail.count(n)) ++unexpected;
    std::cout << (ok ? "PASS" : "FAIL") << " " << n << " " << r.first << ":" << r.second.detail.str()
              << (!ok && expect_fail.count(n) ? " (known failure)" : "") << "\n";
  }
  std::cout << passed << "/" << results.size() << " criteria passed in " << seconds_since(start) << " s\n";
  return unexpected == 0 ? 0 : 1;
}
