#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "ifenn/cli.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::cli {
namespace {

namespace fs = std::filesystem;

// Stream that writes to the console and to the run log.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return traits_type::not_eof(ch);
    const bool ok = a_->sputc(char(ch)) != traits_type::eof() && b_->sputc(char(ch)) != traits_type::eof();
    return ok ? ch : traits_type::eof();
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    a_->sputn(s, n);
    return b_->sputn(s, n);
  }
  int sync() override { return (a_->pubsync() == 0 && b_->pubsync() == 0) ? 0 : -1; }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

class Report : public std::ostream {
 public:
  Report(std::ostream& console, const std::string& log_path)
      : std::ostream(nullptr), log_(log_path), buf_(console.rdbuf(), log_.rdbuf()) {
    rdbuf(&buf_);
  }

 private:
  std::ofstream log_;
  TeeBuf buf_;
};

std::string make_run_dir(const CommandArgs& a) {
  std::string dir = a.run_dir;
  if (dir.empty()) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream name;
    name << a.command << "-" << std::put_time(&tm, "%Y%m%d-%H%M%S");
    dir = (fs::path(a.output_root) / name.str()).string();
    for (int n = 2; fs::exists(dir); ++n) {
      dir = (fs::path(a.output_root) / (name.str() + "-" + std::to_string(n))).string();
    }
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw ConfigError("cannot create run directory " + dir);
  return dir;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("this command needs --") + what);
  if (!fs::exists(path)) throw NotFound(std::string(what) + " " + path + " not found");
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// The dataset must have been labeled on the configured experiment.
void check_chain(const train::Dataset& ds, const train::Experiment& e) {
  auto mismatch = [&](const char* what, std::size_t have, std::size_t want) {
    throw ConfigError(std::string(what) + " mismatch: dataset has " + std::to_string(have) +
                      ", configured experiment has " + std::to_string(want));
  };
  if (ds.family != train::to_string(e.family)) {
    throw ConfigError("family mismatch: dataset is '" + ds.family + "', configured experiment is '" +
                      train::to_string(e.family) + "'");
  }
  if (ds.n_n != e.mesh.node_count()) mismatch("N_n", ds.n_n, e.mesh.node_count());
  if (ds.n_l != e.load_size()) mismatch("N_l", ds.n_l, e.load_size());
  if (ds.n_s != e.strain_size()) mismatch("N_s", ds.n_s, e.strain_size());
  if (ds.n_d != std::size_t(e.mesh.dim())) mismatch("N_d", ds.n_d, e.mesh.dim());
  if (ds.n_t != std::size_t(e.n_steps)) mismatch("N_t", ds.n_t, e.n_steps);
}

/// The checkpoint must fit the configured experiment.
void check_model(const net::OperatorModel& m, const train::Experiment& e) {
  const auto& cfg = m.config();
  auto mismatch = [&](const char* what, std::size_t have, std::size_t want) {
    throw ConfigError(std::string(what) + " mismatch: checkpoint expects " + std::to_string(have) +
                      ", configured experiment has " + std::to_string(want));
  };
  if (cfg.branches[0].input_size != e.load_size()) mismatch("N_l", cfg.branches[0].input_size, e.load_size());
  if (cfg.branches.size() > 1 && cfg.branches[1].input_size != e.strain_size()) {
    mismatch("N_s", cfg.branches[1].input_size, e.strain_size());
  }
  if (cfg.trunk.input_size != std::size_t(e.mesh.dim())) mismatch("N_d", cfg.trunk.input_size, e.mesh.dim());
}

struct LoadedModel {
  net::OperatorModel model;
  train::NormalizationSpec norm;
};

LoadedModel load_model(const std::string& path, const train::Experiment& e) {
  require_file(path, "checkpoint");
  LoadedModel lm{net::OperatorModel::load(path), train::load_normalization(path + ".norm")};
  check_model(lm.model, e);
  lm.model.set_nodes(e.mesh.nodes());
  lm.model.set_bc(e.bc());
  return lm;
}

std::uint64_t case_seed(const Config& c) { return std::uint64_t(c.get_int("data.seed")); }

/// Case id from "<id>" or "p10" / "p50" / "p90"; percentiles need the test
/// split of a dataset and a checkpoint.
std::size_t select_case(const std::string& spec, const CommandArgs& a, const train::Experiment& e, Report& r) {
  if (spec.empty()) throw ConfigError("no load case selected");
  if (spec[0] != 'p') {
    try {
      std::size_t used = 0;
      const auto id = std::stoull(spec, &used);
      if (used == spec.size()) return std::size_t(id);
    } catch (const std::exception&) {
    }
    throw ConfigError("case '" + spec + "' is neither an id nor p10 / p50 / p90");
  }
  if (spec != "p10" && spec != "p50" && spec != "p90") throw ConfigError("percentile case must be p10, p50 or p90");
  require_file(a.dataset, "dataset");
  auto ds = train::load_dataset(a.dataset);
  check_chain(ds, e);
  auto lm = load_model(a.checkpoint, e);
  ds.normalization = lm.norm;
  const auto rep = train::evaluate_testset(lm.model, ds);
  const std::size_t id = spec == "p10" ? rep.p10 : spec == "p50" ? rep.p50 : rep.p90;
  r << "selected " << spec << " test case " << id << "\n";
  return id;
}

std::uint64_t seed_for_cases(const CommandArgs& a, const Config& c) {
  if (!a.dataset.empty() && fs::exists(a.dataset)) return train::load_dataset(a.dataset).seed;
  return case_seed(c);
}

fem::LoadSpec scaled(fem::LoadSpec s, double k) {
  if (k == 1.0) return s;
  if (s.body_force) {
    s.body_force = [f = s.body_force, k](const mesh::Point& p, double t) {
      mesh::Point v = f(p, t);
      for (double& x : v) x *= k;
      return v;
    };
  }
  auto scale = [k](fem::ScalarField f) -> fem::ScalarField {
    if (!f) return f;
    return [f, k](const mesh::Point& p, double t) { return k * f(p, t); };
  };
  s.source = scale(s.source);
  for (auto& q : s.fluxes) q.value = scale(q.value);
  for (auto& d : s.dirichlet) d.value = scale(d.value);
  for (auto& tr : s.tractions) {
    tr.value = [f = tr.value, k](const mesh::Point& p, double t) {
      mesh::Point v = f(p, t);
      for (double& x : v) x *= k;
      return v;
    };
  }
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// max over steps and nodes of |u_a - u_b| / max |u_b| at that step.
double max_displacement_rel_diff(const std::vector<fem::TransientState>& a,
                                 const std::vector<fem::TransientState>& b) {
  double worst = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    const double ref = std::max(max_abs(b[k].u), 1e-300);
    for (std::size_t i = 0; i < a[k].u.size(); ++i) worst = std::max(worst, std::abs(a[k].u[i] - b[k].u[i]) / ref);
  }
  return worst;
}

void write_state_vtk(const std::string& path, const train::Experiment& e, const fem::TransientState& s) {
  const double z0 = fem::z_offset(e.material);
  std::vector<double> z(s.z);
  for (double& v : z) v -= z0;
  const char* scalar = e.problem() == fem::Problem::kThermo ? "T_increment" : "p";
  fem::write_vtk(path, e.mesh,
                 {{scalar, z, 1}, {"u", s.u, int(e.mesh.dim())}, {"strain_trace", s.strain_trace, 1}},
                 e.name + " step " + std::to_string(s.step));
}

std::string step_name(const std::string& stem, int step) {
  std::ostringstream os;
  os << stem << "_" << std::setw(4) << std::setfill('0') << step << ".vtk";
  return os.str();
}

// ---- commands ----------------------------------------------------------------

int cmd_generate(const CommandArgs& a, const Config& c, const std::string& dir, Report& r) {
  const auto e = build_experiment(c);
  const auto cases = train::sample_load_cases(e, c.get_size("data.cases"), case_seed(c));
  const auto opts = build_label_options(c);
  r << "labeling " << cases.size() << " " << e.name << " cases (" << e.mesh.node_count() << " nodes, " << e.n_steps
    << " steps, " << opts.threads << " threads)\n";
  r.flush();
  auto ds = train::label_dataset(e, cases, opts);
  const std::string path = a.dataset.empty() ? in_dir(dir, "dataset.ifnd") : a.dataset;
  train::save_dataset(path, ds);
  r << "dataset " << path << "\n";
  r << "cases " << ds.n_cases() << ": train " << ds.train.size() << ", validation " << ds.validation.size()
    << ", test " << ds.test.size() << "\n";
  r << "shapes N_t " << ds.n_t << ", N_l " << ds.n_l << ", N_s " << ds.n_s << ", N_n " << ds.n_n << ", N_c "
    << ds.n_c << "\n";
  r << "hash " << hex(fnv1a_file(path)) << "\n";
  if (!ds.failures.empty()) {
    r << ds.failures.size() << " cases failed:\n";
    for (const auto& [id, what] : ds.failures) r << "  case " << id << ": " << what << "\n";
    return kNumerical;
  }
  return kOk;
}

int cmd_train(const CommandArgs& a, const Config& c, const std::string& dir, Report& r) {
  require_file(a.dataset, "dataset");
  const auto e = build_experiment(c);
  const auto ds = train::load_dataset(a.dataset);
  check_chain(ds, e);
  const auto mc = build_model_config(c, e);
  net::OperatorModel model(mc, std::uint64_t(c.get_int("model.seed")));
  train::prepare_model(model, ds);
  model.set_bc(e.bc());
  auto opts = build_train_options(c);
  opts.log = &r;
  r << mc.describe() << "parameters " << model.parameter_count() << std::endl;
  const auto rep = train::train(model, ds, opts);

  const std::string ckpt = a.checkpoint.empty() ? in_dir(dir, "model.ifnc") : a.checkpoint;
  model.save(ckpt);
  train::save_normalization(ckpt + ".norm", ds.normalization);
  fem::CsvWriter hist(in_dir(dir, "history.csv"), {"epoch", "learning_rate", "train_loss", "validation_loss"});
  for (const auto& h : rep.history) hist.row({double(h.epoch), h.learning_rate, h.train_loss, h.validation_loss});
  const auto& last = rep.history.back();
  r << "epochs " << rep.history.size() << " in " << rep.seconds << " s, final train " << last.train_loss
    << ", validation " << last.validation_loss << "\n";
  r << "best epoch " << rep.best_epoch << " (validation " << rep.best_validation << ")\n";
  r << "checkpoint " << ckpt << "\n";
  return kOk;
}

int cmd_eval(const CommandArgs& a, const Config& c, const std::string& dir, Report& r) {
  require_file(a.dataset, "dataset");
  const auto e = build_experiment(c);
  auto ds = train::load_dataset(a.dataset);
  check_chain(ds, e);
  auto lm = load_model(a.checkpoint, e);
  if (lm.model.components() != ds.n_c) {
    throw ConfigError("N_c mismatch: checkpoint predicts " + std::to_string(lm.model.components()) +
                      " components, dataset has " + std::to_string(ds.n_c));
  }
  ds.normalization = lm.norm;
  const auto rep = train::evaluate_testset(lm.model, ds, c.get_size("eval.bins"));

  std::vector<std::string> cols{"case_id"};
  for (std::size_t k = 0; k < ds.n_c; ++k) cols.push_back("l2_lc_c" + std::to_string(k));
  fem::CsvWriter cases(in_dir(dir, "test_errors.csv"), cols);
  for (const auto& cm : rep.metrics.cases) {
    std::vector<double> row{double(cm.case_id)};
    for (const auto& comp : cm.components) row.push_back(comp.l2_lc);
    cases.row(row);
  }
  fem::CsvWriter hist(in_dir(dir, "histogram.csv"), {"lower", "upper", "count"});
  for (std::size_t b = 0; b < rep.histogram_counts.size(); ++b) {
    hist.row({rep.histogram_edges[b], rep.histogram_edges[b + 1], double(rep.histogram_counts[b])});
  }
  r << "test cases " << rep.ids.size() << "\n";
  for (std::size_t k = 0; k < rep.metrics.l2_all.size(); ++k) {
    r << "L2_all component " << k << " " << rep.metrics.l2_all[k] << "\n";
  }
  r << "p10 case " << rep.p10 << "\np50 case " << rep.p50 << "\np90 case " << rep.p90 << "\n";
  return kOk;
}

int cmd_ifenn(const CommandArgs& a, const Config& c, const std::string& dir, Report& r) {
  const auto e = build_experiment(c);
  const auto id = select_case(a.case_spec.empty() ? c.get("ifenn.case") : a.case_spec, a, e, r);
  const auto lc = train::sample_load_case(e, seed_for_cases(a, c), id);
  std::vector<fem::StepStats> mono_stats;
  const auto t0 = std::chrono::steady_clock::now();
  const auto mono = train::simulate_case(e, lc, &mono_stats);
  const double mono_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<fem::TransientState> hybrid;
  double hybrid_seconds = 0.0, inference_seconds = 0.0;
  std::uint64_t exchanges = 0;
  std::string mode = "oracle";
  auto run_loop = [&](coupling::FieldPredictor& p) {
    const auto& transport = c.get("ifenn.transport");
    coupling::CouplingChannel ch = coupling::CouplingChannel::in_process();
    if (transport == "file") {
      ch = coupling::CouplingChannel::file(in_dir(dir, "channel"),
                                           std::chrono::milliseconds(c.get_int("ifenn.timeout_ms")));
    } else if (transport != "inprocess") {
      throw ConfigError("ifenn.transport must be inprocess or file, got '" + transport + "'");
    }
    auto res = coupling::run_ifenn(e, lc, p, ch);
    hybrid = std::move(res.states);
    hybrid_seconds = res.seconds;
    inference_seconds = res.inference_seconds;
    exchanges = ch.field_reads();
  };
  if (a.oracle_model) {
    coupling::OraclePredictor p(mono, fem::z_offset(e.material));
    run_loop(p);
  } else {
    auto lm = load_model(a.checkpoint, e);
    if (lm.model.config().branches.size() == 1) {
      mode = "surrogate";
      const auto ts = std::chrono::steady_clock::now();
      hybrid = coupling::run_surrogate(lm.model, lm.norm, e, lc);
      hybrid_seconds = inference_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
    } else {
      mode = "network";
      coupling::NetworkPredictor p(lm.model, lm.norm, e, lc);
      run_loop(p);
    }
  }

  const auto cmp = coupling::compare_vs_monolithic(e, hybrid, mono);
  std::vector<std::string> cols{"step", "time"};
  for (const auto& n : cmp.names) cols.push_back("l2_" + n);
  cols.push_back("l2_u");
  cols.push_back("max_eps_rel_z");
  fem::CsvWriter csv(in_dir(dir, "errors.csv"), cols);
  for (std::size_t k = 0; k < cmp.u_l2_t.size(); ++k) {
    std::vector<double> row{double(k + 1), hybrid[k + 1].time};
    for (const auto& comp : cmp.l2_t) row.push_back(comp[k]);
    row.push_back(cmp.u_l2_t[k]);
    row.push_back(*std::max_element(cmp.z_eps_rel[k].begin(), cmp.z_eps_rel[k].end()));
    csv.row(row);
  }
  if (c.get_bool("ifenn.vtk")) {
    fs::create_directories(in_dir(dir, "vtk"));
    for (std::size_t k = 1; k < hybrid.size(); ++k) {
      coupling::write_error_vtk(in_dir(in_dir(dir, "vtk"), step_name("error", int(k))), e, hybrid[k], mono[k],
                                c.get_double("ifenn.vtk_cap"));
    }
  }
  r << "case " << id << " (" << mode << " field, " << hybrid.size() - 1 << " steps)\n";
  for (std::size_t k = 0; k < cmp.names.size(); ++k) r << "L2_LC " << cmp.names[k] << " " << cmp.l2_lc[k] << "\n";
  r << "L2_LC u " << cmp.u_l2_lc << "\n";
  r << "max displacement rel diff " << max_displacement_rel_diff(hybrid, mono) << "\n";
  r << "exchanges " << exchanges << "\n";
  r << "time monolithic " << mono_seconds << " s, hybrid " << hybrid_seconds << " s (inference " << inference_seconds
    << " s)\n";
  return kOk;
}

int cmd_fem(const CommandArgs& a, const Config& c, const std::string& dir, Report& r) {
  const auto e = build_experiment(c);
  const auto spec = a.case_spec.empty() ? c.get("fem.case") : a.case_spec;
  const auto id = select_case(spec, a, e, r);
  const auto lc = train::sample_load_case(e, seed_for_cases(a, c), id);
  const auto loads = scaled(e.loads(lc), c.get_double("fem.load_scale"));
  std::vector<fem::StepStats> stats;
  const auto states = fem::run_monolithic_transient(e.mesh, e.material, loads, e.dt, e.n_steps, nullptr, &stats);
  fem::CsvWriter csv(in_dir(dir, "steps.csv"),
                     {"step", "time", "dofs", "assemble_s", "solve_s", "iterations", "relative_residual"});
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& s = stats[k];
    csv.row({double(k + 1), states[k + 1].time, double(s.dofs), s.assemble_seconds, s.solve_seconds,
             double(s.iterations), s.relative_residual});
  }
  if (c.get_bool("fem.vtk")) {
    fs::create_directories(in_dir(dir, "vtk"));
    for (const auto& s : states) write_state_vtk(in_dir(in_dir(dir, "vtk"), step_name("state", s.step)), e, s);
  }
  const auto& last = states.back();
  std::vector<double> z(last.z);
  for (double& v : z) v -= fem::z_offset(e.material);
  r << "case " << id << ", " << e.n_steps << " steps, " << stats.front().dofs << " dofs\n";
  r << "final max |z - z0| " << max_abs(z) << ", max |u| " << max_abs(last.u) << "\n";
  return kOk;
}

int cmd_stability(const CommandArgs& a, const Config& c, const std::string& dir, Report& r) {
  const auto e = build_experiment(c);
  const auto cfg = build_stability(c, e.n_steps);
  const auto id = select_case(a.case_spec.empty() ? c.get("stability.case") : a.case_spec, a, e, r);
  const auto lc = train::sample_load_case(e, seed_for_cases(a, c), id);
  auto lm = load_model(a.checkpoint, e);
  const auto reference = train::simulate_case(e, lc);
  coupling::NetworkPredictor p(lm.model, lm.norm, e, lc);
  const auto res = coupling::run_stability_study(e, lc, p, reference, cfg);
  fem::CsvWriter csv(in_dir(dir, "stability.csv"), {"step", "phase", "l2_z", "l2_strain"});
  double sum[3] = {0, 0, 0};
  int cnt[3] = {0, 0, 0};
  for (std::size_t k = 0; k < res.z_error.size(); ++k) {
    const int step = int(k) + 1;
    const int phase = step <= cfg.switch_field ? 1 : step <= cfg.switch_strain ? 2 : 3;
    csv.row({double(step), double(phase), res.z_error[k], res.strain_error[k]});
    sum[phase - 1] += res.z_error[k];
    ++cnt[phase - 1];
  }
  r << "case " << id << ", switch_field " << cfg.switch_field << ", switch_strain " << cfg.switch_strain << "\n";
  for (int ph = 0; ph < 3; ++ph) {
    if (cnt[ph]) r << "phase " << ph + 1 << " mean L2_t z " << sum[ph] / cnt[ph] << " over " << cnt[ph] << " steps\n";
  }
  return kOk;
}

int cmd_bench(const CommandArgs& a, const Config& c, const std::string& dir, Report& r) {
  const auto e = build_experiment(c);
  const std::size_t n_cases = std::max<std::size_t>(1, c.get_size("bench.cases"));
  std::optional<LoadedModel> lm;
  if (!a.checkpoint.empty()) lm = load_model(a.checkpoint, e);
  const std::string path = in_dir(dir, "bench.csv");
  {
    std::ofstream os(path);
    os << "# desk-scale timing, not comparable to published full-scale timings\n";
  }
  std::ofstream os(path, std::ios::app);
  os << "case,step,mono_dofs,mech_dofs,dof_ratio,mono_assemble_s,mono_solve_s,mech_assemble_s,mech_solve_s\n";
  os << std::setprecision(10);
  double mono_solve = 0.0, mech_solve = 0.0, mono_total = 0.0, hybrid_total = 0.0, inference = 0.0;
  std::size_t mono_dofs = 0, mech_dofs = 0;
  for (std::size_t i = 0; i < n_cases; ++i) {
    const auto lc = train::sample_load_case(e, case_seed(c), i);
    std::vector<fem::StepStats> ms;
    const auto t0 = std::chrono::steady_clock::now();
    const auto mono = train::simulate_case(e, lc, &ms);
    mono_total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto ch = coupling::CouplingChannel::in_process();
    coupling::IfennResult hr;
    if (lm) {
      coupling::NetworkPredictor p(lm->model, lm->norm, e, lc);
      hr = coupling::run_ifenn(e, lc, p, ch);
    } else {
      coupling::OraclePredictor p(mono, fem::z_offset(e.material));
      hr = coupling::run_ifenn(e, lc, p, ch);
    }
    hybrid_total += hr.seconds;
    inference += hr.inference_seconds;
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const auto& m = ms[k];
      const auto& h = hr.stats[k];
      mono_dofs = m.dofs;
      mech_dofs = h.dofs;
      mono_solve += m.solve_seconds;
      mech_solve += h.solve_seconds;
      os << i << "," << k + 1 << "," << m.dofs << "," << h.dofs << "," << double(h.dofs) / double(m.dofs) << ","
         << m.assemble_seconds << "," << m.solve_seconds << "," << h.assemble_seconds << "," << h.solve_seconds
         << "\n";
    }
  }
  const double steps = double(n_cases) * e.n_steps;
  r << "desk-scale timing, not comparable to published full-scale timings\n";
  r << "field source " << (lm ? "network" : "oracle") << ", " << n_cases << " cases x " << e.n_steps << " steps\n";
  r << "dofs monolithic " << mono_dofs << ", mechanics-only " << mech_dofs << ", ratio "
    << double(mech_dofs) / double(mono_dofs) << "\n";
  r << "mean solve per step: monolithic " << mono_solve / steps << " s, mechanics-only " << mech_solve / steps
    << " s\n";
  r << "total: monolithic " << mono_total << " s, hybrid " << hybrid_total << " s (inference " << inference
    << " s)\n";
  return kOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ProtocolError*>(&e)) return kProtocol;
  if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const AssemblyError*>(&e) ||
      dynamic_cast<const TrainingDiverged*>(&e)) {
    return kNumerical;
  }
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const NotFound*>(&e) || dynamic_cast<const FormatError*>(&e)) {
    return kUsage;
  }
  return kNumerical;
}

int run_command(const CommandArgs& args, std::ostream& out, std::ostream& err) {
  using Fn = int (*)(const CommandArgs&, const Config&, const std::string&, Report&);
  static const std::pair<const char*, Fn> table[] = {
      {"generate", cmd_generate}, {"train", cmd_train}, {"eval", cmd_eval},         {"ifenn", cmd_ifenn},
      {"fem", cmd_fem},           {"stability", cmd_stability}, {"bench", cmd_bench},
  };
  try {
    Fn fn = nullptr;
    for (const auto& [name, f] : table) {
      if (args.command == name) fn = f;
    }
    if (!fn) throw ConfigError("unknown command '" + args.command + "'");
    Config c = resolve(args.preset, args.config_file, args.overrides);
    if (args.threads > 0) c.set("data.threads", std::to_string(args.threads));
    const std::string dir = make_run_dir(args);
    {
      std::ofstream echo(in_dir(dir, "config.ini"));
      echo << "# " << args.command << " run\n" << c.echo();
      std::ofstream run(in_dir(dir, "run.txt"));
      run << "command = " << args.command << "\npreset = " << args.preset << "\n";
      if (!args.dataset.empty()) run << "dataset = " << fs::absolute(args.dataset).string() << "\n";
      if (!args.checkpoint.empty()) run << "checkpoint = " << fs::absolute(args.checkpoint).string() << "\n";
      if (!args.case_spec.empty()) run << "case = " << args.case_spec << "\n";
      if (args.oracle_model) run << "oracle_model = true\n";
    }
    Report r(out, in_dir(dir, "log.txt"));
    r << "run directory " << dir << "\n";
    const int code = fn(args, c, dir, r);
    r.flush();
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace ifenn::cli
