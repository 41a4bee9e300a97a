#include <chrono>

#include "ifenn/coupling.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::coupling {
namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

IfennResult run_ifenn(const train::Experiment& e, const train::LoadCase& c, FieldPredictor& predictor,
                      CouplingChannel& channel, int n_steps, const fem::SolveOptions& solve) {
  const int steps = n_steps < 0 ? e.n_steps : n_steps;
  if (steps < 1) throw InvalidArgument("run_ifenn needs at least one step");
  const auto t0 = std::chrono::steady_clock::now();
  const auto loads = e.loads(c);
  const double z0 = fem::z_offset(e.material);
  const std::size_t nn = e.mesh.node_count();

  IfennResult r;
  r.states.push_back(fem::initial_state(e.mesh, e.material));
  predictor.reset();
  for (int k = 1; k <= steps; ++k) {
    const auto& prev = r.states.back();
    const double t = prev.time + e.dt;

    // solver side: publish tr(eps_n)
    channel.write_strain(e.strain_sensors.sample(prev.strain_trace));
    // network side
    const auto ti = std::chrono::steady_clock::now();
    const auto strain = channel.read_strain();
    auto field = predictor.predict(k, t, strain);
    r.inference_seconds += since(ti);
    if (field.size() != nn) {
      throw InvalidArgument("predictor returned " + std::to_string(field.size()) + " values for " +
                            std::to_string(nn) + " nodes");
    }
    channel.write_field(field);
    // solver side: mechanics with the received field
    auto z = channel.read_field();
    for (double& v : z) v += z0;
    fem::StepStats st;
    try {
      r.states.push_back(fem::step_mechanics_only(e.mesh, e.material, prev, z, loads, e.dt, &st, solve));
    } catch (const SolverError& err) {
      throw SolverError("hybrid step " + std::to_string(k) + ": " + err.what(), err.final_residual());
    } catch (const AssemblyError& err) {
      throw AssemblyError("hybrid step " + std::to_string(k) + ": " + err.what());
    }
    r.stats.push_back(st);
  }
  r.seconds = since(t0);
  return r;
}

void StabilityConfig::validate(int n_steps) const {
  if (!(1 <= switch_field && switch_field <= switch_strain && switch_strain <= n_steps + 1)) {
    throw InvalidArgument("stability switches need 1 <= switch_field <= switch_strain <= n_steps + 1");
  }
}

StabilityResult run_stability_study(const train::Experiment& e, const train::LoadCase& c, FieldPredictor& predictor,
                                    const std::vector<fem::TransientState>& reference, const StabilityConfig& cfg) {
  const int steps = int(reference.size()) - 1;
  if (steps < 1) throw InvalidArgument("stability study needs a reference sequence");
  cfg.validate(steps);
  const auto loads = e.loads(c);
  const double z0 = fem::z_offset(e.material);

  StabilityResult r;
  r.states.push_back(reference.front());
  predictor.reset();
  for (int k = 1; k <= steps; ++k) {
    const auto& prev = r.states.back();
    const auto& strain_src = k <= cfg.switch_strain ? reference[k - 1] : prev;
    const auto pred = predictor.predict(k, reference[k].time, e.strain_sensors.sample(strain_src.strain_trace));

    std::vector<double> truth(reference[k].z);
    for (double& v : truth) v -= z0;
    r.z_error.push_back(train::l2_step(pred, truth));

    std::vector<double> z = k <= cfg.switch_field ? reference[k].z : pred;
    if (k > cfg.switch_field) {
      for (double& v : z) v += z0;
    }
    r.states.push_back(fem::step_mechanics_only(e.mesh, e.material, prev, z, loads, e.dt));
    r.strain_error.push_back(train::l2_step(r.states.back().strain_trace, reference[k].strain_trace));
  }
  return r;
}

}  // namespace ifenn::coupling
