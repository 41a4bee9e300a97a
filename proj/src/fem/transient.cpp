#include <chrono>

#include "ifenn/errors.hpp"
#include "ifenn/fem.hpp"

namespace ifenn::fem {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

TransientState step_monolithic(const StructuredMesh& mesh, const Material& mat, const TransientState& state_n,
                               const LoadSpec& loads, double dt, StepStats* stats, const SolveOptions& options) {
  auto t0 = Clock::now();
  const auto sys = assemble_monolithic(mesh, mat, state_n, loads, dt);
  const double t_asm = seconds_since(t0);
  t0 = Clock::now();
  const auto sol = solve_sparse(sys, options);
  const double t_solve = seconds_since(t0);

  const int dim = mesh.dim();
  const double offset = z_offset(mat);
  TransientState next;
  next.step = state_n.step + 1;
  next.time = state_n.time + dt;
  next.u.resize(mesh.node_count() * dim);
  next.z.resize(mesh.node_count());
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    for (int j = 0; j < dim; ++j) next.u[n * dim + j] = sol.x[sys.dof(n, j)];
    next.z[n] = sol.x[sys.dof(n, dim)] + offset;
  }
  next.strain_trace = strain_trace_field(mesh, next.u);
  if (stats) *stats = {t_asm, t_solve, sol.iterations, sol.relative_residual, sys.dofs()};
  return next;
}

TransientState step_mechanics_only(const StructuredMesh& mesh, const Material& mat,
                                   const TransientState& state_n, std::span<const double> z_next,
                                   const LoadSpec& loads, double dt, StepStats* stats,
                                   const SolveOptions& options) {
  auto t0 = Clock::now();
  const auto sys = assemble_mechanics_only(mesh, mat, state_n, z_next, loads, dt);
  const double t_asm = seconds_since(t0);
  t0 = Clock::now();
  const auto sol = solve_sparse(sys, options);
  const double t_solve = seconds_since(t0);

  TransientState next;
  next.step = state_n.step + 1;
  next.time = state_n.time + dt;
  next.u = sol.x;
  next.z.assign(z_next.begin(), z_next.end());
  next.strain_trace = strain_trace_field(mesh, next.u);
  if (stats) *stats = {t_asm, t_solve, sol.iterations, sol.relative_residual, sys.dofs()};
  return next;
}

std::vector<TransientState> run_monolithic_transient(const StructuredMesh& mesh, const Material& mat,
                                                     const LoadSpec& loads, double dt, int n_steps,
                                                     const TransientState* initial,
                                                     std::vector<StepStats>* stats) {
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  std::vector<TransientState> states;
  states.reserve(n_steps + 1);
  states.push_back(initial ? *initial : initial_state(mesh, mat));
  if (states[0].strain_trace.empty()) states[0].strain_trace = strain_trace_field(mesh, states[0].u);
  if (stats) stats->clear();
  for (int k = 1; k <= n_steps; ++k) {
    const std::string where = "step " + std::to_string(k) + ": ";
    StepStats st;
    try {
      states.push_back(step_monolithic(mesh, mat, states.back(), loads, dt, &st));
    } catch (const SolverError& e) {
      throw SolverError(where + e.what(), e.final_residual());
    } catch (const AssemblyError& e) {
      throw AssemblyError(where + e.what());
    }
    if (stats) stats->push_back(st);
  }
  return states;
}

}  // namespace ifenn::fem
