#include <algorithm>

#include "ifenn/coupling.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::coupling {

Comparison compare_vs_monolithic(const train::Experiment& e, const std::vector<fem::TransientState>& hybrid,
                                 const std::vector<fem::TransientState>& monolithic) {
  if (hybrid.size() != monolithic.size() || hybrid.size() < 2) {
    throw InvalidArgument("comparison needs equal step counts (" + std::to_string(hybrid.size()) + " vs " +
                          std::to_string(monolithic.size()) + ")");
  }
  const std::size_t nn = e.mesh.node_count(), dim = e.mesh.dim();
  const double z0 = fem::z_offset(e.material);
  for (std::size_t k = 0; k < hybrid.size(); ++k) {
    if (hybrid[k].z.size() != nn || monolithic[k].z.size() != nn || hybrid[k].u.size() != nn * dim ||
        monolithic[k].u.size() != nn * dim) {
      throw InvalidArgument("comparison states do not match the mesh");
    }
  }
  static const char* axis[] = {"u_x", "u_y", "u_z"};
  Comparison r;
  r.names.push_back("z");
  for (std::size_t a = 0; a < dim; ++a) r.names.push_back(axis[a]);
  const std::size_t nc = 1 + dim;
  r.l2_t.assign(nc, {});
  r.eps_tol.assign(nc, 0.0);

  auto component = [&](const fem::TransientState& s, std::size_t c, std::size_t n) {
    return c == 0 ? s.z[n] - z0 : s.u[n * dim + c - 1];
  };
  for (std::size_t k = 1; k < hybrid.size(); ++k) {
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t n = 0; n < nn; ++n) {
        r.eps_tol[c] = std::max(r.eps_tol[c], std::abs(component(monolithic[k], c, n)));
      }
    }
  }
  for (double& v : r.eps_tol) v *= 1e-5;

  std::vector<double> p(nn), y(nn);
  for (std::size_t k = 1; k < hybrid.size(); ++k) {
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t n = 0; n < nn; ++n) {
        p[n] = component(hybrid[k], c, n);
        y[n] = component(monolithic[k], c, n);
      }
      r.l2_t[c].push_back(train::l2_step(p, y));
      if (c == 0) r.z_eps_rel.push_back(train::relative_error(p, y, r.eps_tol[0]));
    }
    r.u_l2_t.push_back(train::l2_step(hybrid[k].u, monolithic[k].u));
  }
  for (std::size_t c = 0; c < nc; ++c) r.l2_lc.push_back(train::rms(r.l2_t[c]));
  r.u_l2_lc = train::rms(r.u_l2_t);
  return r;
}

void write_error_vtk(const std::string& path, const train::Experiment& e, const fem::TransientState& hybrid,
                     const fem::TransientState& monolithic, double cap) {
  const double z0 = fem::z_offset(e.material);
  const std::size_t nn = e.mesh.node_count(), dim = e.mesh.dim();
  std::vector<double> zp(nn), zt(nn);
  for (std::size_t n = 0; n < nn; ++n) {
    zp[n] = hybrid.z[n] - z0;
    zt[n] = monolithic.z[n] - z0;
  }
  auto z_err = train::relative_error(zp, zt, train::epsilon_tolerance(zt));
  for (double& v : z_err) v = std::min(v, cap);
  std::vector<double> u_err(nn * dim);
  for (std::size_t a = 0; a < dim; ++a) {
    std::vector<double> up(nn), ut(nn);
    for (std::size_t n = 0; n < nn; ++n) {
      up[n] = hybrid.u[n * dim + a];
      ut[n] = monolithic.u[n * dim + a];
    }
    const auto er = train::relative_error(up, ut, train::epsilon_tolerance(ut));
    for (std::size_t n = 0; n < nn; ++n) u_err[n * dim + a] = std::min(er[n], cap);
  }
  fem::write_vtk(path, e.mesh,
                 {{"z_pred", zp, 1},
                  {"z_true", zt, 1},
                  {"z_eps_rel", z_err, 1},
                  {"u_pred", hybrid.u, int(dim)},
                  {"u_true", monolithic.u, int(dim)},
                  {"u_eps_rel", u_err, int(dim)}},
                 "hybrid vs monolithic, step " + std::to_string(hybrid.step));
}

std::vector<fem::TransientState> run_surrogate(const net::OperatorModel& model,
                                               const train::NormalizationSpec& normalization,
                                               const train::Experiment& e, const train::LoadCase& c) {
  const std::size_t dim = e.mesh.dim(), nn = e.mesh.node_count(), nl = e.load_size();
  if (model.config().branches.size() != 1 || model.components() != 1 + dim) {
    throw ConfigError("surrogate model needs one load branch and " + std::to_string(1 + dim) + " components");
  }
  if (model.config().branches[0].input_size != nl) {
    throw ConfigError("load branch expects " + std::to_string(model.config().branches[0].input_size) +
                      " sensors, experiment has N_l = " + std::to_string(nl));
  }
  net::OperatorModel m = model;
  m.set_nodes(e.mesh.nodes());
  m.set_bc(e.bc());
  std::vector<double> load, times;
  for (int k = 1; k <= e.n_steps; ++k) {
    times.push_back(k * e.dt);
    for (double v : e.load_samples(c, times.back())) load.push_back(normalization.load.normalize(v));
  }
  const std::size_t T = times.size();
  const auto out = m.forward({ad::Tensor::from({1, T, nl}, load)}, times, net::OutputSpace::physical);
  const auto data = out.data();
  const double z0 = fem::z_offset(e.material);
  std::vector<fem::TransientState> states{fem::initial_state(e.mesh, e.material)};
  for (std::size_t k = 0; k < T; ++k) {
    fem::TransientState s;
    s.step = int(k) + 1;
    s.time = times[k];
    s.z.resize(nn);
    s.u.resize(nn * dim);
    for (std::size_t n = 0; n < nn; ++n) {
      const std::size_t base = (k * nn + n) * (1 + dim);
      s.z[n] = data[base] + z0;
      for (std::size_t a = 0; a < dim; ++a) s.u[n * dim + a] = data[base + 1 + a];
    }
    s.strain_trace = fem::strain_trace_field(e.mesh, s.u);
    states.push_back(std::move(s));
  }
  return states;
}

}  // namespace ifenn::coupling
