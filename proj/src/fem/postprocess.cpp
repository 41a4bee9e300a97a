#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::fem {

std::vector<double> lumped_mass(const StructuredMesh& mesh) {
  std::vector<double> m(mesh.node_count(), 0.0);
  std::vector<detail::QuadPoint> qps;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    auto nodes = mesh.cell(c);
    detail::cell_quadrature(mesh, c, qps);
    for (const auto& qp : qps) {
      for (std::size_t a = 0; a < nodes.size(); ++a) m[nodes[a]] += qp.N[a] * qp.weight;
    }
  }
  return m;
}

std::vector<double> strain_trace_field(const StructuredMesh& mesh, std::span<const double> u) {
  const int dim = mesh.dim();
  if (u.size() != mesh.node_count() * dim) throw InvalidArgument("displacement field size does not match mesh");
  std::vector<double> num(mesh.node_count(), 0.0), den(mesh.node_count(), 0.0);
  std::vector<detail::QuadPoint> qps;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    auto nodes = mesh.cell(c);
    detail::cell_quadrature(mesh, c, qps);
    for (const auto& qp : qps) {
      double div = 0.0;
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (int j = 0; j < dim; ++j) div += qp.dN[a][j] * u[nodes[a] * dim + j];
      }
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        num[nodes[a]] += qp.N[a] * div * qp.weight;
        den[nodes[a]] += qp.N[a] * qp.weight;
      }
    }
  }
  for (std::size_t n = 0; n < num.size(); ++n) num[n] /= den[n];
  return num;
}

double BalanceAudit::relative_imbalance() const {
  const double scale = std::max({std::abs(storage), std::abs(coupling), std::abs(source), std::abs(boundary_flux),
                                 std::abs(reaction)});
  const double r = storage + coupling - source + boundary_flux - reaction;
  return scale > 0.0 ? std::abs(r) / scale : 0.0;
}

BalanceAudit audit_balance(const StructuredMesh& mesh, const Material& mat, const TransientState& state_n,
                           const TransientState& state_next, const LoadSpec& loads, double dt) {
  const int dim = mesh.dim();
  double capacity, coupling;
  if (const auto* t = std::get_if<ThermoMaterial>(&mat)) {
    capacity = t->rho * t->c_eps;
    coupling = t->beta() * t->t_ref;
  } else {
    const auto& p = std::get<PoroMaterial>(mat);
    capacity = p.biot_modulus_inv();
    coupling = p.biot_alpha();
  }
  const double time = state_n.time + dt;

  BalanceAudit audit;
  std::vector<detail::QuadPoint> qps;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    auto nodes = mesh.cell(c);
    detail::cell_quadrature(mesh, c, qps);
    for (const auto& qp : qps) {
      double dz = 0.0, ddiv = 0.0;
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        const auto n = nodes[a];
        dz += qp.N[a] * (state_next.z[n] - state_n.z[n]);
        for (int j = 0; j < dim; ++j) ddiv += qp.dN[a][j] * (state_next.u[n * dim + j] - state_n.u[n * dim + j]);
      }
      audit.storage += capacity * dz / dt * qp.weight;
      audit.coupling += coupling * ddiv / dt * qp.weight;
      if (loads.source) audit.source += loads.source(qp.x, time) * qp.weight;
    }
  }
  std::vector<detail::FacePoint> fps;
  for (const auto& face : mesh.boundary_faces()) {
    for (const auto& fl : loads.fluxes) {
      if (fl.tag != face.tag) continue;
      detail::face_quadrature(mesh, face, fps);
      for (const auto& fp : fps) audit.boundary_flux += fl.value(fp.x, time) * fp.weight;
    }
  }

  // Reactions of the scalar rows come from the assembled, unconstrained rows.
  const auto sys = assemble_monolithic(mesh, mat, state_n, loads, dt);
  const double offset = z_offset(mat);
  std::vector<double> x(sys.dofs());
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    for (int j = 0; j < dim; ++j) x[sys.dof(n, j)] = state_next.u[n * dim + j];
    x[sys.dof(n, dim)] = state_next.z[n] - offset;
  }
  const auto reactions = sys.reactions(x);
  for (std::size_t k = 0; k < reactions.size(); ++k) {
    if (int(sys.constrained[k] % sys.components) == dim) audit.reaction += reactions[k];
  }
  return audit;
}

}  // namespace ifenn::fem
