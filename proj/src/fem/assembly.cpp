#include <algorithm>
#include <cmath>
#include <map>

#include "internal.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::fem {
namespace detail {

Assembler::Assembler(const StructuredMesh& mesh, int components) : mesh_(mesh), components_(components) {
  const std::size_t n = mesh.node_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    auto nodes = mesh.cell(c);
    for (auto a : nodes) adj[a].insert(adj[a].end(), nodes.begin(), nodes.end());
  }
  adj_ptr_.assign(n + 1, 0);
  for (std::size_t a = 0; a < n; ++a) {
    std::sort(adj[a].begin(), adj[a].end());
    adj[a].erase(std::unique(adj[a].begin(), adj[a].end()), adj[a].end());
    adj_ptr_[a + 1] = adj_ptr_[a] + adj[a].size();
  }
  adj_.reserve(adj_ptr_[n]);
  for (auto& row : adj) adj_.insert(adj_.end(), row.begin(), row.end());

  const std::size_t C = components;
  matrix.rows = matrix.cols = n * C;
  matrix.row_ptr.assign(n * C + 1, 0);
  matrix.col.reserve(adj_.size() * C * C);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < C; ++i) {
      for (std::size_t k = adj_ptr_[a]; k < adj_ptr_[a + 1]; ++k) {
        for (std::size_t j = 0; j < C; ++j) matrix.col.push_back(adj_[k] * C + j);
      }
      matrix.row_ptr[a * C + i + 1] = matrix.col.size();
    }
  }
  matrix.val.assign(matrix.col.size(), 0.0);
  rhs.assign(n * C, 0.0);
}

void Assembler::bind_cell(std::size_t cell) {
  auto nodes = mesh_.cell(cell);
  const int npc = static_cast<int>(nodes.size());
  for (int a = 0; a < npc; ++a) nodes_[a] = nodes[a];
  for (int a = 0; a < npc; ++a) {
    auto first = adj_.begin() + adj_ptr_[nodes[a]];
    auto last = adj_.begin() + adj_ptr_[nodes[a] + 1];
    for (int b = 0; b < npc; ++b) slot_[a][b] = std::lower_bound(first, last, nodes[b]) - first;
  }
}

void add_boundary_loads(Assembler& as, const StructuredMesh& mesh, const LoadSpec& loads, double t,
                        int scalar_component) {
  if (loads.tractions.empty() && (loads.fluxes.empty() || scalar_component < 0)) return;
  const int dim = mesh.dim();
  const int nf = dim == 2 ? 2 : 4;
  std::vector<FacePoint> fps;
  for (const auto& face : mesh.boundary_faces()) {
    for (const auto& tr : loads.tractions) {
      if (tr.tag != face.tag) continue;
      face_quadrature(mesh, face, fps);
      for (const auto& fp : fps) {
        const Point tv = tr.value(fp.x, t);
        for (int a = 0; a < nf; ++a) {
          for (int i = 0; i < dim; ++i) as.add_rhs(face.nodes[a], i, fp.N[a] * tv[i] * fp.weight);
        }
      }
    }
    if (scalar_component < 0) continue;
    for (const auto& fl : loads.fluxes) {
      if (fl.tag != face.tag) continue;
      face_quadrature(mesh, face, fps);
      for (const auto& fp : fps) {
        const double q = fl.value(fp.x, t);
        for (int a = 0; a < nf; ++a) as.add_rhs(face.nodes[a], scalar_component, -fp.N[a] * q * fp.weight);
      }
    }
  }
}

SparseSystem finalize_system(Assembler&& as, const StructuredMesh& mesh, const LoadSpec& loads, double t,
                             int components, bool symmetric) {
  SparseSystem sys;
  sys.node_count = mesh.node_count();
  sys.components = components;
  sys.symmetric = symmetric;
  const int dim = mesh.dim();

  // Later conditions override earlier ones on shared DOFs.
  std::map<std::size_t, double> fixed;
  for (const auto& bc : loads.dirichlet) {
    if (bc.component >= components) continue;
    for (auto n : mesh::boundary_nodes(mesh, bc.tag)) {
      fixed[n * components + bc.component] = bc.value(mesh.node(n), t);
    }
  }
  static const char* kAxis[] = {"u_x", "u_y", "u_z"};
  for (int d = 0; d < dim; ++d) {
    bool any = false;
    for (const auto& [dof, v] : fixed) any = any || int(dof % components) == d;
    if (!any) {
      throw AssemblyError(std::string("singular system: unconstrained rigid translation ") + kAxis[d]);
    }
  }

  CsrMatrix& A = as.matrix;
  std::vector<double>& f = as.rhs;
  const std::size_t n = A.rows;
  std::vector<char> is_fixed(n, 0);
  std::vector<double> g(n, 0.0);
  for (const auto& [dof, v] : fixed) {
    is_fixed[dof] = 1;
    g[dof] = v;
    sys.constrained.push_back(dof);
    sys.prescribed.push_back(v);
  }

  // Raw copies of the constrained rows.
  auto& R = sys.constrained_rows;
  R.rows = sys.constrained.size();
  R.cols = n;
  R.row_ptr.assign(R.rows + 1, 0);
  for (std::size_t k = 0; k < sys.constrained.size(); ++k) {
    const auto r = sys.constrained[k];
    for (std::size_t e = A.row_ptr[r]; e < A.row_ptr[r + 1]; ++e) {
      R.col.push_back(A.col[e]);
      R.val.push_back(A.val[e]);
    }
    R.row_ptr[k + 1] = R.col.size();
    sys.constrained_rhs.push_back(f[r]);
  }

  for (std::size_t r = 0; r < n; ++r) {
    if (is_fixed[r]) {
      double diag = 0.0;
      for (std::size_t e = A.row_ptr[r]; e < A.row_ptr[r + 1]; ++e) {
        if (A.col[e] == r) {
          diag = std::abs(A.val[e]);
          if (diag == 0.0) diag = 1.0;
          A.val[e] = diag;
        } else {
          A.val[e] = 0.0;
        }
      }
      f[r] = diag * g[r];
      continue;
    }
    for (std::size_t e = A.row_ptr[r]; e < A.row_ptr[r + 1]; ++e) {
      const auto c = A.col[e];
      if (is_fixed[c]) {
        f[r] -= A.val[e] * g[c];
        A.val[e] = 0.0;
      }
    }
  }
  sys.matrix = std::move(A);
  sys.rhs = std::move(f);
  return sys;
}

}  // namespace detail

namespace {

using detail::Assembler;
using detail::QuadPoint;

double interpolate(const QuadPoint& qp, const Assembler& as, int npc, std::span<const double> nodal,
                   double offset) {
  double v = 0.0;
  for (int a = 0; a < npc; ++a) v += qp.N[a] * (nodal[as.node(a)] - offset);
  return v;
}

double divergence(const QuadPoint& qp, const Assembler& as, int npc, int dim, std::span<const double> u) {
  double v = 0.0;
  for (int a = 0; a < npc; ++a) {
    for (int j = 0; j < dim; ++j) v += qp.dN[a][j] * u[as.node(a) * dim + j];
  }
  return v;
}

void add_elastic(Assembler& as, const QuadPoint& qp, int npc, int dim, double lambda, double mu) {
  for (int a = 0; a < npc; ++a) {
    for (int b = 0; b < npc; ++b) {
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += qp.dN[a][d] * qp.dN[b][d];
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
          double v = lambda * qp.dN[a][i] * qp.dN[b][j] + mu * qp.dN[a][j] * qp.dN[b][i];
          if (i == j) v += mu * dot;
          as.add(a, i, b, j, v * qp.weight);
        }
      }
    }
  }
}

void add_body_force(Assembler& as, const QuadPoint& qp, int npc, int dim, const LoadSpec& loads, double t) {
  if (!loads.body_force) return;
  const Point b = loads.body_force(qp.x, t);
  for (int a = 0; a < npc; ++a) {
    for (int i = 0; i < dim; ++i) as.add_rhs(as.node(a), i, qp.N[a] * b[i] * qp.weight);
  }
}

void check_state(const StructuredMesh& mesh, const TransientState& s, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be > 0");
  if (s.u.size() != mesh.node_count() * mesh.dim() || s.z.size() != mesh.node_count()) {
    throw InvalidArgument("state fields do not match the mesh");
  }
}

// Shared body of the two monolithic assemblers. The scalar row reads
//   c/dt (z - z_n) + coupling/dt div(u - u_n) + div(-kappa grad z) = src
// and the momentum rows carry -coupling_u * div(w) z.
struct CoupledCoefficients {
  double lambda, mu;
  double coupling_u;   // momentum row: beta, or alpha'
  double coupling_z;   // scalar row:   beta T0, or alpha'
  double capacity;     // rho C, or 1/M
  double diffusivity;  // k, or K_I / mu_f
  double offset;       // T0, or 0
  Point gravity_flux;  // kappa gamma_f i_g, zero for heat
};

SparseSystem assemble_coupled(const StructuredMesh& mesh, const CoupledCoefficients& cc,
                              const TransientState& state_n, const LoadSpec& loads, double dt) {
  check_state(mesh, state_n, dt);
  loads.validate(mesh);
  const int dim = mesh.dim();
  const int npc = mesh.nodes_per_cell();
  const int C = dim + 1;
  const double t = state_n.time + dt;
  Assembler as(mesh, C);
  std::vector<QuadPoint> qps;
  const bool gravity = cc.gravity_flux[0] != 0.0 || cc.gravity_flux[1] != 0.0 || cc.gravity_flux[2] != 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    as.bind_cell(c);
    detail::cell_quadrature(mesh, c, qps);
    for (const auto& qp : qps) {
      const double w = qp.weight;
      add_elastic(as, qp, npc, dim, cc.lambda, cc.mu);
      add_body_force(as, qp, npc, dim, loads, t);
      const double z_old = interpolate(qp, as, npc, state_n.z, cc.offset);
      const double div_old = divergence(qp, as, npc, dim, state_n.u);
      const double src = loads.source ? loads.source(qp.x, t) : 0.0;
      for (int a = 0; a < npc; ++a) {
        for (int b = 0; b < npc; ++b) {
          double dot = 0.0;
          for (int d = 0; d < dim; ++d) dot += qp.dN[a][d] * qp.dN[b][d];
          for (int i = 0; i < dim; ++i) {
            as.add(a, i, b, dim, -cc.coupling_u * qp.dN[a][i] * qp.N[b] * w);
            as.add(a, dim, b, i, cc.coupling_z / dt * qp.N[a] * qp.dN[b][i] * w);
          }
          as.add(a, dim, b, dim, (cc.capacity / dt * qp.N[a] * qp.N[b] + cc.diffusivity * dot) * w);
        }
        double r = qp.N[a] * (cc.capacity / dt * z_old + cc.coupling_z / dt * div_old + src);
        if (gravity) {
          for (int d = 0; d < dim; ++d) r -= qp.dN[a][d] * cc.gravity_flux[d];
        }
        as.add_rhs(as.node(a), dim, r * w);
      }
    }
  }
  detail::add_boundary_loads(as, mesh, loads, t, dim);
  return detail::finalize_system(std::move(as), mesh, loads, t, C, false);
}

}  // namespace

SparseSystem assemble_thermoelastic_monolithic(const StructuredMesh& mesh, const ThermoMaterial& mat,
                                               const TransientState& state_n, const LoadSpec& loads,
                                               double dt) {
  validate(Material(mat), mesh);
  CoupledCoefficients cc{mat.lambda, mat.mu, mat.beta(), mat.beta() * mat.t_ref, mat.rho * mat.c_eps,
                         mat.k_cond,  mat.t_ref, Point{0.0, 0.0, 0.0}};
  return assemble_coupled(mesh, cc, state_n, loads, dt);
}

SparseSystem assemble_poroelastic_monolithic(const StructuredMesh& mesh, const PoroMaterial& mat,
                                             const TransientState& state_n, const LoadSpec& loads, double dt) {
  validate(Material(mat), mesh);
  const double a = mat.biot_alpha();
  const double kappa = mat.mobility();
  Point g{};
  for (int d = 0; d < 3; ++d) g[d] = kappa * mat.fluid_weight_density * mat.gravity_dir[d];
  CoupledCoefficients cc{mat.lambda, mat.mu, a, a, mat.biot_modulus_inv(), kappa, 0.0, g};
  return assemble_coupled(mesh, cc, state_n, loads, dt);
}

SparseSystem assemble_monolithic(const StructuredMesh& mesh, const Material& mat, const TransientState& state_n,
                                 const LoadSpec& loads, double dt) {
  if (const auto* t = std::get_if<ThermoMaterial>(&mat)) {
    return assemble_thermoelastic_monolithic(mesh, *t, state_n, loads, dt);
  }
  return assemble_poroelastic_monolithic(mesh, std::get<PoroMaterial>(mat), state_n, loads, dt);
}

SparseSystem assemble_mechanics_only(const StructuredMesh& mesh, const Material& mat,
                                     const TransientState& state_n, std::span<const double> z_next,
                                     const LoadSpec& loads, double dt) {
  validate(mat, mesh);
  check_state(mesh, state_n, dt);
  loads.validate(mesh);
  if (z_next.size() != mesh.node_count()) throw InvalidArgument("prescribed field needs one value per node");
  double lambda, mu, coupling;
  if (const auto* t = std::get_if<ThermoMaterial>(&mat)) {
    lambda = t->lambda;
    mu = t->mu;
    coupling = t->beta();
  } else {
    const auto& p = std::get<PoroMaterial>(mat);
    lambda = p.lambda;
    mu = p.mu;
    coupling = p.biot_alpha();
  }
  const double offset = z_offset(mat);
  const int dim = mesh.dim();
  const int npc = mesh.nodes_per_cell();
  const double t = state_n.time + dt;
  Assembler as(mesh, dim);
  std::vector<QuadPoint> qps;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    as.bind_cell(c);
    detail::cell_quadrature(mesh, c, qps);
    for (const auto& qp : qps) {
      add_elastic(as, qp, npc, dim, lambda, mu);
      add_body_force(as, qp, npc, dim, loads, t);
      const double z = interpolate(qp, as, npc, z_next, offset);
      for (int a = 0; a < npc; ++a) {
        for (int i = 0; i < dim; ++i) as.add_rhs(as.node(a), i, coupling * qp.dN[a][i] * z * qp.weight);
      }
    }
  }
  detail::add_boundary_loads(as, mesh, loads, t, -1);
  return detail::finalize_system(std::move(as), mesh, loads, t, dim, true);
}

}  // namespace ifenn::fem
