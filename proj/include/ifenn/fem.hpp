#pragma once

// Small-strain thermoelastic and poroelastic finite elements on structured
// Q1 grids, implicit Euler in time.
//
// DOF layout is node-major and interleaved: a monolithic system carries
// (u_0 .. u_{dim-1}, z) per node, a mechanics-only system (u_0 .. u_{dim-1}).
// For thermoelasticity the scalar unknown inside the linear systems is the
// temperature increment T - T0; TransientState::z always holds the absolute
// temperature. For poroelasticity z is the pore pressure.

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ifenn/mesh.hpp"

namespace ifenn::fem {

using mesh::Point;
using mesh::StructuredMesh;

struct ThermoMaterial {
  double lambda = 40e9;   // Pa
  double mu = 27e9;       // Pa
  double alpha = 2.31e-5; // 1/K
  double rho = 2700.0;    // kg/m^3
  double c_eps = 910.0;   // J/(kg K)
  double k_cond = 237.0;  // W/(m K)
  double t_ref = 293.0;   // K
  int n_dim = 3;

  void validate() const;
  /// alpha (n_dim lambda + 2 mu): stress per kelvin of the thermal strain.
  double beta() const { return alpha * (n_dim * lambda + 2.0 * mu); }
};

struct PoroMaterial {
  double lambda = 8.375e6;               // Pa
  double mu = 5.58e6;                    // Pa
  double k_solid = 5.5556e10;            // Pa, grain bulk modulus K_s
  double k_fluid = 2.2e9;                // Pa, K_f
  double porosity = 0.4;
  double hydraulic_conductivity = 1e-4;  // m/s, K_H = gamma_f K_I / mu_f
  double fluid_weight_density = 9810.0;  // N/m^3, gamma_f
  /// i_g: unit vector opposite to gravity (points "up"). All zeros disables
  /// the gravity term.
  std::array<double, 3> gravity_dir{0.0, 0.0, 0.0};

  void validate() const;
  double bulk_modulus() const { return lambda + 2.0 * mu / 3.0; }
  double biot_alpha() const { return 1.0 - bulk_modulus() / k_solid; }
  double biot_modulus_inv() const {
    return porosity / k_fluid + (biot_alpha() - porosity) / k_solid;
  }
  /// K_I / mu_f.
  double mobility() const { return hydraulic_conductivity / fluid_weight_density; }
};

using Material = std::variant<ThermoMaterial, PoroMaterial>;

enum class Problem { kThermo, kPoro };
Problem problem_of(const Material& m);
std::string to_string(Problem p);
/// Offset between TransientState::z and the scalar unknown (T0 or 0).
double z_offset(const Material& m);
void validate(const Material& m, const StructuredMesh& mesh);

using ScalarField = std::function<double(const Point&, double)>;
using VectorField = std::function<Point(const Point&, double)>;

/// `component` < dim selects a displacement component; component == dim the
/// scalar field, given as an increment (T - T0, or p). When several
/// conditions hit the same DOF the later one wins.
struct DirichletBC {
  std::string tag;
  int component = 0;
  ScalarField value;
};

struct SurfaceTraction {
  std::string tag;
  VectorField value;  // Pa
};

/// Outward normal flux: heat flux Q (W/m^2) or fluid flux q_f (m/s).
struct SurfaceFlux {
  std::string tag;
  ScalarField value;
};

struct LoadSpec {
  VectorField body_force;  // N/m^3; empty = none
  ScalarField source;      // heat source r (W/m^3) or fluid source Q_f (1/s)
  std::vector<SurfaceTraction> tractions;
  std::vector<SurfaceFlux> fluxes;
  std::vector<DirichletBC> dirichlet;

  /// Throws NotFound for unknown tags, InvalidArgument for bad components.
  void validate(const StructuredMesh& mesh) const;
};

struct TransientState {
  int step = 0;
  double time = 0.0;
  std::vector<double> u;             // node-major, dim per node
  std::vector<double> z;             // absolute T, or p
  std::vector<double> strain_trace;  // nodal tr(eps)
};

/// Zero displacement, z at its reference (T0 or 0).
TransientState initial_state(const StructuredMesh& mesh, const Material& mat);

// ---- sparse storage ---------------------------------------------------------

struct Triplet {
  std::size_t row, col;
  double value;
};

struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  std::vector<double> val;

  /// Duplicates are summed; columns sorted within each row.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
  static CsrMatrix identity(std::size_t n);

  std::size_t nnz() const noexcept { return val.size(); }
  double at(std::size_t r, std::size_t c) const;
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  /// max |A_ij - A_ji| over the stored pattern and its transpose.
  double max_asymmetry() const;
};

struct SparseSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
  std::size_t node_count = 0;
  int components = 0;  // per node
  bool symmetric = false;

  /// Constrained DOFs, sorted, with their prescribed values, plus copies of
  /// their rows taken before elimination so reactions can be recovered.
  std::vector<std::size_t> constrained;
  std::vector<double> prescribed;
  CsrMatrix constrained_rows;
  std::vector<double> constrained_rhs;

  std::size_t dofs() const noexcept { return rhs.size(); }
  std::size_t dof(std::size_t node, int component) const { return node * components + component; }
  /// (A x - f) on every constrained row, in `constrained` order.
  std::vector<double> reactions(std::span<const double> x) const;
};

// ---- elements and assembly --------------------------------------------------

/// Dense element elastic stiffness, row-major (dim * nodes_per_cell)^2 with
/// local DOF a * dim + i.
std::vector<double> element_elastic_stiffness(const StructuredMesh& mesh, std::size_t cell, double lambda,
                                              double mu);

SparseSystem assemble_thermoelastic_monolithic(const StructuredMesh& mesh, const ThermoMaterial& mat,
                                               const TransientState& state_n, const LoadSpec& loads,
                                               double dt);
SparseSystem assemble_poroelastic_monolithic(const StructuredMesh& mesh, const PoroMaterial& mat,
                                             const TransientState& state_n, const LoadSpec& loads, double dt);
SparseSystem assemble_monolithic(const StructuredMesh& mesh, const Material& mat,
                                 const TransientState& state_n, const LoadSpec& loads, double dt);

/// Displacement-only system with the coupled field fixed at `z_next`
/// (absolute T or p, one value per node). Symmetric positive definite.
SparseSystem assemble_mechanics_only(const StructuredMesh& mesh, const Material& mat,
                                     const TransientState& state_n, std::span<const double> z_next,
                                     const LoadSpec& loads, double dt);

// ---- solvers ----------------------------------------------------------------

struct SolveOptions {
  double tolerance = 1e-13;  // relative residual
  int max_iterations = 20000;
};

struct SolveResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
  std::string method;  // "pcg" or "lu"
};

/// Jacobi-preconditioned conjugate gradients. Throws SolverError.
SolveResult solve_pcg(const CsrMatrix& a, std::span<const double> b, const SolveOptions& options = {});
/// Sparse LU with residual check and iterative refinement. Throws SolverError.
SolveResult solve_lu(const CsrMatrix& a, std::span<const double> b, const SolveOptions& options = {});
/// PCG for symmetric systems, LU otherwise. Relative residual is always
/// below 1e-10 on return.
SolveResult solve_sparse(const SparseSystem& system, const SolveOptions& options = {});

// ---- post-processing --------------------------------------------------------

/// Nodal div(u) by lumped-mass L2 projection of quadrature values.
std::vector<double> strain_trace_field(const StructuredMesh& mesh, std::span<const double> u);

/// Lumped nodal weights: integral of each shape function over the domain.
std::vector<double> lumped_mass(const StructuredMesh& mesh);

/// Global balance of the scalar equation over one step. All terms are rates
/// integrated over the domain (W for heat, m^3/s for fluid).
struct BalanceAudit {
  double storage = 0.0;         // capacity term
  double coupling = 0.0;        // strain-rate term
  double source = 0.0;          // volumetric source
  double boundary_flux = 0.0;   // prescribed outward flux
  double reaction = 0.0;        // flow through Dirichlet boundaries (inward > 0)

  /// |storage + coupling - source + boundary_flux - reaction| over the
  /// largest term magnitude.
  double relative_imbalance() const;
};

BalanceAudit audit_balance(const StructuredMesh& mesh, const Material& mat, const TransientState& state_n,
                           const TransientState& state_next, const LoadSpec& loads, double dt);

// ---- time stepping ----------------------------------------------------------

struct StepStats {
  double assemble_seconds = 0.0;
  double solve_seconds = 0.0;
  int iterations = 0;
  double relative_residual = 0.0;
  std::size_t dofs = 0;
};

TransientState step_monolithic(const StructuredMesh& mesh, const Material& mat, const TransientState& state_n,
                               const LoadSpec& loads, double dt, StepStats* stats = nullptr,
                               const SolveOptions& options = {});

/// One mechanics-only step; the returned state carries z = z_next.
TransientState step_mechanics_only(const StructuredMesh& mesh, const Material& mat,
                                   const TransientState& state_n, std::span<const double> z_next,
                                   const LoadSpec& loads, double dt, StepStats* stats = nullptr,
                                   const SolveOptions& options = {});

/// States 0..n_steps; state 0 is `initial` (or initial_state when empty).
/// Errors are re-thrown with the failing step index in the message.
std::vector<TransientState> run_monolithic_transient(const StructuredMesh& mesh, const Material& mat,
                                                     const LoadSpec& loads, double dt, int n_steps,
                                                     const TransientState* initial = nullptr,
                                                     std::vector<StepStats>* stats = nullptr);

// ---- output -----------------------------------------------------------------

struct VtkField {
  std::string name;
  std::span<const double> values;
  int components = 1;  // 1, or mesh dim for vectors (padded to 3 on output)
};

/// Legacy ASCII UNSTRUCTURED_GRID with POINT_DATA.
void write_vtk(const std::string& path, const StructuredMesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title = "ifenn");
void write_vtk(std::ostream& os, const StructuredMesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title = "ifenn");

/// Comma-separated table with a header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> columns);
  void row(std::span<const double> values);
  void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }

 private:
  std::string path_;
  std::size_t width_;
};

}  // namespace ifenn::fem
