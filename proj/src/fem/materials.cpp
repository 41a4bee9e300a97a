#include <cmath>

#include "ifenn/errors.hpp"
#include "ifenn/fem.hpp"

namespace ifenn::fem {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

void ThermoMaterial::validate() const {
  require(mu > 0.0, "thermo material: mu must be > 0");
  require(lambda + 2.0 * mu / 3.0 > 0.0, "thermo material: lambda + 2 mu / 3 must be > 0");
  require(rho > 0.0 && c_eps > 0.0 && k_cond > 0.0, "thermo material: rho, c_eps and k must be > 0");
  require(n_dim == 2 || n_dim == 3, "thermo material: n_dim must be 2 or 3");
  require(std::isfinite(alpha) && std::isfinite(t_ref), "thermo material: alpha and T0 must be finite");
}

void PoroMaterial::validate() const {
  require(mu > 0.0, "poro material: mu must be > 0");
  require(bulk_modulus() > 0.0, "poro material: lambda + 2 mu / 3 must be > 0");
  require(porosity > 0.0 && porosity < 1.0, "poro material: porosity must lie in (0, 1)");
  require(k_solid > 0.0 && k_fluid > 0.0, "poro material: K_s and K_f must be > 0");
  require(hydraulic_conductivity >= 0.0, "poro material: hydraulic conductivity must be >= 0");
  require(fluid_weight_density > 0.0, "poro material: gamma_f must be > 0");
  require(biot_modulus_inv() >= 0.0, "poro material: 1/M must be >= 0");
  const double g = std::hypot(gravity_dir[0], gravity_dir[1], gravity_dir[2]);
  require(g == 0.0 || std::abs(g - 1.0) < 1e-9, "poro material: gravity_dir must be a unit vector or zero");
}

Problem problem_of(const Material& m) {
  return std::holds_alternative<ThermoMaterial>(m) ? Problem::kThermo : Problem::kPoro;
}

std::string to_string(Problem p) { return p == Problem::kThermo ? "thermo" : "poro"; }

double z_offset(const Material& m) {
  if (const auto* t = std::get_if<ThermoMaterial>(&m)) return t->t_ref;
  return 0.0;
}

void validate(const Material& m, const StructuredMesh& mesh) {
  std::visit([](const auto& x) { x.validate(); }, m);
  if (const auto* t = std::get_if<ThermoMaterial>(&m)) {
    require(t->n_dim == mesh.dim(), "thermo material n_dim does not match the mesh dimension");
  }
}

void LoadSpec::validate(const StructuredMesh& mesh) const {
  auto check_tag = [&](const std::string& tag) {
    if (!mesh.has_tag(tag)) throw NotFound("unknown boundary tag: " + tag);
  };
  for (const auto& t : tractions) {
    check_tag(t.tag);
    require(bool(t.value), "traction on " + t.tag + " has no value function");
  }
  for (const auto& f : fluxes) {
    check_tag(f.tag);
    require(bool(f.value), "flux on " + f.tag + " has no value function");
  }
  for (const auto& d : dirichlet) {
    check_tag(d.tag);
    require(d.component >= 0 && d.component <= mesh.dim(),
            "Dirichlet component out of range on " + d.tag);
    require(bool(d.value), "Dirichlet condition on " + d.tag + " has no value function");
  }
}

TransientState initial_state(const StructuredMesh& mesh, const Material& mat) {
  TransientState s;
  s.u.assign(mesh.node_count() * mesh.dim(), 0.0);
  s.z.assign(mesh.node_count(), z_offset(mat));
  s.strain_trace.assign(mesh.node_count(), 0.0);
  return s;
}

}  // namespace ifenn::fem
