#include <algorithm>
#include <cmath>
#include <memory>

#include "ifenn/errors.hpp"
#include "ifenn/experiment.hpp"

namespace ifenn::train {
namespace {

using mesh::Point;

fem::ScalarField zero_field() {
  return [](const Point&, double) { return 0.0; };
}

double cube_ramp(double t) { return std::min(t / 1800.0, 1.0); }

double polar_angle(const Point& p) {
  const double th = std::atan2(p[1], p[0]);
  // round-off below the cut at theta = 0 must not wrap to 2 pi
  return th < -1e-9 ? th + 2.0 * M_PI : std::max(th, 0.0);
}

double tube_flux(const LoadCase& c, bool inner, const Point& p, double t) {
  const auto& q = c.params;
  const double th = polar_angle(p);
  const double q0 = inner ? q[kQIn0] : q[kQOut0];
  const double q1 = inner ? q[kQIn1] : q[kQOut1];
  const double wr = inner ? q[kOmegaInR] : q[kOmegaOutR];
  return q0 + q1 * std::sin(q[kOmegaT] * t) * std::sin(wr * th);
}

// Two boundary sensor grids read as one: inner wall first, then outer.
mesh::SensorGrid join(const mesh::SensorGrid& a, const mesh::SensorGrid& b) {
  mesh::SensorGrid g = a;
  g.source = a.source + "+" + b.source;
  g.counts.insert(g.counts.end(), b.counts.begin(), b.counts.end());
  g.locations.insert(g.locations.end(), b.locations.begin(), b.locations.end());
  g.reference.insert(g.reference.end(), b.reference.begin(), b.reference.end());
  g.stencil_nodes.insert(g.stencil_nodes.end(), b.stencil_nodes.begin(), b.stencil_nodes.end());
  g.stencil_weights.insert(g.stencil_weights.end(), b.stencil_weights.begin(), b.stencil_weights.end());
  return g;
}

void require_family(const Experiment& e, const LoadCase& c) {
  if (c.family != e.family) {
    throw InvalidArgument("load case family " + to_string(c.family) + " does not match experiment " + e.name);
  }
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::kCubeBody: return "cube-body";
    case Family::kTubeFlux: return "tube-flux";
    case Family::kExcavationFlux: return "excavation-flux";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  if (name == "cube-body") return Family::kCubeBody;
  if (name == "tube-flux") return Family::kTubeFlux;
  if (name == "excavation-flux") return Family::kExcavationFlux;
  throw InvalidArgument("unknown load family: " + name);
}

void GaussianFieldSpec::validate() const {
  if (!(stddev >= 0.0) || !std::isfinite(mean)) throw InvalidArgument("Gaussian field needs finite mean, stddev >= 0");
  if (!(correlation_length > 0.0) || !(correlation_time > 0.0)) {
    throw InvalidArgument("Gaussian correlation scales must be positive");
  }
  if (control_x < 1 || control_y < 1 || control_t < 1) throw InvalidArgument("Gaussian control counts must be >= 1");
}

void TubeRanges::validate() const {
  if (q0_min > q0_max || q1_min > q1_max || omega_t_min > omega_t_max || omega_r_min > omega_r_max) {
    throw InvalidArgument("tube parameter ranges must have min <= max");
  }
}

fem::LoadSpec Experiment::loads(const LoadCase& c) const {
  require_family(*this, c);
  fem::LoadSpec l;
  const int dim = mesh.dim();
  auto shared = std::make_shared<const LoadCase>(c);
  switch (family) {
    case Family::kCubeBody: {
      const double side = mesh.extent()[0];
      for (int j = 0; j < dim; ++j) l.dirichlet.push_back({"left", j, zero_field()});
      l.dirichlet.push_back({"left", dim, zero_field()});
      l.dirichlet.push_back({"top", dim, [](const Point& p, double t) { return 10.0 * p[0] * cube_ramp(t); }});
      const auto g = gaussian;
      const double horizon_s = horizon();
      const double ly = mesh.extent()[1];
      l.source = [shared, g, side, ly, horizon_s](const Point& p, double t) {
        return gaussian_field_value(g, shared->control, p[0] / side, p[1] / ly, t / horizon_s);
      };
      break;
    }
    case Family::kTubeFlux: {
      l.dirichlet.push_back({"cut_start", 0, zero_field()});
      l.dirichlet.push_back({"cut_start", 1, zero_field()});
      l.dirichlet.push_back({"cut_start", 2, zero_field()});
      l.dirichlet.push_back({"cut_end", 1, zero_field()});
      // q is heat entering through the wall; the solver takes outward flux
      l.fluxes.push_back({"inner", [shared](const Point& p, double t) { return -tube_flux(*shared, true, p, t); }});
      l.fluxes.push_back({"outer", [shared](const Point& p, double t) { return -tube_flux(*shared, false, p, t); }});
      break;
    }
    case Family::kExcavationFlux: {
      for (const char* side : {"left", "right"}) l.dirichlet.push_back({side, 0, zero_field()});
      l.dirichlet.push_back({"bottom", 0, zero_field()});
      l.dirichlet.push_back({"bottom", 1, zero_field()});
      l.dirichlet.push_back({"top", 2, zero_field()});
      const auto g = gaussian;
      const double horizon_s = horizon();
      l.fluxes.push_back({"excavation", [shared, g, horizon_s](const Point&, double t) {
                            return gaussian_field_value(g, shared->control, 0.5, 0.5, t / horizon_s);
                          }});
      break;
    }
  }
  return l;
}

std::vector<double> Experiment::load_samples(const LoadCase& c, double t) const {
  require_family(*this, c);
  std::vector<double> out(load_sensors.count());
  switch (family) {
    case Family::kCubeBody: {
      const double lx = mesh.extent()[0], ly = mesh.extent()[1];
      for (std::size_t s = 0; s < out.size(); ++s) {
        const auto& p = load_sensors.locations[s];
        out[s] = gaussian_field_value(gaussian, c.control, p[0] / lx, p[1] / ly, t / horizon());
      }
      break;
    }
    case Family::kTubeFlux: {
      const std::size_t n_inner = std::size_t(load_sensors.counts.at(0));
      for (std::size_t s = 0; s < out.size(); ++s) {
        out[s] = tube_flux(c, s < n_inner, load_sensors.locations[s], t);
      }
      break;
    }
    case Family::kExcavationFlux:
      std::fill(out.begin(), out.end(), gaussian_field_value(gaussian, c.control, 0.5, 0.5, t / horizon()));
      break;
  }
  return out;
}

net::BcEnforcement Experiment::bc() const {
  net::BcEnforcement bc;
  if (!enforce_bc) return bc;
  const double d = bc_ramp;
  switch (family) {
    case Family::kCubeBody: {
      const int top_axis = mesh.dim() - 1;
      const double top = mesh.extent()[top_axis];
      bc.parts.push_back({"left", 0, [d](const Point& p) { return std::min(1.0, p[0] / d); },
                          [](const Point&, double) { return 0.0; }});
      bc.parts.push_back({"top", 0, [d, top, top_axis](const Point& p) { return std::min(1.0, (top - p[top_axis]) / d); },
                          [](const Point& p, double t) { return 10.0 * p[0] * cube_ramp(t); }});
      break;
    }
    case Family::kTubeFlux:
      bc.parts.push_back({"cut_start", 0, [d](const Point& p) { return std::min(1.0, polar_angle(p) / d); },
                          [](const Point&, double) { return 0.0; }});
      break;
    case Family::kExcavationFlux: {
      // distance to the drained part of the top surface, x >= w
      const double top = mesh.extent()[1], w = excavation_width;
      bc.parts.push_back({"top", 0,
                          [d, top, w](const Point& p) {
                            return std::min(1.0, std::hypot(std::max(0.0, w - p[0]), top - p[1]) / d);
                          },
                          [](const Point&, double) { return 0.0; }});
      break;
    }
  }
  return bc;
}

std::vector<std::pair<std::size_t, double>> Experiment::scalar_dirichlet(double t) const {
  std::vector<std::pair<std::size_t, double>> out;
  const auto add = [&](const std::string& tag, auto value) {
    for (auto n : mesh::boundary_nodes(mesh, tag)) {
      auto it = std::find_if(out.begin(), out.end(), [n](const auto& e) { return e.first == n; });
      const double v = value(mesh.node(n));
      if (it == out.end()) out.emplace_back(n, v);
      else it->second = v;
    }
  };
  switch (family) {
    case Family::kCubeBody:
      add("left", [](const Point&) { return 0.0; });
      add("top", [t](const Point& p) { return 10.0 * p[0] * cube_ramp(t); });
      break;
    case Family::kTubeFlux:
      add("cut_start", [](const Point&) { return 0.0; });
      break;
    case Family::kExcavationFlux:
      add("top", [](const Point&) { return 0.0; });
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Experiment::validate() const {
  fem::validate(material, mesh);
  if (!(dt > 0.0) || n_steps < 1) throw InvalidArgument("experiment needs dt > 0 and n_steps >= 1");
  if (load_sensors.count() == 0 || strain_sensors.count() == 0) throw InvalidArgument("experiment needs sensors");
  if (!(bc_ramp > 0.0)) throw InvalidArgument("BC ramp width must be positive");
  gaussian.validate();
  tube.validate();
}

Experiment make_cube_experiment(const CubeOptions& o) {
  if (o.dim != 2 && o.dim != 3) throw InvalidArgument("cube dimension must be 2 or 3");
  if (o.nodes_per_side < 2) throw InvalidArgument("cube needs at least 2 nodes per side");
  Experiment e;
  e.name = "cube";
  e.family = Family::kCubeBody;
  const int n = o.nodes_per_side - 1;
  const int divs[] = {n, n, n};
  const double ext[] = {o.side, o.side, o.side};
  e.mesh = mesh::build_structured_grid(o.dim, std::span<const int>(divs, o.dim), std::span<const double>(ext, o.dim));
  fem::ThermoMaterial mat;
  mat.n_dim = o.dim;
  e.material = mat;
  e.dt = o.dt;
  e.n_steps = o.n_steps;
  // Load sensors cover the x-y control plane; strain sensors the whole body.
  std::vector<int> lc(o.dim, o.load_sensors_per_axis), sc(o.dim, o.strain_sensors_per_axis);
  if (o.dim == 3) lc[2] = 1;
  e.load_sensors = mesh::select_sensor_grid(e.mesh, lc, "domain");
  e.strain_sensors = mesh::select_sensor_grid(e.mesh, sc, "domain");
  e.gaussian = o.gaussian;
  e.bc_ramp = o.side / n;
  e.validate();
  return e;
}

Experiment make_tube_experiment(const TubeOptions& o) {
  Experiment e;
  e.name = "tube";
  e.family = Family::kTubeFlux;
  e.mesh = mesh::build_annulus_grid(o.radial_divisions, o.angular_divisions, o.r_inner, o.r_outer, M_PI);
  fem::ThermoMaterial mat;
  mat.n_dim = 2;
  e.material = mat;
  e.dt = o.dt;
  e.n_steps = o.n_steps;
  const int wall[] = {o.load_sensors_per_wall};
  e.load_sensors = join(mesh::select_sensor_grid(e.mesh, wall, "inner"), mesh::select_sensor_grid(e.mesh, wall, "outer"));
  const int sc[] = {o.strain_sensors_radial, o.strain_sensors_angular};
  e.strain_sensors = mesh::select_sensor_grid(e.mesh, sc, "domain");
  e.tube = o.ranges;
  e.bc_ramp = M_PI / o.angular_divisions;  // one angular cell
  e.validate();
  return e;
}

Experiment make_excavation_experiment(const ExcavationOptions& o) {
  if (!(o.excavation_width > 0.0 && o.excavation_width < o.width)) {
    throw InvalidArgument("excavation width must lie inside the domain");
  }
  Experiment e;
  e.name = "excavation";
  e.family = Family::kExcavationFlux;
  const int divs[] = {o.divisions_x, o.divisions_y};
  const double ext[] = {o.width, o.depth};
  const double w = o.excavation_width;
  e.mesh = mesh::build_structured_grid(2, divs, ext).with_retagged_faces(
      "top", [w](const Point& c) { return c[0] < w; }, "excavation");
  e.material = fem::PoroMaterial{};
  e.dt = o.dt;
  e.n_steps = o.n_steps;
  const int one[] = {1};
  e.load_sensors = mesh::select_sensor_grid(e.mesh, one, "excavation");
  const int sc[] = {o.strain_sensors_x, o.strain_sensors_y};
  e.strain_sensors = mesh::select_sensor_grid(e.mesh, sc, "domain");
  e.gaussian = o.gaussian;
  e.bc_ramp = o.depth / o.divisions_y;
  e.excavation_width = w;
  e.enforce_bc = false;
  e.validate();
  return e;
}

std::vector<fem::TransientState> simulate_case(const Experiment& e, const LoadCase& c,
                                               std::vector<fem::StepStats>* stats) {
  return fem::run_monolithic_transient(e.mesh, e.material, e.loads(c), e.dt, e.n_steps, nullptr, stats);
}

}  // namespace ifenn::train
