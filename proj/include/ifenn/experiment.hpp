#pragma once

// Case-study setups: geometry, material, boundary conditions, sensor grids,
// load families and the matching output-side Dirichlet wrapper.

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ifenn/fem.hpp"
#include "ifenn/mesh.hpp"
#include "ifenn/operatornet.hpp"

namespace ifenn::train {

enum class Family { kCubeBody, kTubeFlux, kExcavationFlux };

std::string to_string(Family f);
/// "cube-body", "tube-flux" or "excavation-flux". Throws InvalidArgument.
Family family_from_string(const std::string& name);

/// Gaussian random field on a regular control grid with separable
/// squared-exponential correlation in space and time. Values between
/// control points are multilinear interpolants.
struct GaussianFieldSpec {
  double mean = 0.0;
  double stddev = 1.0;
  double correlation_length = 0.3;  // same units as the control extent
  double correlation_time = 0.3;    // fraction of the horizon
  int control_x = 5;                // 1 = spatially uniform
  int control_y = 5;
  int control_t = 6;

  void validate() const;
  std::size_t spatial_count() const { return std::size_t(control_x) * control_y; }
};

/// Flux family on the annulus: q(theta, t) = q0 + q1 sin(w_t t) sin(w_r theta)
/// on each wall. Parameters are drawn uniformly from the ranges.
struct TubeRanges {
  double q0_min = -4000.0, q0_max = 4000.0;  // W/m^2
  double q1_min = 0.0, q1_max = 4000.0;
  double omega_t_min = 0.5, omega_t_max = 3.0;  // cycles over the horizon
  double omega_r_min = 0.5, omega_r_max = 4.0;

  void validate() const;
};

/// Parameter order of a tube-flux case.
enum TubeParam { kQIn0, kQIn1, kQOut0, kQOut1, kOmegaT, kOmegaInR, kOmegaOutR, kTubeParamCount };

struct LoadCase {
  std::size_t id = 0;
  Family family = Family::kCubeBody;
  std::vector<double> params;   // tube: TubeParam order, omega_t in rad/s
  std::vector<double> control;  // Gaussian control values [t][y][x]
};

struct Experiment {
  std::string name;
  Family family = Family::kCubeBody;
  mesh::StructuredMesh mesh;
  fem::Material material;
  double dt = 1.0;
  int n_steps = 1;
  mesh::SensorGrid load_sensors;
  mesh::SensorGrid strain_sensors;
  GaussianFieldSpec gaussian;
  TubeRanges tube;
  /// Width of the Dirichlet ramps used by the output wrapper.
  double bc_ramp = 0.1;
  bool enforce_bc = true;
  double excavation_width = 0.0;  // excavation family only

  double horizon() const { return dt * n_steps; }
  fem::Problem problem() const { return fem::problem_of(material); }
  std::size_t load_size() const { return load_sensors.count(); }
  std::size_t strain_size() const { return strain_sensors.count(); }

  /// Complete FEM loading for one case: fixed boundary conditions of the
  /// setup plus the case's sources or fluxes.
  fem::LoadSpec loads(const LoadCase& c) const;
  /// Load function sampled at the load sensors at time t.
  std::vector<double> load_samples(const LoadCase& c, double t) const;
  /// Output-side Dirichlet wrapper on the scalar field (component 0).
  net::BcEnforcement bc() const;
  /// Dirichlet values of the scalar increment on boundary nodes at time t,
  /// as (node, value) pairs; used to check the wrapper.
  std::vector<std::pair<std::size_t, double>> scalar_dirichlet(double t) const;

  void validate() const;
};

struct CubeOptions {
  int nodes_per_side = 11;
  int dim = 2;
  double side = 1.0;
  double dt = 900.0;
  int n_steps = 20;
  int load_sensors_per_axis = 8;
  int strain_sensors_per_axis = 8;
  GaussianFieldSpec gaussian{0.0, 1500.0, 0.35, 0.3, 5, 5, 6};
};

struct TubeOptions {
  int radial_divisions = 6;
  int angular_divisions = 16;
  double r_inner = 1.0;
  double r_outer = 2.0;
  double dt = 3000.0;
  int n_steps = 20;
  int load_sensors_per_wall = 16;
  int strain_sensors_radial = 8;
  int strain_sensors_angular = 8;
  TubeRanges ranges;
};

struct ExcavationOptions {
  double width = 20.0;
  double depth = 10.0;
  int divisions_x = 20;
  int divisions_y = 10;
  double excavation_width = 8.0;  // measured from x = 0
  double dt = 1.5e5;
  int n_steps = 20;
  int strain_sensors_x = 12;
  int strain_sensors_y = 6;
  GaussianFieldSpec gaussian{2e-6, 1e-6, 1.0, 0.25, 1, 1, 8};  // m/s dewatering flux
};

/// 2D plate analog of the cube study (3D when dim = 3): left face clamped
/// with zero temperature increment, top face T~ = 10 x min(t / 1800, 1),
/// Gaussian random heat source.
Experiment make_cube_experiment(const CubeOptions& o = {});
/// Half annulus cross-section of the tube study: cut at theta = 0 clamped
/// with T~ = 0, roller on the other cut, random wall heat fluxes.
Experiment make_tube_experiment(const TubeOptions& o = {});
/// Excavation dewatering: outward flux q_W(t) on the excavated part of the
/// top surface, p = 0 elsewhere on top, side rollers, fixed base.
Experiment make_excavation_experiment(const ExcavationOptions& o = {});

/// Deterministic in (seed, id).
LoadCase sample_load_case(const Experiment& e, std::uint64_t seed, std::size_t id);
/// Cases with ids first_id .. first_id + count - 1. Throws InvalidArgument
/// for count == 0.
std::vector<LoadCase> sample_load_cases(const Experiment& e, std::size_t count, std::uint64_t seed,
                                        std::size_t first_id = 0);

/// Draws the control values of a Gaussian field (correlated standard normal
/// samples scaled to mean/stddev), control grid over [0,lx]x[0,ly]x[0,1].
std::vector<double> sample_gaussian_control(const GaussianFieldSpec& g, double lx, double ly, std::mt19937_64& rng);
/// Multilinear interpolation of control values at (x / lx, y / ly, t / horizon).
double gaussian_field_value(const GaussianFieldSpec& g, std::span<const double> control, double sx, double sy,
                            double st);

/// States 0..n_steps of the monolithic solver for one case.
std::vector<fem::TransientState> simulate_case(const Experiment& e, const LoadCase& c,
                                               std::vector<fem::StepStats>* stats = nullptr);

}  // namespace ifenn::train
