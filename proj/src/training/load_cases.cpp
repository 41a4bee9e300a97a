#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "ifenn/errors.hpp"
#include "ifenn/experiment.hpp"

namespace ifenn::train {
namespace {

// Positions of n control points spread evenly over [0, extent].
std::vector<double> control_positions(int n, double extent) {
  std::vector<double> x(n, 0.0);
  for (int i = 0; i < n && n > 1; ++i) x[i] = extent * i / (n - 1);
  return x;
}

// Lower Cholesky factor of a squared-exponential kernel over the points,
// with a small diagonal jitter for near-singular grids.
Eigen::MatrixXd kernel_factor(const std::vector<std::array<double, 2>>& pts, double length) {
  const auto n = Eigen::Index(pts.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
      k(i, j) = length > 0.0 ? std::exp(-(dx * dx + dy * dy) / (2.0 * length * length)) : double(i == j);
    }
  }
  k.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw InvalidArgument("Gaussian field kernel is not positive definite");
  return llt.matrixL();
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Linear interpolation weight into a grid of n points over [0, 1].
void bracket(int n, double s, int& i0, int& i1, double& w) {
  if (n == 1) {
    i0 = i1 = 0;
    w = 0.0;
    return;
  }
  const double f = std::clamp(s, 0.0, 1.0) * (n - 1);
  i0 = std::min(int(f), n - 2);
  i1 = i0 + 1;
  w = f - i0;
}

}  // namespace

std::vector<double> sample_gaussian_control(const GaussianFieldSpec& g, double lx, double ly, std::mt19937_64& rng) {
  g.validate();
  const auto xs = control_positions(g.control_x, lx);
  const auto ys = control_positions(g.control_y, ly);
  const auto ts = control_positions(g.control_t, 1.0);
  std::vector<std::array<double, 2>> space, time;
  for (double y : ys)
    for (double x : xs) space.push_back({x, y});
  for (double t : ts) time.push_back({t, 0.0});
  const Eigen::MatrixXd ls = kernel_factor(space, g.correlation_length);
  const Eigen::MatrixXd lt = kernel_factor(time, g.correlation_time);

  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(time.size(), space.size());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
  const Eigen::MatrixXd f = lt * z * ls.transpose();

  std::vector<double> out(f.size());
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index j = 0; j < f.cols(); ++j) out[i * f.cols() + j] = g.mean + g.stddev * f(i, j);
  return out;
}

double gaussian_field_value(const GaussianFieldSpec& g, std::span<const double> control, double sx, double sy,
                            double st) {
  const std::size_t nx = g.control_x, ny = g.control_y;
  if (control.size() != nx * ny * std::size_t(g.control_t)) {
    throw InvalidArgument("Gaussian control has " + std::to_string(control.size()) + " values, expected " +
                          std::to_string(nx * ny * g.control_t));
  }
  int x0, x1, y0, y1, t0, t1;
  double wx, wy, wt;
  bracket(g.control_x, sx, x0, x1, wx);
  bracket(g.control_y, sy, y0, y1, wy);
  bracket(g.control_t, st, t0, t1, wt);
  auto at = [&](int t, int y, int x) { return control[(std::size_t(t) * ny + y) * nx + x]; };
  auto plane = [&](int t) {
    const double a = (1 - wx) * at(t, y0, x0) + wx * at(t, y0, x1);
    const double b = (1 - wx) * at(t, y1, x0) + wx * at(t, y1, x1);
    return (1 - wy) * a + wy * b;
  };
  return (1 - wt) * plane(t0) + wt * plane(t1);
}

LoadCase sample_load_case(const Experiment& e, std::uint64_t seed, std::size_t id) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(id), std::uint32_t(id >> 32)};
  std::mt19937_64 rng(seq);
  LoadCase c;
  c.id = id;
  c.family = e.family;
  switch (e.family) {
    case Family::kCubeBody:
      c.control = sample_gaussian_control(e.gaussian, e.mesh.extent()[0], e.mesh.extent()[1], rng);
      break;
    case Family::kExcavationFlux:
      c.control = sample_gaussian_control(e.gaussian, 1.0, 1.0, rng);
      break;
    case Family::kTubeFlux: {
      const auto& r = e.tube;
      r.validate();
      c.params.resize(kTubeParamCount);
      c.params[kQIn0] = uniform(rng, r.q0_min, r.q0_max);
      c.params[kQIn1] = uniform(rng, r.q1_min, r.q1_max);
      c.params[kQOut0] = uniform(rng, r.q0_min, r.q0_max);
      c.params[kQOut1] = uniform(rng, r.q1_min, r.q1_max);
      c.params[kOmegaT] = 2.0 * M_PI * uniform(rng, r.omega_t_min, r.omega_t_max) / e.horizon();
      c.params[kOmegaInR] = uniform(rng, r.omega_r_min, r.omega_r_max);
      c.params[kOmegaOutR] = uniform(rng, r.omega_r_min, r.omega_r_max);
      break;
    }
  }
  return c;
}

std::vector<LoadCase> sample_load_cases(const Experiment& e, std::size_t count, std::uint64_t seed,
                                        std::size_t first_id) {
  if (count == 0) throw InvalidArgument("sample_load_cases needs count >= 1");
  std::vector<LoadCase> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_load_case(e, seed, first_id + i));
  return out;
}

}  // namespace ifenn::train
