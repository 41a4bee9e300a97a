#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "ifenn/errors.hpp"
#include "ifenn/fem.hpp"
#include "oracles.hpp"

using namespace ifenn;
using namespace ifenn::fem;
using oracle::constant;
using oracle::square;
using oracle::unit_poro;
using oracle::unit_thermo;

namespace {

StructuredMesh column(int ny, double width, double height) {
  const int d[] = {1, ny};
  const double e[] = {width, height};
  return mesh::build_structured_grid(2, d, e);
}

void clamp_all(LoadSpec& loads, int dim) {
  for (const char* tag : {"left", "right", "bottom", "top"}) {
    for (int c = 0; c < dim; ++c) loads.dirichlet.push_back({tag, c, constant(0.0)});
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Independent stiffness oracle: B^T D B with plane-strain Voigt matrices on
// an axis-aligned rectangle of size hx x hy, 2x2 Gauss.
std::vector<double> voigt_stiffness(double hx, double hy, double lambda, double mu) {
  const double g = 1.0 / std::sqrt(3.0);
  // VTK corner order on the reference square
  const double sx[4] = {-1, 1, 1, -1};
  const double sy[4] = {-1, -1, 1, 1};
  const double D[3][3] = {{lambda + 2 * mu, lambda, 0}, {lambda, lambda + 2 * mu, 0}, {0, 0, mu}};
  std::vector<double> K(64, 0.0);
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      double B[3][8] = {};
      for (int a = 0; a < 4; ++a) {
        const double dx = 0.25 * sx[a] * (1 + sy[a] * eta) * (2.0 / hx);
        const double dy = 0.25 * sy[a] * (1 + sx[a] * xi) * (2.0 / hy);
        B[0][2 * a] = dx;
        B[1][2 * a + 1] = dy;
        B[2][2 * a] = dy;
        B[2][2 * a + 1] = dx;
      }
      const double detj = hx * hy / 4.0;
      for (int p = 0; p < 8; ++p) {
        for (int q = 0; q < 8; ++q) {
          double s = 0.0;
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) s += B[i][p] * D[i][j] * B[j][q];
          }
          K[p * 8 + q] += s * detj;
        }
      }
    }
  }
  return K;
}

}  // namespace

TEST_CASE("material invariants") {
  auto t = unit_thermo();
  CHECK_NOTHROW(t.validate());
  t.mu = 0.0;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  auto p = unit_poro();
  CHECK(p.biot_alpha() == doctest::Approx(0.5));
  CHECK(p.biot_modulus_inv() == doctest::Approx(0.3 + 0.2 * 0.3));
  p.porosity = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  // excavation material from the reference configuration
  PoroMaterial ex;
  CHECK(ex.bulk_modulus() == doctest::Approx(8.375e6 + 2 * 5.58e6 / 3));
  CHECK(ex.biot_alpha() == doctest::Approx(1 - ex.bulk_modulus() / 5.5556e10));
}

TEST_CASE("element stiffness matches an independent Voigt quadrature") {
  for (auto [hx, hy] : {std::pair{1.0, 1.0}, std::pair{0.5, 2.0}}) {
    const int d[] = {1, 1};
    const double e[] = {hx, hy};
    auto m = mesh::build_structured_grid(2, d, e);
    const double lambda = hx == 1.0 ? 1.0 : 3.0, mu = hx == 1.0 ? 1.0 : 0.7;
    auto k = element_elastic_stiffness(m, 0, lambda, mu);
    auto oracle = voigt_stiffness(hx, hy, lambda, mu);
    REQUIRE(k.size() == oracle.size());
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(std::abs(k[i] - oracle[i]) < 1e-12);
  }
}

TEST_CASE("element stiffness annihilates rigid modes") {
  auto ring = mesh::build_annulus_grid(2, 6, 1.0, 2.0, M_PI);
  for (std::size_t c = 0; c < ring.cell_count(); ++c) {
    auto k = element_elastic_stiffness(ring, c, 2.0, 1.5);
    auto nodes = ring.cell(c);
    std::vector<std::vector<double>> modes(3, std::vector<double>(8));
    for (int a = 0; a < 4; ++a) {
      const auto& p = ring.node(nodes[a]);
      modes[0][2 * a] = 1.0;
      modes[1][2 * a + 1] = 1.0;
      modes[2][2 * a] = -p[1];
      modes[2][2 * a + 1] = p[0];
    }
    for (const auto& v : modes) {
      for (int i = 0; i < 8; ++i) {
        double s = 0.0;
        for (int j = 0; j < 8; ++j) s += k[i * 8 + j] * v[j];
        CHECK(std::abs(s) < 1e-12);
      }
    }
  }
}

TEST_CASE("zero data gives a zero solution") {
  auto m = square(3);
  LoadSpec loads;
  clamp_all(loads, 3);
  for (Material mat : {Material(unit_thermo()), Material(unit_poro())}) {
    auto states = run_monolithic_transient(m, mat, loads, 0.1, 2);
    CHECK(max_abs(states.back().u) == 0.0);
    for (double z : states.back().z) CHECK(z == z_offset(mat));
  }
}

TEST_CASE("unconstrained rigid mode is reported") {
  auto m = square(2);
  LoadSpec loads;
  loads.dirichlet.push_back({"left", 0, constant(0.0)});
  try {
    assemble_monolithic(m, unit_thermo(), initial_state(m, unit_thermo()), loads, 0.1);
    FAIL("expected an assembly error");
  } catch (const AssemblyError& e) {
    CHECK(std::string(e.what()).find("u_y") != std::string::npos);
  }
  loads.dirichlet.push_back({"nowhere", 1, constant(0.0)});
  CHECK_THROWS_AS(assemble_monolithic(m, unit_thermo(), initial_state(m, unit_thermo()), loads, 0.1), NotFound);
}

TEST_CASE("sparse solvers") {
  SUBCASE("identity") {
    auto I = CsrMatrix::identity(5);
    std::vector<double> b{1, -2, 3, 0.5, 7};
    CHECK(solve_pcg(I, b).x == b);
    auto lu = solve_lu(I, b).x;
    for (int i = 0; i < 5; ++i) CHECK(lu[i] == doctest::Approx(b[i]));
  }
  SUBCASE("2x2 SPD") {
    auto A = CsrMatrix::from_triplets(2, 2, {{0, 0, 4}, {0, 1, 1}, {1, 0, 1}, {1, 1, 3}});
    std::vector<double> b{1, 2};
    for (const auto& x : {solve_pcg(A, b).x, solve_lu(A, b).x}) {
      CHECK(x[0] == doctest::Approx(1.0 / 11).epsilon(1e-14));
      CHECK(x[1] == doctest::Approx(7.0 / 11).epsilon(1e-14));
    }
  }
  SUBCASE("random SPD against dense Cholesky") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    const int n = 50;
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) G(i, j) = nd(rng);
    }
    Eigen::MatrixXd S = G * G.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = nd(rng);
    Eigen::VectorXd oracle = S.llt().solve(b);
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) t.push_back({std::size_t(i), std::size_t(j), S(i, j)});
    }
    auto A = CsrMatrix::from_triplets(n, n, t);
    std::vector<double> bv(b.data(), b.data() + n);
    for (const auto& x : {solve_pcg(A, bv).x, solve_lu(A, bv).x}) {
      double diff = 0.0;
      for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(x[i] - oracle[i]));
      CHECK(diff / oracle.cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("failures") {
    auto A = CsrMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 2}, {1, 0, 2}, {1, 1, 1}});
    std::vector<double> b{1, 0};
    CHECK_THROWS_AS(solve_pcg(A, b), SolverError);  // indefinite
    auto Z = CsrMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
    CHECK_THROWS_AS(solve_lu(Z, b), SolverError);
    SolveOptions tight;
    tight.max_iterations = 1;
    auto L = CsrMatrix::from_triplets(3, 3, {{0, 0, 2}, {0, 1, -1}, {1, 0, -1}, {1, 1, 2}, {1, 2, -1}, {2, 1, -1}, {2, 2, 2}});
    try {
      solve_pcg(L, std::vector<double>{1, 0, 0}, tight);
      FAIL("expected a solver error");
    } catch (const SolverError& e) {
      CHECK(e.final_residual() > 0.0);
    }
  }
}

TEST_CASE("strain trace projection") {
  auto m = square(4);
  std::vector<double> u(m.node_count() * 2);
  for (std::size_t k = 0; k < m.node_count(); ++k) {
    u[2 * k] = 0.3;
    u[2 * k + 1] = -1.1;
  }
  CHECK(max_abs(strain_trace_field(m, u)) < 1e-14);
  for (std::size_t k = 0; k < m.node_count(); ++k) {
    u[2 * k] = m.node(k)[0];
    u[2 * k + 1] = m.node(k)[1];
  }
  for (double v : strain_trace_field(m, u)) CHECK(v == doctest::Approx(2.0).epsilon(1e-13));

  double previous = 1e9;
  for (int n : {4, 8, 16, 32}) {
    auto g = square(n);
    std::vector<double> w(g.node_count() * 2, 0.0);
    for (std::size_t k = 0; k < g.node_count(); ++k) w[2 * k] = g.node(k)[0] * g.node(k)[0];
    auto tr = strain_trace_field(g, w);
    double dev = 0.0;
    for (std::size_t k = 0; k < g.node_count(); ++k) dev = std::max(dev, std::abs(tr[k] - 2 * g.node(k)[0]));
    CHECK(dev < 1.5 / n);
    CHECK(dev < previous);
    previous = dev;
  }
  CHECK_THROWS_AS(strain_trace_field(m, std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("manufactured solutions converge at second order") {
  ThermoMaterial t = unit_thermo();
  PoroMaterial p = unit_poro();
  const auto thermo_ms = oracle::Manufactured::thermo(t);
  const auto poro_ms = oracle::Manufactured::poro(p);
  for (auto [mat, ms] : {std::pair{Material(t), thermo_ms}, std::pair{Material(p), poro_ms}}) {
    std::vector<std::pair<double, double>> errs;
    for (int n : {4, 8, 16, 32}) errs.push_back(oracle::manufactured_errors(mat, ms, n));
    for (std::size_t k = 1; k < errs.size(); ++k) {
      const double ru = std::log2(errs[k - 1].first / errs[k].first);
      const double rz = std::log2(errs[k - 1].second / errs[k].second);
      INFO(to_string(problem_of(mat)) << " level " << k << " rates u " << ru << " z " << rz);
      CHECK(ru >= 1.8);
      CHECK(rz >= 1.8);
    }
  }
}

TEST_CASE("Terzaghi consolidation follows the series solution") {
  PoroMaterial mat = unit_poro();
  mat.k_solid = 1e3;
  const double H = 1.0, q = 1.0;
  auto m = column(40, 0.05, H);
  LoadSpec loads;
  loads.dirichlet = {{"left", 0, constant(0.0)}, {"right", 0, constant(0.0)}, {"bottom", 0, constant(0.0)},
                     {"bottom", 1, constant(0.0)}, {"top", 2, constant(0.0)}};
  loads.tractions.push_back({"top", [q](const Point&, double) { return Point{0.0, -q, 0.0}; }});

  const oracle::Terzaghi terzaghi(mat, H, q);
  const double p0 = terzaghi.p0;
  auto series = [&](double depth, double t) { return terzaghi.pressure(depth, t); };
  const double dt = 0.01;
  auto states = run_monolithic_transient(m, mat, loads, dt, 40);
  const std::size_t base = m.node_index(0, 0), mid = m.node_index(0, 20);
  for (int k = 3; k <= 40; ++k) {
    const auto& s = states[k];
    INFO("step " << k);
    CHECK(std::abs(s.z[base] - series(H, s.time)) / p0 < 0.02);
    CHECK(std::abs(s.z[mid] - series(0.5 * H, s.time)) / p0 < 0.02);
  }
}

TEST_CASE("undrained loading matches the closed-form pore pressure") {
  PoroMaterial mat = unit_poro();
  mat.hydraulic_conductivity = 0.0;
  auto m = square(3);
  LoadSpec loads;
  loads.dirichlet = {{"left", 0, constant(0.0)}, {"right", 0, constant(0.0)}, {"bottom", 1, constant(0.0)}};
  const double q = 2.5;
  loads.tractions.push_back({"top", [q](const Point&, double) { return Point{0.0, -q, 0.0}; }});
  auto states = run_monolithic_transient(m, mat, loads, 1.0, 1);
  const double a = mat.biot_alpha();
  const double M = 1.0 / mat.biot_modulus_inv();
  const double expected = a * M * q / (mat.lambda + 2 * mat.mu + a * a * M);
  for (double p : states[1].z) CHECK(std::abs(p - expected) / expected < 0.01);
}

TEST_CASE("gravity steady state is hydrostatic") {
  PoroMaterial mat = unit_poro();
  mat.fluid_weight_density = 9810.0;
  mat.hydraulic_conductivity = 1e-3;
  mat.gravity_dir = {0.0, 1.0, 0.0};
  auto m = square(6);
  LoadSpec loads;
  clamp_all(loads, 2);
  loads.dirichlet.push_back({"top", 2, constant(0.0)});
  auto states = run_monolithic_transient(m, mat, loads, 1e18, 1);
  for (std::size_t k = 0; k < m.node_count(); ++k) {
    const double expected = mat.fluid_weight_density * (1.0 - m.node(k)[1]);
    CHECK(std::abs(states[1].z[k] - expected) < 1e-8 * mat.fluid_weight_density);
  }
}

TEST_CASE("mechanics-only path reproduces the monolithic displacement") {
  auto m = square(4);
  for (Material mat : {Material(unit_thermo()), Material(unit_poro())}) {
    LoadSpec loads;
    loads.dirichlet = {{"left", 0, constant(0.0)}, {"left", 1, constant(0.0)}, {"top", 2,
                       [](const Point& p, double t) { return 3.0 * p[0] * t; }}};
    loads.source = [](const Point& p, double t) { return std::sin(3 * p[0]) * (1 + t) + p[1]; };
    loads.body_force = [](const Point& p, double) { return Point{0.1 * p[1], -0.2, 0.0}; };
    auto mono = run_monolithic_transient(m, mat, loads, 0.1, 3);
    auto s0 = initial_state(m, mat);
    // zero field and zero loads give zero displacement
    LoadSpec bare;
    bare.dirichlet = {{"left", 0, constant(0.0)}, {"left", 1, constant(0.0)}};
    auto still = step_mechanics_only(m, mat, s0, s0.z, bare, 0.1);
    CHECK(max_abs(still.u) == 0.0);

    for (int k = 1; k <= 3; ++k) {
      auto sys = assemble_mechanics_only(m, mat, mono[k - 1], mono[k].z, loads, 0.1);
      CHECK(sys.symmetric);
      CHECK(sys.matrix.max_asymmetry() < 1e-12);
      CHECK(sys.dofs() * 3 == assemble_monolithic(m, mat, mono[k - 1], loads, 0.1).dofs() * 2);
      auto mech = step_mechanics_only(m, mat, mono[k - 1], mono[k].z, loads, 0.1);
      double diff = 0.0;
      for (std::size_t i = 0; i < mech.u.size(); ++i) diff = std::max(diff, std::abs(mech.u[i] - mono[k].u[i]));
      CHECK(diff <= 1e-10 * max_abs(mono[k].u));
    }
    auto mono_sys = assemble_monolithic(m, mat, mono[0], loads, 0.1);
    CHECK(mono_sys.matrix.max_asymmetry() > 1e-6);
    CHECK_FALSE(mono_sys.symmetric);
  }
}

TEST_CASE("plate analog: boundary ramp and energy balance") {
  ThermoMaterial mat;  // reference aluminium-like values
  mat.n_dim = 2;
  auto m = square(10);
  auto gamma = [](double t) { return std::min(t / 1800.0, 1.0); };
  LoadSpec loads;
  loads.dirichlet = {{"left", 0, constant(0.0)}, {"left", 1, constant(0.0)}, {"left", 2, constant(0.0)},
                     {"top", 2, [gamma](const Point& p, double t) { return 10.0 * p[0] * gamma(t); }}};
  loads.source = [](const Point& p, double t) { return 5e4 * (1.0 + std::sin(4 * p[0] + 3 * p[1] + t / 3000.0)); };
  const double dt = 900.0;
  auto states = run_monolithic_transient(m, mat, loads, dt, 20);
  auto top = mesh::boundary_nodes(m, "top");
  auto left = mesh::boundary_nodes(m, "left");
  for (int k = 1; k <= 20; ++k) {
    const auto& s = states[k];
    for (auto n : top) {
      const double expected = 10.0 * m.node(n)[0] * gamma(s.time);
      if (m.node(n)[0] == 0.0) continue;  // corner shared with the left face
      CHECK(std::abs((s.z[n] - mat.t_ref) - expected) < 1e-12 * 10.0);
    }
    for (auto n : left) CHECK(std::abs(s.z[n] - mat.t_ref) < 1e-12);
    auto audit = audit_balance(m, mat, states[k - 1], s, loads, dt);
    INFO("step " << k << " storage " << audit.storage << " reaction " << audit.reaction);
    CHECK(audit.relative_imbalance() < 0.01);
  }
}

TEST_CASE("constant loads relax toward a steady state") {
  auto mat = unit_thermo();
  auto m = square(4);
  LoadSpec loads;
  clamp_all(loads, 2);
  loads.dirichlet.push_back({"left", 2, constant(0.0)});
  loads.source = constant(1.0);
  auto states = run_monolithic_transient(m, mat, loads, 0.2, 30);
  double previous = 1e300;
  for (int k = 2; k <= 30; ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < states[k].z.size(); ++i) d = std::max(d, std::abs(states[k].z[i] - states[k - 1].z[i]));
    CHECK(d <= previous * (1 + 1e-12));
    previous = d;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("VTK legacy output") {
  auto m = square(2);
  std::vector<double> s(m.node_count(), 1.5), v(m.node_count() * 2, 0.25);
  std::ostringstream os;
  write_vtk(os, m, {{"T", s, 1}, {"u", v, 2}});
  const auto text = os.str();
  CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(text.find("POINTS 9 double") != std::string::npos);
  CHECK(text.find("CELLS 4 20") != std::string::npos);
  CHECK(text.find("CELL_TYPES 4\n9\n9\n9\n9\n") != std::string::npos);
  CHECK(text.find("POINT_DATA 9\nSCALARS T double 1\nLOOKUP_TABLE default\n1.5\n") != std::string::npos);
  CHECK(text.find("VECTORS u double\n0.25 0.25 0\n") != std::string::npos);
  CHECK_THROWS_AS(write_vtk(os, m, {{"bad", std::span<const double>(s).first(3), 1}}), InvalidArgument);
}

TEST_CASE("metrics CSV") {
  const std::string path = "test_fem_metrics.csv";
  {
    CsvWriter csv(path, {"step", "time", "residual"});
    csv.row({1, 0.5, 1e-12});
    CHECK_THROWS_AS(csv.row({1, 2}), InvalidArgument);
  }
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "step,time,residual");
  CHECK(line == "1,0.5,1e-12");
  std::remove(path.c_str());
}
