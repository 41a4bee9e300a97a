#include <cmath>

#include "internal.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::fem {
namespace detail {
namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

// Reference corner signs in VTK order.
constexpr std::array<std::array<double, 3>, 8> kSign = {{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1},
}};

}  // namespace

void cell_quadrature(const StructuredMesh& mesh, std::size_t cell, std::vector<QuadPoint>& out) {
  const int dim = mesh.dim();
  const int npc = mesh.nodes_per_cell();
  const int nq = dim == 2 ? 4 : 8;
  out.resize(nq);
  auto nodes = mesh.cell(cell);
  for (int q = 0; q < nq; ++q) {
    const std::array<double, 3> xi{(q & 1 ? 1 : -1) * kGauss, (q & 2 ? 1 : -1) * kGauss,
                                   (q & 4 ? 1 : -1) * kGauss};
    auto& qp = out[q];
    std::array<std::array<double, 3>, 8> dref{};
    for (int a = 0; a < npc; ++a) {
      std::array<double, 3> f{};
      for (int d = 0; d < dim; ++d) f[d] = 0.5 * (1.0 + kSign[a][d] * xi[d]);
      double n = 1.0;
      for (int d = 0; d < dim; ++d) n *= f[d];
      qp.N[a] = n;
      for (int d = 0; d < dim; ++d) {
        double g = 0.5 * kSign[a][d];
        for (int e = 0; e < dim; ++e) {
          if (e != d) g *= f[e];
        }
        dref[a][d] = g;
      }
    }
    // J[d][e] = d x_e / d xi_d
    double J[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    qp.x = {0.0, 0.0, 0.0};
    for (int a = 0; a < npc; ++a) {
      const auto& p = mesh.node(nodes[a]);
      for (int d = 0; d < dim; ++d) {
        qp.x[d] += qp.N[a] * p[d];
        for (int e = 0; e < dim; ++e) J[d][e] += dref[a][d] * p[e];
      }
    }
    double det;
    double inv[3][3];
    if (dim == 2) {
      det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
      inv[0][0] = J[1][1] / det;
      inv[0][1] = -J[0][1] / det;
      inv[1][0] = -J[1][0] / det;
      inv[1][1] = J[0][0] / det;
    } else {
      det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) - J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
            J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
      inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det;
      inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det;
      inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det;
      inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det;
      inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det;
      inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det;
      inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det;
      inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det;
      inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det;
    }
    if (!(det > 0.0)) {
      throw AssemblyError("non-positive Jacobian in cell " + std::to_string(cell));
    }
    qp.weight = det;  // Gauss weights are 1 for the 2-point rule
    // dN/dx_e = sum_d (J^-1)[e][d] dN/dxi_d
    for (int a = 0; a < npc; ++a) {
      for (int e = 0; e < dim; ++e) {
        double g = 0.0;
        for (int d = 0; d < dim; ++d) g += inv[e][d] * dref[a][d];
        qp.dN[a][e] = g;
      }
    }
  }
}

void face_quadrature(const StructuredMesh& mesh, const mesh::BoundaryFace& face, std::vector<FacePoint>& out) {
  const int dim = mesh.dim();
  if (dim == 2) {
    out.resize(2);
    const auto& p0 = mesh.node(face.nodes[0]);
    const auto& p1 = mesh.node(face.nodes[1]);
    const double half_len = 0.5 * std::hypot(p1[0] - p0[0], p1[1] - p0[1]);
    for (int q = 0; q < 2; ++q) {
      const double s = (q ? 1 : -1) * kGauss;
      auto& fp = out[q];
      fp.N = {0.5 * (1 - s), 0.5 * (1 + s), 0.0, 0.0};
      fp.weight = half_len;
      for (int d = 0; d < 3; ++d) fp.x[d] = fp.N[0] * p0[d] + fp.N[1] * p1[d];
    }
    return;
  }
  out.resize(4);
  for (int q = 0; q < 4; ++q) {
    const double s = (q & 1 ? 1 : -1) * kGauss;
    const double r = (q & 2 ? 1 : -1) * kGauss;
    auto& fp = out[q];
    // nodes lexicographic: (0,0) (1,0) (0,1) (1,1)
    fp.N = {0.25 * (1 - s) * (1 - r), 0.25 * (1 + s) * (1 - r), 0.25 * (1 - s) * (1 + r),
            0.25 * (1 + s) * (1 + r)};
    const std::array<double, 4> ds{-0.25 * (1 - r), 0.25 * (1 - r), -0.25 * (1 + r), 0.25 * (1 + r)};
    const std::array<double, 4> dr{-0.25 * (1 - s), -0.25 * (1 + s), 0.25 * (1 - s), 0.25 * (1 + s)};
    Point t1{}, t2{};
    fp.x = {0.0, 0.0, 0.0};
    for (int a = 0; a < 4; ++a) {
      const auto& p = mesh.node(face.nodes[a]);
      for (int d = 0; d < 3; ++d) {
        t1[d] += ds[a] * p[d];
        t2[d] += dr[a] * p[d];
        fp.x[d] += fp.N[a] * p[d];
      }
    }
    const Point c{t1[1] * t2[2] - t1[2] * t2[1], t1[2] * t2[0] - t1[0] * t2[2], t1[0] * t2[1] - t1[1] * t2[0]};
    fp.weight = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  }
}

}  // namespace detail

std::vector<double> element_elastic_stiffness(const StructuredMesh& mesh, std::size_t cell, double lambda,
                                              double mu) {
  const int dim = mesh.dim();
  const int npc = mesh.nodes_per_cell();
  const int n = dim * npc;
  std::vector<double> k(std::size_t(n) * n, 0.0);
  std::vector<detail::QuadPoint> qps;
  detail::cell_quadrature(mesh, cell, qps);
  for (const auto& qp : qps) {
    for (int a = 0; a < npc; ++a) {
      for (int b = 0; b < npc; ++b) {
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) dot += qp.dN[a][d] * qp.dN[b][d];
        for (int i = 0; i < dim; ++i) {
          for (int j = 0; j < dim; ++j) {
            double v = lambda * qp.dN[a][i] * qp.dN[b][j] + mu * qp.dN[a][j] * qp.dN[b][i];
            if (i == j) v += mu * dot;
            k[std::size_t(a * dim + i) * n + b * dim + j] += v * qp.weight;
          }
        }
      }
    }
  }
  return k;
}

}  // namespace ifenn::fem
