#pragma once

#include <array>
#include <vector>

#include "ifenn/fem.hpp"

namespace ifenn::fem::detail {

struct QuadPoint {
  std::array<double, 8> N{};
  std::array<std::array<double, 3>, 8> dN{};  // physical gradients
  double weight = 0.0;                        // Gauss weight times |J|
  Point x{};
};

/// 2-point Gauss rule per axis on one cell; `out` is resized to 4 or 8.
void cell_quadrature(const StructuredMesh& mesh, std::size_t cell, std::vector<QuadPoint>& out);

struct FacePoint {
  std::array<double, 4> N{};  // over BoundaryFace::nodes
  double weight = 0.0;
  Point x{};
};

void face_quadrature(const StructuredMesh& mesh, const mesh::BoundaryFace& face, std::vector<FacePoint>& out);

/// Node-adjacency sparsity for `components` DOFs per node, with a scatter
/// helper for element contributions.
class Assembler {
 public:
  Assembler(const StructuredMesh& mesh, int components);

  /// Selects the cell whose local-to-global slot table add() uses.
  void bind_cell(std::size_t cell);
  void add(int a, int i, int b, int j, double v) {
    matrix.val[matrix.row_ptr[nodes_[a] * components_ + i] + slot_[a][b] * components_ + j] += v;
  }
  void add_rhs(std::size_t node, int i, double v) { rhs[node * components_ + i] += v; }
  std::size_t node(int a) const { return nodes_[a]; }

  CsrMatrix matrix;
  std::vector<double> rhs;

 private:
  const StructuredMesh& mesh_;
  int components_;
  std::vector<std::size_t> adj_ptr_;
  std::vector<std::size_t> adj_;
  std::array<std::size_t, 8> nodes_{};
  std::array<std::array<std::size_t, 8>, 8> slot_{};
};

/// Adds surface tractions (components 0..dim-1) and outward fluxes (with a
/// minus sign, on `scalar_component` when >= 0) at time t.
void add_boundary_loads(Assembler& as, const StructuredMesh& mesh, const LoadSpec& loads, double t,
                        int scalar_component);

/// Dirichlet elimination for conditions whose component is < `max_component`,
/// evaluated at time t. Checks every displacement component is constrained.
SparseSystem finalize_system(Assembler&& as, const StructuredMesh& mesh, const LoadSpec& loads, double t,
                             int components, bool symmetric);

}  // namespace ifenn::fem::detail
