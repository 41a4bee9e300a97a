#include <algorithm>
#include <cmath>
#include <limits>

#include "ifenn/errors.hpp"
#include "ifenn/mesh.hpp"

namespace ifenn::mesh {
namespace {

std::vector<double> spaced(double lo, double hi, int count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = 0.5 * (lo + hi);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    out[i] = i == count - 1 ? hi : lo + (hi - lo) * i / (count - 1);
  }
  return out;
}

void build_stencil(const StructuredMesh& mesh, const Point& ref, std::array<std::size_t, 8>& nodes,
                   std::array<double, 8>& weights) {
  const int dim = mesh.dim();
  std::array<int, 3> cell{0, 0, 0};
  std::array<double, 3> s{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    const int n = mesh.divisions()[d];
    const double h = mesh.extent()[d] / n;
    int i = static_cast<int>(std::floor(ref[d] / h));
    i = std::clamp(i, 0, n - 1);
    cell[d] = i;
    s[d] = std::clamp((ref[d] - i * h) / h, 0.0, 1.0);
  }
  const int corners = 1 << dim;
  nodes.fill(0);
  weights.fill(0.0);
  for (int a = 0; a < corners; ++a) {
    double w = 1.0;
    std::array<int, 3> ijk = cell;
    for (int d = 0; d < dim; ++d) {
      const int bit = (a >> d) & 1;
      ijk[d] += bit;
      w *= bit ? s[d] : 1.0 - s[d];
    }
    nodes[a] = mesh.node_index(ijk[0], ijk[1], ijk[2]);
    weights[a] = w;
  }
}

}  // namespace

std::vector<double> SensorGrid::sample(std::span<const double> nodal) const {
  if (nodal.size() != node_count) throw InvalidArgument("nodal field size does not match mesh");
  std::vector<double> out(count());
  for (std::size_t s = 0; s < count(); ++s) {
    double v = 0.0;
    for (int a = 0; a < 8; ++a) v += stencil_weights[s][a] * nodal[stencil_nodes[s][a]];
    out[s] = v;
  }
  return out;
}

SensorGrid select_sensor_grid(const StructuredMesh& mesh, std::span<const int> counts,
                              const std::string& source) {
  const int dim = mesh.dim();
  for (int c : counts) {
    if (c < 1) throw InvalidArgument("sensor counts must be >= 1");
  }

  // Axis ranges in reference coordinates; a fixed axis has lo == hi.
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{0.0, 0.0, 0.0};
  std::vector<int> free_axes;

  if (source == "domain") {
    if (counts.size() != std::size_t(dim)) throw InvalidArgument("domain sensors need one count per axis");
    for (int d = 0; d < dim; ++d) {
      hi[d] = mesh.extent()[d];
      free_axes.push_back(d);
    }
  } else {
    if (!mesh.has_tag(source)) throw NotFound("unknown boundary tag: " + source);
    if (counts.size() != std::size_t(dim - 1)) {
      throw InvalidArgument("boundary sensors need one count per intrinsic face axis");
    }
    int axis = -1;
    int side = -1;
    std::array<double, 3> mn{}, mx{};
    mn.fill(std::numeric_limits<double>::max());
    mx.fill(std::numeric_limits<double>::lowest());
    const int n_face = dim == 2 ? 2 : 4;
    for (const auto& f : mesh.boundary_faces()) {
      if (f.tag != source) continue;
      if (axis >= 0 && (f.axis != axis || f.side != side)) {
        throw InvalidArgument("boundary tag spans more than one face of the reference box: " + source);
      }
      axis = f.axis;
      side = f.side;
      for (int a = 0; a < n_face; ++a) {
        const auto& r = mesh.reference_node(f.nodes[a]);
        for (int d = 0; d < dim; ++d) {
          mn[d] = std::min(mn[d], r[d]);
          mx[d] = std::max(mx[d], r[d]);
        }
      }
    }
    for (int d = 0; d < dim; ++d) {
      lo[d] = mn[d];
      hi[d] = mx[d];
      if (d != axis) free_axes.push_back(d);
    }
  }

  SensorGrid grid;
  grid.source = source;
  grid.counts.assign(counts.begin(), counts.end());
  grid.node_count = mesh.node_count();

  std::array<std::vector<double>, 3> axis_values;
  for (int d = 0; d < dim; ++d) axis_values[d] = {lo[d]};
  for (std::size_t f = 0; f < free_axes.size(); ++f) {
    const int d = free_axes[f];
    axis_values[d] = spaced(lo[d], hi[d], counts[f]);
  }
  const std::size_t nx = axis_values[0].size();
  const std::size_t ny = axis_values[1].size();
  const std::size_t nz = dim == 3 ? axis_values[2].size() : 1;
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        Point ref{axis_values[0][i], axis_values[1][j], dim == 3 ? axis_values[2][k] : 0.0};
        grid.reference.push_back(ref);
        grid.locations.push_back(mesh.map_reference(ref));
        auto& sn = grid.stencil_nodes.emplace_back();
        auto& sw = grid.stencil_weights.emplace_back();
        build_stencil(mesh, ref, sn, sw);
      }
    }
  }
  return grid;
}

}  // namespace ifenn::mesh
