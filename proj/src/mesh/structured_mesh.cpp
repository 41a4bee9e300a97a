#include <algorithm>
#include <cmath>
#include <sstream>

#include "ifenn/errors.hpp"
#include "ifenn/mesh.hpp"

namespace ifenn::mesh {
namespace {

// Local corner offsets in VTK order.
constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

}  // namespace

std::span<const std::size_t> StructuredMesh::cell(std::size_t c) const {
  const auto npc = static_cast<std::size_t>(nodes_per_cell());
  if (c >= cell_count()) throw InvalidArgument("cell index out of range");
  return {cells_.data() + c * npc, npc};
}

std::size_t StructuredMesh::node_index(int i, int j, int k) const noexcept {
  const auto nx = static_cast<std::size_t>(divisions_[0] + 1);
  const auto ny = static_cast<std::size_t>(divisions_[1] + 1);
  return static_cast<std::size_t>(i) + nx * (static_cast<std::size_t>(j) + ny * static_cast<std::size_t>(k));
}

std::vector<std::string> StructuredMesh::tags() const {
  std::vector<std::string> out;
  for (const auto& f : faces_) {
    if (std::find(out.begin(), out.end(), f.tag) == out.end()) out.push_back(f.tag);
  }
  return out;
}

bool StructuredMesh::has_tag(const std::string& tag) const {
  return std::any_of(faces_.begin(), faces_.end(), [&](const BoundaryFace& f) { return f.tag == tag; });
}

Point StructuredMesh::map_reference(const Point& ref) const {
  if (mapping_ == GridMapping::kBox) return ref;
  const double r = r_inner_ + ref[0];
  const double theta = ref[1];
  return {r * std::cos(theta), r * std::sin(theta), 0.0};
}

Point StructuredMesh::face_centroid(const BoundaryFace& face) const {
  const int n = dim_ == 2 ? 2 : 4;
  Point c{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a) {
    const auto& p = nodes_[face.nodes[a]];
    for (int d = 0; d < 3; ++d) c[d] += p[d] / n;
  }
  return c;
}

StructuredMesh StructuredMesh::with_retagged_faces(const std::string& from,
                                                   const std::function<bool(const Point&)>& select,
                                                   const std::string& to) const {
  if (!has_tag(from)) throw NotFound("unknown boundary tag: " + from);
  StructuredMesh out = *this;
  for (auto& f : out.faces_) {
    if (f.tag == from && select(face_centroid(f))) f.tag = to;
  }
  return out;
}

std::string StructuredMesh::describe() const {
  std::ostringstream os;
  os << dim_ << "D ";
  for (int d = 0; d < dim_; ++d) os << (d ? "x" : "") << divisions_[d];
  os << " cells, " << node_count() << " nodes";
  if (mapping_ == GridMapping::kAnnulus) os << " (annulus)";
  return os.str();
}

void StructuredMesh::populate(const std::array<std::array<std::string, 2>, 3>& tag_names) {
  const int nx = divisions_[0];
  const int ny = divisions_[1];
  const int nz = dim_ == 3 ? divisions_[2] : 0;

  const std::size_t n_nodes = std::size_t(nx + 1) * std::size_t(ny + 1) * std::size_t(nz + 1);
  nodes_.resize(n_nodes);
  reference_.resize(n_nodes);
  for (int k = 0; k <= nz; ++k) {
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        Point ref{extent_[0] * i / nx, extent_[1] * j / ny, dim_ == 3 ? extent_[2] * k / nz : 0.0};
        const auto id = node_index(i, j, k);
        reference_[id] = ref;
        nodes_[id] = map_reference(ref);
      }
    }
  }

  const int npc = nodes_per_cell();
  cells_.clear();
  cells_.reserve(std::size_t(nx) * ny * std::max(nz, 1) * npc);
  for (int k = 0; k < std::max(nz, 1); ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        for (int a = 0; a < npc; ++a) {
          const auto& o = kCorner[a];
          cells_.push_back(node_index(i + o[0], j + o[1], dim_ == 3 ? k + o[2] : 0));
        }
      }
    }
  }

  faces_.clear();
  const std::array<int, 3> ncell{nx, ny, std::max(nz, 1)};
  for (int axis = 0; axis < dim_; ++axis) {
    for (int side = 0; side < 2; ++side) {
      for (int k = 0; k < ncell[2]; ++k) {
        for (int j = 0; j < ncell[1]; ++j) {
          for (int i = 0; i < ncell[0]; ++i) {
            const std::array<int, 3> cijk{i, j, k};
            if (cijk[axis] != (side == 0 ? 0 : ncell[axis] - 1)) continue;
            BoundaryFace f;
            f.cell = std::size_t(i) + std::size_t(nx) * (std::size_t(j) + std::size_t(ny) * std::size_t(k));
            f.axis = axis;
            f.side = side;
            f.tag = tag_names[axis][side];
            // Remaining axes in increasing order, first one fastest.
            std::array<int, 2> rest{};
            int r = 0;
            for (int d = 0; d < dim_; ++d) {
              if (d != axis) rest[r++] = d;
            }
            const int n_face = dim_ == 2 ? 2 : 4;
            for (int a = 0; a < n_face; ++a) {
              std::array<int, 3> nijk = cijk;
              nijk[axis] += side;
              nijk[rest[0]] += a & 1;
              if (dim_ == 3) nijk[rest[1]] += (a >> 1) & 1;
              f.nodes[a] = node_index(nijk[0], nijk[1], dim_ == 3 ? nijk[2] : 0);
            }
            faces_.push_back(std::move(f));
          }
        }
      }
    }
  }
}

StructuredMesh build_structured_grid(int dim, std::span<const int> divisions,
                                     std::span<const double> extent) {
  if (dim != 2 && dim != 3) throw InvalidArgument("mesh dimension must be 2 or 3");
  if (divisions.size() != std::size_t(dim) || extent.size() != std::size_t(dim)) {
    throw InvalidArgument("divisions/extent must have one entry per axis");
  }
  StructuredMesh m;
  m.dim_ = dim;
  for (int d = 0; d < dim; ++d) {
    if (divisions[d] < 1) throw InvalidArgument("divisions must be >= 1");
    if (!(extent[d] > 0.0)) throw InvalidArgument("extent must be > 0");
    m.divisions_[d] = divisions[d];
    m.extent_[d] = extent[d];
  }
  if (dim == 2) {
    m.populate({{{"left", "right"}, {"bottom", "top"}, {"", ""}}});
  } else {
    m.populate({{{"left", "right"}, {"front", "back"}, {"bottom", "top"}}});
  }
  return m;
}

StructuredMesh build_annulus_grid(int radial_divisions, int angular_divisions, double r_inner,
                                  double r_outer, double angle_span) {
  if (radial_divisions < 1 || angular_divisions < 1) throw InvalidArgument("divisions must be >= 1");
  if (!(r_inner > 0.0) || !(r_outer > r_inner)) throw InvalidArgument("need 0 < r_inner < r_outer");
  if (!(angle_span > 0.0) || angle_span >= 2.0 * M_PI) {
    throw InvalidArgument("angle span must lie in (0, 2 pi)");
  }
  StructuredMesh m;
  m.dim_ = 2;
  m.divisions_ = {radial_divisions, angular_divisions, 0};
  m.extent_ = {r_outer - r_inner, angle_span, 0.0};
  m.mapping_ = GridMapping::kAnnulus;
  m.r_inner_ = r_inner;
  m.populate({{{"inner", "outer"}, {"cut_start", "cut_end"}, {"", ""}}});
  return m;
}

std::vector<std::size_t> boundary_nodes(const StructuredMesh& mesh, const std::string& tag) {
  std::vector<std::size_t> out;
  const int n_face = mesh.dim() == 2 ? 2 : 4;
  for (const auto& f : mesh.boundary_faces()) {
    if (f.tag != tag) continue;
    out.insert(out.end(), f.nodes.begin(), f.nodes.begin() + n_face);
  }
  if (out.empty()) throw NotFound("unknown boundary tag: " + tag);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace ifenn::mesh
