#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ifenn::mesh {

using Point = std::array<double, 3>;

/// How reference-box coordinates map to physical space.
enum class GridMapping {
  kBox,      // identity
  kAnnulus,  // axis 0 = radius offset from r_inner, axis 1 = polar angle
};

struct BoundaryFace {
  std::size_t cell = 0;
  int axis = 0;  // reference axis normal to the face
  int side = 0;  // 0 = min end of the axis, 1 = max end
  /// Face nodes in lexicographic order of the remaining reference axes
  /// (2 entries in 2D, 4 in 3D).
  std::array<std::size_t, 4> nodes{};
  std::string tag;
};

/// Structured quad (2D) or hex (3D) grid over a reference box, optionally
/// mapped to a curved physical shape. Immutable after construction.
///
/// Nodes are ordered lexicographically with x fastest, then y, then z.
/// Cell connectivity follows the VTK_QUAD / VTK_HEXAHEDRON node order.
class StructuredMesh {
 public:
  int dim() const noexcept { return dim_; }
  std::span<const int> divisions() const noexcept { return {divisions_.data(), std::size_t(dim_)}; }
  std::span<const double> extent() const noexcept { return {extent_.data(), std::size_t(dim_)}; }
  GridMapping mapping() const noexcept { return mapping_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t cell_count() const noexcept { return cells_.size() / nodes_per_cell(); }
  int nodes_per_cell() const noexcept { return dim_ == 2 ? 4 : 8; }

  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  const Point& node(std::size_t i) const { return nodes_.at(i); }
  const Point& reference_node(std::size_t i) const { return reference_.at(i); }
  std::span<const std::size_t> cell(std::size_t c) const;

  std::size_t node_index(int i, int j, int k = 0) const noexcept;

  const std::vector<BoundaryFace>& boundary_faces() const noexcept { return faces_; }
  /// Distinct tags in first-seen order.
  std::vector<std::string> tags() const;
  bool has_tag(const std::string& tag) const;

  /// Reference-box point to physical point.
  Point map_reference(const Point& ref) const;
  /// Physical centroid of a boundary face.
  Point face_centroid(const BoundaryFace& face) const;

  /// Returns a copy in which every face tagged `from` whose physical centroid
  /// satisfies `select` is re-tagged `to`.
  StructuredMesh with_retagged_faces(const std::string& from,
                                     const std::function<bool(const Point&)>& select,
                                     const std::string& to) const;

  /// Node and cell counts, one line; used in sidecar files and logs.
  std::string describe() const;

 private:
  friend StructuredMesh build_structured_grid(int, std::span<const int>, std::span<const double>);
  friend StructuredMesh build_annulus_grid(int, int, double, double, double);
  void populate(const std::array<std::array<std::string, 2>, 3>& tag_names);

  int dim_ = 2;
  std::array<int, 3> divisions_{1, 1, 0};
  std::array<double, 3> extent_{1.0, 1.0, 0.0};
  GridMapping mapping_ = GridMapping::kBox;
  double r_inner_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<Point> reference_;
  std::vector<std::size_t> cells_;
  std::vector<BoundaryFace> faces_;
};

/// Box grid [0, extent_0] x ... . Boundary tags: left/right (x), bottom/top
/// (y) in 2D; left/right (x), front/back (y), bottom/top (z) in 3D.
StructuredMesh build_structured_grid(int dim, std::span<const int> divisions,
                                     std::span<const double> extent);

/// Polar-mapped 2D grid of the annular sector r in [r_inner, r_outer],
/// angle in [0, angle_span]. Tags: inner, outer, cut_start, cut_end.
StructuredMesh build_annulus_grid(int radial_divisions, int angular_divisions, double r_inner,
                                  double r_outer, double angle_span);

/// Sorted node indices lying on faces carrying `tag`. Throws NotFound.
std::vector<std::size_t> boundary_nodes(const StructuredMesh& mesh, const std::string& tag);

/// Uniformly spaced point samples of a nodal field, read through
/// multilinear interpolation in reference coordinates.
struct SensorGrid {
  std::vector<Point> locations;
  std::vector<Point> reference;
  std::string source;  // "domain" or a boundary tag
  std::vector<int> counts;
  std::size_t node_count = 0;
  std::vector<std::array<std::size_t, 8>> stencil_nodes;
  std::vector<std::array<double, 8>> stencil_weights;

  std::size_t count() const noexcept { return locations.size(); }
  std::vector<double> sample(std::span<const double> nodal) const;
};

/// Sensors spaced equally over the source region, extremes included; a single
/// count along an axis selects the midpoint. For a boundary tag the counts
/// run along the face's intrinsic axes (dim - 1 entries).
SensorGrid select_sensor_grid(const StructuredMesh& mesh, std::span<const int> counts,
                              const std::string& source);

}  // namespace ifenn::mesh
