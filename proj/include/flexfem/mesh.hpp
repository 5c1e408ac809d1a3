#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "flexfem/common.hpp"

namespace flexfem::mesh {

/// A boundary face: local face `2*axis` is the low side of the cell along
/// `axis`, `2*axis + 1` the high side.
struct BoundaryFace {
  std::size_t cell;
  int local_face;
  int tag;
};

/// Geometry of a structured box mesh; enough to rebuild it.
struct BoxDescriptor {
  int dim = 0;
  Point lower{};
  Point upper{};
  std::array<int, 3> subdivisions{1, 1, 1};

  bool operator==(const BoxDescriptor &) const = default;
};

/// Axis-aligned tensor-product mesh of segments, quadrilaterals or hexahedra.
///
/// Vertices and cells are numbered lexicographically with the x index
/// running fastest. Cell vertices follow the same tensor-product order, so
/// local vertex `v` sits at offset `(v & 1, (v >> 1) & 1, (v >> 2) & 1)`.
/// Boundary faces of the low (high) side along axis i carry tag 2i (2i+1)
/// until retagged.
class Mesh {
 public:
  Mesh() = default;

  int dim() const { return desc_.dim; }
  const BoxDescriptor &descriptor() const { return desc_; }
  const Point &lower() const { return desc_.lower; }
  const Point &upper() const { return desc_.upper; }
  int subdivisions(int axis) const { return desc_.subdivisions[axis]; }

  std::size_t n_vertices() const { return vertices_.size(); }
  std::size_t n_cells() const { return n_cells_; }
  int vertices_per_cell() const { return 1 << desc_.dim; }

  const Point &vertex(std::size_t v) const { return vertices_[v]; }
  const std::vector<Point> &vertices() const { return vertices_; }
  /// Global vertex indices of a cell, in tensor-product order.
  std::vector<std::size_t> cell_vertices(std::size_t cell) const;

  std::array<int, 3> cell_multi_index(std::size_t cell) const;
  std::size_t cell_index(const std::array<int, 3> &multi) const;
  /// Lower corner of a cell.
  Point cell_origin(std::size_t cell) const;
  /// Edge lengths of every cell (uniform over the mesh); unused axes are 0.
  const Point &cell_size() const { return h_; }
  double cell_volume() const;
  double cell_diameter() const;

  const std::vector<BoundaryFace> &boundary_faces() const { return faces_; }
  /// Tags ever carried by the mesh, including ones whose faces were retagged.
  const std::set<int> &tags() const { return tags_; }
  bool has_tag(int tag) const { return tags_.count(tag) > 0; }

  /// Moves every boundary face whose centre satisfies `predicate` to `tag`.
  void retag(const std::function<bool(const Point &)> &predicate, int tag);

  /// Centre of a local face of a cell.
  Point face_center(std::size_t cell, int local_face) const;
  /// Measure of a local face: product of the cell sizes along the other
  /// axes (1 for the point faces of a 1D mesh).
  double face_measure(int local_face) const;

  /// Cell containing the point, clamped onto the box when outside.
  std::size_t locate(const Point &p) const;

 private:
  friend Mesh generate_box(int, const Point &, const Point &,
                           const std::array<int, 3> &);

  BoxDescriptor desc_;
  Point h_{};
  std::size_t n_cells_ = 0;
  std::vector<Point> vertices_;
  std::vector<BoundaryFace> faces_;
  std::set<int> tags_;
};

/// Builds the box [lower, upper] with the given per-axis cell counts. Only
/// the first `dim` components of the arguments are read.
Mesh generate_box(int dim, const Point &lower, const Point &upper,
                  const std::array<int, 3> &subdivisions);
Mesh generate_box(const BoxDescriptor &desc);

struct DiameterStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct MeshInfo {
  double volume = 0.0;
  std::map<int, double> surface_area_by_tag;
  DiameterStats cell_diameter;

  double total_surface() const;
};

MeshInfo mesh_info(const Mesh &mesh);

struct Closest {
  std::size_t index;
  double distance;
};

/// Nearest vertex; ties go to the lowest index.
Closest find_closest_vertex(const Mesh &mesh, const Point &point);

}  // namespace flexfem::mesh
