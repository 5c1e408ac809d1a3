#include "flexfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace flexfem::mesh {

std::vector<std::size_t> Mesh::cell_vertices(std::size_t cell) const {
  const auto c = cell_multi_index(cell);
  const int nv = vertices_per_cell();
  const std::size_t nx = desc_.subdivisions[0] + 1;
  const std::size_t ny = desc_.dim > 1 ? desc_.subdivisions[1] + 1 : 1;
  std::vector<std::size_t> out(nv);
  for (int v = 0; v < nv; ++v) {
    const std::size_t i = c[0] + (v & 1);
    const std::size_t j = c[1] + ((v >> 1) & 1);
    const std::size_t k = c[2] + ((v >> 2) & 1);
    out[v] = i + nx * (j + ny * k);
  }
  return out;
}

std::array<int, 3> Mesh::cell_multi_index(std::size_t cell) const {
  const auto &n = desc_.subdivisions;
  std::array<int, 3> c{0, 0, 0};
  c[0] = static_cast<int>(cell % n[0]);
  if (desc_.dim > 1) c[1] = static_cast<int>((cell / n[0]) % n[1]);
  if (desc_.dim > 2) c[2] = static_cast<int>(cell / (std::size_t(n[0]) * n[1]));
  return c;
}

std::size_t Mesh::cell_index(const std::array<int, 3> &c) const {
  const auto &n = desc_.subdivisions;
  return c[0] + std::size_t(n[0]) * (c[1] + std::size_t(n[1]) * c[2]);
}

Point Mesh::cell_origin(std::size_t cell) const {
  const auto c = cell_multi_index(cell);
  Point p{};
  for (int d = 0; d < desc_.dim; ++d) p[d] = desc_.lower[d] + c[d] * h_[d];
  return p;
}

double Mesh::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < desc_.dim; ++d) v *= h_[d];
  return v;
}

double Mesh::cell_diameter() const {
  double s = 0.0;
  for (int d = 0; d < desc_.dim; ++d) s += h_[d] * h_[d];
  return std::sqrt(s);
}

void Mesh::retag(const std::function<bool(const Point &)> &predicate, int tag) {
  tags_.insert(tag);
  for (auto &f : faces_)
    if (predicate(face_center(f.cell, f.local_face))) f.tag = tag;
}

Point Mesh::face_center(std::size_t cell, int local_face) const {
  Point p = cell_origin(cell);
  const int axis = local_face / 2;
  for (int d = 0; d < desc_.dim; ++d)
    p[d] += d == axis ? (local_face % 2) * h_[d] : 0.5 * h_[d];
  return p;
}

double Mesh::face_measure(int local_face) const {
  const int axis = local_face / 2;
  double m = 1.0;
  for (int d = 0; d < desc_.dim; ++d)
    if (d != axis) m *= h_[d];
  return m;
}

std::size_t Mesh::locate(const Point &p) const {
  std::array<int, 3> c{0, 0, 0};
  for (int d = 0; d < desc_.dim; ++d) {
    const double s = (p[d] - desc_.lower[d]) / h_[d];
    const int n = desc_.subdivisions[d];
    c[d] = std::clamp(static_cast<int>(std::floor(s)), 0, n - 1);
  }
  return cell_index(c);
}

Mesh generate_box(int dim, const Point &lower, const Point &upper,
                  const std::array<int, 3> &subdivisions) {
  if (dim < 1 || dim > 3)
    throw Error("mesh dimension must be 1, 2 or 3, got " + std::to_string(dim));
  Mesh m;
  m.desc_.dim = dim;
  m.desc_.lower = Point{};
  m.desc_.upper = Point{};
  m.desc_.subdivisions = {1, 1, 1};
  for (int d = 0; d < dim; ++d) {
    if (!(upper[d] > lower[d]))
      throw Error("degenerate box along axis " + std::to_string(d));
    if (subdivisions[d] < 1)
      throw Error("subdivisions must be >= 1 along axis " + std::to_string(d));
    m.desc_.lower[d] = lower[d];
    m.desc_.upper[d] = upper[d];
    m.desc_.subdivisions[d] = subdivisions[d];
    m.h_[d] = (upper[d] - lower[d]) / subdivisions[d];
  }
  const auto &n = m.desc_.subdivisions;
  m.n_cells_ = std::size_t(n[0]) * n[1] * n[2];

  const int nx = n[0] + 1;
  const int ny = dim > 1 ? n[1] + 1 : 1;
  const int nz = dim > 2 ? n[2] + 1 : 1;
  m.vertices_.reserve(std::size_t(nx) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        Point p{};
        const int idx[3] = {i, j, k};
        for (int d = 0; d < dim; ++d)
          // Pin the far end exactly onto `upper`.
          p[d] = idx[d] == n[d] ? upper[d] : lower[d] + idx[d] * m.h_[d];
        m.vertices_.push_back(p);
      }

  for (std::size_t cell = 0; cell < m.n_cells_; ++cell) {
    const auto c = m.cell_multi_index(cell);
    for (int axis = 0; axis < dim; ++axis) {
      if (c[axis] == 0) m.faces_.push_back({cell, 2 * axis, 2 * axis});
      if (c[axis] == n[axis] - 1)
        m.faces_.push_back({cell, 2 * axis + 1, 2 * axis + 1});
    }
  }
  for (int t = 0; t < 2 * dim; ++t) m.tags_.insert(t);
  return m;
}

Mesh generate_box(const BoxDescriptor &desc) {
  return generate_box(desc.dim, desc.lower, desc.upper, desc.subdivisions);
}

double MeshInfo::total_surface() const {
  double s = 0.0;
  for (const auto &[tag, area] : surface_area_by_tag) s += area;
  return s;
}

MeshInfo mesh_info(const Mesh &mesh) {
  MeshInfo info;
  info.volume = mesh.cell_volume() * static_cast<double>(mesh.n_cells());
  for (int t : mesh.tags()) info.surface_area_by_tag[t] = 0.0;
  for (const auto &f : mesh.boundary_faces())
    info.surface_area_by_tag[f.tag] += mesh.face_measure(f.local_face);
  // All cells of a structured box are congruent.
  const double d = mesh.cell_diameter();
  info.cell_diameter = {d, d, d};
  return info;
}

Closest find_closest_vertex(const Mesh &mesh, const Point &point) {
  Closest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
    const double dist = distance(mesh.vertex(v), point);
    if (dist < best.distance) best = {v, dist};
  }
  return best;
}

}  // namespace flexfem::mesh
