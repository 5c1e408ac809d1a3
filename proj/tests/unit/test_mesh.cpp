#include <algorithm>
#include <map>

#include "doctest.h"
#include "flexfem/mesh.hpp"

using namespace flexfem;
using namespace flexfem::mesh;

namespace {

// Faces as sorted vertex sets; counts how many cells share each.
std::map<std::vector<std::size_t>, int> enumerate_faces(const Mesh &m) {
  std::map<std::vector<std::size_t>, int> faces;
  const int nv = m.vertices_per_cell();
  for (std::size_t c = 0; c < m.n_cells(); ++c) {
    const auto verts = m.cell_vertices(c);
    for (int axis = 0; axis < m.dim(); ++axis)
      for (int side = 0; side < 2; ++side) {
        std::vector<std::size_t> f;
        for (int v = 0; v < nv; ++v)
          if (((v >> axis) & 1) == side) f.push_back(verts[v]);
        std::sort(f.begin(), f.end());
        ++faces[f];
      }
  }
  return faces;
}

}  // namespace

TEST_CASE("generate_box counts") {
  auto m = generate_box(1, {0, 0, 0}, {1, 0, 0}, {4, 1, 1});
  CHECK(m.n_cells() == 4);
  CHECK(m.n_vertices() == 5);
  CHECK(m.tags() == std::set<int>{0, 1});

  m = generate_box(3, {-1, -1, -1}, {1, 1, 1}, {8, 8, 8});
  CHECK(m.n_cells() == 512);
  CHECK(m.n_vertices() == 729);

  m = generate_box(2, {0, 0, 0}, {1, 1, 0}, {2, 3, 1});
  CHECK(m.boundary_faces().size() == 10);
}

TEST_CASE("boundary faces match brute-force enumeration") {
  for (int dim = 1; dim <= 3; ++dim) {
    const auto m = generate_box(dim, {0, 0, 0}, {1, 2, 3}, {2, 3, 2});
    const auto faces = enumerate_faces(m);
    std::size_t boundary = 0;
    for (const auto &[f, count] : faces) {
      CHECK((count == 1 || count == 2));
      boundary += count == 1;
    }
    CHECK(m.boundary_faces().size() == boundary);
    // Each recorded boundary face lies on the box surface with the right tag.
    for (const auto &bf : m.boundary_faces()) {
      const auto centre = m.face_center(bf.cell, bf.local_face);
      const int axis = bf.tag / 2;
      const double side = bf.tag % 2 ? m.upper()[axis] : m.lower()[axis];
      CHECK(centre[axis] == doctest::Approx(side));
      CHECK(bf.tag == bf.local_face);
    }
  }
}

TEST_CASE("generate_box rejects degenerate input") {
  CHECK_THROWS_AS(generate_box(2, {0, 0, 0}, {1, 0, 0}, {2, 2, 1}), Error);
  CHECK_THROWS_AS(generate_box(2, {0, 0, 0}, {1, 1, 0}, {0, 2, 1}), Error);
  CHECK_THROWS_AS(generate_box(4, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}), Error);
}

TEST_CASE("mesh_info measures") {
  auto info = mesh_info(generate_box(3, {-1, -1, -1}, {1, 1, 1}, {4, 4, 4}));
  CHECK(info.volume == doctest::Approx(8.0));
  CHECK(info.total_surface() == doctest::Approx(24.0));

  info = mesh_info(generate_box(2, {0, 0, 0}, {1, 1, 0}, {3, 5, 1}));
  for (const auto &[tag, area] : info.surface_area_by_tag)
    CHECK(area == doctest::Approx(1.0));

  info = mesh_info(generate_box(2, {0, 0, 0}, {2, 1, 0}, {4, 3, 1}));
  CHECK(info.surface_area_by_tag.at(0) == doctest::Approx(1.0));
  CHECK(info.surface_area_by_tag.at(1) == doctest::Approx(1.0));
  CHECK(info.surface_area_by_tag.at(2) == doctest::Approx(2.0));
  CHECK(info.surface_area_by_tag.at(3) == doctest::Approx(2.0));
  CHECK(info.cell_diameter.max == doctest::Approx(std::hypot(0.5, 1.0 / 3)));
}

TEST_CASE("refinement multiplies cells and halves diameter") {
  for (int dim = 1; dim <= 3; ++dim) {
    const auto coarse = generate_box(dim, {0, 0, 0}, {1, 1, 1}, {2, 3, 1});
    const auto fine = generate_box(dim, {0, 0, 0}, {1, 1, 1}, {4, 6, 2});
    CHECK(fine.n_cells() == coarse.n_cells() * (1u << dim));
    CHECK(mesh_info(fine).cell_diameter.max ==
          doctest::Approx(0.5 * mesh_info(coarse).cell_diameter.max));
  }
}

TEST_CASE("find_closest_vertex agrees with a linear scan") {
  const auto m1 = generate_box(1, {0, 0, 0}, {1, 0, 0}, {4, 1, 1});
  auto c = find_closest_vertex(m1, {0.26, 0, 0});
  CHECK(m1.vertex(c.index)[0] == doctest::Approx(0.25));
  CHECK(c.distance == doctest::Approx(0.01));

  c = find_closest_vertex(m1, {0.5, 0, 0});
  CHECK(c.index == 2);
  CHECK(c.distance == 0.0);

  const auto m2 = generate_box(2, {0, 0, 0}, {1, 1, 0}, {4, 4, 1});
  c = find_closest_vertex(m2, {1.7, 0.49, 0});
  CHECK(m2.vertex(c.index)[0] == 1.0);
  CHECK(m2.vertex(c.index)[1] == 0.5);

  // Tie between 0.0 and 0.25 goes to the lower index.
  c = find_closest_vertex(m1, {0.125, 0, 0});
  CHECK(c.index == 0);
}

TEST_CASE("retag and locate") {
  auto m = generate_box(2, {0, 0, 0}, {1, 1, 0}, {4, 4, 1});
  m.retag([](const Point &p) { return p[0] == 1.0 && p[1] < 0.5; }, 9);
  const auto info = mesh_info(m);
  CHECK(info.surface_area_by_tag.at(9) == doctest::Approx(0.5));
  CHECK(info.surface_area_by_tag.at(1) == doctest::Approx(0.5));
  CHECK(m.locate({0.3, 0.8, 0}) == m.cell_index({1, 3, 0}));
  CHECK(m.locate({-5, 5, 0}) == m.cell_index({0, 3, 0}));
}
