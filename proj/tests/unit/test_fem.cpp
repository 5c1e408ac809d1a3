#include <cmath>
#include <random>

#include "doctest.h"
#include "flexfem/fem.hpp"
#include "support/dense.hpp"

using namespace flexfem;
using namespace flexfem::fem;

namespace {

mesh::Mesh unit_box(int dim, int n) {
  return mesh::generate_box(dim, {0, 0, 0}, {1, 1, 1}, {n, n, n});
}

LocalSystem mass_kernel(const FeCellValues &v) {
  LocalSystem L(v.n_dofs());
  for (int q = 0; q < v.n_q; ++q)
    for (int i = 0; i < v.n_shapes; ++i)
      for (int j = 0; j < v.n_shapes; ++j)
        L(i, j) += v.shape(q, i) * v.shape(q, j) * v.JxW[q];
  return L;
}

LocalSystem stiffness_kernel(const FeCellValues &v, const ScalarFunction &f) {
  LocalSystem L(v.n_dofs());
  for (int q = 0; q < v.n_q; ++q) {
    const double fq = f ? f(v.points[q]) : 0.0;
    for (int i = 0; i < v.n_shapes; ++i) {
      for (int j = 0; j < v.n_shapes; ++j) {
        double g = 0.0;
        for (int d = 0; d < 3; ++d) g += v.grad(q, i)[d] * v.grad(q, j)[d];
        L(i, j) += g * v.JxW[q];
      }
      L.rhs[i] += fq * v.shape(q, i) * v.JxW[q];
    }
  }
  return L;
}

// Poisson -lap u = f with u = g on the whole boundary.
DVector solve_poisson(const FeSpace &space, const ScalarFunction &f,
                      const ScalarFunction &g) {
  Constraints bc;
  for (int t : space.mesh().tags()) bc.merge(dirichlet_constraints(space, t, g));
  const auto quad = gauss_quadrature(space.dim(), space.degree() + 2);
  auto sys = assemble_system(
      space, quad, [&](const FeCellValues &v) { return stiffness_kernel(v, f); }, bc);
  linalg::SolverConfig cfg;
  cfg.tolerance = 1e-13;
  cfg.absolute_tolerance = 1e-15;
  cfg.max_iterations = 5000;
  auto [x, rep] = linalg::solve(sys.matrix, sys.rhs, cfg, {});
  REQUIRE(rep.converged);
  return x;
}

double slope(const std::vector<double> &h, const std::vector<double> &e) {
  // Least-squares slope of log e against log h.
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mx += std::log(h[i]);
    my += std::log(e[i]);
  }
  mx /= h.size();
  my /= h.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sxy += (std::log(h[i]) - mx) * (std::log(e[i]) - my);
    sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("space dof counts") {
  CHECK(FeSpace(unit_box(1, 4), 1).n_dofs() == 5);
  CHECK(FeSpace(unit_box(3, 8), 2).n_dofs() == 4913);
  CHECK(FeSpace(unit_box(2, 2), 2, 2).n_dofs() == 50);
  CHECK_THROWS_AS(FeSpace(unit_box(2, 2), 3), Error);
  CHECK_THROWS_AS(FeSpace(unit_box(2, 2), 1, 0), Error);
}

TEST_CASE("shared dofs get identical indices and coordinates") {
  for (int dim = 1; dim <= 3; ++dim)
    for (int p = 1; p <= 2; ++p) {
      const FeSpace space(mesh::generate_box(dim, {0, 0, 0}, {1, 2, 3}, {3, 2, 2}), p, 2);
      // Map coordinates to dofs from every cell; each coordinate must map to
      // a single dof per component.
      std::map<std::pair<std::array<long, 3>, int>, std::size_t> seen;
      for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
        const auto dofs = space.cell_dofs(c);
        const auto o = space.mesh().cell_origin(c);
        const auto &h = space.mesh().cell_size();
        for (int i = 0; i < space.shapes_per_cell(); ++i)
          for (int comp = 0; comp < 2; ++comp) {
            int rest = i;
            std::array<long, 3> key{0, 0, 0};
            Point x{};
            for (int d = 0; d < dim; ++d) {
              const int k = rest % (p + 1);
              rest /= p + 1;
              x[d] = o[d] + h[d] * k / p;
              key[d] = std::lround(x[d] * 1e6);
            }
            const std::size_t dof = dofs[i * 2 + comp];
            CHECK(space.dof_component(dof) == comp);
            CHECK(distance(space.dof_point(dof), x) < 1e-12);
            auto [it, inserted] = seen.emplace(std::make_pair(key, comp), dof);
            if (!inserted) CHECK(it->second == dof);
          }
      }
      CHECK(seen.size() == space.n_dofs());
    }
}

TEST_CASE("gauss quadrature") {
  const auto q1 = gauss_quadrature(1, 1);
  REQUIRE(q1.size() == 1);
  CHECK(q1.points[0][0] == doctest::Approx(0.5));
  CHECK(q1.weights[0] == doctest::Approx(1.0));

  const auto q2 = gauss_quadrature(1, 2);
  double s = 0;
  for (std::size_t k = 0; k < q2.size(); ++k) s += q2.weights[k] * std::pow(q2.points[k][0], 3);
  CHECK(s == doctest::Approx(0.25).epsilon(1e-15));

  const auto q3 = gauss_quadrature(3, 2);
  CHECK(q3.size() == 8);
  double w = 0;
  for (double x : q3.weights) w += x;
  CHECK(w == doctest::Approx(1.0).epsilon(1e-15));

  CHECK(gauss_quadrature(0, 3).size() == 1);
  CHECK_THROWS_AS(gauss_quadrature(1, 0), Error);
  CHECK_THROWS_AS(gauss_quadrature(1, 6), Error);

  // Exactness property: every per-axis monomial x^a y^b with a, b <= 2n-1
  // integrates to 1/((a+1)(b+1)).
  for (int n = 1; n <= 5; ++n) {
    const auto q = gauss_quadrature(2, n);
    for (int a = 0; a <= 2 * n - 1; ++a)
      for (int b = 0; b <= 2 * n - 1; ++b) {
        double sum = 0;
        for (std::size_t k = 0; k < q.size(); ++k)
          sum += q.weights[k] * std::pow(q.points[k][0], a) * std::pow(q.points[k][1], b);
        CHECK(std::abs(sum - 1.0 / ((a + 1) * (b + 1))) < 1e-14);
      }
    // Degree 2n is not integrated exactly in general.
    double sum = 0;
    for (std::size_t k = 0; k < q.size(); ++k) sum += q.weights[k] * std::pow(q.points[k][0], 2 * n);
    CHECK(std::abs(sum - 1.0 / (2 * n + 1)) > 1e-8);
  }
}

TEST_CASE("cell values: nodal basis, partition of unity, JxW") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.5, 3.0);
  for (int dim = 1; dim <= 3; ++dim)
    for (int p = 1; p <= 2; ++p) {
      const auto m = mesh::generate_box(dim, {-1, 0, 2}, {U(rng), U(rng), 2 + U(rng)}, {3, 2, 2});
      const FeSpace space(m, p);
      // Kronecker property at the lattice of reference nodes.
      for (int i = 0; i < space.shapes_per_cell(); ++i)
        for (int j = 0; j < space.shapes_per_cell(); ++j) {
          Point ref{};
          int rest = j;
          for (int d = 0; d < dim; ++d) {
            ref[d] = double(rest % (p + 1)) / p;
            rest /= p + 1;
          }
          CHECK(shape_value(dim, p, i, ref) == doctest::Approx(i == j ? 1.0 : 0.0));
        }
      FeValues fe(space, gauss_quadrature(dim, 3));
      const DVector xcoord = interpolate(space, [](const Point &x) { return x[0]; });
      for (std::size_t c = 0; c < m.n_cells(); ++c) {
        const auto &v = fe.reinit(c);
        double vol = 0;
        for (int q = 0; q < v.n_q; ++q) {
          double s = 0;
          Point g{};
          for (int i = 0; i < v.n_shapes; ++i) {
            s += v.shape(q, i);
            for (int d = 0; d < 3; ++d) g[d] += v.grad(q, i)[d];
          }
          CHECK(std::abs(s - 1.0) < 1e-12);
          for (int d = 0; d < 3; ++d) CHECK(std::abs(g[d]) < 1e-12);
          vol += v.JxW[q];
          const Point gx = v.gradient(xcoord, q);
          CHECK(gx[0] == doctest::Approx(1.0));
          for (int d = 1; d < 3; ++d) CHECK(std::abs(gx[d]) < 1e-12);
          CHECK(v.value(xcoord, q) == doctest::Approx(v.points[q][0]));
        }
        CHECK(vol == doctest::Approx(m.cell_volume()));
      }
    }
}

TEST_CASE("mass and stiffness matrices") {
  const FeSpace line(unit_box(1, 1), 1);
  const auto M = assemble_system(line, gauss_quadrature(1, 2), mass_kernel);
  CHECK(M.matrix(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(M.matrix(0, 1) == doctest::Approx(1.0 / 6));
  CHECK(M.matrix(1, 0) == doctest::Approx(1.0 / 6));
  CHECK(M.matrix(1, 1) == doctest::Approx(1.0 / 3));

  const auto Z = assemble_system(line, gauss_quadrature(1, 2),
                                 [](const FeCellValues &v) { return LocalSystem(v.n_dofs()); });
  for (double x : Z.matrix.values()) CHECK(x == 0.0);
  for (double x : Z.rhs) CHECK(x == 0.0);

  for (int dim = 1; dim <= 3; ++dim)
    for (int p = 1; p <= 2; ++p) {
      const FeSpace space(unit_box(dim, dim == 3 ? 2 : 3), p);
      const auto quad = gauss_quadrature(dim, p + 1);
      const auto K = assemble_system(space, quad, [](const FeCellValues &v) {
        return stiffness_kernel(v, nullptr);
      });
      const auto Mm = assemble_system(space, quad, mass_kernel);
      CHECK(K.matrix.is_symmetric(1e-14));
      CHECK(Mm.matrix.is_symmetric(1e-14));
      // Row sums of the Neumann stiffness matrix vanish.
      const DVector ones(space.n_dofs(), 1.0);
      CHECK(linalg::norm_inf(spmv(K.matrix, ones)) < 1e-12);
      // Total mass equals the domain volume.
      double total = 0;
      for (double x : spmv(Mm.matrix, ones)) total += x;
      CHECK(total == doctest::Approx(1.0));

      // Mass is positive definite: Cholesky succeeds. Stiffness has nullity 1:
      // pivoted elimination meets exactly one zero pivot.
      const std::size_t n = space.n_dofs();
      auto chol_pivots = [n](std::vector<double> a) {
        std::vector<double> piv;
        for (std::size_t k = 0; k < n; ++k) {
          piv.push_back(a[k * n + k]);
          if (std::abs(a[k * n + k]) < 1e-10) continue;
          for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i * n + k] / a[k * n + k];
            for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
          }
        }
        return piv;
      };
      int zero = 0, negative = 0;
      for (double d : chol_pivots(K.matrix.to_dense())) {
        if (std::abs(d) < 1e-10) ++zero;
        else if (d < 0) ++negative;
      }
      CHECK(zero == 1);
      CHECK(negative == 0);
      for (double d : chol_pivots(Mm.matrix.to_dense())) CHECK(d > 0);
    }
}

TEST_CASE("kernel dimension mismatch is an error") {
  const FeSpace space(unit_box(2, 2), 1);
  CHECK_THROWS_AS(assemble_system(space, gauss_quadrature(2, 2),
                                  [](const FeCellValues &) { return LocalSystem(3); }),
                  Error);
}

TEST_CASE("dirichlet constraints") {
  const FeSpace line(unit_box(1, 4), 1);
  Constraints all;
  for (int t : line.mesh().tags())
    all.merge(dirichlet_constraints(line, t, [](const Point &) { return 0.0; }));
  CHECK(all.size() == 2);
  CHECK(all.contains(0));
  CHECK(all.contains(4));

  const FeSpace square(unit_box(2, 3), 2);
  const auto right = dirichlet_constraints(square, 1, [](const Point &x) { return x[0]; });
  CHECK(right.size() == 7);
  for (const auto &[dof, v] : right.entries()) CHECK(v == 1.0);

  const FeSpace cube(unit_box(3, 4), 1);
  CHECK(dirichlet_constraints(cube, 0, [](const Point &) { return 0.0; }).size() == 25);
  CHECK_THROWS_AS(dirichlet_constraints(cube, 42, [](const Point &) { return 0.0; }), Error);

  // Component mask.
  const FeSpace vec(unit_box(2, 2), 1, 2);
  const auto masked = dirichlet_constraints(
      vec, 0, [](const Point &, int c) { return double(c + 1); }, {false, true});
  CHECK(masked.size() == 3);
  for (const auto &[dof, v] : masked.entries()) {
    CHECK(vec.dof_component(dof) == 1);
    CHECK(v == 2.0);
  }

  DVector x(line.n_dofs(), 0.0);
  Constraints ones;
  ones.add(0, 1.0);
  ones.add(4, 1.0);
  apply_dirichlet_to_vector(ones, x);
  CHECK(x == DVector{1, 0, 0, 0, 1});
  apply_dirichlet_to_vector(ones, x);
  CHECK(x == DVector{1, 0, 0, 0, 1});
  apply_dirichlet_to_vector(Constraints{}, x);
  CHECK(x == DVector{1, 0, 0, 0, 1});
  CHECK(ones.homogenized().value(4) == 0.0);
}

TEST_CASE("symmetric elimination matches the reduced dense system") {
  const FeSpace space(unit_box(2, 3), 1);
  const auto quad = gauss_quadrature(2, 2);
  const ScalarFunction f = [](const Point &x) { return 1.0 + x[0] * x[1]; };
  const ScalarFunction g = [](const Point &x) { return x[0] - 2 * x[1]; };
  const auto raw = assemble_system(space, quad, [&](const FeCellValues &v) {
    return stiffness_kernel(v, f);
  });
  Constraints bc;
  for (int t : space.mesh().tags()) bc.merge(dirichlet_constraints(space, t, g));
  auto sys = assemble_system(space, quad, [&](const FeCellValues &v) {
    return stiffness_kernel(v, f);
  }, bc);
  CHECK(sys.matrix.is_symmetric(1e-14));
  // Constrained rows are identity, rhs carries the value.
  for (const auto &[dof, v] : bc.entries()) {
    CHECK(sys.rhs[dof] == v);
    CHECK(sys.matrix(dof, dof) == 1.0);
  }
  // Oracle: solve the unconstrained rows with the boundary values substituted.
  const std::size_t n = space.n_dofs();
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i)
    if (!bc.contains(i)) free.push_back(i);
  const auto A = raw.matrix.to_dense();
  std::vector<double> a(free.size() * free.size()), b(free.size());
  for (std::size_t r = 0; r < free.size(); ++r) {
    b[r] = raw.rhs[free[r]];
    for (const auto &[dof, v] : bc.entries()) b[r] -= A[free[r] * n + dof] * v;
    for (std::size_t c = 0; c < free.size(); ++c) a[r * free.size() + c] = A[free[r] * n + free[c]];
  }
  const auto xf = oracle::dense_solve(a, b);
  const auto x = oracle::dense_solve(sys.matrix.to_dense(), sys.rhs);
  for (std::size_t r = 0; r < free.size(); ++r) CHECK(x[free[r]] == doctest::Approx(xf[r]));
  for (const auto &[dof, v] : bc.entries()) CHECK(x[dof] == doctest::Approx(v));
}

TEST_CASE("face terms: Neumann and Robin") {
  const FeSpace square(unit_box(2, 1), 1);
  const auto fq = gauss_quadrature(1, 2);
  const auto neumann = assemble_face_terms(square, fq, 1, [](const FeCellValues &v) {
    LocalSystem L(v.n_dofs(), false);
    for (int q = 0; q < v.n_q; ++q)
      for (int i = 0; i < v.n_shapes; ++i) L.rhs[i] += v.shape(q, i) * v.JxW[q];
    return L;
  });
  // Dofs 1 and 3 lie on x = 1.
  const DVector expected{0.0, 0.5, 0.0, 0.5};
  CHECK(oracle::max_abs_diff(neumann.rhs, expected) < 1e-15);

  const double alpha = 3.0;
  const FeSpace rect(mesh::generate_box(2, {0, 0, 0}, {1, 2, 0}, {1, 1, 1}), 1);
  const auto robin = assemble_face_terms(rect, fq, 1, [&](const FeCellValues &v) {
    LocalSystem L(v.n_dofs());
    for (int q = 0; q < v.n_q; ++q)
      for (int i = 0; i < v.n_shapes; ++i)
        for (int j = 0; j < v.n_shapes; ++j)
          L(i, j) += alpha * v.shape(q, i) * v.shape(q, j) * v.JxW[q];
    return L;
  });
  const double len = 2.0;
  CHECK(robin.matrix(1, 1) == doctest::Approx(alpha * len / 3));
  CHECK(robin.matrix(1, 3) == doctest::Approx(alpha * len / 6));
  CHECK(robin.matrix(3, 3) == doctest::Approx(alpha * len / 3));
  CHECK(robin.matrix(0, 0) == 0.0);

  // Outward normal on the face.
  FeFaceValues ff(rect, fq);
  CHECK(ff.reinit(0, 0).normal[0] == -1.0);
  CHECK(ff.reinit(0, 3).normal[1] == 1.0);

  // A tag whose faces were all retagged contributes nothing.
  auto m = unit_box(2, 2);
  m.retag([](const Point &) { return true; }, 9);
  const FeSpace emptied(m, 1);
  const auto none = assemble_face_terms(emptied, fq, 1, [](const FeCellValues &v) {
    LocalSystem L(v.n_dofs());
    for (auto &x : L.rhs) x = 1.0;
    return L;
  });
  CHECK(linalg::norm_inf(none.rhs) == 0.0);
  CHECK_THROWS_AS(assemble_face_terms(emptied, fq, 77, [](const FeCellValues &v) {
                    return LocalSystem(v.n_dofs());
                  }),
                  Error);

  // 1D faces are points.
  const FeSpace line(unit_box(1, 2), 2);
  const auto pt = assemble_face_terms(line, gauss_quadrature(0, 1), 1, [](const FeCellValues &v) {
    LocalSystem L(v.n_dofs(), false);
    for (int i = 0; i < v.n_shapes; ++i) L.rhs[i] = v.shape(0, i) * v.JxW[0];
    return L;
  });
  CHECK(oracle::max_abs_diff(pt.rhs, DVector{0, 0, 0, 0, 1}) < 1e-15);
}

TEST_CASE("interpolation and error norms") {
  const auto quad = gauss_quadrature(2, 4);
  const FeSpace s2(unit_box(2, 3), 2);
  const ScalarFunction sq = [](const Point &x) { return x[0] * x[0] - x[0] * x[1]; };
  const auto u2 = interpolate(s2, sq);
  CHECK(error_norm(s2, u2, sq, Norm::L2, quad) < 1e-14);
  CHECK(error_norm(s2, u2,
                   [&](const Point &x, int) { return sq(x); }, Norm::H1Seminorm, quad,
                   [](const Point &x, int) { return Point{2 * x[0] - x[1], -x[0], 0}; }) < 1e-13);
  CHECK_THROWS_AS(error_norm(s2, u2, [&](const Point &x, int) { return sq(x); },
                             Norm::H1Seminorm, quad),
                  Error);

  const FeSpace s1(unit_box(2, 3), 1);
  const auto c = interpolate(s1, [](const Point &) { return 2.5; });
  for (double x : c) CHECK(x == 2.5);
  const auto xs = interpolate(s1, [](const Point &x) { return x[0]; });
  for (std::size_t d = 0; d < s1.n_dofs(); ++d) CHECK(xs[d] == s1.dof_point(d)[0]);
  CHECK(error_norm(s1, DVector(s1.n_dofs(), 0.0), [](const Point &) { return 1.0; },
                   Norm::LinfNodal, quad) == 1.0);

  const ScalarFunction sine = [](const Point &x) { return std::sin(M_PI * x[0]); };
  const auto e8 = [&](int n) {
    const FeSpace s(unit_box(1, n), 1);
    return error_norm(s, interpolate(s, sine), sine, Norm::L2, gauss_quadrature(1, 4));
  };
  CHECK(e8(8) / e8(16) == doctest::Approx(4.0).epsilon(0.02));

  // Point evaluation reproduces quadratics on a p=2 space.
  const Point p{0.37, 0.81, 0};
  CHECK(point_value(s2, u2, p)[0] == doctest::Approx(sq(p)));
}

TEST_CASE("find closest dof") {
  const FeSpace s(unit_box(1, 2), 2);
  auto r = find_closest_dof(s, {0.3, 0, 0});
  CHECK(r.index == 1);
  CHECK(r.distance == doctest::Approx(0.05));
  CHECK(find_closest_dof(s, {0.5, 0, 0}).distance == 0.0);
  // Vector space: first component's dof at the node.
  const FeSpace v(unit_box(2, 2), 1, 3);
  r = find_closest_dof(v, {0.5, 0.5, 0});
  CHECK(r.index == 4 * 3);
  // Equidistant between nodes 0 and 1: lowest index wins.
  CHECK(find_closest_dof(s, {0.125, 0, 0}).index == 0);
}

TEST_CASE("Galerkin exactness") {
  for (int dim = 1; dim <= 3; ++dim)
    for (int p = 1; p <= 2; ++p) {
      const FeSpace space(unit_box(dim, dim == 3 ? 3 : 5), p);
      ScalarFunction exact, f;
      if (p == 1) {
        exact = [](const Point &x) { return 1 + 2 * x[0] - x[1] + 0.5 * x[2]; };
        f = [](const Point &) { return 0.0; };
      } else {
        exact = [](const Point &x) { return x[0] * x[0] + x[1] * x[2] - x[0] * x[1]; };
        f = [](const Point &) { return -2.0; };
      }
      const auto x = solve_poisson(space, f, exact);
      CHECK(error_norm(space, x, exact, Norm::LinfNodal, gauss_quadrature(dim, 1)) < 1e-10);
    }
}

TEST_CASE("manufactured convergence rates") {
  const ScalarFunction exact = [](const Point &x) {
    return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
  };
  const ScalarFunction f = [&](const Point &x) { return 2 * M_PI * M_PI * exact(x); };
  for (int p = 1; p <= 2; ++p) {
    std::vector<double> hs, es;
    for (int n : {8, 16, 32}) {
      const FeSpace space(unit_box(2, n), p);
      const auto x = solve_poisson(space, f, [](const Point &) { return 0.0; });
      hs.push_back(1.0 / n);
      es.push_back(error_norm(space, x, exact, Norm::L2, gauss_quadrature(2, p + 2)));
    }
    CHECK(slope(hs, es) == doctest::Approx(p + 1).epsilon(0.15 / (p + 1)));
  }
}

TEST_CASE("threaded assembly matches serial") {
  const FeSpace space(unit_box(2, 16), 2);
  const auto quad = gauss_quadrature(2, 3);
  const ScalarFunction f = [](const Point &x) { return std::exp(x[0]) * x[1]; };
  Constraints bc = dirichlet_constraints(space, 0, [](const Point &) { return 1.0; });
  const auto kernel = [&](const FeCellValues &v) { return stiffness_kernel(v, f); };
  const auto serial = assemble_system(space, quad, kernel, bc);
  for (int threads : {2, 3, 7}) {
    AssemblyOptions opt;
    opt.n_threads = threads;
    const auto par = assemble_system(space, quad, kernel, bc, opt);
    REQUIRE(par.matrix.nnz() == serial.matrix.nnz());
    for (std::size_t k = 0; k < serial.matrix.nnz(); ++k) {
      const double a = serial.matrix.values()[k], b = par.matrix.values()[k];
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
    CHECK(oracle::max_abs_diff(serial.rhs, par.rhs) <= 1e-12);
  }
}

TEST_CASE("coupled assembly of stacked spaces") {
  const auto m = unit_box(2, 2);
  const FeSpace a(m, 1), b(m, 2, 2);
  const FeSpace *spaces[] = {&a, &b};
  const auto quad = gauss_quadrature(2, 3);
  const auto sys = assemble_coupled(spaces, quad, [](std::span<const FeCellValues> v) {
    const int na = v[0].n_dofs(), nb = v[1].n_dofs();
    LocalSystem L(na + nb);
    for (int q = 0; q < v[0].n_q; ++q) {
      for (int i = 0; i < na; ++i) L.rhs[i] += v[0].shape(q, i) * v[0].JxW[q];
      for (int i = 0; i < v[1].n_shapes; ++i)
        L.rhs[na + v[1].local_dof(i, 1)] += v[1].shape(q, i) * v[1].JxW[q];
    }
    return L;
  });
  REQUIRE(sys.rhs.size() == a.n_dofs() + b.n_dofs());
  double sa = 0, sb0 = 0, sb1 = 0;
  for (std::size_t i = 0; i < a.n_dofs(); ++i) sa += sys.rhs[i];
  for (std::size_t i = 0; i < b.n_dofs(); ++i)
    (b.dof_component(i) ? sb1 : sb0) += sys.rhs[a.n_dofs() + i];
  CHECK(sa == doctest::Approx(1.0));
  CHECK(sb0 == 0.0);
  CHECK(sb1 == doctest::Approx(1.0));

  const FeSpace other(unit_box(2, 3), 1);
  const FeSpace *bad[] = {&a, &other};
  CHECK_THROWS_AS(make_sparsity(bad), Error);
}
