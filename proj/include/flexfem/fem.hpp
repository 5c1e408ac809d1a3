#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "flexfem/common.hpp"
#include "flexfem/linalg.hpp"
#include "flexfem/mesh.hpp"

namespace flexfem::fem {

using linalg::CsrMatrix;

// ---------------------------------------------------------------------------
// Quadrature

/// Quadrature on the unit reference cell [0,1]^dim. A 0-dimensional rule is a
/// single point of weight 1 (faces of 1D meshes).
struct Quadrature {
  int dim = 0;
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Tensor-product Gauss-Legendre rule with `n_per_axis` points per axis,
/// 1 <= n_per_axis <= 5; exact for per-axis degree <= 2 n - 1.
Quadrature gauss_quadrature(int dim, int n_per_axis);

// ---------------------------------------------------------------------------
// Lagrange space

/// Continuous Lagrange space of degree 1 or 2 on a structured box mesh.
///
/// Support points form the lattice of p * n_i + 1 nodes per axis, numbered
/// lexicographically (x fastest). Vector spaces interleave components per
/// node: dof = node * n_components + component. Within a cell, shape i
/// (tensor-product order over the (p+1)^dim local nodes) and component c
/// map to local dof i * n_components + c.
class FeSpace {
 public:
  FeSpace(const mesh::Mesh &mesh, int degree, int n_components = 1);

  const mesh::Mesh &mesh() const { return mesh_; }
  int dim() const { return mesh_.dim(); }
  int degree() const { return degree_; }
  int n_components() const { return n_components_; }

  std::size_t n_nodes() const { return n_nodes_; }
  std::size_t n_dofs() const { return n_nodes_ * n_components_; }
  int nodes_per_axis(int axis) const { return nodes_per_axis_[axis]; }
  int shapes_per_cell() const { return shapes_per_cell_; }
  int dofs_per_cell() const { return shapes_per_cell_ * n_components_; }

  Point node_point(std::size_t node) const;
  Point dof_point(std::size_t dof) const { return node_point(dof / n_components_); }
  int dof_component(std::size_t dof) const { return static_cast<int>(dof % n_components_); }

  /// Global node indices of a cell in local shape order.
  std::vector<std::size_t> cell_nodes(std::size_t cell) const;
  /// Global dof indices of a cell in local dof order.
  std::vector<std::size_t> cell_dofs(std::size_t cell) const;

  /// Local shapes whose support point lies on the given local face.
  std::vector<int> face_shapes(int local_face) const;

  /// Nodes on boundary faces carrying `tag`, sorted ascending.
  std::vector<std::size_t> boundary_nodes(int tag) const;

 private:
  mesh::Mesh mesh_;
  int degree_;
  int n_components_;
  std::array<int, 3> nodes_per_axis_{1, 1, 1};
  std::size_t n_nodes_ = 0;
  int shapes_per_cell_ = 0;
};

/// Shape values and physical gradients of the scalar reference element at
/// the quadrature points of one cell.
struct FeCellValues {
  std::size_t cell = 0;
  int n_q = 0;
  int n_shapes = 0;
  int n_components = 1;
  std::vector<std::size_t> dof_indices;
  std::vector<double> values;        // [q * n_shapes + i]
  std::vector<Point> gradients;      // [q * n_shapes + i]
  std::vector<double> JxW;           // [q]
  std::vector<Point> points;         // [q]
  Point normal{};                    // faces only

  double shape(int q, int i) const { return values[q * n_shapes + i]; }
  const Point &grad(int q, int i) const { return gradients[q * n_shapes + i]; }
  int local_dof(int shape, int component) const { return shape * n_components + component; }
  int n_dofs() const { return n_shapes * n_components; }

  /// Value of component `c` of a global vector at quadrature point q.
  double value(std::span<const double> global, int q, int c = 0) const;
  Point gradient(std::span<const double> global, int q, int c = 0) const;
};

/// Evaluates shapes of a space at a fixed reference quadrature; reinit maps
/// onto a given cell (affine, axis aligned).
class FeValues {
 public:
  FeValues(const FeSpace &space, const Quadrature &quadrature);
  const FeCellValues &reinit(std::size_t cell);
  const FeCellValues &current() const { return data_; }

 private:
  const FeSpace &space_;
  Quadrature quadrature_;
  std::vector<double> ref_values_;
  std::vector<Point> ref_gradients_;
  FeCellValues data_;
};

/// Like FeValues on a face: `quadrature` has dimension dim - 1.
class FeFaceValues {
 public:
  FeFaceValues(const FeSpace &space, const Quadrature &quadrature);
  const FeCellValues &reinit(std::size_t cell, int local_face);

 private:
  const FeSpace &space_;
  Quadrature quadrature_;
  // Per local face: reference values and gradients.
  std::vector<std::vector<double>> ref_values_;
  std::vector<std::vector<Point>> ref_gradients_;
  std::vector<std::vector<Point>> ref_points_;
  FeCellValues data_;
};

/// Reference coordinates in [0,1]^dim of a physical point within a cell.
Point reference_point(const mesh::Mesh &mesh, std::size_t cell, const Point &p);

/// Scalar reference basis: value and gradient of shape i at a reference point.
double shape_value(int dim, int degree, int i, const Point &ref);
Point shape_gradient(int dim, int degree, int i, const Point &ref);

// ---------------------------------------------------------------------------
// Constraints

/// Dirichlet constraints: dof -> prescribed value.
class Constraints {
 public:
  void add(std::size_t dof, double value) { values_[dof] = value; }
  /// Adds entries of `other`; entries already present are kept.
  void merge(const Constraints &other);
  bool contains(std::size_t dof) const { return values_.count(dof) > 0; }
  double value(std::size_t dof) const { return values_.at(dof); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const std::map<std::size_t, double> &entries() const { return values_; }
  /// Same dofs, all values zero (for Newton increments).
  Constraints homogenized() const;

 private:
  std::map<std::size_t, double> values_;
};

using ComponentFunction = std::function<double(const Point &, int component)>;
using ScalarFunction = std::function<double(const Point &)>;

/// Constrains every dof whose support point lies on a face tagged `tag`.
/// `component_mask` selects components (empty mask = all).
Constraints dirichlet_constraints(const FeSpace &space, int tag,
                                  const ComponentFunction &g,
                                  const std::vector<bool> &component_mask = {});
Constraints dirichlet_constraints(const FeSpace &space, int tag,
                                  const ScalarFunction &g);

void apply_dirichlet_to_vector(const Constraints &constraints,
                               std::span<double> vec);

/// Symmetric elimination: constrained columns are moved to the rhs,
/// constrained rows become identity rows with the prescribed value.
void apply_constraints(CsrMatrix &A, std::span<double> b,
                       const Constraints &constraints);

// ---------------------------------------------------------------------------
// Assembly

struct LocalSystem {
  /// Row-major n x n; may be left empty when only the rhs is wanted.
  std::vector<double> matrix;
  std::vector<double> rhs;

  explicit LocalSystem(int n = 0, bool with_matrix = true)
      : matrix(with_matrix ? std::size_t(n) * n : 0, 0.0), rhs(n, 0.0) {}
  double &operator()(int i, int j) { return matrix[std::size_t(i) * rhs.size() + j]; }
};

struct AssembledSystem {
  CsrMatrix matrix;
  DVector rhs;
};

struct AssemblyOptions {
  bool matrix = true;
  /// Cells are split into contiguous chunks, one per thread; per-thread
  /// partial sums are added in thread order.
  int n_threads = 1;
};

using CellKernel = std::function<LocalSystem(const FeCellValues &)>;
using CoupledKernel = std::function<LocalSystem(std::span<const FeCellValues>)>;

/// Sparsity of all dof pairs sharing a cell, for a block system made of
/// `spaces` (same mesh) stacked in order.
CsrMatrix make_sparsity(std::span<const FeSpace *const> spaces);

AssembledSystem assemble_system(const FeSpace &space, const Quadrature &quadrature,
                                const CellKernel &kernel,
                                const Constraints &constraints = {},
                                const AssemblyOptions &options = {});

/// Block assembly for several spaces on the same mesh. The kernel receives
/// one FeCellValues per space and returns a local system ordered as the
/// concatenation of each space's local dofs. Constraints use global
/// (stacked) dof numbering.
AssembledSystem assemble_coupled(std::span<const FeSpace *const> spaces,
                                 const Quadrature &quadrature,
                                 const CoupledKernel &kernel,
                                 const Constraints &constraints = {},
                                 const AssemblyOptions &options = {});

using FaceKernel = std::function<LocalSystem(const FeCellValues &)>;

/// Adds face integrals over faces tagged `tag`. The result shares the
/// sparsity of assemble_system on the same space.
AssembledSystem assemble_face_terms(const FeSpace &space,
                                    const Quadrature &face_quadrature, int tag,
                                    const FaceKernel &kernel);

// ---------------------------------------------------------------------------
// Evaluation and norms

DVector interpolate(const FeSpace &space, const ComponentFunction &f);
DVector interpolate(const FeSpace &space, const ScalarFunction &f);

/// Values of every component of an FE function at a physical point
/// (clamped into the mesh).
std::vector<double> point_value(const FeSpace &space, std::span<const double> vec,
                                const Point &p);

enum class Norm { L2, H1Seminorm, LinfNodal };

using GradientFunction = std::function<Point(const Point &, int component)>;

double error_norm(const FeSpace &space, std::span<const double> vec,
                  const ComponentFunction &exact, Norm norm,
                  const Quadrature &quadrature,
                  const GradientFunction &exact_gradient = {});
double error_norm(const FeSpace &space, std::span<const double> vec,
                  const ScalarFunction &exact, Norm norm,
                  const Quadrature &quadrature);

/// Nearest dof support point; ties go to the lowest dof index.
mesh::Closest find_closest_dof(const FeSpace &space, const Point &point);

}  // namespace flexfem::fem
