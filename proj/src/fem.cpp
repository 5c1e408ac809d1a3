#include "flexfem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

namespace flexfem::fem {

// ---------------------------------------------------------------------------
// Quadrature

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double> &x, std::vector<double> &w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[n - 1 - i] = z;
    w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace

Quadrature gauss_quadrature(int dim, int n_per_axis) {
  if (dim < 0 || dim > 3) throw Error("quadrature dimension must be 0..3");
  if (n_per_axis < 1 || n_per_axis > 5)
    throw Error("Gauss rule supports 1..5 points per axis");
  std::vector<double> x1, w1;
  gauss_legendre(n_per_axis, x1, w1);
  for (int i = 0; i < n_per_axis; ++i) {
    x1[i] = 0.5 * (x1[i] + 1.0);
    w1[i] *= 0.5;
  }
  Quadrature q;
  q.dim = dim;
  const int n = dim == 0 ? 1 : static_cast<int>(std::pow(n_per_axis, dim));
  for (int k = 0; k < n; ++k) {
    Point p{};
    double w = 1.0;
    int rest = k;
    for (int d = 0; d < dim; ++d) {
      const int idx = rest % n_per_axis;
      rest /= n_per_axis;
      p[d] = x1[idx];
      w *= w1[idx];
    }
    q.points.push_back(p);
    q.weights.push_back(w);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Reference basis

namespace {

double lagrange_1d(int degree, int j, double x) {
  double v = 1.0;
  const double xj = double(j) / degree;
  for (int m = 0; m <= degree; ++m)
    if (m != j) v *= (x - double(m) / degree) / (xj - double(m) / degree);
  return v;
}

double lagrange_1d_derivative(int degree, int j, double x) {
  const double xj = double(j) / degree;
  double sum = 0.0;
  for (int k = 0; k <= degree; ++k) {
    if (k == j) continue;
    double term = 1.0 / (xj - double(k) / degree);
    for (int m = 0; m <= degree; ++m)
      if (m != j && m != k) term *= (x - double(m) / degree) / (xj - double(m) / degree);
    sum += term;
  }
  return sum;
}

std::array<int, 3> shape_multi_index(int dim, int degree, int i) {
  std::array<int, 3> idx{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    idx[d] = i % (degree + 1);
    i /= degree + 1;
  }
  return idx;
}

}  // namespace

double shape_value(int dim, int degree, int i, const Point &ref) {
  const auto idx = shape_multi_index(dim, degree, i);
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= lagrange_1d(degree, idx[d], ref[d]);
  return v;
}

Point shape_gradient(int dim, int degree, int i, const Point &ref) {
  const auto idx = shape_multi_index(dim, degree, i);
  Point g{};
  for (int d = 0; d < dim; ++d) {
    double v = 1.0;
    for (int e = 0; e < dim; ++e)
      v *= e == d ? lagrange_1d_derivative(degree, idx[e], ref[e])
                  : lagrange_1d(degree, idx[e], ref[e]);
    g[d] = v;
  }
  return g;
}

Point reference_point(const mesh::Mesh &mesh, std::size_t cell, const Point &p) {
  const Point o = mesh.cell_origin(cell);
  const Point &h = mesh.cell_size();
  Point r{};
  for (int d = 0; d < mesh.dim(); ++d) r[d] = std::clamp((p[d] - o[d]) / h[d], 0.0, 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// FeSpace

FeSpace::FeSpace(const mesh::Mesh &mesh, int degree, int n_components)
    : mesh_(mesh), degree_(degree), n_components_(n_components) {
  if (degree != 1 && degree != 2)
    throw Error("unsupported finite element degree " + std::to_string(degree) +
                " (only 1 and 2)");
  if (n_components < 1) throw Error("a space needs at least one component");
  if (mesh.dim() < 1) throw Error("space built on an empty mesh");
  n_nodes_ = 1;
  for (int d = 0; d < mesh.dim(); ++d) {
    nodes_per_axis_[d] = degree * mesh.subdivisions(d) + 1;
    n_nodes_ *= nodes_per_axis_[d];
  }
  shapes_per_cell_ = static_cast<int>(std::pow(degree + 1, mesh.dim()));
}

Point FeSpace::node_point(std::size_t node) const {
  Point p{};
  const auto &lo = mesh_.lower();
  const auto &up = mesh_.upper();
  for (int d = 0; d < dim(); ++d) {
    const int i = static_cast<int>(node % nodes_per_axis_[d]);
    node /= nodes_per_axis_[d];
    const int last = nodes_per_axis_[d] - 1;
    p[d] = i == last ? up[d] : lo[d] + (up[d] - lo[d]) * i / last;
  }
  return p;
}

std::vector<std::size_t> FeSpace::cell_nodes(std::size_t cell) const {
  const auto c = mesh_.cell_multi_index(cell);
  std::vector<std::size_t> out(shapes_per_cell_);
  for (int i = 0; i < shapes_per_cell_; ++i) {
    const auto idx = shape_multi_index(dim(), degree_, i);
    std::size_t node = 0, stride = 1;
    for (int d = 0; d < dim(); ++d) {
      node += (c[d] * degree_ + idx[d]) * stride;
      stride *= nodes_per_axis_[d];
    }
    out[i] = node;
  }
  return out;
}

std::vector<std::size_t> FeSpace::cell_dofs(std::size_t cell) const {
  const auto nodes = cell_nodes(cell);
  std::vector<std::size_t> out(dofs_per_cell());
  for (int i = 0; i < shapes_per_cell_; ++i)
    for (int c = 0; c < n_components_; ++c)
      out[i * n_components_ + c] = nodes[i] * n_components_ + c;
  return out;
}

std::vector<int> FeSpace::face_shapes(int local_face) const {
  const int axis = local_face / 2;
  const int target = local_face % 2 ? degree_ : 0;
  std::vector<int> out;
  for (int i = 0; i < shapes_per_cell_; ++i)
    if (shape_multi_index(dim(), degree_, i)[axis] == target) out.push_back(i);
  return out;
}

std::vector<std::size_t> FeSpace::boundary_nodes(int tag) const {
  std::vector<std::size_t> out;
  for (const auto &f : mesh_.boundary_faces()) {
    if (f.tag != tag) continue;
    const auto nodes = cell_nodes(f.cell);
    for (int i : face_shapes(f.local_face)) out.push_back(nodes[i]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Cell and face values

double FeCellValues::value(std::span<const double> global, int q, int c) const {
  double s = 0.0;
  for (int i = 0; i < n_shapes; ++i)
    s += global[dof_indices[local_dof(i, c)]] * shape(q, i);
  return s;
}

Point FeCellValues::gradient(std::span<const double> global, int q, int c) const {
  Point g{};
  for (int i = 0; i < n_shapes; ++i) {
    const double u = global[dof_indices[local_dof(i, c)]];
    const Point &gi = grad(q, i);
    for (int d = 0; d < 3; ++d) g[d] += u * gi[d];
  }
  return g;
}

FeValues::FeValues(const FeSpace &space, const Quadrature &quadrature)
    : space_(space), quadrature_(quadrature) {
  if (quadrature.dim != space.dim())
    throw Error("quadrature dimension does not match the space");
  const int nq = static_cast<int>(quadrature.size());
  const int ns = space.shapes_per_cell();
  ref_values_.resize(std::size_t(nq) * ns);
  ref_gradients_.resize(std::size_t(nq) * ns);
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < ns; ++i) {
      ref_values_[q * ns + i] = shape_value(space.dim(), space.degree(), i, quadrature.points[q]);
      ref_gradients_[q * ns + i] =
          shape_gradient(space.dim(), space.degree(), i, quadrature.points[q]);
    }
  data_.n_q = nq;
  data_.n_shapes = ns;
  data_.n_components = space.n_components();
  data_.values = ref_values_;
  data_.gradients.resize(ref_gradients_.size());
  data_.JxW.resize(nq);
  data_.points.resize(nq);
}

const FeCellValues &FeValues::reinit(std::size_t cell) {
  const auto &mesh = space_.mesh();
  const Point o = mesh.cell_origin(cell);
  const Point &h = mesh.cell_size();
  const double vol = mesh.cell_volume();
  const int dim = mesh.dim();
  data_.cell = cell;
  data_.dof_indices = space_.cell_dofs(cell);
  for (int q = 0; q < data_.n_q; ++q) {
    data_.JxW[q] = vol * quadrature_.weights[q];
    Point p{};
    for (int d = 0; d < dim; ++d) p[d] = o[d] + h[d] * quadrature_.points[q][d];
    data_.points[q] = p;
  }
  for (std::size_t k = 0; k < ref_gradients_.size(); ++k) {
    Point g{};
    for (int d = 0; d < dim; ++d) g[d] = ref_gradients_[k][d] / h[d];
    data_.gradients[k] = g;
  }
  return data_;
}

FeFaceValues::FeFaceValues(const FeSpace &space, const Quadrature &quadrature)
    : space_(space), quadrature_(quadrature) {
  const int dim = space.dim();
  if (quadrature.dim != dim - 1)
    throw Error("face quadrature must have dimension dim - 1");
  const int nq = static_cast<int>(quadrature.size());
  const int ns = space.shapes_per_cell();
  ref_values_.resize(2 * dim);
  ref_gradients_.resize(2 * dim);
  ref_points_.resize(2 * dim);
  for (int f = 0; f < 2 * dim; ++f) {
    const int axis = f / 2;
    for (int q = 0; q < nq; ++q) {
      Point ref{};
      int k = 0;
      for (int d = 0; d < dim; ++d)
        ref[d] = d == axis ? double(f % 2) : quadrature.points[q][k++];
      ref_points_[f].push_back(ref);
      for (int i = 0; i < ns; ++i) {
        ref_values_[f].push_back(shape_value(dim, space.degree(), i, ref));
        ref_gradients_[f].push_back(shape_gradient(dim, space.degree(), i, ref));
      }
    }
  }
  data_.n_q = nq;
  data_.n_shapes = ns;
  data_.n_components = space.n_components();
  data_.JxW.resize(nq);
  data_.points.resize(nq);
}

const FeCellValues &FeFaceValues::reinit(std::size_t cell, int local_face) {
  const auto &mesh = space_.mesh();
  const Point o = mesh.cell_origin(cell);
  const Point &h = mesh.cell_size();
  const int dim = mesh.dim();
  const double measure = mesh.face_measure(local_face);
  data_.cell = cell;
  data_.dof_indices = space_.cell_dofs(cell);
  data_.values = ref_values_[local_face];
  data_.gradients = ref_gradients_[local_face];
  for (auto &g : data_.gradients)
    for (int d = 0; d < dim; ++d) g[d] /= h[d];
  for (int q = 0; q < data_.n_q; ++q) {
    data_.JxW[q] = measure * quadrature_.weights[q];
    Point p{};
    for (int d = 0; d < dim; ++d) p[d] = o[d] + h[d] * ref_points_[local_face][q][d];
    data_.points[q] = p;
  }
  data_.normal = Point{};
  data_.normal[local_face / 2] = local_face % 2 ? 1.0 : -1.0;
  return data_;
}

// ---------------------------------------------------------------------------
// Constraints

void Constraints::merge(const Constraints &other) {
  for (const auto &[dof, v] : other.values_) values_.emplace(dof, v);
}

Constraints Constraints::homogenized() const {
  Constraints out;
  for (const auto &[dof, v] : values_) out.add(dof, 0.0);
  return out;
}

Constraints dirichlet_constraints(const FeSpace &space, int tag,
                                  const ComponentFunction &g,
                                  const std::vector<bool> &component_mask) {
  if (!space.mesh().has_tag(tag))
    throw Error("unknown boundary tag " + std::to_string(tag));
  Constraints out;
  const int nc = space.n_components();
  for (auto node : space.boundary_nodes(tag)) {
    const Point p = space.node_point(node);
    for (int c = 0; c < nc; ++c)
      if (component_mask.empty() || component_mask.at(c))
        out.add(node * nc + c, g(p, c));
  }
  return out;
}

Constraints dirichlet_constraints(const FeSpace &space, int tag,
                                  const ScalarFunction &g) {
  return dirichlet_constraints(
      space, tag, ComponentFunction([&g](const Point &p, int) { return g(p); }));
}

void apply_dirichlet_to_vector(const Constraints &constraints,
                               std::span<double> vec) {
  for (const auto &[dof, v] : constraints.entries()) vec[dof] = v;
}

void apply_constraints(CsrMatrix &A, std::span<double> b,
                       const Constraints &constraints) {
  if (constraints.empty()) return;
  std::vector<char> is_fixed(A.n_rows(), 0);
  std::vector<double> fixed(A.n_rows(), 0.0);
  for (const auto &[dof, v] : constraints.entries()) {
    if (dof >= A.n_rows()) throw Error("constraint on a dof outside the system");
    is_fixed[dof] = 1;
    fixed[dof] = v;
  }
  const auto &off = A.row_offsets();
  const auto &col = A.columns();
  auto &val = A.values();
  for (std::size_t r = 0; r < A.n_rows(); ++r) {
    for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
      const std::size_t c = col[k];
      if (is_fixed[r]) {
        val[k] = c == r ? 1.0 : 0.0;
      } else if (is_fixed[c]) {
        b[r] -= val[k] * fixed[c];
        val[k] = 0.0;
      }
    }
    if (is_fixed[r]) {
      if (A.find(r, r) == A.nnz())
        throw Error("constrained row lacks a diagonal entry");
      b[r] = fixed[r];
    }
  }
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

void check_same_mesh(std::span<const FeSpace *const> spaces) {
  if (spaces.empty()) throw Error("assembly needs at least one space");
  for (const auto *s : spaces)
    if (!(s->mesh().descriptor() == spaces[0]->mesh().descriptor()))
      throw Error("coupled spaces must share the same mesh");
}

std::vector<std::size_t> offsets_of(std::span<const FeSpace *const> spaces) {
  std::vector<std::size_t> off{0};
  for (const auto *s : spaces) off.push_back(off.back() + s->n_dofs());
  return off;
}

}  // namespace

CsrMatrix make_sparsity(std::span<const FeSpace *const> spaces) {
  check_same_mesh(spaces);
  const auto off = offsets_of(spaces);
  linalg::SparsityBuilder sb(off.back(), off.back());
  std::vector<std::size_t> dofs;
  for (std::size_t cell = 0; cell < spaces[0]->mesh().n_cells(); ++cell) {
    dofs.clear();
    for (std::size_t s = 0; s < spaces.size(); ++s)
      for (auto d : spaces[s]->cell_dofs(cell)) dofs.push_back(d + off[s]);
    sb.add_block(dofs, dofs);
  }
  return sb.build();
}

AssembledSystem assemble_coupled(std::span<const FeSpace *const> spaces,
                                 const Quadrature &quadrature,
                                 const CoupledKernel &kernel,
                                 const Constraints &constraints,
                                 const AssemblyOptions &options) {
  check_same_mesh(spaces);
  const auto off = offsets_of(spaces);
  const std::size_t n = off.back();
  const std::size_t n_cells = spaces[0]->mesh().n_cells();
  int n_local = 0;
  for (const auto *s : spaces) n_local += s->dofs_per_cell();

  AssembledSystem out;
  if (options.matrix) out.matrix = make_sparsity(spaces);
  out.rhs.assign(n, 0.0);

  const int n_threads =
      std::clamp<int>(options.n_threads, 1, std::max<std::size_t>(n_cells, 1));
  std::vector<std::vector<double>> partial_vals(n_threads);
  std::vector<DVector> partial_rhs(n_threads);
  std::vector<std::exception_ptr> errors(n_threads);

  const auto work = [&](int t) {
    try {
      std::vector<FeValues> fe;
      for (const auto *s : spaces) fe.emplace_back(*s, quadrature);
      std::vector<FeCellValues> cell_values(spaces.size());
      std::vector<std::size_t> dofs(n_local);
      auto &vals = partial_vals[t];
      auto &rhs = partial_rhs[t];
      if (options.matrix) vals.assign(out.matrix.nnz(), 0.0);
      rhs.assign(n, 0.0);
      const std::size_t begin = n_cells * t / n_threads;
      const std::size_t end = n_cells * (t + 1) / n_threads;
      for (std::size_t cell = begin; cell < end; ++cell) {
        std::size_t k = 0;
        for (std::size_t s = 0; s < spaces.size(); ++s) {
          cell_values[s] = fe[s].reinit(cell);
          for (auto d : cell_values[s].dof_indices) dofs[k++] = d + off[s];
        }
        const LocalSystem local = kernel(cell_values);
        if (local.rhs.size() != std::size_t(n_local) ||
            (options.matrix && local.matrix.size() != std::size_t(n_local) * n_local &&
             !local.matrix.empty()) ||
            (!local.matrix.empty() && local.matrix.size() != std::size_t(n_local) * n_local))
          throw Error("cell kernel returned a local system of the wrong size "
                      "(expected " + std::to_string(n_local) + " dofs)");
        for (int i = 0; i < n_local; ++i) rhs[dofs[i]] += local.rhs[i];
        if (options.matrix && !local.matrix.empty())
          for (int i = 0; i < n_local; ++i)
            for (int j = 0; j < n_local; ++j) {
              const double v = local.matrix[std::size_t(i) * n_local + j];
              if (v != 0.0) vals[out.matrix.find(dofs[i], dofs[j])] += v;
            }
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  if (n_threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work, t);
    for (auto &th : pool) th.join();
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);

  for (int t = 0; t < n_threads; ++t) {
    for (std::size_t i = 0; i < n; ++i) out.rhs[i] += partial_rhs[t][i];
    if (options.matrix)
      for (std::size_t k = 0; k < out.matrix.nnz(); ++k)
        out.matrix.values()[k] += partial_vals[t][k];
  }

  if (options.matrix) {
    apply_constraints(out.matrix, out.rhs, constraints);
  } else {
    apply_dirichlet_to_vector(constraints, out.rhs);
  }
  return out;
}

AssembledSystem assemble_system(const FeSpace &space, const Quadrature &quadrature,
                                const CellKernel &kernel,
                                const Constraints &constraints,
                                const AssemblyOptions &options) {
  const FeSpace *spaces[] = {&space};
  return assemble_coupled(
      spaces, quadrature,
      [&kernel](std::span<const FeCellValues> v) { return kernel(v[0]); },
      constraints, options);
}

AssembledSystem assemble_face_terms(const FeSpace &space,
                                    const Quadrature &face_quadrature, int tag,
                                    const FaceKernel &kernel) {
  if (!space.mesh().has_tag(tag))
    throw Error("unknown boundary tag " + std::to_string(tag));
  const FeSpace *spaces[] = {&space};
  AssembledSystem out{make_sparsity(spaces), DVector(space.n_dofs(), 0.0)};
  FeFaceValues fe(space, face_quadrature);
  const int n_local = space.dofs_per_cell();
  for (const auto &f : space.mesh().boundary_faces()) {
    if (f.tag != tag) continue;
    const auto &v = fe.reinit(f.cell, f.local_face);
    const LocalSystem local = kernel(v);
    if (local.rhs.size() != std::size_t(n_local) ||
        (!local.matrix.empty() && local.matrix.size() != std::size_t(n_local) * n_local))
      throw Error("face kernel returned a local system of the wrong size");
    for (int i = 0; i < n_local; ++i) {
      out.rhs[v.dof_indices[i]] += local.rhs[i];
      if (!local.matrix.empty())
        for (int j = 0; j < n_local; ++j) {
          const double a = local.matrix[std::size_t(i) * n_local + j];
          if (a != 0.0) out.matrix.add(v.dof_indices[i], v.dof_indices[j], a);
        }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation and norms

DVector interpolate(const FeSpace &space, const ComponentFunction &f) {
  DVector out(space.n_dofs());
  for (std::size_t dof = 0; dof < out.size(); ++dof)
    out[dof] = f(space.dof_point(dof), space.dof_component(dof));
  return out;
}

DVector interpolate(const FeSpace &space, const ScalarFunction &f) {
  return interpolate(space, ComponentFunction([&f](const Point &p, int) { return f(p); }));
}

std::vector<double> point_value(const FeSpace &space, std::span<const double> vec,
                                const Point &p) {
  const std::size_t cell = space.mesh().locate(p);
  const Point ref = reference_point(space.mesh(), cell, p);
  const auto dofs = space.cell_dofs(cell);
  const int nc = space.n_components();
  std::vector<double> out(nc, 0.0);
  for (int i = 0; i < space.shapes_per_cell(); ++i) {
    const double phi = shape_value(space.dim(), space.degree(), i, ref);
    for (int c = 0; c < nc; ++c) out[c] += phi * vec[dofs[i * nc + c]];
  }
  return out;
}

double error_norm(const FeSpace &space, std::span<const double> vec,
                  const ComponentFunction &exact, Norm norm,
                  const Quadrature &quadrature,
                  const GradientFunction &exact_gradient) {
  if (vec.size() != space.n_dofs()) throw Error("error_norm: vector size mismatch");
  const int nc = space.n_components();
  if (norm == Norm::LinfNodal) {
    double m = 0.0;
    for (std::size_t dof = 0; dof < vec.size(); ++dof)
      m = std::max(m, std::abs(vec[dof] - exact(space.dof_point(dof),
                                                space.dof_component(dof))));
    return m;
  }
  if (norm == Norm::H1Seminorm && !exact_gradient)
    throw Error("H1 seminorm requires the exact gradient");
  FeValues fe(space, quadrature);
  double sum = 0.0;
  for (std::size_t cell = 0; cell < space.mesh().n_cells(); ++cell) {
    const auto &v = fe.reinit(cell);
    for (int q = 0; q < v.n_q; ++q)
      for (int c = 0; c < nc; ++c) {
        if (norm == Norm::L2) {
          const double e = v.value(vec, q, c) - exact(v.points[q], c);
          sum += e * e * v.JxW[q];
        } else {
          const Point gh = v.gradient(vec, q, c);
          const Point ge = exact_gradient(v.points[q], c);
          for (int d = 0; d < space.dim(); ++d)
            sum += (gh[d] - ge[d]) * (gh[d] - ge[d]) * v.JxW[q];
        }
      }
  }
  return std::sqrt(sum);
}

double error_norm(const FeSpace &space, std::span<const double> vec,
                  const ScalarFunction &exact, Norm norm,
                  const Quadrature &quadrature) {
  return error_norm(space, vec,
                    ComponentFunction([&exact](const Point &p, int) { return exact(p); }),
                    norm, quadrature);
}

mesh::Closest find_closest_dof(const FeSpace &space, const Point &point) {
  mesh::Closest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t dof = 0; dof < space.n_dofs(); ++dof) {
    const double d = distance(space.dof_point(dof), point);
    if (d < best.distance) best = {dof, d};
  }
  return best;
}

}  // namespace flexfem::fem
