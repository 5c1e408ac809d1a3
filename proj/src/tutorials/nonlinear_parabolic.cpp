#include "support.hpp"

namespace flexfem::tutorials {

using namespace params;
using detail::pi;

namespace {

constexpr int chunk = 9;

/// Cell residual of (a0 u - h, phi) + (grad u, grad phi) + (u^2 - f, phi).
template <class T>
std::vector<T> local_residual(const fem::FeCellValues &cv, const std::vector<T> &ul,
                              std::span<const double> h, std::span<const double> f, double a0,
                              int dim) {
  std::vector<T> r(cv.n_shapes, T(0.0));
  for (int q = 0; q < cv.n_q; ++q) {
    T uq(0.0);
    std::array<T, 3> gu{T(0.0), T(0.0), T(0.0)};
    for (int j = 0; j < cv.n_shapes; ++j) {
      uq += ul[j] * cv.shape(q, j);
      for (int d = 0; d < dim; ++d) gu[d] += ul[j] * cv.grad(q, j)[d];
    }
    const T react = a0 * uq - h[q] + uq * uq - f[q];
    for (int i = 0; i < cv.n_shapes; ++i) {
      T s = react * cv.shape(q, i);
      for (int d = 0; d < dim; ++d) s += gu[d] * cv.grad(q, i)[d];
      r[i] += s * cv.JxW[q];
    }
  }
  return r;
}

}  // namespace

NonlinearParabolic::NonlinearParabolic(std::string subsection_path, JacobianMode default_mode)
    : CoreModel(std::move(subsection_path)),
      mesh_(sub("Mesh and space discretization"), MeshSettings{2, 16, 0.0, 1.0, {"FE space degree"}, {1}}),
      time_(sub("Time"), {2, 0.0, 1.0, 0.1}),
      linear_(prm_subsection_path, {linalg::SolverType::GMRES, 10000, 1e-12, 1e-15},
              {linalg::PreconditionerType::ILU0, 1.0}),
      newton_(sub("Non-linear solver"), detail::newton_config(20, 1e-10, 1e-12)),
      output_(sub("Output")),
      mode_(default_mode) {}

void NonlinearParabolic::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(prm_subsection_path);
  params.enter_subsection("Problem");
  params.declare_entry("Exact solution", "Product", Selection{{"Zero", "Product"}},
                       "Zero: u = 0, f = 0; Product: u = (1 + t) prod sin(pi x_i).");
  params.declare_entry("Jacobian", mode_ == JacobianMode::AutoDiff ? "AutoDiff" : "Handwritten",
                       Selection{{"Handwritten", "AutoDiff"}},
                       "Hand-coded tangent or forward-mode dual numbers.");
  params.leave_subsection();
  params.leave_subsection_path();
  mesh_.declare_parameters(params);
  time_.declare_parameters(params);
  linear_.declare_parameters(params);
  newton_.declare_parameters(params);
  output_.declare_parameters(params);
}

void NonlinearParabolic::parse_parameters(const ParamTree &params) {
  const auto p = path("Problem");
  exact_ = params.get(p, "Exact solution") == "Zero" ? NonlinearParabolicSolution::Zero
                                                      : NonlinearParabolicSolution::Product;
  mode_ = params.get(p, "Jacobian") == "AutoDiff" ? JacobianMode::AutoDiff
                                                  : JacobianMode::Handwritten;
  mesh_.parse_parameters(params);
  time_.parse_parameters(params);
  linear_.parse_parameters(params);
  newton_.parse_parameters(params);
  output_.parse_parameters(params);
}

namespace {

double exact_u(NonlinearParabolicSolution s, const Point &x, double t, int dim) {
  if (s == NonlinearParabolicSolution::Zero) return 0.0;
  return (1.0 + t) * detail::sine_product(x, dim);
}

double forcing(NonlinearParabolicSolution s, const Point &x, double t, int dim) {
  if (s == NonlinearParabolicSolution::Zero) return 0.0;
  const double q = detail::sine_product(x, dim);
  return q + (1.0 + t) * dim * pi * pi * q + (1.0 + t) * (1.0 + t) * q * q;
}

}  // namespace

void NonlinearParabolic::setup() {
  const auto &ms = mesh_.settings();
  const auto &tc = time_.config();
  space_ = std::make_unique<fem::FeSpace>(ms.build(), ms.degree());
  std::vector<DVector> history;
  for (int j = 0; j < tc.bdf_order; ++j) {
    const double t = tc.initial_time - j * tc.dt;
    history.push_back(fem::interpolate(
        *space_, [&](const Point &x) { return exact_u(exact_, x, t, ms.dim); }));
  }
  bdf_ = std::make_unique<timeint::Bdf>(tc.bdf_order, tc.dt, history);
  zero_bc_ = detail::zero_boundary(*space_);
  time_next_ = tc.initial_time + tc.dt;
  solution_ = history.front();
}

nonlinear::Assembly NonlinearParabolic::assemble(const DVector &u, bool jacobian,
                                                 JacobianMode mode) const {
  if (!space_) throw Error("NonlinearParabolic::assemble called before setup()");
  const fem::FeSpace &space = *space_;
  const int dim = space.dim();
  const auto quad = fem::gauss_quadrature(dim, space.degree() + 2);
  const double a0 = bdf_->alpha0_over_dt();
  const DVector hist = bdf_->history_term();
  const double t = time_next_;
  const auto solution = exact_;

  auto kernel = [&](const fem::FeCellValues &cv) {
    std::vector<double> h(cv.n_q), f(cv.n_q);
    for (int q = 0; q < cv.n_q; ++q) {
      h[q] = cv.value(hist, q);
      f[q] = forcing(solution, cv.points[q], t, dim);
    }
    DVector ul(cv.n_shapes);
    for (int i = 0; i < cv.n_shapes; ++i) ul[i] = u[cv.dof_indices[i]];

    fem::LocalSystem ls(cv.n_shapes, jacobian);
    ls.rhs = local_residual<double>(cv, ul, h, f, a0, dim);
    if (!jacobian) return ls;
    if (mode == JacobianMode::AutoDiff) {
      using D = nonlinear::Dual<chunk>;
      ls.matrix = nonlinear::jacobian_via_dual<chunk>(
          [&](const std::vector<D> &x) { return local_residual<D>(cv, x, h, f, a0, dim); }, ul);
      return ls;
    }
    for (int q = 0; q < cv.n_q; ++q) {
      const double uq = cv.value(u, q);
      const double w = cv.JxW[q];
      for (int i = 0; i < cv.n_shapes; ++i)
        for (int j = 0; j < cv.n_shapes; ++j) {
          double s = 0.0;
          for (int d = 0; d < dim; ++d) s += cv.grad(q, i)[d] * cv.grad(q, j)[d];
          ls(i, j) += ((a0 + 2.0 * uq) * cv.shape(q, i) * cv.shape(q, j) + s) * w;
        }
    }
    return ls;
  };
  auto sys = fem::assemble_system(space, quad, kernel, zero_bc_, {jacobian, 1});
  nonlinear::Assembly a;
  a.residual = std::move(sys.rhs);
  if (jacobian) a.jacobian = std::move(sys.matrix);
  return a;
}

void NonlinearParabolic::run() {
  setup();
  const auto &ms = mesh_.settings();
  const auto &tc = time_.config();
  const fem::FeSpace &space = *space_;
  const auto m = ms.build();
  const auto err_quad = fem::gauss_quadrature(ms.dim, ms.degree() + 3);
  const bool write = writes_output() && output_.settings().enabled;
  const int n_steps = tc.n_steps();

  steps_.clear();
  reports_.clear();
  nonlinear::NewtonSolver solver(newton_.newton());
  nonlinear::NewtonCallbacks cb;
  cb.assemble = [&](const DVector &u, bool want) { return assemble(u, want, mode_); };
  cb.solve = [&](const linalg::CsrMatrix &J, const DVector &r, double forcing_term) {
    DVector delta(r.size(), 0.0);
    const bool inexact = solver.config().variant == nonlinear::NewtonVariant::Inexact;
    linear_(J, r, delta, inexact ? forcing_term : 0.0);
    return delta;
  };

  io::CsvTable table{{"step", "time", "l2_error", "linf_error", "newton_iterations"}, {}};
  for (int step = 1; step <= n_steps; ++step) {
    const double t = tc.initial_time + step * tc.dt;
    time_next_ = t;
    DVector u = bdf_->extrapolate();
    fem::apply_dirichlet_to_vector(zero_bc_, u);
    solver.begin_time_step();
    const auto rep = solver.solve(u, cb);
    reports_.push_back(rep);
    if (!rep.converged)
      throw Error("Newton did not converge at step " + std::to_string(step) + ": " + rep.reason);
    bdf_->advance(u);
    solution_ = u;

    const auto exact = [&](const Point &x) { return exact_u(exact_, x, t, ms.dim); };
    StepRecord r{step, t, fem::error_norm(space, u, exact, fem::Norm::L2, err_quad),
                 fem::error_norm(space, u, exact, fem::Norm::LinfNodal, err_quad), rep.iterations};
    steps_.push_back(r);
    table.add_row(std::vector<double>{double(step), t, r.l2_error, r.linf_error,
                                      double(r.iterations)});
    if (write && ((output_.settings().vtk_period > 0 && step % output_.settings().vtk_period == 0) ||
                  step == n_steps))
      io::vtk_write(output_file(detail::step_file("solution", step, ".vtk")), m, ms.degree(),
                    {{"u", &space, u}}, t);
  }
  if (write) io::csv_write(output_file("norms.csv"), table);
}

}  // namespace flexfem::tutorials
