#include "support.hpp"

namespace flexfem::tutorials {

using namespace params;
using detail::pi;

namespace {

// u_t - lap u + u^2 = f, v_t - lap v + u v = g.
struct SystemData {
  SystemSolution kind;
  int dim;

  double c(const Point &x) const {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= std::cos(0.5 * pi * x[d]);
    return v;
  }
  double u(const Point &x, double t) const {
    return kind == SystemSolution::Linear ? t * x[0] : t * c(x);
  }
  double v(const Point &x, double t) const {
    return kind == SystemSolution::Linear ? t * x[std::min(1, dim - 1)] : t * c(x);
  }
  double f(const Point &x, double t) const {
    if (kind == SystemSolution::Linear) return x[0] + t * t * x[0] * x[0];
    const double cx = c(x);
    return cx + t * dim * 0.25 * pi * pi * cx + t * t * cx * cx;
  }
  double g(const Point &x, double t) const {
    if (kind == SystemSolution::Linear) {
      const double y = x[std::min(1, dim - 1)];
      return y + t * t * x[0] * y;
    }
    const double cx = c(x);
    return cx + t * dim * 0.25 * pi * pi * cx + t * t * cx * cx;
  }
};

std::vector<DVector> exact_history(const fem::FeSpace &space, int order, double t0, double dt,
                                   const std::function<double(const Point &, double)> &f) {
  std::vector<DVector> h;
  for (int j = 0; j < order; ++j) {
    const double t = t0 - j * dt;
    h.push_back(fem::interpolate(space, [&](const Point &x) { return f(x, t); }));
  }
  return h;
}

double dot_grad(const Point &a, const Point &b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += a[d] * b[d];
  return s;
}

}  // namespace

ParabolicSystem::ParabolicSystem(std::string subsection_path, CouplingScheme default_scheme)
    : CoreModel(std::move(subsection_path)),
      mesh_(sub("Mesh and space discretization"),
            MeshSettings{3, 8, -1.0, 1.0, {"FE space degree u", "FE space degree v"}, {1, 2}}),
      linear_(prm_subsection_path, {linalg::SolverType::GMRES, 10000, 1e-12, 1e-15},
              {linalg::PreconditionerType::ILU0, 1.0}),
      newton_(sub("Non-linear solver"), detail::newton_config(20, 1e-10, 1e-12)),
      output_(sub("Output")),
      default_scheme_(default_scheme),
      scheme_(default_scheme) {}

void ParabolicSystem::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(prm_subsection_path);
  params.enter_subsection("Problem");
  params.declare_entry("Exact solution", "Linear", Selection{{"Linear", "Trigonometric"}},
                       "Linear: (u, v) = (t x, t y); Trigonometric: u = v = t prod cos(pi x_i / 2).");
  params.declare_entry("Coupling scheme",
                       default_scheme_ == CouplingScheme::Monolithic ? "Monolithic" : "Partitioned",
                       Selection{{"Monolithic", "Partitioned"}},
                       "Partitioned solves u first, then v with u taken from the previous step.");
  params.set_verbosity(Verbosity::Full);
  params.declare_entry("Number of threads", std::to_string(n_threads_), Integer{1, 256},
                       "Threads used by the monolithic assembly.");
  params.reset_verbosity();
  params.leave_subsection();
  params.enter_subsection("Time");
  params.declare_entry("BDF order u", std::to_string(order_u_), Integer{1, 3});
  params.declare_entry("BDF order v", std::to_string(order_v_), Integer{1, 3});
  params.declare_entry("Initial time", format_real(t0_), Real{});
  params.declare_entry("Final time", format_real(t_final_), Real{});
  params.set_verbosity(Verbosity::Minimal);
  params.declare_entry("Time step", format_real(dt_), Real{0.0, 1e300});
  params.reset_verbosity();
  params.leave_subsection();
  params.leave_subsection_path();
  mesh_.declare_parameters(params);
  linear_.declare_parameters(params);
  newton_.declare_parameters(params);
  output_.declare_parameters(params);
}

void ParabolicSystem::parse_parameters(const ParamTree &params) {
  const auto p = path("Problem");
  exact_ = params.get(p, "Exact solution") == "Trigonometric" ? SystemSolution::Trigonometric
                                                               : SystemSolution::Linear;
  scheme_ = params.get(p, "Coupling scheme") == "Monolithic" ? CouplingScheme::Monolithic
                                                             : CouplingScheme::Partitioned;
  n_threads_ = std::stoi(params.get(p, "Number of threads"));
  const auto t = path("Time");
  order_u_ = std::stoi(params.get(t, "BDF order u"));
  order_v_ = std::stoi(params.get(t, "BDF order v"));
  t0_ = std::stod(params.get(t, "Initial time"));
  t_final_ = std::stod(params.get(t, "Final time"));
  dt_ = std::stod(params.get(t, "Time step"));
  if (!(dt_ > 0.0)) throw ParamError("time step must be positive");
  if (t_final_ < t0_) throw ParamError("final time precedes initial time");
  mesh_.parse_parameters(params);
  linear_.parse_parameters(params);
  newton_.parse_parameters(params);
  output_.parse_parameters(params);
}

void ParabolicSystem::run() {
  const auto &ms = mesh_.settings();
  const int dim = ms.dim;
  const auto m = ms.build();
  space_u_ = std::make_unique<fem::FeSpace>(m, ms.degree(0));
  space_v_ = std::make_unique<fem::FeSpace>(m, ms.degree(1));
  const fem::FeSpace &su = *space_u_, &sv = *space_v_;
  const std::size_t nu = su.n_dofs(), nv = sv.n_dofs();
  const SystemData data{exact_, dim};
  const auto quad = fem::gauss_quadrature(dim, std::max(ms.degree(0), ms.degree(1)) + 1);
  const auto err_quad = fem::gauss_quadrature(dim, std::max(ms.degree(0), ms.degree(1)) + 2);
  const int n_steps = static_cast<int>(std::lround((t_final_ - t0_) / dt_));
  const bool write = writes_output() && output_.settings().enabled;

  const auto fu = [&](const Point &x, double t) { return data.u(x, t); };
  const auto fv = [&](const Point &x, double t) { return data.v(x, t); };
  timeint::Bdf bdf_u(order_u_, dt_, exact_history(su, order_u_, t0_, dt_, fu));
  timeint::Bdf bdf_v(order_v_, dt_, exact_history(sv, order_v_, t0_, dt_, fv));
  u_ = bdf_u.history().front();
  v_ = bdf_v.history().front();

  const auto solve_linear = [&](const linalg::CsrMatrix &J, const DVector &r, double forcing,
                                const nonlinear::NewtonSolver &s) {
    DVector delta(r.size(), 0.0);
    const bool inexact = s.config().variant == nonlinear::NewtonVariant::Inexact;
    linear_(J, r, delta, inexact ? forcing : 0.0);
    return delta;
  };

  nonlinear::NewtonSolver newton(newton_.newton());
  steps_.clear();
  io::CsvTable table{{"step", "time", "u_l2_error", "v_l2_error", "newton_iterations"}, {}};

  for (int step = 1; step <= n_steps; ++step) {
    const double t = t0_ + step * dt_;
    const double au = bdf_u.alpha0_over_dt(), av = bdf_v.alpha0_over_dt();
    const DVector hu = bdf_u.history_term(), hv = bdf_v.history_term();
    const auto bc_u = detail::boundary_constraints(su, [&](const Point &x) { return data.u(x, t); });
    const auto bc_v = detail::boundary_constraints(sv, [&](const Point &x) { return data.v(x, t); });
    newton.begin_time_step();
    int iterations = 0;

    if (scheme_ == CouplingScheme::Monolithic) {
      fem::Constraints bc, zero;
      for (const auto &[dof, val] : bc_u.entries()) bc.add(dof, val);
      for (const auto &[dof, val] : bc_v.entries()) bc.add(nu + dof, val);
      zero = bc.homogenized();

      DVector x(nu + nv);
      const DVector eu = bdf_u.extrapolate(), ev = bdf_v.extrapolate();
      std::copy(eu.begin(), eu.end(), x.begin());
      std::copy(ev.begin(), ev.end(), x.begin() + nu);
      fem::apply_dirichlet_to_vector(bc, x);

      const fem::FeSpace *spaces[] = {&su, &sv};
      nonlinear::NewtonCallbacks cb;
      cb.assemble = [&](const DVector &X, bool want) {
        const DVector uu(X.begin(), X.begin() + nu), vv(X.begin() + nu, X.end());
        auto kernel = [&](std::span<const fem::FeCellValues> cvs) {
          const auto &cu = cvs[0], &cv = cvs[1];
          const int n1 = cu.n_shapes, n2 = cv.n_shapes, n = n1 + n2;
          fem::LocalSystem ls(n, want);
          for (int q = 0; q < cu.n_q; ++q) {
            const double w = cu.JxW[q];
            const Point &xq = cu.points[q];
            const double uq = cu.value(uu, q), vq = cv.value(vv, q);
            const Point gu = cu.gradient(uu, q), gv = cv.gradient(vv, q);
            const double ru = au * uq - cu.value(hu, q) + uq * uq - data.f(xq, t);
            const double rv = av * vq - cv.value(hv, q) + uq * vq - data.g(xq, t);
            for (int i = 0; i < n1; ++i)
              ls.rhs[i] += (ru * cu.shape(q, i) + dot_grad(gu, cu.grad(q, i), dim)) * w;
            for (int i = 0; i < n2; ++i)
              ls.rhs[n1 + i] += (rv * cv.shape(q, i) + dot_grad(gv, cv.grad(q, i), dim)) * w;
            if (!want) continue;
            for (int i = 0; i < n1; ++i)
              for (int j = 0; j < n1; ++j)
                ls(i, j) += ((au + 2.0 * uq) * cu.shape(q, i) * cu.shape(q, j) +
                             dot_grad(cu.grad(q, i), cu.grad(q, j), dim)) * w;
            for (int i = 0; i < n2; ++i) {
              for (int j = 0; j < n1; ++j)
                ls(n1 + i, j) += vq * cv.shape(q, i) * cu.shape(q, j) * w;
              for (int j = 0; j < n2; ++j)
                ls(n1 + i, n1 + j) += ((av + uq) * cv.shape(q, i) * cv.shape(q, j) +
                                       dot_grad(cv.grad(q, i), cv.grad(q, j), dim)) * w;
            }
          }
          return ls;
        };
        auto sys = fem::assemble_coupled(spaces, quad, kernel, zero, {want, n_threads_});
        nonlinear::Assembly a;
        a.residual = std::move(sys.rhs);
        if (want) a.jacobian = std::move(sys.matrix);
        return a;
      };
      cb.solve = [&](const linalg::CsrMatrix &J, const DVector &r, double forcing) {
        return solve_linear(J, r, forcing, newton);
      };
      const auto rep = newton.solve(x, cb);
      if (!rep.converged)
        throw Error("Newton did not converge at step " + std::to_string(step) + ": " + rep.reason);
      iterations = rep.iterations;
      u_.assign(x.begin(), x.begin() + nu);
      v_.assign(x.begin() + nu, x.end());
    } else {
      // u first, by Newton on its own equation.
      const DVector u_star = bdf_u.extrapolate();
      DVector uu = u_star;
      fem::apply_dirichlet_to_vector(bc_u, uu);
      const auto zero_u = bc_u.homogenized();
      const auto quad_u = fem::gauss_quadrature(dim, ms.degree(0) + 1);
      nonlinear::NewtonCallbacks cb;
      cb.assemble = [&](const DVector &X, bool want) {
        auto kernel = [&](const fem::FeCellValues &cu) {
          fem::LocalSystem ls(cu.n_shapes, want);
          for (int q = 0; q < cu.n_q; ++q) {
            const double w = cu.JxW[q];
            const double uq = cu.value(X, q);
            const Point gu = cu.gradient(X, q);
            const double ru = au * uq - cu.value(hu, q) + uq * uq - data.f(cu.points[q], t);
            for (int i = 0; i < cu.n_shapes; ++i) {
              ls.rhs[i] += (ru * cu.shape(q, i) + dot_grad(gu, cu.grad(q, i), dim)) * w;
              if (!want) continue;
              for (int j = 0; j < cu.n_shapes; ++j)
                ls(i, j) += ((au + 2.0 * uq) * cu.shape(q, i) * cu.shape(q, j) +
                             dot_grad(cu.grad(q, i), cu.grad(q, j), dim)) * w;
            }
          }
          return ls;
        };
        auto sys = fem::assemble_system(su, quad_u, kernel, zero_u, {want, 1});
        nonlinear::Assembly a;
        a.residual = std::move(sys.rhs);
        if (want) a.jacobian = std::move(sys.matrix);
        return a;
      };
      cb.solve = [&](const linalg::CsrMatrix &J, const DVector &r, double forcing) {
        return solve_linear(J, r, forcing, newton);
      };
      const auto rep = newton.solve(uu, cb);
      if (!rep.converged)
        throw Error("Newton did not converge at step " + std::to_string(step) + ": " + rep.reason);
      iterations = rep.iterations;

      // Then v, linear once u is frozen at its extrapolated value.
      auto u_field = coupling::QuadratureField::fem_value(su, u_star);
      auto kernel = [&](const fem::FeCellValues &cv) {
        u_field.reinit(sv, cv.cell, quad);
        fem::LocalSystem ls(cv.n_shapes);
        for (int q = 0; q < cv.n_q; ++q) {
          const double w = cv.JxW[q];
          const double load = cv.value(hv, q) + data.g(cv.points[q], t);
          const double react = av + u_field.value(q);
          for (int i = 0; i < cv.n_shapes; ++i) {
            for (int j = 0; j < cv.n_shapes; ++j)
              ls(i, j) += (react * cv.shape(q, i) * cv.shape(q, j) +
                           dot_grad(cv.grad(q, i), cv.grad(q, j), dim)) * w;
            ls.rhs[i] += load * cv.shape(q, i) * w;
          }
        }
        return ls;
      };
      auto sys = fem::assemble_system(sv, quad, kernel, bc_v, {true, 1});
      DVector vv = bdf_v.extrapolate();
      fem::apply_dirichlet_to_vector(bc_v, vv);
      linear_(sys.matrix, sys.rhs, vv);
      u_ = std::move(uu);
      v_ = std::move(vv);
    }

    bdf_u.advance(u_);
    bdf_v.advance(v_);
    SystemStepRecord r;
    r.step = step;
    r.time = t;
    r.u_l2_error = fem::error_norm(su, u_, [&](const Point &x) { return data.u(x, t); },
                                   fem::Norm::L2, err_quad);
    r.v_l2_error = fem::error_norm(sv, v_, [&](const Point &x) { return data.v(x, t); },
                                   fem::Norm::L2, err_quad);
    r.newton_iterations = iterations;
    steps_.push_back(r);
    table.add_row(std::vector<double>{double(step), t, r.u_l2_error, r.v_l2_error,
                                      double(iterations)});
    if (write && ((output_.settings().vtk_period > 0 && step % output_.settings().vtk_period == 0) ||
                  step == n_steps))
      io::vtk_write(output_file(detail::step_file("solution", step, ".vtk")), m,
                    std::max(ms.degree(0), ms.degree(1)), {{"u", &su, u_}, {"v", &sv, v_}}, t);
  }
  if (write) io::csv_write(output_file("norms.csv"), table);
}

}  // namespace flexfem::tutorials
