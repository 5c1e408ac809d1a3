#include "support.hpp"

namespace flexfem::tutorials {

using namespace params;
using detail::pi;

NonlinearElliptic::NonlinearElliptic(std::string subsection_path)
    : CoreModel(std::move(subsection_path)),
      mesh_(sub("Mesh and space discretization"), MeshSettings{2, 16, 0.0, 1.0, {"FE space degree"}, {1}}),
      linear_(prm_subsection_path, {linalg::SolverType::CG, 10000, 1e-12, 1e-15},
              {linalg::PreconditionerType::SSOR, 1.2}),
      newton_(sub("Non-linear solver"), detail::newton_config(20, 1e-10, 1e-12)),
      output_(sub("Output")) {}

void NonlinearElliptic::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(prm_subsection_path);
  params.enter_subsection("Problem");
  params.declare_entry("Exact solution", "Constant", Selection{{"Constant", "Sine"}},
                       "Constant: u = 1, f = 1; Sine: u = prod sin(pi x_i).");
  params.declare_entry("Initial guess", format_real(initial_guess_), Real{},
                       "Constant initial iterate in the interior.");
  params.leave_subsection();
  params.leave_subsection_path();
  mesh_.declare_parameters(params);
  linear_.declare_parameters(params);
  newton_.declare_parameters(params);
  output_.declare_parameters(params);
}

void NonlinearElliptic::parse_parameters(const ParamTree &params) {
  const auto p = path("Problem");
  exact_ = params.get(p, "Exact solution") == "Sine" ? NonlinearEllipticSolution::Sine
                                                      : NonlinearEllipticSolution::Constant;
  initial_guess_ = std::stod(params.get(p, "Initial guess"));
  mesh_.parse_parameters(params);
  linear_.parse_parameters(params);
  newton_.parse_parameters(params);
  output_.parse_parameters(params);
}

void NonlinearElliptic::run() {
  const auto &ms = mesh_.settings();
  const int dim = ms.dim;
  const auto m = ms.build();
  const fem::FeSpace space(m, ms.degree());
  const auto quad = fem::gauss_quadrature(dim, ms.degree() + 2);

  fem::ScalarFunction u_exact, f;
  if (exact_ == NonlinearEllipticSolution::Constant) {
    u_exact = [](const Point &) { return 1.0; };
    f = [](const Point &) { return 1.0; };
  } else {
    u_exact = [dim](const Point &x) { return detail::sine_product(x, dim); };
    f = [dim](const Point &x) {
      const double s = detail::sine_product(x, dim);
      return dim * pi * pi * s + s * s * s;
    };
  }

  const auto bc = detail::boundary_constraints(space, u_exact);
  const auto zero_bc = bc.homogenized();

  solution_.assign(space.n_dofs(), initial_guess_);
  fem::apply_dirichlet_to_vector(bc, solution_);

  nonlinear::NewtonCallbacks cb;
  cb.assemble = [&](const DVector &u, bool want_jacobian) {
    auto kernel = [&](const fem::FeCellValues &cv) {
      fem::LocalSystem ls(cv.n_shapes, want_jacobian);
      for (int q = 0; q < cv.n_q; ++q) {
        const double uq = cv.value(u, q);
        const Point gu = cv.gradient(u, q);
        const double fq = f(cv.points[q]);
        const double w = cv.JxW[q];
        for (int i = 0; i < cv.n_shapes; ++i) {
          const Point &gi = cv.grad(q, i);
          double a = 0.0;
          for (int d = 0; d < dim; ++d) a += gu[d] * gi[d];
          ls.rhs[i] += (a + (uq * uq * uq - fq) * cv.shape(q, i)) * w;
          if (!want_jacobian) continue;
          for (int j = 0; j < cv.n_shapes; ++j) {
            const Point &gj = cv.grad(q, j);
            double k = 0.0;
            for (int d = 0; d < dim; ++d) k += gi[d] * gj[d];
            ls(i, j) += (k + 3.0 * uq * uq * cv.shape(q, i) * cv.shape(q, j)) * w;
          }
        }
      }
      return ls;
    };
    auto sys = fem::assemble_system(space, quad, kernel, zero_bc, {want_jacobian, 1});
    nonlinear::Assembly a;
    a.residual = std::move(sys.rhs);
    if (want_jacobian) a.jacobian = std::move(sys.matrix);
    return a;
  };
  cb.solve = [&](const linalg::CsrMatrix &J, const DVector &r, double forcing) {
    DVector delta(r.size(), 0.0);
    const bool inexact = newton_.newton().variant == nonlinear::NewtonVariant::Inexact;
    linear_(J, r, delta, inexact ? forcing : 0.0);
    return delta;
  };

  nonlinear::NewtonSolver solver(newton_.newton());
  report_ = solver.solve(solution_, cb);
  l2_error_ = fem::error_norm(space, solution_, u_exact, fem::Norm::L2,
                              fem::gauss_quadrature(dim, ms.degree() + 3));

  if (writes_output() && output_.settings().enabled) {
    io::CsvTable table{{"iteration", "residual_norm", "increment_norm", "solution_norm"}, {}};
    for (std::size_t k = 0; k < report_.residual_norms.size(); ++k)
      table.add_row(std::vector<double>{
          double(k), report_.residual_norms[k],
          k == 0 || k > report_.increment_norms.size() ? 0.0 : report_.increment_norms[k - 1],
          k < report_.solution_norms.size() ? report_.solution_norms[k] : 0.0});
    io::csv_write(output_file("norms.csv"), table);
    io::vtk_write(output_file("solution_0.vtk"), m, ms.degree(), {{"u", &space, solution_}}, 0.0);
  }
  if (!report_.converged) throw Error("Newton did not converge: " + report_.reason);
}

}  // namespace flexfem::tutorials
