#include "support.hpp"

namespace flexfem::tutorials {

using namespace params;
using detail::pi;

namespace {

struct PoissonData {
  fem::ScalarFunction u, f;
  fem::GradientFunction grad;
};

PoissonData poisson_data(PoissonSolution s, int dim) {
  if (s == PoissonSolution::Linear)
    return {[](const Point &x) { return x[0]; }, [](const Point &) { return 0.0; },
            [](const Point &, int) { return Point{1.0, 0.0, 0.0}; }};
  return {[dim](const Point &x) { return detail::sine_product(x, dim); },
          [dim](const Point &x) { return dim * pi * pi * detail::sine_product(x, dim); },
          [dim](const Point &x, int) { return detail::sine_product_gradient(x, dim); }};
}

}  // namespace

Poisson::Poisson(std::string subsection_path)
    : CoreModel(std::move(subsection_path)),
      mesh_(sub("Mesh and space discretization"), MeshSettings{2, 8, 0.0, 1.0, {"FE space degree"}, {1}}),
      linear_(prm_subsection_path, {linalg::SolverType::CG, 10000, 1e-12, 1e-14},
              {linalg::PreconditionerType::SSOR, 1.2}),
      output_(sub("Output")) {}

void Poisson::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(prm_subsection_path);
  params.enter_subsection("Problem");
  params.declare_entry("Exact solution", "Sine", Selection{{"Sine", "Linear"}},
                       "Sine: prod sin(pi x_i); Linear: x.");
  params.declare_entry("Number of refinement cycles", std::to_string(n_cycles_), Integer{1, 10},
                       "Each cycle doubles the subdivisions.");
  params.set_verbosity(Verbosity::Full);
  params.declare_entry("Number of threads", std::to_string(n_threads_), Integer{1, 256},
                       "Threads used by the assembly.");
  params.reset_verbosity();
  params.leave_subsection();
  params.leave_subsection_path();
  mesh_.declare_parameters(params);
  linear_.declare_parameters(params);
  output_.declare_parameters(params);
}

void Poisson::parse_parameters(const ParamTree &params) {
  const auto p = path("Problem");
  exact_ = params.get(p, "Exact solution") == "Linear" ? PoissonSolution::Linear
                                                        : PoissonSolution::Sine;
  n_cycles_ = std::stoi(params.get(p, "Number of refinement cycles"));
  n_threads_ = std::stoi(params.get(p, "Number of threads"));
  mesh_.parse_parameters(params);
  linear_.parse_parameters(params);
  output_.parse_parameters(params);
}

fem::AssembledSystem Poisson::assemble(const fem::FeSpace &space, PoissonSolution solution,
                                       int n_threads) {
  const auto data = poisson_data(solution, space.dim());
  const auto quad = fem::gauss_quadrature(space.dim(), space.degree() + 2);
  const int dim = space.dim();
  auto kernel = [&](const fem::FeCellValues &cv) {
    fem::LocalSystem ls(cv.n_shapes);
    for (int q = 0; q < cv.n_q; ++q) {
      const double fq = data.f(cv.points[q]) * cv.JxW[q];
      for (int i = 0; i < cv.n_shapes; ++i) {
        const Point &gi = cv.grad(q, i);
        for (int j = 0; j < cv.n_shapes; ++j) {
          const Point &gj = cv.grad(q, j);
          double s = 0.0;
          for (int d = 0; d < dim; ++d) s += gi[d] * gj[d];
          ls(i, j) += s * cv.JxW[q];
        }
        ls.rhs[i] += fq * cv.shape(q, i);
      }
    }
    return ls;
  };
  return fem::assemble_system(space, quad, kernel, detail::boundary_constraints(space, data.u),
                              {true, n_threads});
}

void Poisson::run() {
  cycles_.clear();
  const bool write = writes_output() && output_.settings().enabled;
  io::CsvTable table{{"cycle", "subdivisions", "h", "n_dofs", "l2_error", "h1_error",
                      "linf_error", "iterations"},
                     {}};
  MeshSettings ms = mesh_.settings();
  const auto data = poisson_data(exact_, ms.dim);
  for (int cycle = 0; cycle < n_cycles_; ++cycle) {
    const auto m = ms.build();
    const fem::FeSpace space(m, ms.degree());
    auto sys = assemble(space, exact_, n_threads_);
    solution_.assign(space.n_dofs(), 0.0);
    const auto rep = linear_(sys.matrix, sys.rhs, solution_);

    const auto quad = fem::gauss_quadrature(ms.dim, ms.degree() + 3);
    ConvergenceCycle c;
    c.subdivisions = ms.subdivisions;
    c.h = m.cell_diameter();
    c.n_dofs = space.n_dofs();
    c.l2_error = fem::error_norm(space, solution_, data.u, fem::Norm::L2, quad);
    c.h1_error = fem::error_norm(
        space, solution_, [&](const Point &x, int) { return data.u(x); }, fem::Norm::H1Seminorm,
        quad, data.grad);
    c.linf_error = fem::error_norm(space, solution_, data.u, fem::Norm::LinfNodal, quad);
    c.iterations = rep.iterations;
    cycles_.push_back(c);
    table.add_row(std::vector<double>{double(cycle), double(c.subdivisions), c.h,
                                      double(c.n_dofs), c.l2_error, c.h1_error, c.linf_error,
                                      double(c.iterations)});
    if (write && cycle + 1 == n_cycles_)
      io::vtk_write(output_file("solution_0.vtk"), m, ms.degree(), {{"u", &space, solution_}},
                    0.0);
    ms.subdivisions *= 2;
  }
  if (write) io::csv_write(output_file("norms.csv"), table);
}

}  // namespace flexfem::tutorials
