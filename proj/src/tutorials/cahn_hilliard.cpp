#include <random>
#include <sstream>

#include "support.hpp"

namespace flexfem::tutorials {

using namespace params;

namespace {

/// Cell residual of the mixed system for interleaved (c, mu) local dofs:
///   (c - c_old, q) + dt (grad mu, grad q)
///   (mu, v) - (f'(c), v) - lambda (grad c, grad v)
/// The concentration equation is scaled by dt so that its rows sum to the
/// mass change.
template <class T>
std::vector<T> local_residual(const fem::FeCellValues &cv, const std::vector<T> &x,
                              std::span<const double> c_old, double dt, double theta,
                              double lambda, int dim) {
  const int ns = cv.n_shapes;
  std::vector<T> r(2 * ns, T(0.0));
  for (int q = 0; q < cv.n_q; ++q) {
    T c(0.0), mu(0.0);
    std::array<T, 3> gc{T(0.0), T(0.0), T(0.0)}, gmu{T(0.0), T(0.0), T(0.0)};
    for (int j = 0; j < ns; ++j) {
      const double phi = cv.shape(q, j);
      const Point &g = cv.grad(q, j);
      c += x[2 * j] * phi;
      mu += x[2 * j + 1] * phi;
      for (int d = 0; d < dim; ++d) {
        gc[d] += x[2 * j] * g[d];
        gmu[d] += x[2 * j + 1] * g[d];
      }
    }
    const T df = 2.0 * theta * c * (1.0 - c) * (1.0 - 2.0 * c);
    const T dc = c - c_old[q];
    const double w = cv.JxW[q];
    for (int i = 0; i < ns; ++i) {
      const double phi = cv.shape(q, i);
      const Point &g = cv.grad(q, i);
      T rc = dc * phi, rmu = (mu - df) * phi;
      for (int d = 0; d < dim; ++d) {
        rc += dt * gmu[d] * g[d];
        rmu -= lambda * gc[d] * g[d];
      }
      r[2 * i] += rc * w;
      r[2 * i + 1] += rmu * w;
    }
  }
  return r;
}

std::vector<double> parse_levels(const std::string &s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t used = 0;
    const double v = std::stod(item.substr(b), &used);
    if (item.find_first_not_of(" \t", b + used) != std::string::npos)
      throw ParamError("contour levels: cannot parse '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string format_levels(const std::vector<double> &levels) {
  std::string s;
  for (std::size_t i = 0; i < levels.size(); ++i) s += (i ? ", " : "") + format_real(levels[i]);
  return s;
}

}  // namespace

CahnHilliard::CahnHilliard(std::string subsection_path)
    : CoreModel(std::move(subsection_path)),
      mesh_(sub("Mesh and space discretization"), MeshSettings{2, 32, 0.0, 1.0, {}, {}}),
      linear_(prm_subsection_path, {linalg::SolverType::BiCGStab, 5000, 1e-12, 1e-16},
              {linalg::PreconditionerType::ILU0, 1.0}),
      newton_(sub("Non-linear solver"), detail::newton_config(10, 1e-11, 1e-300)),
      output_(sub("Output")) {}

void CahnHilliard::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(prm_subsection_path);
  params.enter_subsection("Problem");
  params.declare_entry("Theta", format_real(theta_), Real{0.0, 1e300},
                       "Double-well height: f(c) = theta c^2 (1 - c)^2.");
  params.declare_entry("Lambda", format_real(lambda_), Real{0.0, 1e300},
                       "Interface energy coefficient.");
  params.declare_entry("Initial condition", "Random", Selection{{"Random", "Uniform"}},
                       "Random: mean + amplitude (2 r - 1) per node; Uniform: mean.");
  params.declare_entry("Mean concentration", format_real(mean_), Real{});
  params.declare_entry("Perturbation amplitude", format_real(amplitude_), Real{0.0, 1e300});
  params.set_verbosity(Verbosity::Minimal);
  params.declare_entry("Random seed", std::to_string(seed_), Integer{0, UINT32_MAX});
  params.reset_verbosity();
  params.leave_subsection();

  params.enter_subsection("Time");
  params.set_verbosity(Verbosity::Minimal);
  params.declare_entry("Initial time step", format_real(dt0_), Real{0.0, 1e300});
  params.reset_verbosity();
  params.declare_entry("Maximum time step", format_real(dt_max_), Real{0.0, 1e300});
  params.declare_entry("Final time", format_real(final_time_), Real{0.0, 1e300});
  params.declare_entry("Steady-state tolerance", format_real(steady_tolerance_), Real{0.0, 1e300},
                       "Stops once max |c^{n+1} - c^n| falls below this value.");
  params.set_verbosity(Verbosity::Full);
  params.declare_entry("Growth factor", format_real(growth_), Real{1.0, 1e300},
                       "Applied after steps that needed few Newton iterations.");
  params.declare_entry("Easy Newton iterations", std::to_string(easy_iterations_),
                       Integer{0, 1000});
  params.declare_entry("Maximum halvings", std::to_string(max_halvings_), Integer{0, 60},
                       "Time-step halvings allowed per step on Newton failure.");
  params.declare_entry("Maximum number of steps", std::to_string(max_steps_),
                       Integer{1, INT32_MAX});
  params.reset_verbosity();
  params.leave_subsection();

  params.enter_subsection("Output");
  params.declare_entry("Contour levels", format_levels(levels_), AnyString{},
                       "Comma-separated values of c exported as contours.");
  params.leave_subsection();
  params.leave_subsection_path();

  mesh_.declare_parameters(params);
  linear_.declare_parameters(params);
  newton_.declare_parameters(params);
  output_.declare_parameters(params);
}

void CahnHilliard::parse_parameters(const ParamTree &params) {
  const auto p = path("Problem");
  theta_ = std::stod(params.get(p, "Theta"));
  lambda_ = std::stod(params.get(p, "Lambda"));
  initial_condition_ = params.get(p, "Initial condition") == "Uniform" ? InitialCondition::Uniform
                                                                       : InitialCondition::Random;
  mean_ = std::stod(params.get(p, "Mean concentration"));
  amplitude_ = std::stod(params.get(p, "Perturbation amplitude"));
  seed_ = static_cast<std::uint32_t>(std::stoul(params.get(p, "Random seed")));
  const auto t = path("Time");
  dt0_ = std::stod(params.get(t, "Initial time step"));
  dt_max_ = std::stod(params.get(t, "Maximum time step"));
  final_time_ = std::stod(params.get(t, "Final time"));
  steady_tolerance_ = std::stod(params.get(t, "Steady-state tolerance"));
  growth_ = std::stod(params.get(t, "Growth factor"));
  easy_iterations_ = std::stoi(params.get(t, "Easy Newton iterations"));
  max_halvings_ = std::stoi(params.get(t, "Maximum halvings"));
  max_steps_ = std::stoi(params.get(t, "Maximum number of steps"));
  levels_ = parse_levels(params.get(path("Output"), "Contour levels"));
  if (!(dt0_ > 0.0) || !(dt_max_ >= dt0_)) throw ParamError("time steps: need 0 < initial <= maximum");
  mesh_.parse_parameters(params);
  linear_.parse_parameters(params);
  newton_.parse_parameters(params);
  output_.parse_parameters(params);
}

void CahnHilliard::run() {
  const auto &ms = mesh_.settings();
  const int dim = ms.dim;
  const auto m = ms.build();
  space_ = std::make_unique<fem::FeSpace>(m, 1, 2);
  const fem::FeSpace &space = *space_;
  const fem::FeSpace scalar(m, 1);
  const auto quad = fem::gauss_quadrature(dim, 3);
  const std::size_t n_nodes = space.n_nodes();
  const bool write = writes_output() && output_.settings().enabled;

  solution_.assign(space.n_dofs(), 0.0);
  std::mt19937 rng(seed_);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    double c = mean_;
    if (initial_condition_ == InitialCondition::Random)
      c += amplitude_ * (2.0 * (double(rng()) / 4294967296.0) - 1.0);
    solution_[2 * k] = c;
  }
  initial_ = solution_;

  const auto integrate = [&](const DVector &x, bool energy) {
    fem::FeValues fe(space, quad);
    double s = 0.0;
    for (std::size_t cell = 0; cell < m.n_cells(); ++cell) {
      const auto &cv = fe.reinit(cell);
      for (int q = 0; q < cv.n_q; ++q) {
        const double c = cv.value(x, q, 0);
        if (!energy) {
          s += c * cv.JxW[q];
          continue;
        }
        const Point g = cv.gradient(x, q, 0);
        double g2 = 0.0;
        for (int d = 0; d < dim; ++d) g2 += g[d] * g[d];
        s += (theta_ * c * c * (1 - c) * (1 - c) + 0.5 * lambda_ * g2) * cv.JxW[q];
      }
    }
    return s;
  };

  const auto split = [&](const DVector &x, int comp) {
    DVector out(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) out[k] = x[2 * k + comp];
    return out;
  };
  const auto write_state = [&](int step, double t) {
    const DVector c = split(solution_, 0), mu = split(solution_, 1);
    io::vtk_write(output_file(detail::step_file("solution", step, ".vtk")), m, 1,
                  {{"c", &scalar, c}, {"mu", &scalar, mu}}, t);
  };

  double dt = dt0_, t = 0.0;
  DVector old = solution_;
  double mass = integrate(solution_, false);
  steps_.clear();
  steady_ = false;
  nonlinear::NewtonSolver newton(newton_.newton());
  io::CsvTable table{{"step", "time", "dt", "mass", "mass_drift", "change", "energy",
                      "newton_iterations", "halvings"},
                     {}};

  int step = 0;
  while (t < final_time_ * (1.0 - 1e-12) && step < max_steps_) {
    const double dt_try = std::min(dt, final_time_ - t);
    double h = dt_try;
    int halvings = 0;
    nonlinear::NewtonReport rep;
    DVector x;
    for (;;) {
      x = old;
      nonlinear::NewtonCallbacks cb;
      cb.assemble = [&](const DVector &X, bool want) {
        auto kernel = [&](const fem::FeCellValues &cv) {
          std::vector<double> c_old(cv.n_q);
          for (int q = 0; q < cv.n_q; ++q) c_old[q] = cv.value(old, q, 0);
          const int n = cv.n_dofs();
          DVector xl(n);
          for (int i = 0; i < n; ++i) xl[i] = X[cv.dof_indices[i]];
          fem::LocalSystem ls(n, want);
          ls.rhs = local_residual<double>(cv, xl, c_old, h, theta_, lambda_, dim);
          if (want) {
            using D = nonlinear::Dual<8>;
            ls.matrix = nonlinear::jacobian_via_dual<8>(
                [&](const std::vector<D> &y) {
                  return local_residual<D>(cv, y, c_old, h, theta_, lambda_, dim);
                },
                xl);
          }
          return ls;
        };
        auto sys = fem::assemble_system(space, quad, kernel, {}, {want, 1});
        nonlinear::Assembly a;
        a.residual = std::move(sys.rhs);
        if (want) a.jacobian = std::move(sys.matrix);
        return a;
      };
      cb.solve = [&](const linalg::CsrMatrix &J, const DVector &r, double forcing) {
        DVector delta(r.size(), 0.0);
        const bool inexact = newton.config().variant == nonlinear::NewtonVariant::Inexact;
        linear_(J, r, delta, inexact ? forcing : 0.0);
        return delta;
      };
      newton.begin_time_step();
      bool ok = false;
      try {
        rep = newton.solve(x, cb);
        ok = rep.converged;
      } catch (const Error &) {
        ok = false;
      }
      if (ok) break;
      newton.reset();
      if (halvings == max_halvings_)
        throw Error("Cahn-Hilliard: Newton failed after " + std::to_string(halvings) +
                    " time-step halvings at t = " + format_real(t));
      h *= 0.5;
      ++halvings;
    }

    ++step;
    t += h;
    double change = 0.0;
    for (std::size_t k = 0; k < n_nodes; ++k)
      change = std::max(change, std::abs(x[2 * k] - old[2 * k]));
    const double new_mass = integrate(x, false);
    CahnHilliardStep rec;
    rec.step = step;
    rec.time = t;
    rec.dt = h;
    rec.mass = new_mass;
    rec.mass_drift = std::abs(new_mass - mass) / std::max(std::abs(mass), 1e-300);
    rec.change = change;
    rec.energy = integrate(x, true);
    rec.newton_iterations = rep.iterations;
    rec.halvings = halvings;
    steps_.push_back(rec);
    table.add_row(std::vector<double>{double(step), t, h, rec.mass, rec.mass_drift, change,
                                      rec.energy, double(rep.iterations), double(halvings)});
    solution_ = x;
    old = x;
    mass = new_mass;

    if (write && output_.settings().vtk_period > 0 && step % output_.settings().vtk_period == 0)
      write_state(step, t);
    if (change < steady_tolerance_) {
      steady_ = true;
      break;
    }
    dt = halvings > 0 ? h : dt_try;
    if (rep.iterations <= easy_iterations_) dt = std::min(dt * growth_, dt_max_);
  }

  contours_.clear();
  for (double level : levels_) contours_.push_back(io::extract_isosurface(space, solution_, level, 0));
  if (write) {
    write_state(step, t);
    io::vtk_write_isosurfaces(output_file(detail::step_file("contours", step, ".vtk")), contours_);
    io::csv_write(output_file("norms.csv"), table);
  }
}

}  // namespace flexfem::tutorials
