#include "support.hpp"

namespace flexfem::tutorials {

using namespace params;
using detail::pi;

namespace {

struct SpaceTime {
  SpatialProfile spatial;
  TimeProfile temporal;
  int dim;

  double q(const Point &x) const {
    if (spatial == SpatialProfile::Sine) return detail::sine_product(x, dim);
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= x[d] * (1.0 - x[d]);
    return v;
  }
  double laplacian_q(const Point &x) const {
    if (spatial == SpatialProfile::Sine) return -dim * pi * pi * q(x);
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      double v = -2.0;
      for (int d = 0; d < dim; ++d)
        if (d != k) v *= x[d] * (1.0 - x[d]);
      s += v;
    }
    return s;
  }
  double g(double t) const {
    switch (temporal) {
      case TimeProfile::Stationary: return 1.0;
      case TimeProfile::Exponential: return std::exp(-t);
      case TimeProfile::Cosine: return std::cos(pi * t);
    }
    return 0.0;
  }
  double dg(double t) const {
    switch (temporal) {
      case TimeProfile::Stationary: return 0.0;
      case TimeProfile::Exponential: return -std::exp(-t);
      case TimeProfile::Cosine: return -pi * std::sin(pi * t);
    }
    return 0.0;
  }
  double u(const Point &x, double t) const { return q(x) * g(t); }
  double f(const Point &x, double t) const { return q(x) * dg(t) - laplacian_q(x) * g(t); }
};

SpatialProfile spatial_from(const std::string &s) {
  return s == "Sine" ? SpatialProfile::Sine : SpatialProfile::Quadratic;
}

TimeProfile temporal_from(const std::string &s) {
  if (s == "Stationary") return TimeProfile::Stationary;
  if (s == "Exponential") return TimeProfile::Exponential;
  return TimeProfile::Cosine;
}

}  // namespace

Heat::Heat(std::string subsection_path)
    : CoreModel(std::move(subsection_path)),
      mesh_(sub("Mesh and space discretization"), MeshSettings{2, 8, 0.0, 1.0, {"FE space degree"}, {2}}),
      time_(sub("Time"), {2, 0.0, 1.0, 0.05}),
      linear_(prm_subsection_path, {linalg::SolverType::CG, 10000, 1e-13, 1e-15},
              {linalg::PreconditionerType::SSOR, 1.2}),
      output_(sub("Output"), {true, 0, 0}, true) {}

void Heat::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(prm_subsection_path);
  params.enter_subsection("Problem");
  params.declare_entry("Spatial profile", "Quadratic", Selection{{"Sine", "Quadratic"}},
                       "q(x) in u = q(x) g(t): prod sin(pi x_i) or prod x_i (1 - x_i).");
  params.declare_entry("Time profile", "Cosine",
                       Selection{{"Stationary", "Exponential", "Cosine"}},
                       "g(t): 1, exp(-t) or cos(pi t).");
  params.declare_entry("Restart file", "", AnyString{},
                       "Checkpoint to resume from; empty starts at the initial time.");
  params.set_verbosity(Verbosity::Full);
  params.declare_entry("Stop after step", "0", Integer{0, INT32_MAX},
                       "Ends the run after this step; 0 runs to the final time.");
  params.reset_verbosity();
  params.leave_subsection();
  params.leave_subsection_path();
  mesh_.declare_parameters(params);
  time_.declare_parameters(params);
  linear_.declare_parameters(params);
  output_.declare_parameters(params);
}

void Heat::parse_parameters(const ParamTree &params) {
  const auto p = path("Problem");
  spatial_ = spatial_from(params.get(p, "Spatial profile"));
  temporal_ = temporal_from(params.get(p, "Time profile"));
  restart_file_ = params.get(p, "Restart file");
  stop_after_ = std::stoi(params.get(p, "Stop after step"));
  mesh_.parse_parameters(params);
  time_.parse_parameters(params);
  linear_.parse_parameters(params);
  output_.parse_parameters(params);
}

void Heat::run() {
  const auto &ms = mesh_.settings();
  const auto &tc = time_.config();
  const int dim = ms.dim, k = tc.bdf_order;
  const auto m = ms.build();
  const fem::FeSpace space(m, ms.degree());
  const auto quad = fem::gauss_quadrature(dim, ms.degree() + 2);
  const auto err_quad = fem::gauss_quadrature(dim, ms.degree() + 3);
  const SpaceTime data{spatial_, temporal_, dim};
  const int n_steps = tc.n_steps();
  const bool write = writes_output() && output_.settings().enabled;

  steps_.clear();
  solver_rhs_.clear();
  solver_guess_.clear();

  std::vector<DVector> history;
  first_step_ = 1;
  if (restart_file_.empty()) {
    for (int j = 0; j < k; ++j) {
      const double t = tc.initial_time - j * tc.dt;
      history.push_back(fem::interpolate(space, [&](const Point &x) { return data.u(x, t); }));
    }
  } else {
    const auto cp = io::checkpoint_load(restart_file_);
    if (!(cp.mesh == m.descriptor())) throw Error("restart: mesh differs from the checkpoint");
    if (int(cp.degree) != ms.degree()) throw Error("restart: FE degree differs from the checkpoint");
    if (int(cp.bdf_order) != k) throw Error("restart: BDF order differs from the checkpoint");
    if (cp.dt != tc.dt) throw Error("restart: time step differs from the checkpoint");
    for (int j = 0; j < k; ++j) {
      const auto &v = cp.vector("u_" + std::to_string(j));
      if (v.size() != space.n_dofs()) throw Error("restart: vector size mismatch");
      history.push_back(v);
    }
    first_step_ = int(cp.step) + 1;
  }
  timeint::Bdf bdf(k, tc.dt, history);
  solution_ = history.front();

  io::CsvTable table{{"step", "time", "l2_error", "linf_error", "iterations"}, {}};
  const int last = stop_after_ > 0 ? std::min(stop_after_, n_steps) : n_steps;
  for (int step = first_step_; step <= last; ++step) {
    const double t = tc.initial_time + step * tc.dt;
    const double a0 = bdf.alpha0_over_dt();
    const DVector hist = bdf.history_term();
    auto kernel = [&](const fem::FeCellValues &cv) {
      fem::LocalSystem ls(cv.n_shapes);
      for (int q = 0; q < cv.n_q; ++q) {
        const double w = cv.JxW[q];
        const double load = data.f(cv.points[q], t) + cv.value(hist, q);
        for (int i = 0; i < cv.n_shapes; ++i) {
          const Point &gi = cv.grad(q, i);
          const double phi_i = cv.shape(q, i);
          for (int j = 0; j < cv.n_shapes; ++j) {
            const Point &gj = cv.grad(q, j);
            double s = 0.0;
            for (int d = 0; d < dim; ++d) s += gi[d] * gj[d];
            ls(i, j) += (a0 * phi_i * cv.shape(q, j) + s) * w;
          }
          ls.rhs[i] += load * phi_i * w;
        }
      }
      return ls;
    };
    const auto bc = detail::boundary_constraints(space, [&](const Point &x) { return data.u(x, t); });
    auto sys = fem::assemble_system(space, quad, kernel, bc);

    DVector u = bdf.extrapolate();
    fem::apply_dirichlet_to_vector(bc, u);
    solver_rhs_.push_back(sys.rhs);
    solver_guess_.push_back(u);
    const auto rep = linear_(sys.matrix, sys.rhs, u);
    bdf.advance(u);
    solution_ = u;

    StepRecord r;
    r.step = step;
    r.time = t;
    r.l2_error = fem::error_norm(space, u, [&](const Point &x) { return data.u(x, t); },
                                 fem::Norm::L2, err_quad);
    r.linf_error = fem::error_norm(space, u, [&](const Point &x) { return data.u(x, t); },
                                   fem::Norm::LinfNodal, err_quad);
    r.iterations = rep.iterations;
    steps_.push_back(r);
    table.add_row(std::vector<double>{double(step), t, r.l2_error, r.linf_error,
                                      double(r.iterations)});

    if (!write) continue;
    const auto &os = output_.settings();
    if ((os.vtk_period > 0 && step % os.vtk_period == 0) || step == last)
      io::vtk_write(output_file(detail::step_file("solution", step, ".vtk")), m, ms.degree(),
                    {{"u", &space, u}}, t);
    if (os.checkpoint_period > 0 && step % os.checkpoint_period == 0) {
      io::Checkpoint cp;
      cp.time = t;
      cp.step = std::uint64_t(step);
      cp.dt = tc.dt;
      cp.bdf_order = std::uint32_t(k);
      cp.mesh = m.descriptor();
      cp.degree = std::uint32_t(ms.degree());
      for (int j = 0; j < k; ++j) cp.add("u_" + std::to_string(j), bdf.history()[j]);
      io::checkpoint_save(output_file(detail::step_file("checkpoint", step, ".fxcp")), cp);
    }
  }
  if (write) io::csv_write(output_file("norms.csv"), table);
}

}  // namespace flexfem::tutorials
