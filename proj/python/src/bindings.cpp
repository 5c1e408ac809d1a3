#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "flexfem/tutorials.hpp"

namespace py = pybind11;
using namespace flexfem;

namespace {

params::Verbosity to_verbosity(const std::string &s) {
  if (s == "minimal") return params::Verbosity::Minimal;
  if (s == "standard") return params::Verbosity::Standard;
  if (s == "full") return params::Verbosity::Full;
  throw py::value_error("verbosity must be minimal, standard or full");
}

params::Format to_format(const std::string &s) {
  if (s == "prm") return params::Format::Prm;
  if (s == "json") return params::Format::Json;
  throw py::value_error("format must be prm or json");
}

template <class E>
E pick(const std::string &s, std::initializer_list<std::pair<const char *, E>> options) {
  for (const auto &[name, value] : options)
    if (s == name) return value;
  throw py::value_error("unknown option: " + s);
}

py::dict report_dict(const linalg::SolveReport &r) {
  py::dict d;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["final_residual"] = r.final_residual;
  d["target_residual"] = r.target_residual;
  d["history"] = r.history;
  d["reason"] = r.reason;
  return d;
}

py::dict newton_dict(const nonlinear::NewtonReport &r) {
  py::dict d;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["residual_norms"] = r.residual_norms;
  d["reason"] = r.reason;
  return d;
}

py::list step_list(const std::vector<tutorials::StepRecord> &steps) {
  py::list out;
  for (const auto &s : steps) {
    py::dict d;
    d["step"] = s.step;
    d["time"] = s.time;
    d["l2_error"] = s.l2_error;
    d["linf_error"] = s.linf_error;
    d["iterations"] = s.iterations;
    out.append(d);
  }
  return out;
}

using SettingTuple = std::tuple<std::string, std::string, std::string>;

/// Summary of a finished application run; the keys depend on the app.
py::dict summarize(tutorials::CoreModel &app) {
  using namespace tutorials;
  py::dict d;
  if (auto *p = dynamic_cast<Poisson *>(&app)) {
    py::list cycles;
    for (const auto &c : p->cycles()) {
      py::dict e;
      e["subdivisions"] = c.subdivisions;
      e["h"] = c.h;
      e["n_dofs"] = c.n_dofs;
      e["l2_error"] = c.l2_error;
      e["h1_error"] = c.h1_error;
      e["linf_error"] = c.linf_error;
      e["iterations"] = c.iterations;
      cycles.append(e);
    }
    d["cycles"] = cycles;
    d["solution"] = p->solution();
  } else if (auto *p = dynamic_cast<NonlinearElliptic *>(&app)) {
    d["newton"] = newton_dict(p->report());
    d["l2_error"] = p->l2_error();
    d["solution"] = p->solution();
  } else if (auto *p = dynamic_cast<Heat *>(&app)) {
    d["steps"] = step_list(p->steps());
    d["solution"] = p->solution();
  } else if (auto *p = dynamic_cast<NonlinearParabolic *>(&app)) {
    d["steps"] = step_list(p->steps());
    d["solution"] = p->solution();
  } else if (auto *p = dynamic_cast<ParabolicSystem *>(&app)) {
    py::list steps;
    for (const auto &s : p->steps()) {
      py::dict e;
      e["step"] = s.step;
      e["time"] = s.time;
      e["u_l2_error"] = s.u_l2_error;
      e["v_l2_error"] = s.v_l2_error;
      e["newton_iterations"] = s.newton_iterations;
      steps.append(e);
    }
    d["steps"] = steps;
    d["u"] = p->u();
    d["v"] = p->v();
  } else if (auto *p = dynamic_cast<CahnHilliard *>(&app)) {
    py::list steps;
    for (const auto &s : p->steps()) {
      py::dict e;
      e["step"] = s.step;
      e["time"] = s.time;
      e["dt"] = s.dt;
      e["mass"] = s.mass;
      e["mass_drift"] = s.mass_drift;
      e["change"] = s.change;
      e["energy"] = s.energy;
      e["newton_iterations"] = s.newton_iterations;
      e["halvings"] = s.halvings;
      steps.append(e);
    }
    d["steps"] = steps;
    d["steady"] = p->reached_steady_state();
    d["solution"] = p->solution();
  } else if (auto *p = dynamic_cast<Transmission *>(&app)) {
    d["converged"] = p->report().converged;
    d["iterations"] = p->report().iterations;
    d["update_norms"] = p->report().update_norms;
    d["monodomain_error"] = p->monodomain_error();
    d["trace"] = p->trace();
  } else if (auto *p = dynamic_cast<MeshInfoApp *>(&app)) {
    d["summary"] = p->summary();
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite element building blocks and tutorial solvers.";

  py::register_exception<Error>(m, "FlexfemError", PyExc_RuntimeError);

  m.def("app_names", &tutorials::app_names, "Names accepted by run_app and the CLI.");

  m.def(
      "default_parameters",
      [](const std::string &app, const std::string &format, const std::string &verbosity) {
        auto model = tutorials::make_app(app);
        params::ParamTree tree;
        model->declare_parameters(tree);
        return tree.emit(to_format(format), to_verbosity(verbosity));
      },
      py::arg("app"), py::arg("format") = "prm", py::arg("verbosity") = "standard",
      "Parameter file text with the declared defaults.");

  m.def(
      "run_app",
      [](const std::string &app, const std::vector<SettingTuple> &settings,
         const std::string &parameter_text, const std::string &format,
         const std::string &output_dir) {
        auto model = tutorials::make_app(app);
        model->set_output_dir(output_dir);
        params::ParamTree tree;
        model->declare_parameters(tree);
        if (!parameter_text.empty()) tree.apply(params::parse(parameter_text, to_format(format)));
        for (const auto &[path, name, value] : settings)
          tree.set(params::split_path(path), name, value);
        model->parse_parameters(tree);
        {
          py::gil_scoped_release release;
          model->run();
        }
        return summarize(*model);
      },
      py::arg("app"), py::arg("settings") = std::vector<SettingTuple>{},
      py::arg("parameters") = "", py::arg("format") = "prm", py::arg("output_dir") = "",
      "Runs an application. `settings` holds (path, name, value) triples applied after "
      "`parameters`; an empty output_dir disables file output.");

  m.def(
      "cli",
      [](const std::vector<std::string> &args) {
        std::ostringstream out, err;
        const int code = tutorials::cli_main(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line front end; returns (code, stdout, stderr).");

  m.def(
      "solve",
      [](const std::vector<std::vector<double>> &a, const std::vector<double> &b,
         const std::string &method, const std::string &preconditioner, double tolerance,
         int max_iterations, int restart) {
        const std::size_t n = b.size();
        std::vector<double> dense;
        dense.reserve(n * n);
        for (const auto &row : a) {
          if (row.size() != n) throw py::value_error("matrix must be square and match b");
          dense.insert(dense.end(), row.begin(), row.end());
        }
        if (a.size() != n) throw py::value_error("matrix must be square and match b");
        const auto A = linalg::CsrMatrix::from_dense(n, n, dense);
        linalg::SolverConfig cfg;
        cfg.type = pick<linalg::SolverType>(method, {{"CG", linalg::SolverType::CG},
                                                     {"GMRES", linalg::SolverType::GMRES},
                                                     {"BiCGStab", linalg::SolverType::BiCGStab}});
        cfg.tolerance = tolerance;
        cfg.max_iterations = max_iterations;
        cfg.gmres_restart = restart;
        linalg::PreconditionerConfig pc;
        pc.type = pick<linalg::PreconditionerType>(
            preconditioner, {{"Identity", linalg::PreconditionerType::Identity},
                             {"Jacobi", linalg::PreconditionerType::Jacobi},
                             {"SSOR", linalg::PreconditionerType::SSOR},
                             {"ILU0", linalg::PreconditionerType::ILU0}});
        auto [x, report] = linalg::solve(A, b, cfg, pc);
        return py::make_tuple(x, report_dict(report));
      },
      py::arg("a"), py::arg("b"), py::arg("method") = "GMRES", py::arg("preconditioner") = "ILU0",
      py::arg("tolerance") = 1e-10, py::arg("max_iterations") = 1000, py::arg("restart") = 30,
      "Solves a dense system (list of rows) with a Krylov method; returns (x, report).");

  m.def("bdf_alpha", &timeint::bdf_alpha, py::arg("order"));
  m.def("bdf_beta", &timeint::bdf_beta, py::arg("order"));

  m.def(
      "bdf_integrate",
      [](int order, double dt, double lam, double y0, int n_steps) {
        // y' = lam y with exact starting values.
        std::vector<DVector> history;
        for (int j = 0; j < order; ++j) history.push_back({y0 * std::exp(-lam * j * dt)});
        timeint::Bdf bdf(order, dt, history);
        std::vector<double> out{y0};
        for (int s = 0; s < n_steps; ++s) {
          const double y = bdf.history_term()[0] / (bdf.alpha0_over_dt() - lam);
          bdf.advance({y});
          out.push_back(y);
        }
        return out;
      },
      py::arg("order"), py::arg("dt"), py::arg("lam"), py::arg("y0"), py::arg("n_steps"),
      "BDF solution of y' = lam y, one value per step including y0.");

  m.def(
      "project_l2",
      [](int dim, int subdivisions, int degree, py::function f, double epsilon, bool lump_mass) {
        const auto mesh = mesh::generate_box(dim, {0, 0, 0}, {1, 1, 1},
                                             {subdivisions, subdivisions, dim == 3 ? subdivisions : 1});
        const fem::FeSpace space(mesh, degree);
        auto field = coupling::QuadratureField::analytic([&](const Point &x, int) {
          return f(x[0], x[1], x[2]).cast<double>();
        });
        coupling::ProjectionOptions opt;
        opt.epsilon = epsilon;
        opt.lump_mass = lump_mass;
        auto res = coupling::project_l2(field, space, opt);
        return py::make_tuple(res.coefficients, report_dict(res.report));
      },
      py::arg("dim"), py::arg("subdivisions"), py::arg("degree"), py::arg("f"),
      py::arg("epsilon") = 0.0, py::arg("lump_mass") = false,
      "Projects f(x, y, z) onto a continuous Q_degree space on the unit box.");
}
