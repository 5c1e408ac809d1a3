#include "flexfem/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flexfem::coupling {

using linalg::CsrMatrix;

// ---------------------------------------------------------------------------
// QuadratureField

QuadratureField QuadratureField::analytic(ComponentFunction f, int n_components) {
  if (n_components < 1) throw Error("a field needs at least one component");
  QuadratureField out;
  out.kind_ = Kind::Analytic;
  out.function_ = std::move(f);
  out.n_components_ = n_components;
  return out;
}

QuadratureField QuadratureField::fem_value(const FeSpace &space, DVector vec) {
  if (vec.size() != space.n_dofs()) throw Error("field vector does not match its space");
  QuadratureField out;
  out.kind_ = Kind::FemValue;
  out.source_ = std::make_shared<FeSpace>(space);
  out.vector_ = std::move(vec);
  out.n_components_ = space.n_components();
  return out;
}

QuadratureField QuadratureField::fem_gradient(const FeSpace &space, DVector vec, int component) {
  if (vec.size() != space.n_dofs()) throw Error("field vector does not match its space");
  if (component < 0 || component >= space.n_components())
    throw Error("gradient component out of range");
  QuadratureField out;
  out.kind_ = Kind::FemGradient;
  out.source_ = std::make_shared<FeSpace>(space);
  out.vector_ = std::move(vec);
  out.component_ = component;
  out.n_components_ = space.dim();
  return out;
}

QuadratureField QuadratureField::fem_divergence(const FeSpace &space, DVector vec) {
  if (vec.size() != space.n_dofs()) throw Error("field vector does not match its space");
  if (space.n_components() != space.dim())
    throw Error("divergence needs a field with one component per dimension");
  QuadratureField out;
  out.kind_ = Kind::FemDivergence;
  out.source_ = std::make_shared<FeSpace>(space);
  out.vector_ = std::move(vec);
  out.n_components_ = 1;
  return out;
}

int QuadratureField::n_components() const { return n_components_; }

namespace {

bool same_quadrature(const Quadrature &a, const Quadrature &b) {
  return a.dim == b.dim && a.points == b.points && a.weights == b.weights;
}

}  // namespace

void QuadratureField::reinit(const FeSpace &target, std::size_t cell,
                             const Quadrature &quadrature) {
  const auto &mesh = target.mesh();
  n_q_ = static_cast<int>(quadrature.size());
  values_.assign(std::size_t(n_q_) * n_components_, 0.0);

  if (kind_ == Kind::Analytic) {
    const Point o = mesh.cell_origin(cell);
    const Point &h = mesh.cell_size();
    for (int q = 0; q < n_q_; ++q) {
      Point p{};
      for (int d = 0; d < mesh.dim(); ++d) p[d] = o[d] + h[d] * quadrature.points[q][d];
      for (int c = 0; c < n_components_; ++c)
        values_[std::size_t(q) * n_components_ + c] = function_(p, c);
    }
    return;
  }

  if (!(source_->mesh().descriptor() == mesh.descriptor()))
    throw Error("quadrature evaluation requires the source and target spaces to share a mesh");
  if (!fe_ || !same_quadrature(cached_quadrature_, quadrature)) {
    fe_ = std::make_unique<fem::FeValues>(*source_, quadrature);
    cached_quadrature_ = quadrature;
  }
  const auto &v = fe_->reinit(cell);
  for (int q = 0; q < n_q_; ++q) {
    double *out = &values_[std::size_t(q) * n_components_];
    switch (kind_) {
      case Kind::FemValue:
        for (int c = 0; c < n_components_; ++c) out[c] = v.value(vector_, q, c);
        break;
      case Kind::FemGradient: {
        const Point g = v.gradient(vector_, q, component_);
        for (int d = 0; d < n_components_; ++d) out[d] = g[d];
        break;
      }
      case Kind::FemDivergence: {
        double div = 0.0;
        for (int d = 0; d < mesh.dim(); ++d) div += v.gradient(vector_, q, d)[d];
        out[0] = div;
        break;
      }
      case Kind::Analytic: break;
    }
  }
}

// ---------------------------------------------------------------------------
// Projection

ProjectionResult project_l2(QuadratureField &f, const FeSpace &target,
                            const ProjectionOptions &options) {
  if (!(options.epsilon >= 0.0)) throw Error("projection penalty must be non-negative");
  if (f.n_components() != target.n_components())
    throw Error("projected field has " + std::to_string(f.n_components()) +
                " components, target space has " + std::to_string(target.n_components()));
  const int nq = options.quadrature_points > 0 ? options.quadrature_points
                                               : std::min(target.degree() + 2, 5);
  const auto quad = fem::gauss_quadrature(target.dim(), nq);
  const int nc = target.n_components();
  const double eps = options.epsilon;
  const bool lump = options.lump_mass;

  auto sys = fem::assemble_system(target, quad, [&](const fem::FeCellValues &v) {
    fem::LocalSystem L(v.n_dofs());
    f.reinit(target, v.cell, quad);
    for (int q = 0; q < v.n_q; ++q) {
      const double w = v.JxW[q];
      for (int i = 0; i < v.n_shapes; ++i) {
        for (int c = 0; c < nc; ++c) L.rhs[v.local_dof(i, c)] += f.value(q, c) * v.shape(q, i) * w;
        for (int j = 0; j < v.n_shapes; ++j) {
          const double m = v.shape(q, i) * v.shape(q, j) * w;
          double k = 0.0;
          if (eps > 0.0)
            for (int d = 0; d < 3; ++d) k += v.grad(q, i)[d] * v.grad(q, j)[d];
          for (int c = 0; c < nc; ++c) {
            const int a = v.local_dof(i, c), b = v.local_dof(j, c);
            if (lump)
              L(a, a) += m;
            else
              L(a, b) += m;
            L(a, b) += eps * k * w;
          }
        }
      }
    }
    return L;
  });

  ProjectionResult out;
  out.coefficients.assign(target.n_dofs(), 0.0);
  const auto pre = linalg::build_preconditioner(sys.matrix, {linalg::PreconditionerType::Jacobi});
  out.report = linalg::solve(sys.matrix, sys.rhs, out.coefficients, options.solver, *pre);
  if (!out.report.converged)
    throw Error("L2 projection: linear solver did not converge (" + out.report.reason + ")");
  return out;
}

// ---------------------------------------------------------------------------
// Interfaces

namespace {

struct TaggedDof {
  Point x;
  int component;
  std::size_t dof;
};

std::vector<TaggedDof> interface_dofs(const FeSpace &space, int tag) {
  if (!space.mesh().has_tag(tag)) throw Error("unknown boundary tag " + std::to_string(tag));
  std::vector<TaggedDof> out;
  const int nc = space.n_components();
  for (auto node : space.boundary_nodes(tag))
    for (int c = 0; c < nc; ++c) out.push_back({space.node_point(node), c, node * nc + c});
  std::sort(out.begin(), out.end(), [](const TaggedDof &a, const TaggedDof &b) {
    if (a.x != b.x) return a.x < b.x;
    return a.component < b.component;
  });
  return out;
}

std::string format_point(const Point &p, int dim) {
  std::ostringstream s;
  s << "(";
  for (int d = 0; d < dim; ++d) s << (d ? ", " : "") << p[d];
  s << ")";
  return s.str();
}

double diameter(const mesh::Mesh &m) { return distance(m.lower(), m.upper()); }

}  // namespace

InterfaceMap build_interface_map(const FeSpace &space1, int tag1, const FeSpace &space2,
                                 int tag2, double tolerance) {
  if (space1.dim() != space2.dim()) throw Error("interface spaces differ in dimension");
  if (space1.degree() != space2.degree())
    throw Error("conforming interfaces need equal finite element degrees");
  if (space1.n_components() != space2.n_components())
    throw Error("interface spaces differ in component count");
  if (tolerance < 0.0)
    tolerance = 1e-10 * std::max(diameter(space1.mesh()), diameter(space2.mesh()));

  const auto a = interface_dofs(space1, tag1);
  const auto b = interface_dofs(space2, tag2);
  const int dim = space1.dim();

  InterfaceMap map;
  map.tolerance = tolerance;
  std::vector<bool> used(b.size(), false);
  std::vector<std::string> unmatched;
  for (const auto &da : a) {
    // Candidates are near in sort order, but tolerance-level perturbations can
    // reorder them, so scan for the nearest unused dof of the same component.
    std::size_t best = b.size();
    double best_d = tolerance;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (used[k] || b[k].component != da.component) continue;
      const double d = distance(da.x, b[k].x);
      if (d <= best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best == b.size()) {
      unmatched.push_back(format_point(da.x, dim) + " on side 1");
      continue;
    }
    used[best] = true;
    map.pairs.emplace_back(da.dof, b[best].dof);
    map.coordinates.push_back(da.x);
  }
  for (std::size_t k = 0; k < b.size(); ++k)
    if (!used[k]) unmatched.push_back(format_point(b[k].x, dim) + " on side 2");
  if (!unmatched.empty()) {
    std::string msg = "interface dofs without a partner within " + std::to_string(tolerance) + ":";
    const std::size_t shown = std::min<std::size_t>(unmatched.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) msg += " " + unmatched[i];
    if (unmatched.size() > shown)
      msg += " ... (" + std::to_string(unmatched.size()) + " in total)";
    throw Error(msg);
  }
  return map;
}

DVector extract_interface_data(const InterfaceMap &map, Side side,
                               std::span<const double> vec) {
  DVector out(map.size());
  for (std::size_t k = 0; k < map.size(); ++k) out[k] = vec[map.dof(side, k)];
  return out;
}

Constraints apply_interface_dirichlet(const InterfaceMap &map, Side side,
                                      std::span<const double> values) {
  if (values.size() != map.size()) throw Error("interface data has the wrong length");
  Constraints c;
  for (std::size_t k = 0; k < map.size(); ++k) c.add(map.dof(side, k), values[k]);
  return c;
}

DVector scatter_interface_data(const InterfaceMap &map, Side side,
                               std::span<const double> values, std::size_t n_dofs) {
  if (values.size() != map.size()) throw Error("interface data has the wrong length");
  DVector out(n_dofs, 0.0);
  for (std::size_t k = 0; k < map.size(); ++k) out[map.dof(side, k)] = values[k];
  return out;
}

// ---------------------------------------------------------------------------
// Dirichlet-Neumann

DnReport dirichlet_neumann_iterate(const DnProblem &problem, DVector &trace,
                                   const DnOptions &options) {
  DnReport rep;
  nonlinear::Accelerator acc(options.acceleration);
  for (int it = 0; it < options.max_iterations; ++it) {
    const DVector flux = problem.dirichlet_solve(trace);
    const DVector g = problem.neumann_solve(flux);
    if (g.size() != trace.size()) throw Error("Neumann solve returned a trace of wrong length");
    DVector next = acc.step(trace, g);
    double upd = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i)
      upd = std::max(upd, std::abs(next[i] - trace[i]));
    trace = std::move(next);
    rep.iterations = it + 1;
    rep.update_norms.push_back(upd);
    if (!std::isfinite(upd) ||
        (rep.update_norms.front() > 0.0 &&
         upd > options.divergence_factor * rep.update_norms.front())) {
      rep.diverged = true;
      rep.reason = "interface iteration diverged after " + std::to_string(rep.iterations) +
                   " sweeps (update norm " + std::to_string(upd) + ")";
      return rep;
    }
    if (upd <= options.tolerance) {
      rep.converged = true;
      return rep;
    }
  }
  // Growing updates at the end count as divergence, otherwise stagnation.
  const auto &u = rep.update_norms;
  if (u.size() >= 2 && u.back() > u.front()) rep.diverged = true;
  rep.reason = std::string(rep.diverged ? "interface iteration diverged"
                                        : "interface iteration did not converge") +
               " within " + std::to_string(options.max_iterations) + " sweeps";
  return rep;
}

PoissonSubdomain::PoissonSubdomain(const mesh::Mesh &mesh, int degree, fem::ScalarFunction f,
                                   std::vector<int> dirichlet_tags, fem::ScalarFunction g,
                                   linalg::SolverConfig solver)
    : space_(mesh, degree), solver_(solver) {
  for (int t : dirichlet_tags) boundary_.merge(fem::dirichlet_constraints(space_, t, g));
  const auto quad = fem::gauss_quadrature(space_.dim(), degree + 2);
  auto sys = fem::assemble_system(space_, quad, [&](const fem::FeCellValues &v) {
    fem::LocalSystem L(v.n_dofs());
    for (int q = 0; q < v.n_q; ++q) {
      const double fq = f(v.points[q]);
      for (int i = 0; i < v.n_shapes; ++i) {
        for (int j = 0; j < v.n_shapes; ++j) {
          double k = 0.0;
          for (int d = 0; d < 3; ++d) k += v.grad(q, i)[d] * v.grad(q, j)[d];
          L(i, j) += k * v.JxW[q];
        }
        L.rhs[i] += fq * v.shape(q, i) * v.JxW[q];
      }
    }
    return L;
  });
  K_ = std::move(sys.matrix);
  b_ = std::move(sys.rhs);
}

DVector PoissonSubdomain::solve(const Constraints &extra, std::span<const double> extra_rhs) const {
  CsrMatrix A = K_;
  DVector b = b_;
  if (!extra_rhs.empty()) {
    if (extra_rhs.size() != b.size()) throw Error("extra load vector has the wrong length");
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += extra_rhs[i];
  }
  Constraints all = extra;
  all.merge(boundary_);
  fem::apply_constraints(A, b, all);
  DVector x(b.size(), 0.0);
  fem::apply_dirichlet_to_vector(all, x);
  const auto pre = linalg::build_preconditioner(A, {linalg::PreconditionerType::SSOR, 1.2});
  const auto rep = linalg::solve(A, b, x, solver_, *pre);
  if (!rep.converged) throw Error("subdomain solve did not converge: " + rep.reason);
  return x;
}

DVector PoissonSubdomain::residual(std::span<const double> u) const {
  DVector r = linalg::spmv(K_, u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b_[i];
  return r;
}

DnProblem make_poisson_dn_problem(const PoissonSubdomain &dirichlet,
                                  const PoissonSubdomain &neumann, const InterfaceMap &map,
                                  Side dirichlet_side) {
  const Side neumann_side = dirichlet_side == Side::First ? Side::Second : Side::First;
  DnProblem p;
  p.dirichlet_solve = [&dirichlet, &map, dirichlet_side](const DVector &trace) {
    const DVector u = dirichlet.solve(apply_interface_dirichlet(map, dirichlet_side, trace));
    return extract_interface_data(map, dirichlet_side, dirichlet.residual(u));
  };
  p.neumann_solve = [&neumann, &map, neumann_side](const DVector &flux) {
    DVector minus(flux.size());
    for (std::size_t i = 0; i < flux.size(); ++i) minus[i] = -flux[i];
    const DVector load = scatter_interface_data(map, neumann_side, minus, neumann.space().n_dofs());
    const DVector u = neumann.solve({}, load);
    return extract_interface_data(map, neumann_side, u);
  };
  return p;
}

// ---------------------------------------------------------------------------

CouplingHandler::CouplingHandler(std::string subsection_path, DnOptions defaults)
    : path_(std::move(subsection_path)), options_(defaults) {}

void CouplingHandler::declare_parameters(params::ParamTree &prm) const {
  using namespace params;
  prm.enter_subsection_path(path_);
  prm.declare_entry("Tolerance", format_real(options_.tolerance), Real{0, 1e300},
                    "Stop when the max norm of the interface update falls below this.");
  prm.declare_entry("Maximum number of sub-iterations", std::to_string(options_.max_iterations),
                    Integer{1, 1 << 30});
  prm.enter_subsection("Acceleration");
  prm.declare_entry("Type", nonlinear::to_string(options_.acceleration.scheme),
                    Selection{{"None", "Static", "Aitken", "Anderson"}});
  prm.declare_entry("Relaxation", format_real(options_.acceleration.omega), Real{0, 2},
                    "Static factor, initial Aitken factor or Anderson damping.");
  prm.declare_entry("Anderson depth", std::to_string(options_.acceleration.anderson_depth),
                    Integer{1, 1000});
  prm.leave_subsection();
  prm.leave_subsection_path();
}

void CouplingHandler::parse_parameters(const params::ParamTree &prm) {
  auto base = params::split_path(path_);
  options_.tolerance = std::stod(prm.get(base, "Tolerance"));
  options_.max_iterations = std::stoi(prm.get(base, "Maximum number of sub-iterations"));
  base.push_back("Acceleration");
  options_.acceleration.scheme = nonlinear::acceleration_from_string(prm.get(base, "Type"));
  options_.acceleration.omega = std::stod(prm.get(base, "Relaxation"));
  options_.acceleration.anderson_depth = std::stoi(prm.get(base, "Anderson depth"));
  if (!(options_.tolerance > 0.0)) throw params::ParamError("coupling tolerance must be positive");
  if (!(options_.acceleration.omega > 0.0 && options_.acceleration.omega < 2.0))
    throw params::ParamError("relaxation factor must satisfy 0 < omega < 2");
}

}  // namespace flexfem::coupling
