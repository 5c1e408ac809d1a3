#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flexfem/fem.hpp"
#include "flexfem/linalg.hpp"
#include "flexfem/nonlinear.hpp"
#include "flexfem/params.hpp"

namespace flexfem::coupling {

using fem::ComponentFunction;
using fem::Constraints;
using fem::FeSpace;
using fem::Quadrature;

// ---------------------------------------------------------------------------
// Evaluation of foreign fields at quadrature points

/// A field that can be sampled at the quadrature points of cells of a target
/// space: an analytic function, or the value, gradient or divergence of a
/// finite element function living on a space over the same mesh.
class QuadratureField {
 public:
  enum class Kind { Analytic, FemValue, FemGradient, FemDivergence };

  static QuadratureField analytic(ComponentFunction f, int n_components = 1);
  static QuadratureField fem_value(const FeSpace &space, DVector vec);
  /// Gradient of one component; dim entries per point.
  static QuadratureField fem_gradient(const FeSpace &space, DVector vec, int component = 0);
  /// Divergence of a field with dim components.
  static QuadratureField fem_divergence(const FeSpace &space, DVector vec);

  Kind kind() const { return kind_; }
  int n_components() const;

  /// Prepares values at the quadrature points of `cell` of `target`.
  void reinit(const FeSpace &target, std::size_t cell, const Quadrature &quadrature);
  int n_q() const { return n_q_; }
  double value(int q, int component = 0) const {
    return values_[std::size_t(q) * n_components() + component];
  }

 private:
  Kind kind_ = Kind::Analytic;
  ComponentFunction function_;
  int n_components_ = 1;
  int component_ = 0;
  std::shared_ptr<const FeSpace> source_;
  DVector vector_;
  std::unique_ptr<fem::FeValues> fe_;
  Quadrature cached_quadrature_;
  std::vector<double> values_;
  int n_q_ = 0;
};

// ---------------------------------------------------------------------------
// Smoothed L2 projection

struct ProjectionOptions {
  /// Weight of the gradient penalty (eps grad f_h, grad phi).
  double epsilon = 0.0;
  bool lump_mass = false;
  linalg::SolverConfig solver{linalg::SolverType::CG, 5000, 1e-12, 1e-15};
  /// Quadrature points per axis; 0 picks degree + 2.
  int quadrature_points = 0;
};

struct ProjectionResult {
  DVector coefficients;
  linalg::SolveReport report;
};

/// Solves (eps grad f_h, grad phi) + (f_h, phi) = (f, phi) for all phi in
/// the target space. Throws when the linear solver does not converge.
ProjectionResult project_l2(QuadratureField &f, const FeSpace &target,
                            const ProjectionOptions &options = {});

// ---------------------------------------------------------------------------
// Conforming interfaces

enum class Side { First, Second };

/// Pairing of coincident interface dofs of two spaces, ordered by
/// lexicographic coordinate (then component).
struct InterfaceMap {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<Point> coordinates;
  double tolerance = 0.0;

  std::size_t size() const { return pairs.size(); }
  std::size_t dof(Side side, std::size_t k) const {
    return side == Side::First ? pairs[k].first : pairs[k].second;
  }
};

/// Matches the dofs on faces `tag1` of space1 and `tag2` of space2.
/// tolerance < 0 selects 1e-10 times the larger domain diameter.
InterfaceMap build_interface_map(const FeSpace &space1, int tag1, const FeSpace &space2,
                                 int tag2, double tolerance = -1.0);

DVector extract_interface_data(const InterfaceMap &map, Side side,
                               std::span<const double> vec);
Constraints apply_interface_dirichlet(const InterfaceMap &map, Side side,
                                      std::span<const double> values);
/// Scatters interface values into a full-length zero vector of `side`.
DVector scatter_interface_data(const InterfaceMap &map, Side side,
                               std::span<const double> values, std::size_t n_dofs);

// ---------------------------------------------------------------------------
// Dirichlet-Neumann iteration

/// Interface operations of a Dirichlet-Neumann sweep. All interface vectors
/// are ordered as the InterfaceMap.
struct DnProblem {
  /// Dirichlet side: solve with the given interface trace and return the
  /// flux (discrete residual) it exerts on the interface.
  std::function<DVector(const DVector &trace)> dirichlet_solve;
  /// Neumann side: solve with the given interface flux and return its trace.
  std::function<DVector(const DVector &flux)> neumann_solve;
};

struct DnOptions {
  nonlinear::AccelerationConfig acceleration{nonlinear::AccelerationScheme::Static, 0.5, 5};
  double tolerance = 1e-10;
  int max_iterations = 200;
  /// Reported as divergence when an update exceeds this multiple of the first.
  double divergence_factor = 1e6;
};

struct DnReport {
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
  std::vector<double> update_norms;  // max norm of trace updates
  std::string reason;
};

/// Fixed-point iteration on the interface trace lambda:
///   lambda <- accelerate(lambda, neumann_solve(dirichlet_solve(lambda))).
/// Stops when the max norm of the trace update is <= tolerance.
DnReport dirichlet_neumann_iterate(const DnProblem &problem, DVector &trace,
                                   const DnOptions &options = {});

/// Poisson subdomain -lap u = f with Dirichlet data g on the listed tags.
/// Keeps the unconstrained stiffness matrix and load vector so that interface
/// fluxes can be formed as residuals.
class PoissonSubdomain {
 public:
  PoissonSubdomain(const mesh::Mesh &mesh, int degree, fem::ScalarFunction f,
                   std::vector<int> dirichlet_tags, fem::ScalarFunction g,
                   linalg::SolverConfig solver = {linalg::SolverType::CG, 10000, 1e-13, 1e-15});

  const FeSpace &space() const { return space_; }
  /// Solves with extra Dirichlet constraints and an extra load vector.
  DVector solve(const Constraints &extra = {}, std::span<const double> extra_rhs = {}) const;
  /// K u - b with the unconstrained operator.
  DVector residual(std::span<const double> u) const;

 private:
  FeSpace space_;
  Constraints boundary_;
  linalg::CsrMatrix K_;
  DVector b_;
  linalg::SolverConfig solver_;
};

/// Wires two Poisson subdomains into a DnProblem: `dirichlet` takes the trace,
/// `neumann` receives minus the Dirichlet side's interface residual.
DnProblem make_poisson_dn_problem(const PoissonSubdomain &dirichlet,
                                  const PoissonSubdomain &neumann, const InterfaceMap &map,
                                  Side dirichlet_side);

/// Parameter subsection for partitioned loops: Tolerance, Maximum number of
/// sub-iterations, subsection Acceleration (Type, Relaxation, Anderson depth).
class CouplingHandler {
 public:
  explicit CouplingHandler(std::string subsection_path = "Coupling", DnOptions defaults = {});
  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);
  const DnOptions &options() const { return options_; }
  DnOptions &options() { return options_; }

 private:
  std::string path_;
  DnOptions options_;
};

}  // namespace flexfem::coupling
