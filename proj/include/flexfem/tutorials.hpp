#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flexfem/coupling.hpp"
#include "flexfem/fem.hpp"
#include "flexfem/io.hpp"
#include "flexfem/linalg.hpp"
#include "flexfem/mesh.hpp"
#include "flexfem/nonlinear.hpp"
#include "flexfem/params.hpp"
#include "flexfem/timeint.hpp"

namespace flexfem::tutorials {

// ---------------------------------------------------------------------------
// Application lifetime

/// Process-wide run state: command line, output directory and start time.
/// Exactly one instance may be alive; construct it first in main() and let
/// it outlive every model.
class AppContext {
 public:
  explicit AppContext(params::CliOptions cli = {});
  ~AppContext();
  AppContext(const AppContext &) = delete;
  AppContext &operator=(const AppContext &) = delete;

  static bool exists();
  /// Throws when no context is alive.
  static AppContext &instance();

  const params::CliOptions &cli() const { return cli_; }
  const std::string &output_dir() const { return cli_.output_dir; }
  std::chrono::system_clock::time_point start_time() const { return start_; }

 private:
  params::CliOptions cli_;
  std::chrono::system_clock::time_point start_;
};

/// Base of every runnable model. Parameters live under the slash-separated
/// `subsection_path`; the call order is declare, parse, run.
class CoreModel {
 public:
  explicit CoreModel(std::string subsection_path);
  virtual ~CoreModel() = default;

  virtual void declare_parameters(params::ParamTree &params) const = 0;
  virtual void parse_parameters(const params::ParamTree &params) = 0;
  virtual void run() {}

  const std::string &subsection_path() const { return prm_subsection_path; }

  /// Output directory; defaults to the AppContext one (if alive at
  /// construction). Empty disables file output.
  const std::string &output_dir() const { return output_dir_; }
  void set_output_dir(std::string dir) { output_dir_ = std::move(dir); }

 protected:
  /// Path of a subsection below the model's own, e.g. sub("Time").
  std::string sub(const std::string &name) const;
  params::Path path(const std::string &name = "") const;
  /// `<output_dir>/<file>`; creates the directory on first use.
  std::string output_file(const std::string &file) const;
  bool writes_output() const { return !output_dir_.empty(); }

  std::string prm_subsection_path;

 private:
  std::string output_dir_;
};

/// Setting applied on top of declared defaults.
struct Setting {
  std::string path;  // slash separated
  std::string name;
  std::string value;
};

/// Declares the model's parameters, applies `settings` and parses.
params::ParamTree configure(CoreModel &model, const std::vector<Setting> &settings = {});

// ---------------------------------------------------------------------------
// Shared parameter groups

/// Subsection "Mesh and space discretization": Element type (Hex only),
/// Dimension, Number of subdivisions, Lower bound, Upper bound and one
/// degree entry per entry of `degree_names`.
struct MeshSettings {
  int dim = 2;
  int subdivisions = 8;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::string> degree_names{"FE space degree"};
  std::vector<int> degrees{1};

  mesh::Mesh build() const;
  int degree(std::size_t k = 0) const { return degrees.at(k); }
};

class MeshHandler {
 public:
  MeshHandler(std::string subsection_path, MeshSettings defaults);
  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);
  const MeshSettings &settings() const { return settings_; }
  MeshSettings &settings() { return settings_; }

 private:
  std::string path_;
  MeshSettings settings_;
};

/// Subsection "Output": Enable output, VTK output period, Checkpoint period
/// (periods in time steps; 0 writes only the final state / never).
struct OutputSettings {
  bool enabled = true;
  int vtk_period = 0;
  int checkpoint_period = 0;
};

class OutputHandler {
 public:
  OutputHandler(std::string subsection_path, OutputSettings defaults = {},
                bool with_checkpoints = false);
  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);
  const OutputSettings &settings() const { return settings_; }
  OutputSettings &settings() { return settings_; }

 private:
  std::string path_;
  OutputSettings settings_;
  bool checkpoints_;
};

/// Linear solver and preconditioner pair, as "Linear solver" and
/// "Preconditioner" subsections.
struct LinearSolve {
  linalg::LinearSolverHandler solver;
  linalg::PreconditionerHandler preconditioner;

  LinearSolve(const std::string &base, linalg::SolverConfig s, linalg::PreconditionerConfig p);
  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);
  /// Solves with x as initial guess; throws when the solver fails.
  linalg::SolveReport operator()(const linalg::CsrMatrix &A, std::span<const double> b,
                                 std::span<double> x, double tolerance = 0.0) const;
};

// ---------------------------------------------------------------------------
// Tutorial01: -lap u = f with Dirichlet data

enum class PoissonSolution { Sine, Linear };

struct ConvergenceCycle {
  int subdivisions = 0;
  double h = 0.0;
  std::size_t n_dofs = 0;
  double l2_error = 0.0;
  double h1_error = 0.0;
  double linf_error = 0.0;
  int iterations = 0;
};

class Poisson : public CoreModel {
 public:
  explicit Poisson(std::string subsection_path = "Poisson");

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  /// Stiffness matrix and load vector with Dirichlet data eliminated.
  static fem::AssembledSystem assemble(const fem::FeSpace &space, PoissonSolution solution,
                                       int n_threads = 1);

  const std::vector<ConvergenceCycle> &cycles() const { return cycles_; }
  const DVector &solution() const { return solution_; }

 private:
  MeshHandler mesh_;
  LinearSolve linear_;
  OutputHandler output_;
  PoissonSolution exact_ = PoissonSolution::Sine;
  int n_cycles_ = 1;
  int n_threads_ = 1;
  std::vector<ConvergenceCycle> cycles_;
  DVector solution_;
};

// ---------------------------------------------------------------------------
// Tutorial02: -lap u + u^3 = f

enum class NonlinearEllipticSolution { Constant, Sine };

class NonlinearElliptic : public CoreModel {
 public:
  explicit NonlinearElliptic(std::string subsection_path = "Nonlinear elliptic");

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  const nonlinear::NewtonReport &report() const { return report_; }
  const DVector &solution() const { return solution_; }
  double l2_error() const { return l2_error_; }

 private:
  MeshHandler mesh_;
  LinearSolve linear_;
  nonlinear::NonlinearSolverHandler newton_;
  OutputHandler output_;
  NonlinearEllipticSolution exact_ = NonlinearEllipticSolution::Constant;
  double initial_guess_ = 0.0;
  nonlinear::NewtonReport report_;
  DVector solution_;
  double l2_error_ = 0.0;
};

// ---------------------------------------------------------------------------
// Time-dependent manufactured data u = q(x) g(t)

enum class SpatialProfile { Sine, Quadratic };
enum class TimeProfile { Stationary, Exponential, Cosine };

struct StepRecord {
  int step = 0;
  double time = 0.0;
  double l2_error = 0.0;
  double linf_error = 0.0;
  int iterations = 0;
};

// ---------------------------------------------------------------------------
// Tutorial03: u_t - lap u = f, BDF(k)

class Heat : public CoreModel {
 public:
  explicit Heat(std::string subsection_path = "Heat");

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  const std::vector<StepRecord> &steps() const { return steps_; }
  const DVector &solution() const { return solution_; }
  /// Right-hand side and initial guess handed to the linear solver, one
  /// entry per step taken (index = step - first_step()).
  const std::vector<DVector> &solver_rhs() const { return solver_rhs_; }
  const std::vector<DVector> &solver_guess() const { return solver_guess_; }
  int first_step() const { return first_step_; }

 private:
  MeshHandler mesh_;
  timeint::TimeHandler time_;
  LinearSolve linear_;
  OutputHandler output_;
  SpatialProfile spatial_ = SpatialProfile::Quadratic;
  TimeProfile temporal_ = TimeProfile::Cosine;
  std::string restart_file_;
  int stop_after_ = 0;
  std::vector<StepRecord> steps_;
  std::vector<DVector> solver_rhs_, solver_guess_;
  DVector solution_;
  int first_step_ = 1;
};

// ---------------------------------------------------------------------------
// Tutorial04: u_t - lap u + u^2 = f, Newton with hand-written or AD Jacobian

enum class JacobianMode { Handwritten, AutoDiff };
enum class NonlinearParabolicSolution { Zero, Product };

class NonlinearParabolic : public CoreModel {
 public:
  explicit NonlinearParabolic(std::string subsection_path = "Nonlinear parabolic",
                              JacobianMode default_mode = JacobianMode::Handwritten);

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  /// Builds mesh, space and initial history (done by run()).
  void setup();
  /// Residual (and Jacobian) of the first time step at `u`.
  nonlinear::Assembly assemble(const DVector &u, bool jacobian, JacobianMode mode) const;

  const fem::FeSpace &space() const { return *space_; }
  const std::vector<StepRecord> &steps() const { return steps_; }
  const std::vector<nonlinear::NewtonReport> &reports() const { return reports_; }
  const DVector &solution() const { return solution_; }

 private:
  MeshHandler mesh_;
  timeint::TimeHandler time_;
  LinearSolve linear_;
  nonlinear::NonlinearSolverHandler newton_;
  OutputHandler output_;
  JacobianMode mode_;
  NonlinearParabolicSolution exact_ = NonlinearParabolicSolution::Product;

  std::unique_ptr<fem::FeSpace> space_;
  std::unique_ptr<timeint::Bdf> bdf_;
  fem::Constraints zero_bc_;
  double time_next_ = 0.0;
  std::vector<StepRecord> steps_;
  std::vector<nonlinear::NewtonReport> reports_;
  DVector solution_;
};

// ---------------------------------------------------------------------------
// Tutorials 05/06: u_t - lap u + u^2 = f, v_t - lap v + u v = g

enum class CouplingScheme { Monolithic, Partitioned };
enum class SystemSolution { Linear, Trigonometric };

struct SystemStepRecord {
  int step = 0;
  double time = 0.0;
  double u_l2_error = 0.0;
  double v_l2_error = 0.0;
  int newton_iterations = 0;
};

class ParabolicSystem : public CoreModel {
 public:
  explicit ParabolicSystem(std::string subsection_path = "Parabolic system",
                           CouplingScheme default_scheme = CouplingScheme::Partitioned);

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  const fem::FeSpace &space_u() const { return *space_u_; }
  const fem::FeSpace &space_v() const { return *space_v_; }
  const DVector &u() const { return u_; }
  const DVector &v() const { return v_; }
  const std::vector<SystemStepRecord> &steps() const { return steps_; }
  CouplingScheme scheme() const { return scheme_; }

 private:
  MeshHandler mesh_;
  LinearSolve linear_;
  nonlinear::NonlinearSolverHandler newton_;
  OutputHandler output_;
  CouplingScheme default_scheme_, scheme_;
  SystemSolution exact_ = SystemSolution::Linear;
  int order_u_ = 1, order_v_ = 3;
  double t0_ = 0.0, t_final_ = 1.0, dt_ = 0.1;
  int n_threads_ = 1;

  std::unique_ptr<fem::FeSpace> space_u_, space_v_;
  DVector u_, v_;
  std::vector<SystemStepRecord> steps_;
};

// ---------------------------------------------------------------------------
// Tutorial07: Cahn-Hilliard in mixed form

enum class InitialCondition { Random, Uniform };

struct CahnHilliardStep {
  int step = 0;
  double time = 0.0;
  double dt = 0.0;
  double mass = 0.0;
  double mass_drift = 0.0;  // relative change of the integral of c this step
  double change = 0.0;      // max |c^{n+1} - c^n|
  double energy = 0.0;
  int newton_iterations = 0;
  int halvings = 0;
};

class CahnHilliard : public CoreModel {
 public:
  explicit CahnHilliard(std::string subsection_path = "Cahn-Hilliard");

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  const fem::FeSpace &space() const { return *space_; }
  /// Interleaved (c, mu) nodal values.
  const DVector &solution() const { return solution_; }
  const DVector &initial_state() const { return initial_; }
  const std::vector<CahnHilliardStep> &steps() const { return steps_; }
  bool reached_steady_state() const { return steady_; }
  const std::vector<io::Isosurface> &contours() const { return contours_; }
  const std::vector<double> &contour_levels() const { return levels_; }

 private:
  MeshHandler mesh_;
  LinearSolve linear_;
  nonlinear::NonlinearSolverHandler newton_;
  OutputHandler output_;
  double theta_ = 100.0, lambda_ = 0.01;
  InitialCondition initial_condition_ = InitialCondition::Random;
  double mean_ = 0.5, amplitude_ = 0.01;
  std::uint32_t seed_ = 42;
  double dt0_ = 5e-6, dt_max_ = 1.0, growth_ = 2.0, final_time_ = 1e3;
  int max_halvings_ = 5, max_steps_ = 5000, easy_iterations_ = 4;
  double steady_tolerance_ = 1e-8;
  std::vector<double> levels_{0.35, 0.5, 0.65};

  std::unique_ptr<fem::FeSpace> space_;
  DVector solution_, initial_;
  std::vector<CahnHilliardStep> steps_;
  bool steady_ = false;
  std::vector<io::Isosurface> contours_;
};

// ---------------------------------------------------------------------------
// Two-domain Poisson by Dirichlet-Neumann iteration

class Transmission : public CoreModel {
 public:
  explicit Transmission(std::string subsection_path = "Transmission");

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  const coupling::DnReport &report() const { return report_; }
  /// Nodal max difference to the single-domain solution.
  double monodomain_error() const { return mono_error_; }
  const DVector &trace() const { return trace_; }

 private:
  coupling::CouplingHandler coupling_;
  OutputHandler output_;
  double length_ = 2.0, interface_ = 1.5;
  int n_per_unit_ = 8, degree_ = 1;
  coupling::DnReport report_;
  double mono_error_ = 0.0;
  DVector trace_;
};

// ---------------------------------------------------------------------------
// Mesh statistics

class MeshInfoApp : public CoreModel {
 public:
  explicit MeshInfoApp(std::string subsection_path = "Mesh info");

  void declare_parameters(params::ParamTree &params) const override;
  void parse_parameters(const params::ParamTree &params) override;
  void run() override;

  const mesh::MeshInfo &info() const { return info_; }
  /// Human-readable summary produced by run().
  const std::string &summary() const { return summary_; }

 private:
  MeshHandler mesh_;
  mesh::MeshInfo info_;
  std::string summary_;
};

// ---------------------------------------------------------------------------
// Command line

/// Registered application names: tutorial01 ... tutorial07, tutorial04_ad,
/// transmission, mesh-info.
std::vector<std::string> app_names();
/// Throws Error for unknown names.
std::unique_ptr<CoreModel> make_app(const std::string &name);

/// flexfem <app> [-g [minimal|full]] [-f file] [-o dir]. Returns the exit
/// code; errors go to `err`.
int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace flexfem::tutorials
