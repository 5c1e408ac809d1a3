#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flexfem/common.hpp"
#include "flexfem/dual.hpp"
#include "flexfem/linalg.hpp"
#include "flexfem/params.hpp"

namespace flexfem::nonlinear {

using linalg::CsrMatrix;

// ---------------------------------------------------------------------------
// Newton family

enum class NewtonVariant { Exact, FrozenJacobian, QuasiNewtonFD, Inexact };

std::string to_string(NewtonVariant v);
NewtonVariant newton_variant_from_string(const std::string &s);

/// Eisenstat-Walker forcing parameters (choice 2).
struct ForcingConfig {
  double gamma = 0.9;
  double alpha = 2.0;
  double eta_max = 0.9;
  double eta_min = 1e-6;
};

struct NewtonConfig {
  NewtonVariant variant = NewtonVariant::Exact;
  int max_iterations = 50;
  double tolerance_residual = 1e-10;
  double tolerance_increment = 1e-12;
  /// Tolerances scale with the initial residual / solution norm.
  bool relative = false;
  /// FrozenJacobian: reassemble within a solve when iteration % n == 0.
  int frozen_jacobian_every_n = 1 << 30;
  /// FrozenJacobian: reassemble at the start of every n-th time step.
  int frozen_jacobian_step_period = 1;
  /// QuasiNewtonFD step; 0 selects sqrt(eps) * max(1, |x_j|) per column.
  double fd_epsilon = 0.0;
  ForcingConfig forcing;
};

struct Assembly {
  DVector residual;
  std::optional<CsrMatrix> jacobian;
};

/// The two user-supplied pieces of a Newton solve. `solve` returns the
/// increment delta with J delta = r (to relative accuracy `forcing` for
/// inexact Newton); the update is x <- x - delta.
struct NewtonCallbacks {
  std::function<Assembly(const DVector &x, bool want_jacobian)> assemble;
  std::function<DVector(const CsrMatrix &J, const DVector &r, double forcing)> solve;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  int jacobian_assemblies = 0;
  std::vector<double> residual_norms;   // at x_0, x_1, ...
  std::vector<double> increment_norms;  // ||delta_k||
  std::vector<double> solution_norms;   // ||x_k||
  std::vector<double> forcing;          // forcing passed to each solve
  std::string reason;
};

/// Keeps the Jacobian across solves so FrozenJacobian can reuse it between
/// time steps.
class NewtonSolver {
 public:
  explicit NewtonSolver(NewtonConfig config = {});

  const NewtonConfig &config() const { return config_; }
  NewtonConfig &config() { return config_; }

  /// Marks the start of a time step (FrozenJacobian step period).
  void begin_time_step();
  /// Drops the stored Jacobian.
  void reset();

  NewtonReport solve(DVector &x, const NewtonCallbacks &callbacks);

 private:
  NewtonConfig config_;
  std::optional<CsrMatrix> jacobian_;
  long step_count_ = 0;
  bool stale_ = true;
};

NewtonReport newton_solve(DVector &x, const NewtonCallbacks &callbacks,
                          const NewtonConfig &config = {});

/// eta = clamp(gamma (res / res_prev)^alpha, eta_min, eta_max); eta_max when
/// there is no previous residual (res_prev <= 0).
double update_forcing(double res, double res_prev, const ForcingConfig &cfg);

using ResidualFunction = std::function<DVector(const DVector &)>;

/// Forward-difference Jacobian, stored densely in CSR form.
CsrMatrix fd_jacobian(const ResidualFunction &F, const DVector &x, double epsilon = 0.0);

// ---------------------------------------------------------------------------
// Fixed-point acceleration

enum class AccelerationScheme { None, Static, Aitken, Anderson };

std::string to_string(AccelerationScheme s);
AccelerationScheme acceleration_from_string(const std::string &s);

struct AccelerationConfig {
  AccelerationScheme scheme = AccelerationScheme::None;
  /// Static relaxation factor, initial Aitken factor, Anderson damping.
  double omega = 1.0;
  int anderson_depth = 5;
};

/// Produces x_{k+1} from x_k and g(x_k).
class Accelerator {
 public:
  explicit Accelerator(AccelerationConfig config = {});

  DVector step(const DVector &x, const DVector &g);
  void reset();

  const AccelerationConfig &config() const { return config_; }
  /// Relaxation used by the last Static/Aitken step.
  double last_omega() const { return omega_; }
  /// Anderson columns used by the last step.
  int last_depth() const { return depth_used_; }

 private:
  DVector anderson_step(const DVector &x, const DVector &g, const DVector &r);

  AccelerationConfig config_;
  double omega_ = 1.0;
  DVector r_prev_;
  // Anderson history (oldest first).
  std::vector<DVector> f_hist_, g_hist_, x_hist_;
  int depth_used_ = 0;
  bool first_ = true;
};

// ---------------------------------------------------------------------------
// Parameter file

/// Subsection layout (default path "Non-linear solver"):
///   Type, Maximum number of iterations, Residual tolerance,
///   Increment tolerance, Relative tolerances, Jacobian period (iterations),
///   Jacobian period (time steps), FD step;
///   subsection Inexact: Gamma, Alpha, Eta max, Eta min;
///   subsection Acceleration: Type, Relaxation, Anderson depth.
class NonlinearSolverHandler {
 public:
  explicit NonlinearSolverHandler(std::string subsection_path = "Non-linear solver",
                                  NewtonConfig newton = {},
                                  AccelerationConfig acceleration = {});

  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);

  const NewtonConfig &newton() const { return newton_; }
  NewtonConfig &newton() { return newton_; }
  const AccelerationConfig &acceleration() const { return acceleration_; }
  AccelerationConfig &acceleration() { return acceleration_; }

 private:
  std::string path_;
  NewtonConfig newton_;
  AccelerationConfig acceleration_;
};

}  // namespace flexfem::nonlinear
