#include "flexfem/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flexfem::nonlinear {

using linalg::norm2;

std::string to_string(NewtonVariant v) {
  switch (v) {
    case NewtonVariant::Exact: return "Exact";
    case NewtonVariant::FrozenJacobian: return "FrozenJacobian";
    case NewtonVariant::QuasiNewtonFD: return "QuasiNewtonFD";
    case NewtonVariant::Inexact: return "Inexact";
  }
  return "";
}

NewtonVariant newton_variant_from_string(const std::string &s) {
  for (auto v : {NewtonVariant::Exact, NewtonVariant::FrozenJacobian,
                 NewtonVariant::QuasiNewtonFD, NewtonVariant::Inexact})
    if (to_string(v) == s) return v;
  throw Error("unknown Newton variant '" + s + "'");
}

std::string to_string(AccelerationScheme s) {
  switch (s) {
    case AccelerationScheme::None: return "None";
    case AccelerationScheme::Static: return "Static";
    case AccelerationScheme::Aitken: return "Aitken";
    case AccelerationScheme::Anderson: return "Anderson";
  }
  return "";
}

AccelerationScheme acceleration_from_string(const std::string &s) {
  for (auto v : {AccelerationScheme::None, AccelerationScheme::Static,
                 AccelerationScheme::Aitken, AccelerationScheme::Anderson})
    if (to_string(v) == s) return v;
  throw Error("unknown acceleration scheme '" + s + "'");
}

// ---------------------------------------------------------------------------

double update_forcing(double res, double res_prev, const ForcingConfig &cfg) {
  if (!(res_prev > 0.0)) return cfg.eta_max;
  const double eta = cfg.gamma * std::pow(res / res_prev, cfg.alpha);
  return std::clamp(eta, cfg.eta_min, cfg.eta_max);
}

CsrMatrix fd_jacobian(const ResidualFunction &F, const DVector &x, double epsilon) {
  const std::size_t n = x.size();
  const DVector f0 = F(x);
  const std::size_t m = f0.size();
  std::vector<double> dense(m * n, 0.0);
  DVector xp = x;
  for (std::size_t j = 0; j < n; ++j) {
    const double h = epsilon > 0.0
                         ? epsilon
                         : std::sqrt(std::numeric_limits<double>::epsilon()) *
                               std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    const double step = xp[j] - x[j];  // representable step
    const DVector f1 = F(xp);
    if (f1.size() != m) throw Error("residual size changed between evaluations");
    for (std::size_t i = 0; i < m; ++i) dense[i * n + j] = (f1[i] - f0[i]) / step;
    xp[j] = x[j];
  }
  return CsrMatrix::from_dense(m, n, dense);
}

// ---------------------------------------------------------------------------

NewtonSolver::NewtonSolver(NewtonConfig config) : config_(config) {
  if (config_.max_iterations < 1) throw Error("Newton needs at least one iteration");
  if (!(config_.tolerance_residual > 0.0) || !(config_.tolerance_increment > 0.0))
    throw Error("Newton tolerances must be positive");
  if (config_.frozen_jacobian_every_n < 1 || config_.frozen_jacobian_step_period < 1)
    throw Error("Jacobian reassembly periods must be at least 1");
}

void NewtonSolver::begin_time_step() {
  if (step_count_ % config_.frozen_jacobian_step_period == 0) stale_ = true;
  ++step_count_;
}

void NewtonSolver::reset() {
  jacobian_.reset();
  stale_ = true;
  step_count_ = 0;
}

NewtonReport NewtonSolver::solve(DVector &x, const NewtonCallbacks &cb) {
  NewtonReport rep;
  const auto &cfg = config_;
  double res0 = 0.0, sol0 = 0.0;
  double eta = 0.0;

  for (int it = 0;; ++it) {
    bool want = false;
    switch (cfg.variant) {
      case NewtonVariant::Exact:
      case NewtonVariant::Inexact: want = true; break;
      case NewtonVariant::QuasiNewtonFD: want = false; break;
      case NewtonVariant::FrozenJacobian:
        want = !jacobian_ || (it == 0 && stale_) ||
               (it > 0 && it % cfg.frozen_jacobian_every_n == 0);
        break;
    }
    Assembly a = cb.assemble(x, want);
    if (a.residual.size() != x.size())
      throw Error("residual length " + std::to_string(a.residual.size()) +
                  " differs from unknown length " + std::to_string(x.size()));
    const double res = norm2(a.residual);
    rep.residual_norms.push_back(res);
    rep.solution_norms.push_back(norm2(x));
    if (it == 0) {
      res0 = res;
      sol0 = rep.solution_norms.back();
    }
    if (!std::isfinite(res)) {
      rep.reason = "residual is not finite";
      return rep;
    }
    const double tol_res = cfg.relative ? cfg.tolerance_residual * res0 : cfg.tolerance_residual;
    if (res <= tol_res) {
      rep.converged = true;
      return rep;
    }
    if (it >= cfg.max_iterations) {
      rep.reason = "maximum number of iterations reached";
      return rep;
    }

    const CsrMatrix *J = nullptr;
    CsrMatrix fd;
    if (cfg.variant == NewtonVariant::QuasiNewtonFD) {
      fd = fd_jacobian([&](const DVector &y) { return cb.assemble(y, false).residual; }, x,
                       cfg.fd_epsilon);
      ++rep.jacobian_assemblies;
      J = &fd;
    } else {
      if (want) {
        if (!a.jacobian) throw Error("assemble callback did not return the Jacobian");
        jacobian_ = std::move(a.jacobian);
        ++rep.jacobian_assemblies;
        if (cfg.variant == NewtonVariant::FrozenJacobian) stale_ = false;
      }
      J = &*jacobian_;
    }

    if (cfg.variant == NewtonVariant::Inexact)
      eta = it == 0 ? cfg.forcing.eta_max
                    : update_forcing(res, rep.residual_norms[it - 1], cfg.forcing);
    rep.forcing.push_back(eta);
    const DVector delta = cb.solve(*J, a.residual, eta);
    if (delta.size() != x.size()) throw Error("increment length differs from unknown length");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= delta[i];
    ++rep.iterations;
    const double inc = norm2(delta);
    rep.increment_norms.push_back(inc);
    const double tol_inc =
        cfg.relative ? cfg.tolerance_increment * std::max(sol0, 1e-300) : cfg.tolerance_increment;
    if (inc <= tol_inc) {
      rep.converged = true;
      rep.residual_norms.push_back(norm2(cb.assemble(x, false).residual));
      rep.solution_norms.push_back(norm2(x));
      return rep;
    }
  }
}

NewtonReport newton_solve(DVector &x, const NewtonCallbacks &callbacks,
                          const NewtonConfig &config) {
  NewtonSolver s(config);
  return s.solve(x, callbacks);
}

// ---------------------------------------------------------------------------

Accelerator::Accelerator(AccelerationConfig config) : config_(config) {
  if (!(config_.omega > 0.0 && config_.omega < 2.0))
    throw Error("relaxation factor must satisfy 0 < omega < 2");
  if (config_.anderson_depth < 1) throw Error("Anderson depth must be at least 1");
  omega_ = config_.omega;
}

void Accelerator::reset() {
  omega_ = config_.omega;
  r_prev_.clear();
  f_hist_.clear();
  g_hist_.clear();
  x_hist_.clear();
  depth_used_ = 0;
  first_ = true;
}

DVector Accelerator::step(const DVector &x, const DVector &g) {
  if (x.size() != g.size()) throw Error("fixed-point map changed the vector length");
  DVector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = g[i] - x[i];

  DVector out;
  switch (config_.scheme) {
    case AccelerationScheme::None:
      out = g;
      break;
    case AccelerationScheme::Static:
      omega_ = config_.omega;
      out = x;
      linalg::axpy(omega_, r, out);
      break;
    case AccelerationScheme::Aitken: {
      if (first_) {
        omega_ = config_.omega;
      } else {
        DVector dr(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) dr[i] = r[i] - r_prev_[i];
        const double den = linalg::dot(dr, dr);
        if (den > 0.0) omega_ = -omega_ * linalg::dot(r_prev_, dr) / den;
      }
      r_prev_ = r;
      out = x;
      linalg::axpy(omega_, r, out);
      break;
    }
    case AccelerationScheme::Anderson:
      out = anderson_step(x, g, r);
      break;
  }
  first_ = false;
  return out;
}

namespace {

// Least squares min ||f - D gamma|| by modified Gram-Schmidt QR on the columns
// of D. Returns false when D is numerically rank deficient.
bool least_squares(const std::vector<DVector> &D, const DVector &f, DVector &gamma) {
  const std::size_t m = D.size();
  std::vector<DVector> Q = D;
  std::vector<double> R(m * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double col_norm = norm2(D[j]);
    for (std::size_t i = 0; i < j; ++i) {
      R[i * m + j] = linalg::dot(Q[i], Q[j]);
      linalg::axpy(-R[i * m + j], Q[i], Q[j]);
    }
    R[j * m + j] = norm2(Q[j]);
    if (!(R[j * m + j] > 1e-12 * col_norm) || col_norm == 0.0) return false;
    for (auto &v : Q[j]) v /= R[j * m + j];
  }
  gamma.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) gamma[j] = linalg::dot(Q[j], f);
  for (std::size_t j = m; j-- > 0;) {
    for (std::size_t k = j + 1; k < m; ++k) gamma[j] -= R[j * m + k] * gamma[k];
    gamma[j] /= R[j * m + j];
  }
  return true;
}

}  // namespace

DVector Accelerator::anderson_step(const DVector &x, const DVector &g, const DVector &r) {
  const double beta = config_.omega;
  x_hist_.push_back(x);
  g_hist_.push_back(g);
  f_hist_.push_back(r);
  while (f_hist_.size() > std::size_t(config_.anderson_depth) + 1) {
    x_hist_.erase(x_hist_.begin());
    g_hist_.erase(g_hist_.begin());
    f_hist_.erase(f_hist_.begin());
  }
  const std::size_t k = f_hist_.size() - 1;
  std::vector<DVector> dF, dG, dX;
  for (std::size_t i = 0; i < k; ++i) {
    DVector a(r.size()), b(r.size()), c(r.size());
    for (std::size_t l = 0; l < r.size(); ++l) {
      a[l] = f_hist_[i + 1][l] - f_hist_[i][l];
      b[l] = g_hist_[i + 1][l] - g_hist_[i][l];
      c[l] = x_hist_[i + 1][l] - x_hist_[i][l];
    }
    dF.push_back(std::move(a));
    dG.push_back(std::move(b));
    dX.push_back(std::move(c));
  }
  DVector gamma;
  while (!dF.empty() && !least_squares(dF, r, gamma)) {
    // Drop the oldest difference and its history entry.
    dF.erase(dF.begin());
    dG.erase(dG.begin());
    dX.erase(dX.begin());
    x_hist_.erase(x_hist_.begin());
    g_hist_.erase(g_hist_.begin());
    f_hist_.erase(f_hist_.begin());
  }
  depth_used_ = static_cast<int>(dF.size());
  // x+ = (1 - beta)(x - dX gamma) + beta (g - dG gamma)
  DVector out(r.size());
  for (std::size_t l = 0; l < r.size(); ++l) {
    double xa = x[l], ga = g[l];
    for (std::size_t j = 0; j < dF.size(); ++j) {
      xa -= dX[j][l] * gamma[j];
      ga -= dG[j][l] * gamma[j];
    }
    out[l] = (1.0 - beta) * xa + beta * ga;
  }
  return out;
}

// ---------------------------------------------------------------------------

NonlinearSolverHandler::NonlinearSolverHandler(std::string subsection_path,
                                               NewtonConfig newton,
                                               AccelerationConfig acceleration)
    : path_(std::move(subsection_path)), newton_(newton), acceleration_(acceleration) {}

void NonlinearSolverHandler::declare_parameters(params::ParamTree &prm) const {
  using namespace params;
  prm.enter_subsection_path(path_);
  prm.declare_entry("Type", to_string(newton_.variant),
                    Selection{{"Exact", "FrozenJacobian", "QuasiNewtonFD", "Inexact"}},
                    "Newton variant.");
  prm.declare_entry("Maximum number of iterations", std::to_string(newton_.max_iterations),
                    Integer{1, 1 << 30});
  prm.declare_entry("Residual tolerance", format_real(newton_.tolerance_residual),
                    Real{0, 1e300});
  prm.declare_entry("Increment tolerance", format_real(newton_.tolerance_increment),
                    Real{0, 1e300});
  prm.set_verbosity(Verbosity::Full);
  prm.declare_entry("Relative tolerances", newton_.relative ? "true" : "false", Bool{},
                    "Scale tolerances by the initial residual and solution norms.");
  prm.declare_entry("Jacobian period (iterations)",
                    std::to_string(newton_.frozen_jacobian_every_n), Integer{1, 1 << 30},
                    "FrozenJacobian: reassemble every n Newton iterations.");
  prm.declare_entry("Jacobian period (time steps)",
                    std::to_string(newton_.frozen_jacobian_step_period), Integer{1, 1 << 30},
                    "FrozenJacobian: reassemble every n time steps.");
  prm.declare_entry("FD step", format_real(newton_.fd_epsilon), Real{0, 1},
                    "QuasiNewtonFD difference step; 0 selects sqrt(eps) max(1, |x_j|).");
  prm.enter_subsection("Inexact");
  prm.declare_entry("Gamma", format_real(newton_.forcing.gamma), Real{0, 1});
  prm.declare_entry("Alpha", format_real(newton_.forcing.alpha), Real{1, 2});
  prm.declare_entry("Eta max", format_real(newton_.forcing.eta_max), Real{0, 1});
  prm.declare_entry("Eta min", format_real(newton_.forcing.eta_min), Real{0, 1});
  prm.leave_subsection();
  prm.reset_verbosity();
  prm.enter_subsection("Acceleration");
  prm.declare_entry("Type", to_string(acceleration_.scheme),
                    Selection{{"None", "Static", "Aitken", "Anderson"}},
                    "Fixed-point acceleration for partitioned loops.");
  prm.declare_entry("Relaxation", format_real(acceleration_.omega), Real{0, 2},
                    "Static factor, initial Aitken factor or Anderson damping.");
  prm.declare_entry("Anderson depth", std::to_string(acceleration_.anderson_depth),
                    Integer{1, 1000});
  prm.leave_subsection();
  prm.leave_subsection_path();
}

void NonlinearSolverHandler::parse_parameters(const params::ParamTree &prm) {
  const auto base = params::split_path(path_);
  const auto get = [&](const std::string &name) { return prm.get(base, name); };
  auto sub = [&](const std::string &s, const std::string &name) {
    auto p = base;
    p.push_back(s);
    return prm.get(p, name);
  };
  newton_.variant = newton_variant_from_string(get("Type"));
  newton_.max_iterations = std::stoi(get("Maximum number of iterations"));
  newton_.tolerance_residual = std::stod(get("Residual tolerance"));
  newton_.tolerance_increment = std::stod(get("Increment tolerance"));
  newton_.relative = get("Relative tolerances") == "true";
  newton_.frozen_jacobian_every_n = std::stoi(get("Jacobian period (iterations)"));
  newton_.frozen_jacobian_step_period = std::stoi(get("Jacobian period (time steps)"));
  newton_.fd_epsilon = std::stod(get("FD step"));
  newton_.forcing.gamma = std::stod(sub("Inexact", "Gamma"));
  newton_.forcing.alpha = std::stod(sub("Inexact", "Alpha"));
  newton_.forcing.eta_max = std::stod(sub("Inexact", "Eta max"));
  newton_.forcing.eta_min = std::stod(sub("Inexact", "Eta min"));
  acceleration_.scheme = acceleration_from_string(sub("Acceleration", "Type"));
  acceleration_.omega = std::stod(sub("Acceleration", "Relaxation"));
  acceleration_.anderson_depth = std::stoi(sub("Acceleration", "Anderson depth"));
  if (!(newton_.tolerance_residual > 0.0) || !(newton_.tolerance_increment > 0.0))
    throw params::ParamError("Newton tolerances must be positive");
  const auto &f = newton_.forcing;
  if (!(f.gamma > 0.0) || !(f.eta_min > 0.0 && f.eta_min < 1.0) ||
      !(f.eta_max > 0.0 && f.eta_max < 1.0) || f.eta_min > f.eta_max)
    throw params::ParamError("inexact Newton requires 0 < gamma <= 1 and 0 < eta_min <= eta_max < 1");
  if (!(acceleration_.omega > 0.0 && acceleration_.omega < 2.0))
    throw params::ParamError("relaxation factor must satisfy 0 < omega < 2");
}

}  // namespace flexfem::nonlinear
