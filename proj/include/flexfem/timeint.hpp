#pragma once

#include <span>
#include <vector>

#include "flexfem/common.hpp"
#include "flexfem/params.hpp"

namespace flexfem::timeint {

/// BDF coefficients of order k: alpha has k + 1 entries (alpha[0] multiplies
/// u^{n+1}), beta has k extrapolation weights for u^n, u^{n-1}, ...
std::vector<double> bdf_alpha(int order);
std::vector<double> bdf_beta(int order);

/// Constant-step BDF state of one field.
class Bdf {
 public:
  Bdf() = default;
  /// `history` lists the k most recent solutions, newest first.
  Bdf(int order, double dt, std::vector<DVector> history);

  int order() const { return order_; }
  double dt() const { return dt_; }
  const std::vector<double> &alpha() const { return alpha_; }
  const std::vector<double> &beta() const { return beta_; }
  const std::vector<DVector> &history() const { return history_; }

  /// alpha_0 / dt.
  double alpha0_over_dt() const { return alpha_[0] / dt_; }
  /// -(1/dt) sum_{j>=1} alpha_j u^{n+1-j}, so that
  /// du/dt(t^{n+1}) ~ alpha0_over_dt() * u^{n+1} - history_term().
  DVector history_term() const;
  /// sum_j beta_j u^{n+1-j}.
  DVector extrapolate() const;
  /// Shifts the history and stores `u_new` as the newest entry.
  void advance(const DVector &u_new);

 private:
  int order_ = 1;
  double dt_ = 1.0;
  std::vector<double> alpha_, beta_;
  std::vector<DVector> history_;
};

/// Time-loop settings shared by the tutorials: subsection "Time" with
/// "BDF order", "Initial time", "Final time" and "Time step".
struct TimeConfig {
  int bdf_order = 1;
  double initial_time = 0.0;
  double final_time = 1.0;
  double dt = 0.1;

  /// Number of steps to reach final_time (rounded to the nearest integer).
  int n_steps() const;
};

class TimeHandler {
 public:
  explicit TimeHandler(std::string subsection_path = "Time", TimeConfig defaults = {});
  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);
  const TimeConfig &config() const { return config_; }
  TimeConfig &config() { return config_; }

 private:
  std::string path_;
  TimeConfig config_;
};

}  // namespace flexfem::timeint
