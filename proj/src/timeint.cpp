#include "flexfem/timeint.hpp"

#include <cmath>
#include <string>

namespace flexfem::timeint {

namespace {

void check_order(int order) {
  if (order < 1 || order > 3)
    throw Error("BDF order must be 1, 2 or 3 (got " + std::to_string(order) + ")");
}

}  // namespace

std::vector<double> bdf_alpha(int order) {
  check_order(order);
  switch (order) {
    case 1: return {1.0, -1.0};
    case 2: return {1.5, -2.0, 0.5};
    default: return {11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0};
  }
}

std::vector<double> bdf_beta(int order) {
  check_order(order);
  switch (order) {
    case 1: return {1.0};
    case 2: return {2.0, -1.0};
    default: return {3.0, -3.0, 1.0};
  }
}

Bdf::Bdf(int order, double dt, std::vector<DVector> history)
    : order_(order), dt_(dt), alpha_(bdf_alpha(order)), beta_(bdf_beta(order)),
      history_(std::move(history)) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  if (history_.size() != std::size_t(order))
    throw Error("BDF" + std::to_string(order) + " needs " + std::to_string(order) +
                " initial solutions, got " + std::to_string(history_.size()));
  for (const auto &h : history_)
    if (h.size() != history_[0].size())
      throw Error("BDF history vectors differ in length");
}

DVector Bdf::history_term() const {
  DVector out(history_[0].size(), 0.0);
  for (int j = 1; j <= order_; ++j) {
    const double c = -alpha_[j] / dt_;
    const auto &h = history_[j - 1];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * h[i];
  }
  return out;
}

DVector Bdf::extrapolate() const {
  DVector out(history_[0].size(), 0.0);
  for (int j = 0; j < order_; ++j)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += beta_[j] * history_[j][i];
  return out;
}

void Bdf::advance(const DVector &u_new) {
  if (u_new.size() != history_[0].size())
    throw Error("BDF advance: vector length changed");
  for (std::size_t j = history_.size() - 1; j > 0; --j) history_[j] = std::move(history_[j - 1]);
  history_[0] = u_new;
}

int TimeConfig::n_steps() const {
  return static_cast<int>(std::lround((final_time - initial_time) / dt));
}

TimeHandler::TimeHandler(std::string subsection_path, TimeConfig defaults)
    : path_(std::move(subsection_path)), config_(defaults) {}

void TimeHandler::declare_parameters(params::ParamTree &params) const {
  using namespace params;
  params.enter_subsection_path(path_);
  params.declare_entry("BDF order", std::to_string(config_.bdf_order), Integer{1, 3},
                       "Order of the backward differentiation formula.");
  params.declare_entry("Initial time", format_real(config_.initial_time),
                       Real{-1e300, 1e300});
  params.declare_entry("Final time", format_real(config_.final_time),
                       Real{-1e300, 1e300});
  params.declare_entry("Time step", format_real(config_.dt), Real{0, 1e300});
  params.leave_subsection_path();
}

void TimeHandler::parse_parameters(const params::ParamTree &params) {
  const auto base = params::split_path(path_);
  config_.bdf_order = std::stoi(params.get(base, "BDF order"));
  config_.initial_time = std::stod(params.get(base, "Initial time"));
  config_.final_time = std::stod(params.get(base, "Final time"));
  config_.dt = std::stod(params.get(base, "Time step"));
  if (!(config_.dt > 0.0)) throw params::ParamError("time step must be positive");
  if (config_.final_time < config_.initial_time)
    throw params::ParamError("final time precedes initial time");
}

}  // namespace flexfem::timeint
