#include "railalloc/problem.hpp"

#include <stdexcept>

namespace railalloc {

BandwidthProblem BandwidthProblem::build(const Scenario& scenario,
                                         double w_total_hz,
                                         const RadioParams& params) {
  if (!(w_total_hz > 0.0)) {
    throw std::invalid_argument(
        "BandwidthProblem: total bandwidth must be positive");
  }
  BandwidthProblem bp;
  bp.w_total_hz_ = w_total_hz;
  bp.params_ = params;
  const auto by_device = scenario.users_by_device();
  bp.devices_.resize(scenario.device_count());
  for (int s = 0; s < scenario.device_count(); ++s) {
    DeviceLink& link = bp.devices_[s];
    link.interference_w = self_interference(params, s);
    link.rx_power_w.reserve(by_device[s].size());
    for (int user : by_device[s]) {
      link.rx_power_w.push_back(serving_rx_power(scenario, s, user, params));
    }
    if (!link.rx_power_w.empty()) bp.active_.push_back(s);
  }
  if (bp.active_.empty()) {
    throw std::invalid_argument("BandwidthProblem: no device has users");
  }
  return bp;
}

double BandwidthProblem::capacity_bps(const Eigen::VectorXd& alpha_full) const {
  double sum = 0.0;
  for (int s : active_) {
    sum += device_avg_rate_from_powers(devices_[s].rx_power_w,
                                       devices_[s].interference_w,
                                       w_total_hz_ * alpha_full[s], params_);
  }
  return (1.0 - params_.p_b) * sum;
}

Eigen::VectorXd BandwidthProblem::gradient_bps(
    const Eigen::VectorXd& alpha_full) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(device_count());
  for (int s : active_) {
    grad[s] = (1.0 - params_.p_b) *
              device_rate_slope_from_powers(devices_[s].rx_power_w,
                                            devices_[s].interference_w,
                                            alpha_full[s], w_total_hz_,
                                            params_);
  }
  return grad;
}

Eigen::VectorXd BandwidthProblem::hessian_diag_bps(
    const Eigen::VectorXd& alpha_full) const {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(device_count());
  for (int s : active_) {
    diag[s] = (1.0 - params_.p_b) *
              device_rate_curvature_from_powers(devices_[s].rx_power_w,
                                                devices_[s].interference_w,
                                                alpha_full[s], w_total_hz_,
                                                params_);
  }
  return diag;
}

Eigen::VectorXd BandwidthProblem::reduce(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(active_.size()));
  for (std::size_t i = 0; i < active_.size(); ++i) out[i] = full[active_[i]];
  return out;
}

Eigen::VectorXd BandwidthProblem::expand(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(device_count());
  for (std::size_t i = 0; i < active_.size(); ++i) out[active_[i]] = reduced[i];
  return out;
}

}  // namespace railalloc
