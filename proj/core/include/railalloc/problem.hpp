#pragma once

#include <Eigen/Core>
#include <vector>

#include "railalloc/geometry.hpp"
#include "railalloc/radio.hpp"

namespace railalloc {

// One device's serving links: received power per associated user plus the
// residual self-interference seen at the device.
struct DeviceLink {
  std::vector<double> rx_power_w;
  double interference_w = 0.0;
};

// Precomputed view of a bandwidth-allocation instance. Capacity values and
// derivatives agree bit-for-bit with the scenario-level functions in
// radio.hpp because both run over identical per-user power lists.
class BandwidthProblem {
 public:
  static BandwidthProblem build(const Scenario& scenario, double w_total_hz,
                                const RadioParams& params);

  int device_count() const { return static_cast<int>(devices_.size()); }
  // Devices with at least one associated user, ascending.
  const std::vector<int>& active_devices() const { return active_; }
  const DeviceLink& device(int s) const { return devices_[s]; }
  double w_total_hz() const { return w_total_hz_; }
  const RadioParams& params() const { return params_; }

  double capacity_bps(const Eigen::VectorXd& alpha_full) const;
  Eigen::VectorXd gradient_bps(const Eigen::VectorXd& alpha_full) const;
  Eigen::VectorXd hessian_diag_bps(const Eigen::VectorXd& alpha_full) const;

  // Maps between full-length share vectors and vectors over active devices.
  Eigen::VectorXd reduce(const Eigen::VectorXd& full) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;

 private:
  double w_total_hz_ = 0.0;
  RadioParams params_;
  std::vector<DeviceLink> devices_;
  std::vector<int> active_;
};

}  // namespace railalloc
