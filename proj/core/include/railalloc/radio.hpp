#pragma once

#include <Eigen/Core>
#include <vector>

#include "railalloc/geometry.hpp"

namespace railalloc {

// IEEE 802.15.3c-style directional antenna: linearly scaled Gaussian main
// lobe plus a constant side-lobe level. All members are derived from the
// half-power beamwidth:
//   theta_ml = 2.6 * theta_3db
//   G0  = 10*log10((1.6162 / sin(theta_3db/2))^2)
//   Gsl = -0.4111 * ln(theta_3db) - 10.579
struct AntennaModel {
  double theta_3db_deg = 0.0;
  double theta_ml_deg = 0.0;
  double g0_db = 0.0;
  double gsl_db = 0.0;
};

AntennaModel make_antenna(double theta_3db_deg);

// Physical-layer constants in SI units. dB / dBm conversions happen only at
// construction time; see make_radio_params.
struct RadioParams {
  double carrier_hz = 0.0;
  double k0 = 0.0;             // (lambda / 4pi)^2
  double path_loss_exp = 0.0;  // n
  double pt_watts = 0.0;       // transmit power, same for BS and relays
  double eta = 0.0;            // transceiver efficiency, in (0,1)
  double n0_w_per_hz = 0.0;    // noise power spectral density
  double beta = 0.0;           // residual self-interference fraction
  double p_b = 0.0;            // average link blockage probability
  AntennaModel antenna;
};

// k0 is fixed to exactly (lambda/4pi)^2 with lambda = c / carrier_hz.
// n0_dbm_per_mhz converts as 10^((n0 - 30)/10) / 1e6.
RadioParams make_radio_params(double carrier_hz, double path_loss_exp,
                              double pt_watts, double eta,
                              double n0_dbm_per_mhz, double beta, double p_b,
                              double theta_3db_deg);

// 60 GHz, n = 2, 1 W, eta = 0.5, -134 dBm/MHz, beta = 1e-7, P_b = 0.2,
// 30 degree beamwidth.
RadioParams default_radio_params();

// Bandwidth split across devices; index 0 is the BS, 1..Rnum the relays.
// Validates 0 <= alpha_i <= 1 and |sum - 1| <= 1e-9 on construction.
class AllocationVector {
 public:
  explicit AllocationVector(Eigen::VectorXd values);
  static AllocationVector uniform(int n);

  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  Eigen::VectorXd values_;
};

// Antenna gain in dB at off-boresight angle theta in [0, 180] degrees.
// The main-lobe branch applies for theta <= theta_ml/2; beyond that the
// side-lobe constant. The model has a documented jump at theta_ml/2.
double gain_db(double theta_deg, const AntennaModel& antenna);

// k0 * Gt * Gr * l^-n * Pt with gains given in dB. Throws on zero distance.
double received_power(const Point2D& tx, const Point2D& rx,
                      const RadioParams& params, double tx_gain_db,
                      double rx_gain_db);

// Boresight-to-boresight received power on a serving link (devices aim at
// their associated users).
double serving_rx_power(const Scenario& scenario, int device, int user,
                        const RadioParams& params);

// Residual self-interference at a device: 0 for the half-duplex BS,
// beta * Pt for a full-duplex relay.
double self_interference(const RadioParams& params, int device);

// Shannon rate eta * W * log2(1 + P / (N0*W + I)); 0 when W == 0 (the
// limit value).
double user_rate(double pr_w, double w_s_hz, double interference_w,
                 const RadioParams& params);

// Helpers shared by the scenario-level functions and precomputed problem
// views; rx powers are per associated user, in user-index order.
double device_avg_rate_from_powers(const std::vector<double>& rx_powers_w,
                                   double interference_w, double w_s_hz,
                                   const RadioParams& params);
// d/d(alpha_s) and d^2/d(alpha_s)^2 of the device's average rate for
// w_s = w_total * alpha_s.
double device_rate_slope_from_powers(const std::vector<double>& rx_powers_w,
                                     double interference_w, double alpha_s,
                                     double w_total_hz,
                                     const RadioParams& params);
double device_rate_curvature_from_powers(
    const std::vector<double>& rx_powers_w, double interference_w,
    double alpha_s, double w_total_hz, const RadioParams& params);

// TDMA average of the device's user rates. Throws UndefinedAverageError for
// a device with no users.
double device_avg_rate(const Scenario& scenario, int device,
                       const Eigen::VectorXd& alpha, double w_total_hz,
                       const RadioParams& params);

// (1 - P_b) * sum of per-device average rates. Devices without users are
// excluded from the sum (their average is undefined and they are forced to
// a zero share by the solvers).
double network_capacity(const Scenario& scenario, const Eigen::VectorXd& alpha,
                        double w_total_hz, const RadioParams& params);

// Exact analytic partials of network_capacity with respect to each share.
// Throws SingularGradientError when an interference-free device with users
// sits at a zero share (the BS term's derivative diverges there); devices
// with positive self-interference get their finite right-limit value at 0.
Eigen::VectorXd capacity_gradient(const Scenario& scenario,
                                  const Eigen::VectorXd& alpha,
                                  double w_total_hz,
                                  const RadioParams& params);

// Diagonal of the capacity Hessian (the objective is separable across
// shares). Used by barrier-type solvers.
Eigen::VectorXd capacity_hessian_diag(const Scenario& scenario,
                                      const Eigen::VectorXd& alpha,
                                      double w_total_hz,
                                      const RadioParams& params);

double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace railalloc
