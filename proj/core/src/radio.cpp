#include "railalloc/radio.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "railalloc/errors.hpp"

namespace railalloc {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kLn2 = std::numbers::ln2;

std::vector<double> serving_powers(const Scenario& scenario, int device,
                                   const std::vector<int>& device_users,
                                   const RadioParams& params) {
  std::vector<double> powers;
  powers.reserve(device_users.size());
  for (int user : device_users) {
    powers.push_back(serving_rx_power(scenario, device, user, params));
  }
  return powers;
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

AntennaModel make_antenna(double theta_3db_deg) {
  if (!(theta_3db_deg > 0.0 && theta_3db_deg <= 180.0)) {
    throw std::invalid_argument(
        "make_antenna: half-power beamwidth must lie in (0, 180] degrees");
  }
  AntennaModel antenna;
  antenna.theta_3db_deg = theta_3db_deg;
  antenna.theta_ml_deg = 2.6 * theta_3db_deg;
  const double half_rad = theta_3db_deg / 2.0 * std::numbers::pi / 180.0;
  const double ratio = 1.6162 / std::sin(half_rad);
  antenna.g0_db = 10.0 * std::log10(ratio * ratio);
  antenna.gsl_db = -0.4111 * std::log(theta_3db_deg) - 10.579;
  return antenna;
}

RadioParams make_radio_params(double carrier_hz, double path_loss_exp,
                              double pt_watts, double eta,
                              double n0_dbm_per_mhz, double beta, double p_b,
                              double theta_3db_deg) {
  if (!(carrier_hz > 0.0)) {
    throw std::invalid_argument("make_radio_params: carrier must be positive");
  }
  if (!(path_loss_exp > 0.0)) {
    throw std::invalid_argument(
        "make_radio_params: path loss exponent must be positive");
  }
  if (!(pt_watts >= 0.0)) {
    throw std::invalid_argument(
        "make_radio_params: transmit power must be non-negative");
  }
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("make_radio_params: eta must lie in (0, 1)");
  }
  if (!(beta >= 0.0)) {
    throw std::invalid_argument("make_radio_params: beta must be >= 0");
  }
  if (!(p_b >= 0.0 && p_b < 1.0)) {
    throw std::invalid_argument("make_radio_params: p_b must lie in [0, 1)");
  }
  RadioParams params;
  params.carrier_hz = carrier_hz;
  const double lambda = kSpeedOfLight / carrier_hz;
  const double ratio = lambda / (4.0 * std::numbers::pi);
  params.k0 = ratio * ratio;
  params.path_loss_exp = path_loss_exp;
  params.pt_watts = pt_watts;
  params.eta = eta;
  params.n0_w_per_hz = std::pow(10.0, (n0_dbm_per_mhz - 30.0) / 10.0) / 1e6;
  params.beta = beta;
  params.p_b = p_b;
  params.antenna = make_antenna(theta_3db_deg);
  return params;
}

RadioParams default_radio_params() {
  return make_radio_params(60e9, 2.0, 1.0, 0.5, -134.0, 1e-7, 0.2, 30.0);
}

AllocationVector::AllocationVector(Eigen::VectorXd values)
    : values_(std::move(values)) {
  if (values_.size() < 1) {
    throw std::invalid_argument("AllocationVector: empty share vector");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(
          "AllocationVector: shares must lie in [0, 1]");
    }
  }
  if (std::abs(values_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "AllocationVector: shares must sum to 1 within 1e-9");
  }
}

AllocationVector AllocationVector::uniform(int n) {
  if (n < 1) throw std::invalid_argument("AllocationVector: n must be >= 1");
  return AllocationVector(Eigen::VectorXd::Constant(n, 1.0 / n));
}

double gain_db(double theta_deg, const AntennaModel& antenna) {
  if (!(theta_deg >= 0.0 && theta_deg <= 180.0)) {
    throw std::invalid_argument("gain_db: theta outside [0, 180] degrees");
  }
  if (theta_deg <= antenna.theta_ml_deg / 2.0) {
    const double u = 2.0 * theta_deg / antenna.theta_3db_deg;
    return antenna.g0_db - 3.01 * u * u;
  }
  return antenna.gsl_db;
}

double received_power(const Point2D& tx, const Point2D& rx,
                      const RadioParams& params, double tx_gain_db,
                      double rx_gain_db) {
  if (!std::isfinite(tx_gain_db) || !std::isfinite(rx_gain_db)) {
    throw std::invalid_argument("received_power: gains must be finite");
  }
  const double l = distance(tx, rx);
  if (!(l > 0.0)) {
    throw std::invalid_argument(
        "received_power: transmitter and receiver coincide");
  }
  return params.k0 * db_to_linear(tx_gain_db) * db_to_linear(rx_gain_db) *
         std::pow(l, -params.path_loss_exp) * params.pt_watts;
}

double serving_rx_power(const Scenario& scenario, int device, int user,
                        const RadioParams& params) {
  return received_power(scenario.device_position(device), scenario.users[user],
                        params, params.antenna.g0_db, params.antenna.g0_db);
}

double self_interference(const RadioParams& params, int device) {
  return device == 0 ? 0.0 : params.beta * params.pt_watts;
}

double user_rate(double pr_w, double w_s_hz, double interference_w,
                 const RadioParams& params) {
  if (w_s_hz == 0.0) return 0.0;
  return params.eta * w_s_hz *
         std::log2(1.0 + pr_w / (params.n0_w_per_hz * w_s_hz + interference_w));
}

double device_avg_rate_from_powers(const std::vector<double>& rx_powers_w,
                                   double interference_w, double w_s_hz,
                                   const RadioParams& params) {
  if (rx_powers_w.empty()) {
    throw UndefinedAverageError(
        "device average rate undefined for a device with no users");
  }
  double sum = 0.0;
  for (double p : rx_powers_w) {
    sum += user_rate(p, w_s_hz, interference_w, params);
  }
  return sum / static_cast<double>(rx_powers_w.size());
}

// With w = W*alpha and D = N0*w + I the per-user rate is
// eta*w*log2(1 + P/D); differentiating in alpha gives
//   eta*W*[log2(1 + P/D) - w*N0*P / (ln2 * D * (D+P))].
// At w -> 0 with I > 0 this tends to eta*W*log2(1 + P/I); with I = 0 it
// diverges, which callers surface as SingularGradientError.
double device_rate_slope_from_powers(const std::vector<double>& rx_powers_w,
                                     double interference_w, double alpha_s,
                                     double w_total_hz,
                                     const RadioParams& params) {
  if (rx_powers_w.empty()) {
    throw UndefinedAverageError(
        "device rate slope undefined for a device with no users");
  }
  const double w = w_total_hz * alpha_s;
  double sum = 0.0;
  if (w == 0.0) {
    if (interference_w <= 0.0) {
      throw SingularGradientError(
          "capacity derivative diverges at a zero share of an "
          "interference-free device");
    }
    for (double p : rx_powers_w) sum += std::log2(1.0 + p / interference_w);
  } else {
    for (double p : rx_powers_w) {
      const double d = params.n0_w_per_hz * w + interference_w;
      const double t = d + p;
      sum += std::log2(t / d) - w * params.n0_w_per_hz * p / (kLn2 * d * t);
    }
  }
  return params.eta * w_total_hz * sum /
         static_cast<double>(rx_powers_w.size());
}

// Second derivative in alpha of the average rate:
//   eta*W^2/ln2 * mean( 2*N0*(1/T - 1/D) + w*N0^2*(1/D^2 - 1/T^2) )
// with D = N0*w + I, T = D + P; strictly negative for P > 0.
double device_rate_curvature_from_powers(
    const std::vector<double>& rx_powers_w, double interference_w,
    double alpha_s, double w_total_hz, const RadioParams& params) {
  if (rx_powers_w.empty()) {
    throw UndefinedAverageError(
        "device rate curvature undefined for a device with no users");
  }
  const double w = w_total_hz * alpha_s;
  const double n0 = params.n0_w_per_hz;
  double sum = 0.0;
  for (double p : rx_powers_w) {
    const double d = n0 * w + interference_w;
    if (d <= 0.0) {
      throw SingularGradientError(
          "capacity curvature diverges at a zero share of an "
          "interference-free device");
    }
    const double t = d + p;
    sum += 2.0 * n0 * (1.0 / t - 1.0 / d) +
           w * n0 * n0 * (1.0 / (d * d) - 1.0 / (t * t));
  }
  return params.eta * w_total_hz * w_total_hz / kLn2 * sum /
         static_cast<double>(rx_powers_w.size());
}

double device_avg_rate(const Scenario& scenario, int device,
                       const Eigen::VectorXd& alpha, double w_total_hz,
                       const RadioParams& params) {
  const auto by_device = scenario.users_by_device();
  const std::vector<double> powers =
      serving_powers(scenario, device, by_device.at(device), params);
  return device_avg_rate_from_powers(powers, self_interference(params, device),
                                     w_total_hz * alpha[device], params);
}

double network_capacity(const Scenario& scenario, const Eigen::VectorXd& alpha,
                        double w_total_hz, const RadioParams& params) {
  const auto by_device = scenario.users_by_device();
  double sum = 0.0;
  for (int s = 0; s < scenario.device_count(); ++s) {
    if (by_device[s].empty()) continue;  // undefined average, zero share
    const std::vector<double> powers =
        serving_powers(scenario, s, by_device[s], params);
    sum += device_avg_rate_from_powers(
        powers, self_interference(params, s), w_total_hz * alpha[s], params);
  }
  return (1.0 - params.p_b) * sum;
}

Eigen::VectorXd capacity_gradient(const Scenario& scenario,
                                  const Eigen::VectorXd& alpha,
                                  double w_total_hz,
                                  const RadioParams& params) {
  const auto by_device = scenario.users_by_device();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(scenario.device_count());
  for (int s = 0; s < scenario.device_count(); ++s) {
    if (by_device[s].empty()) continue;
    const std::vector<double> powers =
        serving_powers(scenario, s, by_device[s], params);
    grad[s] = (1.0 - params.p_b) *
              device_rate_slope_from_powers(powers,
                                            self_interference(params, s),
                                            alpha[s], w_total_hz, params);
  }
  return grad;
}

Eigen::VectorXd capacity_hessian_diag(const Scenario& scenario,
                                      const Eigen::VectorXd& alpha,
                                      double w_total_hz,
                                      const RadioParams& params) {
  const auto by_device = scenario.users_by_device();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(scenario.device_count());
  for (int s = 0; s < scenario.device_count(); ++s) {
    if (by_device[s].empty()) continue;
    const std::vector<double> powers =
        serving_powers(scenario, s, by_device[s], params);
    diag[s] = (1.0 - params.p_b) *
              device_rate_curvature_from_powers(powers,
                                                self_interference(params, s),
                                                alpha[s], w_total_hz, params);
  }
  return diag;
}

}  // namespace railalloc
