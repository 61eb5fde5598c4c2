#ifndef STRINGSTAB_SIM_HPP
#define STRINGSTAB_SIM_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stringstab/chain.hpp"
#include "stringstab/tf_core.hpp"

namespace stringstab {

/// Absolute positions and velocities of vehicles 0..N.
struct PlatoonState {
  std::vector<double> x;
  std::vector<double> v;

  static PlatoonState at_rest(const ChainSize& n);
};

enum class Waveform { ImpulseApprox, RectangularPulse, SineBurst, Chirp };

std::string to_string(Waveform w);
/// Throws InvalidArgumentError for unknown names.
Waveform waveform_from_string(const std::string& name);

/// Acceleration disturbance d_k(t) on one vehicle, nonzero on [start, start + duration).
///  - RectangularPulse: amplitude
///  - ImpulseApprox: one step wide with area amplitude (duration is ignored)
///  - SineBurst: amplitude * sin^2(pi tau / duration) * sin(omega tau)
///  - Chirp: amplitude * sin(omega tau + (omega_end - omega) tau^2 / (2 duration))
/// with tau = t - start.
struct DisturbanceSpec {
  std::size_t vehicle = 0;
  Waveform waveform = Waveform::RectangularPulse;
  double amplitude = 1.0;
  double start = 1.0;
  double duration = 1.0;
  double omega = 1.0;      // rad/s, SineBurst and Chirp
  double omega_end = 1.0;  // rad/s, Chirp

  /// Default leader pulse: 1 m/s^2 for 1 s starting at t = 1 s.
  static DisturbanceSpec leader_pulse() { return DisturbanceSpec{}; }

  void validate(const ChainSize& n) const;
  double end_time(double dt) const;

  /// Side of a discontinuity to evaluate at. RK4 stages at the start of a
  /// step use the right limit, the final stage uses the left limit.
  enum class Limit { FromRight, FromLeft };
  double value(double t, double dt, Limit side = Limit::FromRight) const;

  friend bool operator==(const DisturbanceSpec&, const DisturbanceSpec&) = default;
};

/// dt * sqrt(max(a1, a2) + max(b1, b2)^2) must not exceed this.
inline constexpr double kStepGuard = 0.1;

double step_guard_value(const ControllerGains& g, double dt);
/// Largest power of two satisfying the step guard.
double default_step(const ControllerGains& g);
/// Last disturbance end plus the time the slowest error mode needs to decay
/// by 1e-4, capped at 1e4 s.
double default_horizon(const ControllerGains& g, const ChainSize& n, const std::vector<DisturbanceSpec>& d,
                       double dt);

struct SimConfig {
  ChainSize n{1};
  ControllerGains gains = ControllerGains::from_coefficients(1.0, 1.0, 10.0, 100.0);
  double dt = 0.0;
  double t_end = 0.0;
  std::vector<DisturbanceSpec> disturbances;
  std::optional<PlatoonState> initial;  // at rest when empty
  bool record = true;                   // keep the e_k(t) samples
  std::size_t record_every = 1;

  /// dt and t_end filled from default_step / default_horizon.
  static SimConfig with_defaults(const ControllerGains& g, const ChainSize& n,
                                 std::vector<DisturbanceSpec> disturbances);

  /// Throws InvalidArgumentError naming the violated invariant.
  void validate() const;
};

struct SimResult {
  std::vector<double> t;            // recorded sample times
  Eigen::MatrixXd e;                // N x t.size(), row k-1 holds e_k
  Eigen::VectorXd per_vehicle_l2;   // L2 norm of each e_k over the whole run
  double total_norm = 0.0;          // (L2, l2) norm of e
  double d_norm = 0.0;              // (L2, l2) norm of the applied d
  std::vector<std::string> warnings;
};

/// State matrix over (x_0..x_N, v_0..v_N) of the closed loop.
Eigen::MatrixXd assemble_closed_loop(const ControllerGains& g, const ChainSize& n);

/// State matrix over (e_1..e_N, de_1..de_N): [[0, I], [-K, -D]] with
/// s^2 I + s D + K = S(s).
Eigen::MatrixXd error_dynamics_matrix(const ControllerGains& g, const ChainSize& n);

/// Largest real part among the 2N eigenvalues of the error dynamics.
/// Throws InvalidArgumentError for N > 2000 and NumericalError if the
/// eigenvalue iteration does not converge.
double spectral_abscissa(const ControllerGains& g, const ChainSize& n);

/// Classical RK4 in error coordinates with trapezoidal norms.
/// Throws DivergenceError at the first non-finite state.
SimResult integrate(const SimConfig& cfg);

/// sqrt(sum over rows of the trapezoidal integral of the squared row).
double l2l2_norm(const Eigen::MatrixXd& samples, double dt);

struct SweepRow {
  std::size_t n;
  double total_norm;
};

/// (L2, l2) norm of the error for each chain length, rows in ascending N.
/// The disturbance must act on vehicle 0. By default every row uses the
/// default step and the longest default horizon among the requested lengths.
std::vector<SweepRow> sweep_N(const ControllerGains& g, const DisturbanceSpec& d, std::vector<std::size_t> n_list,
                              std::optional<double> dt = std::nullopt, std::optional<double> t_end = std::nullopt);

}  // namespace stringstab

#endif  // STRINGSTAB_SIM_HPP
