#include "stringstab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "stringstab/errors.hpp"

namespace stringstab {

namespace {

constexpr double kHorizonDecay = 1e-4;
constexpr double kMaxHorizon = 1e4;
constexpr std::size_t kMaxEigenChain = 2000;

// Tolerance for treating a stage time as sitting exactly on a waveform edge.
constexpr double kEdgeSnap = 1e-9;

}  // namespace

PlatoonState PlatoonState::at_rest(const ChainSize& n) {
  return PlatoonState{std::vector<double>(n.followers() + 1, 0.0), std::vector<double>(n.followers() + 1, 0.0)};
}

std::string to_string(Waveform w) {
  switch (w) {
    case Waveform::ImpulseApprox: return "impulse";
    case Waveform::RectangularPulse: return "pulse";
    case Waveform::SineBurst: return "sine-burst";
    case Waveform::Chirp: return "chirp";
  }
  return "pulse";
}

Waveform waveform_from_string(const std::string& name) {
  if (name == "impulse") return Waveform::ImpulseApprox;
  if (name == "pulse") return Waveform::RectangularPulse;
  if (name == "sine-burst") return Waveform::SineBurst;
  if (name == "chirp") return Waveform::Chirp;
  throw InvalidArgumentError("unknown waveform '" + name + "' (expected impulse, pulse, sine-burst or chirp)");
}

void DisturbanceSpec::validate(const ChainSize& n) const {
  if (vehicle > n.followers()) {
    throw InvalidArgumentError("disturbance vehicle index " + std::to_string(vehicle) + " outside 0.." +
                               std::to_string(n.followers()));
  }
  if (!std::isfinite(amplitude)) throw InvalidArgumentError("disturbance amplitude must be finite");
  if (!std::isfinite(start) || start < 0.0) throw InvalidArgumentError("disturbance start must be >= 0");
  if (waveform != Waveform::ImpulseApprox && !(std::isfinite(duration) && duration > 0.0)) {
    throw InvalidArgumentError("disturbance duration must be > 0");
  }
  if (!std::isfinite(omega) || !std::isfinite(omega_end)) {
    throw InvalidArgumentError("disturbance frequencies must be finite");
  }
}

double DisturbanceSpec::end_time(double dt) const {
  return start + (waveform == Waveform::ImpulseApprox ? dt : duration);
}

double DisturbanceSpec::value(double t, double dt, Limit side) const {
  const double width = waveform == Waveform::ImpulseApprox ? dt : duration;
  const double end = start + width;
  const double snap = kEdgeSnap * dt;
  auto same = [snap](double a, double b) { return std::abs(a - b) <= snap; };

  bool active;
  if (side == Limit::FromRight) {
    active = (t > start || same(t, start)) && t < end && !same(t, end);
  } else {
    active = t > start && !same(t, start) && (t < end || same(t, end));
  }
  if (!active) return 0.0;

  const double tau = std::clamp(t - start, 0.0, width);
  switch (waveform) {
    case Waveform::RectangularPulse: return amplitude;
    case Waveform::ImpulseApprox: return amplitude / dt;
    case Waveform::SineBurst: {
      const double taper = std::sin(std::numbers::pi * tau / width);
      return amplitude * taper * taper * std::sin(omega * tau);
    }
    case Waveform::Chirp:
      return amplitude * std::sin(omega * tau + 0.5 * (omega_end - omega) * tau * tau / width);
  }
  return 0.0;
}

double step_guard_value(const ControllerGains& g, double dt) {
  const double b = std::max(g.b1(), g.b2());
  return dt * std::sqrt(std::max(g.a1(), g.a2()) + b * b);
}

double default_step(const ControllerGains& g) {
  const double limit = kStepGuard / step_guard_value(g, 1.0);
  return std::exp2(std::floor(std::log2(limit)));
}

double default_horizon(const ControllerGains& g, const ChainSize& n, const std::vector<DisturbanceSpec>& d,
                       double dt) {
  double last = 0.0;
  for (const auto& spec : d) last = std::max(last, spec.end_time(dt));
  const double sigma = spectral_abscissa(g, n);
  if (!(sigma < 0.0)) return kMaxHorizon;
  return std::min(kMaxHorizon, last - std::log(kHorizonDecay) / -sigma);
}

SimConfig SimConfig::with_defaults(const ControllerGains& g, const ChainSize& n,
                                   std::vector<DisturbanceSpec> disturbances) {
  SimConfig cfg;
  cfg.n = n;
  cfg.gains = g;
  cfg.dt = default_step(g);
  cfg.disturbances = std::move(disturbances);
  cfg.t_end = default_horizon(g, n, cfg.disturbances, cfg.dt);
  return cfg;
}

void SimConfig::validate() const {
  if (!(std::isfinite(dt) && dt > 0.0)) throw InvalidArgumentError("dt must be > 0");
  if (!(std::isfinite(t_end) && t_end >= 10.0 * dt)) throw InvalidArgumentError("t_end must be >= 10 * dt");
  const double guard = step_guard_value(gains, dt);
  if (guard > kStepGuard) {
    std::ostringstream msg;
    msg << "dt violates the step-size guard: dt * sqrt(max(a1,a2) + max(b1,b2)^2) = " << guard << " > "
        << kStepGuard << " (use dt <= " << default_step(gains) << ")";
    throw InvalidArgumentError(msg.str());
  }
  if (record_every == 0) throw InvalidArgumentError("record_every must be >= 1");
  for (const auto& d : disturbances) d.validate(n);
  if (initial) {
    const std::size_t len = n.followers() + 1;
    if (initial->x.size() != len || initial->v.size() != len) {
      throw InvalidArgumentError("initial state must hold N+1 positions and velocities");
    }
  }
}

Eigen::MatrixXd assemble_closed_loop(const ControllerGains& g, const ChainSize& n) {
  const Eigen::Index v = n.index() + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * v, 2 * v);
  A.topRightCorner(v, v).setIdentity();
  auto couple = [&A, v](Eigen::Index k, Eigen::Index other, double stiffness, double damping) {
    A(v + k, other) += stiffness;
    A(v + k, k) -= stiffness;
    A(v + k, v + other) += damping;
    A(v + k, v + k) -= damping;
  };
  for (Eigen::Index k = 0; k < v; ++k) {
    if (k + 1 < v) couple(k, k + 1, g.a2(), g.b2());
    if (k > 0) couple(k, k - 1, g.a1(), g.b1());
  }
  return A;
}

Eigen::MatrixXd error_dynamics_matrix(const ControllerGains& g, const ChainSize& n) {
  const Eigen::Index N = n.index();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    K(i, i) = g.a1() + g.a2();
    D(i, i) = g.b1() + g.b2();
    if (i > 0) {
      K(i, i - 1) = -g.a1();
      D(i, i - 1) = -g.b1();
    }
    if (i + 1 < N) {
      K(i, i + 1) = -g.a2();
      D(i, i + 1) = -g.b2();
    }
  }
  Eigen::MatrixXd A(2 * N, 2 * N);
  A << Eigen::MatrixXd::Zero(N, N), Eigen::MatrixXd::Identity(N, N), -K, -D;
  return A;
}

double spectral_abscissa(const ControllerGains& g, const ChainSize& n) {
  if (n.followers() > kMaxEigenChain) throw InvalidArgumentError("spectral_abscissa is limited to N <= 2000");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(error_dynamics_matrix(g, n), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  return solver.eigenvalues().real().maxCoeff();
}

namespace {

// Accelerations of the error coordinates: dde_k = a_{k-1} - a_k where a_k is
// the acceleration (u_k + d_k) of vehicle k.
class ErrorDynamics {
 public:
  ErrorDynamics(const ControllerGains& g, std::size_t n) : g_(g), n_(n), accel_(n + 1) {}

  void derivative(const Eigen::VectorXd& state, const Eigen::VectorXd& d, Eigen::VectorXd& out) {
    const std::size_t N = n_;
    const auto e = state.head(N);
    const auto de = state.tail(N);
    for (std::size_t k = 0; k <= N; ++k) {
      double u = 0.0;
      // e_k = x_{k-1} - x_k sits at index k-1.
      if (k >= 1) u += g_.a1() * e(k - 1) + g_.b1() * de(k - 1);
      if (k + 1 <= N) u -= g_.a2() * e(k) + g_.b2() * de(k);
      accel_[k] = u + d(k);
    }
    out.head(N) = de;
    for (std::size_t k = 1; k <= N; ++k) out(N + k - 1) = accel_[k - 1] - accel_[k];
  }

 private:
  ControllerGains g_;
  std::size_t n_;
  std::vector<double> accel_;
};

void disturbance_vector(const std::vector<DisturbanceSpec>& specs, double t, double dt,
                        DisturbanceSpec::Limit side, Eigen::VectorXd& d) {
  d.setZero();
  for (const auto& spec : specs) d(spec.vehicle) += spec.value(t, dt, side);
}

}  // namespace

SimResult integrate(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t N = cfg.n.followers();
  const Eigen::Index dim = 2 * cfg.n.index();
  const double dt = cfg.dt;
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt - 1e-9));

  SimResult result;
  if (N <= 500) {
    const double sigma = spectral_abscissa(cfg.gains, cfg.n);
    if (!(sigma < 0.0)) {
      std::ostringstream msg;
      msg << "error dynamics not asymptotically stable (spectral abscissa " << sigma << ")";
      result.warnings.push_back(msg.str());
    }
  }

  Eigen::VectorXd state = Eigen::VectorXd::Zero(dim);
  if (cfg.initial) {
    for (std::size_t k = 1; k <= N; ++k) {
      state(k - 1) = cfg.initial->x[k - 1] - cfg.initial->x[k];
      state(N + k - 1) = cfg.initial->v[k - 1] - cfg.initial->v[k];
    }
  }

  const std::size_t recorded = cfg.record ? steps / cfg.record_every + 1 : 0;
  if (cfg.record) {
    result.t.reserve(recorded);
    result.e.resize(cfg.n.index(), static_cast<Eigen::Index>(recorded));
  }

  ErrorDynamics dynamics(cfg.gains, N);
  Eigen::VectorXd d(cfg.n.index() + 1);
  Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  Eigen::VectorXd e_energy = Eigen::VectorXd::Zero(cfg.n.index());
  double d_energy = 0.0;

  Eigen::VectorXd prev_e_sq = state.head(N).array().square();
  disturbance_vector(cfg.disturbances, 0.0, dt, DisturbanceSpec::Limit::FromRight, d);
  double prev_d_sq = d.squaredNorm();
  Eigen::Index column = 0;
  if (cfg.record) {
    result.t.push_back(0.0);
    result.e.col(column++) = state.head(N);
  }

  using Limit = DisturbanceSpec::Limit;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double t_half = t + 0.5 * dt;
    const double t_next = static_cast<double>(i + 1) * dt;

    disturbance_vector(cfg.disturbances, t, dt, Limit::FromRight, d);
    dynamics.derivative(state, d, k1);
    disturbance_vector(cfg.disturbances, t_half, dt, Limit::FromRight, d);
    tmp = state + 0.5 * dt * k1;
    dynamics.derivative(tmp, d, k2);
    tmp = state + 0.5 * dt * k2;
    dynamics.derivative(tmp, d, k3);
    disturbance_vector(cfg.disturbances, t_next, dt, Limit::FromLeft, d);
    tmp = state + dt * k3;
    dynamics.derivative(tmp, d, k4);
    state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!state.allFinite()) {
      std::ostringstream msg;
      msg << "simulation diverged at t = " << t_next;
      throw DivergenceError(msg.str(), t_next);
    }

    const Eigen::VectorXd e_sq = state.head(N).array().square();
    e_energy += 0.5 * dt * (prev_e_sq + e_sq);
    prev_e_sq = e_sq;
    disturbance_vector(cfg.disturbances, t_next, dt, Limit::FromRight, d);
    const double d_sq = d.squaredNorm();
    d_energy += 0.5 * dt * (prev_d_sq + d_sq);
    prev_d_sq = d_sq;

    if (cfg.record && (i + 1) % cfg.record_every == 0) {
      result.t.push_back(t_next);
      result.e.col(column++) = state.head(N);
    }
  }
  if (cfg.record) result.e.conservativeResize(Eigen::NoChange, column);

  result.per_vehicle_l2 = e_energy.cwiseSqrt();
  result.total_norm = std::sqrt(e_energy.sum());
  result.d_norm = std::sqrt(d_energy);
  return result;
}

double l2l2_norm(const Eigen::MatrixXd& samples, double dt) {
  if (samples.cols() < 2) return 0.0;
  const Eigen::MatrixXd sq = samples.array().square();
  const double interior = sq.sum();
  const double ends = sq.col(0).sum() + sq.col(sq.cols() - 1).sum();
  return std::sqrt(dt * (interior - 0.5 * ends));
}

std::vector<SweepRow> sweep_N(const ControllerGains& g, const DisturbanceSpec& d, std::vector<std::size_t> n_list,
                              std::optional<double> dt, std::optional<double> t_end) {
  if (d.vehicle != 0) throw InvalidArgumentError("sweep_N needs a disturbance on the leader (vehicle 0)");
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  const double step = dt.value_or(default_step(g));
  // One horizon for every row, so truncation does not differ between lengths.
  double horizon = 0.0;
  if (t_end) {
    horizon = *t_end;
  } else {
    for (std::size_t n : n_list) horizon = std::max(horizon, default_horizon(g, ChainSize(n), {d}, step));
  }
  std::vector<SweepRow> rows;
  rows.reserve(n_list.size());
  for (std::size_t n : n_list) {
    SimConfig cfg;
    cfg.n = ChainSize(n);
    cfg.gains = g;
    cfg.dt = step;
    cfg.disturbances = {d};
    cfg.t_end = horizon;
    cfg.record = false;
    rows.push_back({n, integrate(cfg).total_norm});
  }
  return rows;
}

}  // namespace stringstab
