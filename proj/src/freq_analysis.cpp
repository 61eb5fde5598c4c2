#include "stringstab/freq_analysis.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "stringstab/errors.hpp"

namespace stringstab {

FrequencyGrid::FrequencyGrid(double omega_min, double omega_max, std::size_t points)
    : omega_min_(omega_min), omega_max_(omega_max), points_(points) {
  if (!(std::isfinite(omega_min) && std::isfinite(omega_max) && omega_min > 0.0 && omega_min < omega_max)) {
    throw InvalidArgumentError("frequency grid needs 0 < omega_min < omega_max");
  }
  if (points < 2) throw InvalidArgumentError("frequency grid needs at least 2 points");
}

double FrequencyGrid::omega(std::size_t i) const {
  if (i + 1 == points_) return omega_max_;
  const double t = static_cast<double>(i) / static_cast<double>(points_ - 1);
  return omega_min_ * std::pow(omega_max_ / omega_min_, t);
}

std::vector<double> FrequencyGrid::omegas() const {
  std::vector<double> out(points_);
  for (std::size_t i = 0; i < points_; ++i) out[i] = omega(i);
  return out;
}

FrequencyGrid FrequencyGrid::refined(std::size_t factor) const {
  if (factor == 0) throw InvalidArgumentError("refinement factor must be >= 1");
  return FrequencyGrid(omega_min_, omega_max_, (points_ - 1) * factor + 1);
}

namespace {

double checked_abs(const FrequencyResponse& f, double omega) {
  const Complex v = f(omega);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "non-finite frequency response at omega = " << omega;
    throw EvaluationError(msg.str(), omega);
  }
  return std::abs(v);
}

}  // namespace

NormEstimate hinf_norm(const FrequencyResponse& f, const FrequencyGrid& grid, int refine_iters,
                       bool include_dc) {
  NormEstimate est;
  est.grid = grid;
  est.value = -1.0;

  if (include_dc) {
    est.value = checked_abs(f, 0.0);
    est.argmax_omega = 0.0;
  }
  std::size_t best_index = 0;
  bool grid_best = false;
  for (std::size_t i = 0; i < grid.points(); ++i) {
    const double w = grid.omega(i);
    const double v = checked_abs(f, w);
    if (v > est.value) {
      est.value = v;
      est.argmax_omega = w;
      best_index = i;
      grid_best = true;
    }
  }
  if (!grid_best) best_index = 0;
  if (refine_iters <= 0) return est;

  // Golden-section search in log(omega) over the bracket around the argmax.
  const std::size_t lo_i = best_index == 0 ? 0 : best_index - 1;
  const std::size_t hi_i = std::min(best_index + 1, grid.points() - 1);
  double a = std::log(grid.omega(lo_i));
  double b = std::log(grid.omega(hi_i));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = checked_abs(f, std::exp(c));
  double fd = checked_abs(f, std::exp(d));
  auto consider = [&est](double log_w, double v) {
    if (v > est.value) {
      est.value = v;
      est.argmax_omega = std::exp(log_w);
    }
  };
  consider(c, fc);
  consider(d, fd);
  for (int it = 0; it < refine_iters; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = checked_abs(f, std::exp(c));
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = checked_abs(f, std::exp(d));
      consider(d, fd);
    }
  }
  est.refined = true;
  return est;
}

LemmaReport check_lemma1(const ControllerGains& g, const FrequencyGrid& grid, int refine_iters) {
  const Complex j(0.0, 1.0);
  LemmaReport r;
  r.c1_norm = hinf_norm([&g, j](double w) { return eval_C1(g, j * w); }, grid, refine_iters);
  r.c2_norm = hinf_norm([&g, j](double w) { return eval_C2(g, j * w); }, grid, refine_iters);
  r.c1c2_norm = check_lemma2_product(g, grid, refine_iters);
  r.both_le_one = r.c1_norm.value <= 1.0 + kUnitTolerance && r.c2_norm.value <= 1.0 + kUnitTolerance;
  r.product_le_one = r.c1c2_norm.value <= 1.0 + kUnitTolerance;
  return r;
}

NormEstimate check_lemma2_product(const ControllerGains& g, const FrequencyGrid& grid, int refine_iters) {
  return hinf_norm(
      [&g](double w) {
        const FlowPoint fp = evaluate_flow_point(g, Complex(0.0, w));
        return fp.c1 * fp.c2;
      },
      grid, refine_iters);
}

ControllerGains ratio_parameterized_gains(const AffineTerm& base, double kappa, double alpha) {
  const AffineTerm p1 = base.scaled(kappa / (1.0 + alpha));
  return ControllerGains{p1, p1.scaled(alpha)};
}

std::optional<AlphaTuning> tune_alpha(const AffineTerm& base, double kappa, AlphaRange range,
                                      const FrequencyGrid& grid) {
  if (!(std::isfinite(kappa) && kappa > 0.0)) throw InvalidArgumentError("kappa must be > 0");
  if (!(std::isfinite(range.lo) && std::isfinite(range.hi) && range.lo >= 1.0 && range.lo <= range.hi)) {
    throw InvalidArgumentError("alpha range must satisfy 1 <= lo <= hi");
  }
  const double target = 1.0 - kTuneMargin;
  const Complex j(0.0, 1.0);
  auto evaluate = [&](double alpha) {
    const ControllerGains g = ratio_parameterized_gains(base, kappa, alpha);
    NormEstimate n = hinf_norm([&g, j](double w) { return eval_C1(g, j * w); }, grid);
    return AlphaTuning{alpha, g, n};
  };

  constexpr int kScanPoints = 64;
  const int points = range.lo == range.hi ? 1 : kScanPoints;
  const double log_lo = std::log(range.lo);
  const double log_hi = std::log(range.hi);
  double prev_alpha = range.lo;
  for (int i = 0; i < points; ++i) {
    const double alpha =
        i + 1 == points ? range.hi : std::exp(log_lo + (log_hi - log_lo) * i / (points - 1));
    AlphaTuning t = evaluate(alpha);
    if (t.c1_norm.value < target) {
      if (i == 0) return t;
      // prev_alpha fails, alpha passes: shrink the bracket in log space.
      double fail = std::log(prev_alpha);
      double pass = std::log(alpha);
      AlphaTuning best = t;
      for (int it = 0; it < 60 && pass - fail > 1e-9; ++it) {
        const double mid = 0.5 * (fail + pass);
        AlphaTuning tm = evaluate(std::exp(mid));
        if (tm.c1_norm.value < target) {
          pass = mid;
          best = tm;
        } else {
          fail = mid;
        }
      }
      return best;
    }
    prev_alpha = alpha;
  }
  return std::nullopt;
}

}  // namespace stringstab
