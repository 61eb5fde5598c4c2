#ifndef STRINGSTAB_FREQ_ANALYSIS_HPP
#define STRINGSTAB_FREQ_ANALYSIS_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "stringstab/tf_core.hpp"

namespace stringstab {

/// Slack on every numerical "<= 1" test.
inline constexpr double kUnitTolerance = 1e-6;

/// Log-spaced sweep of the positive imaginary axis.
class FrequencyGrid {
 public:
  /// Throws InvalidArgumentError unless 0 < omega_min < omega_max and points >= 2.
  FrequencyGrid(double omega_min, double omega_max, std::size_t points);

  /// [1e-4, 1e4] rad/s, 2000 points.
  static FrequencyGrid standard() { return FrequencyGrid(1e-4, 1e4, 2000); }

  double omega_min() const { return omega_min_; }
  double omega_max() const { return omega_max_; }
  std::size_t points() const { return points_; }

  double omega(std::size_t i) const;
  std::vector<double> omegas() const;

  /// Same window, (points - 1) * factor + 1 points; contains every point of *this.
  FrequencyGrid refined(std::size_t factor) const;

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

 private:
  double omega_min_;
  double omega_max_;
  std::size_t points_;
};

struct NormEstimate {
  double value = 0.0;
  double argmax_omega = 0.0;
  bool refined = false;
  FrequencyGrid grid = FrequencyGrid::standard();
};

/// Frequency response omega -> f(j omega).
using FrequencyResponse = std::function<Complex(double)>;

inline constexpr int kDefaultRefineIters = 40;

/// Sup of |f(j omega)| over {0} and the grid, then golden-section refinement
/// (in log omega) over the two cells around the discrete argmax. The result is
/// the best value ever evaluated, so it is nondecreasing in refine_iters.
/// Set include_dc = false when f is not defined at omega = 0.
/// Throws EvaluationError at the first non-finite value.
NormEstimate hinf_norm(const FrequencyResponse& f, const FrequencyGrid& grid,
                       int refine_iters = kDefaultRefineIters, bool include_dc = true);

struct LemmaReport {
  NormEstimate c1_norm;
  NormEstimate c2_norm;
  NormEstimate c1c2_norm;
  bool both_le_one = false;
  bool product_le_one = false;
};

/// Norms of C1, C2 and C1*C2. Whenever a1 != a2, both_le_one is expected
/// to come out false; the report does not enforce it.
LemmaReport check_lemma1(const ControllerGains& g, const FrequencyGrid& grid,
                         int refine_iters = kDefaultRefineIters);

/// H-infinity estimate of C1*C2.
NormEstimate check_lemma2_product(const ControllerGains& g, const FrequencyGrid& grid,
                                  int refine_iters = kDefaultRefineIters);

/// Gains p1 = kappa / (1 + alpha) * base, p2 = alpha * p1.
ControllerGains ratio_parameterized_gains(const AffineTerm& base, double kappa, double alpha);

struct AlphaRange {
  double lo;
  double hi;
};

struct AlphaTuning {
  double alpha;
  ControllerGains gains;
  NormEstimate c1_norm;
};

inline constexpr double kTuneMargin = 1e-3;

/// Smallest alpha in the range (64-point log scan, then bisection on the
/// first crossing) with ||C1||_inf < 1 - kTuneMargin. std::nullopt when no
/// scanned alpha qualifies. Throws InvalidArgumentError if kappa <= 0 or the
/// range is not a subset of [1, inf).
std::optional<AlphaTuning> tune_alpha(const AffineTerm& base, double kappa, AlphaRange range,
                                      const FrequencyGrid& grid);

}  // namespace stringstab

#endif  // STRINGSTAB_FREQ_ANALYSIS_HPP
