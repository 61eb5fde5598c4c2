#ifndef STRINGSTAB_TF_CORE_HPP
#define STRINGSTAB_TF_CORE_HPP

#include <complex>

namespace stringstab {

using Complex = std::complex<double>;

/// First-order PD term a + b*s with strictly positive stiffness a [1/s^2]
/// and damping b [1/s].
class AffineTerm {
 public:
  /// Throws InvalidArgumentError unless both values are finite and > 0.
  AffineTerm(double stiffness, double damping);

  double stiffness() const { return a_; }
  double damping() const { return b_; }

  Complex operator()(Complex s) const { return a_ + b_ * s; }

  /// Returns factor * (a + b*s). factor must be > 0.
  AffineTerm scaled(double factor) const;

  friend bool operator==(const AffineTerm&, const AffineTerm&) = default;

 private:
  double a_;
  double b_;
};

/// Coupling of every vehicle to its predecessor (p1) and to its follower (p2).
struct ControllerGains {
  AffineTerm predecessor;  // p1 = a1 + b1 s
  AffineTerm follower;     // p2 = a2 + b2 s

  static ControllerGains from_coefficients(double a1, double b1, double a2, double b2) {
    return ControllerGains{AffineTerm(a1, b1), AffineTerm(a2, b2)};
  }

  double a1() const { return predecessor.stiffness(); }
  double b1() const { return predecessor.damping(); }
  double a2() const { return follower.stiffness(); }
  double b2() const { return follower.damping(); }

  /// q = p1 + p2
  Complex q(Complex s) const { return predecessor(s) + follower(s); }

  /// Same chain seen from the tail: p1 and p2 exchanged.
  ControllerGains mirrored() const { return ControllerGains{follower, predecessor}; }

  friend bool operator==(const ControllerGains&, const ControllerGains&) = default;
};

Complex eval_affine(const AffineTerm& p, Complex s);

/// Square root of (s^2+q)^2 - 4 p1 p2 on the root nearest to s^2+q.
/// Ties (equidistant roots) resolve to the root with Re >= 0, then Im >= 0.
Complex eval_m(const ControllerGains& g, Complex s);

/// ((s^2+q) - m) / (2 p2). Throws DivisionByZeroError when p2(s) == 0.
Complex eval_C1(const ControllerGains& g, Complex s);

/// ((s^2+q) - m) / (2 p1). Throws DivisionByZeroError when p1(s) == 0.
Complex eval_C2(const ControllerGains& g, Complex s);

struct QuadraticResiduals {
  Complex c1;  // p2 C1^2 - (s^2+q) C1 + p1
  Complex c2;  // p1 C2^2 - (s^2+q) C2 + p2
};

QuadraticResiduals quadratic_residuals(const ControllerGains& g, Complex s);

/// All elementary quantities at one Laplace point, computed once.
struct FlowPoint {
  Complex s;
  Complex p1;
  Complex p2;
  Complex z;  // s^2 + q
  Complex m;
  Complex c1;
  Complex c2;
};

FlowPoint evaluate_flow_point(const ControllerGains& g, Complex s);

}  // namespace stringstab

#endif  // STRINGSTAB_TF_CORE_HPP
