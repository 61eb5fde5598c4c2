#include "stringstab/tf_core.hpp"

#include <cmath>
#include <string>

#include "stringstab/errors.hpp"

namespace stringstab {

AffineTerm::AffineTerm(double stiffness, double damping) : a_(stiffness), b_(damping) {
  if (!std::isfinite(a_) || a_ <= 0.0) {
    throw InvalidArgumentError("stiffness must be finite and > 0, got " + std::to_string(a_));
  }
  if (!std::isfinite(b_) || b_ <= 0.0) {
    throw InvalidArgumentError("damping must be finite and > 0, got " + std::to_string(b_));
  }
}

AffineTerm AffineTerm::scaled(double factor) const { return AffineTerm(factor * a_, factor * b_); }

Complex eval_affine(const AffineTerm& p, Complex s) { return p(s); }

namespace {

Complex nearest_root(Complex z, Complex radicand) {
  // std::sqrt is the principal root: Re >= 0, and Im >= 0 when Re == 0,
  // which is exactly the tie-break order.
  const Complex w = std::sqrt(radicand);
  const double near = std::abs(z - w);
  const double far = std::abs(z + w);
  return far < near ? -w : w;
}

// z - m without cancellation: (z - m)(z + m) = 4 p1 p2 and z + m is the large sum.
Complex small_difference(Complex z, Complex m, Complex p1p2) {
  const Complex sum = z + m;
  return sum == Complex(0.0, 0.0) ? z - m : 4.0 * p1p2 / sum;
}

Complex flow_numerator(const ControllerGains& g, Complex s, Complex* m_out = nullptr) {
  const Complex p1 = g.predecessor(s);
  const Complex p2 = g.follower(s);
  const Complex z = s * s + p1 + p2;
  const Complex m = nearest_root(z, z * z - 4.0 * p1 * p2);
  if (m_out != nullptr) *m_out = m;
  return small_difference(z, m, p1 * p2);
}

}  // namespace

Complex eval_m(const ControllerGains& g, Complex s) {
  Complex m;
  flow_numerator(g, s, &m);
  return m;
}

Complex eval_C1(const ControllerGains& g, Complex s) {
  const Complex p2 = g.follower(s);
  if (std::abs(p2) == 0.0) throw DivisionByZeroError("C1 undefined: p2(s) = 0");
  return flow_numerator(g, s) / (2.0 * p2);
}

Complex eval_C2(const ControllerGains& g, Complex s) {
  const Complex p1 = g.predecessor(s);
  if (std::abs(p1) == 0.0) throw DivisionByZeroError("C2 undefined: p1(s) = 0");
  return flow_numerator(g, s) / (2.0 * p1);
}

FlowPoint evaluate_flow_point(const ControllerGains& g, Complex s) {
  FlowPoint fp;
  fp.s = s;
  fp.p1 = g.predecessor(s);
  fp.p2 = g.follower(s);
  fp.z = s * s + fp.p1 + fp.p2;
  fp.m = nearest_root(fp.z, fp.z * fp.z - 4.0 * fp.p1 * fp.p2);
  if (std::abs(fp.p1) == 0.0 || std::abs(fp.p2) == 0.0) {
    throw DivisionByZeroError("flow functions undefined: p1(s) or p2(s) = 0");
  }
  const Complex num = small_difference(fp.z, fp.m, fp.p1 * fp.p2);
  fp.c1 = num / (2.0 * fp.p2);
  fp.c2 = num / (2.0 * fp.p1);
  return fp;
}

QuadraticResiduals quadratic_residuals(const ControllerGains& g, Complex s) {
  const FlowPoint fp = evaluate_flow_point(g, s);
  return {fp.p2 * fp.c1 * fp.c1 - fp.z * fp.c1 + fp.p1, fp.p1 * fp.c2 * fp.c2 - fp.z * fp.c2 + fp.p2};
}

}  // namespace stringstab
