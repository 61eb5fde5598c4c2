#include "stringstab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "stringstab/errors.hpp"

namespace stringstab {

namespace {

constexpr double kDegenerateTol = 1e-10;
constexpr double kPivotTol = 1e-12;
constexpr std::size_t kMaxDenseChain = 200;

std::string point_text(Complex s) {
  std::ostringstream out;
  out.precision(17);
  out << "s = " << s.real() << (s.imag() < 0 ? " - " : " + ") << std::abs(s.imag()) << "j";
  return out.str();
}

void require_nondegenerate_m(const FlowPoint& fp) {
  const double scale = std::max({std::abs(fp.z), std::abs(fp.p1), std::abs(fp.p2)});
  if (!(std::abs(fp.m) > kDegenerateTol * scale)) {
    throw DegeneratePointError("m(s) vanishes at " + point_text(fp.s), fp.s);
  }
}

// powers[k] = base^k for k = 0..count-1
std::vector<Complex> powers(Complex base, std::size_t count) {
  std::vector<Complex> out(count);
  Complex acc(1.0, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = acc;
    acc *= base;
  }
  return out;
}

}  // namespace

ChainSize::ChainSize(std::size_t n) : n_(n) {
  if (n < 1) throw InvalidArgumentError("chain size N must be >= 1");
}

void require_closed_form_size(const ChainSize& n) {
  if (n.followers() < 2) throw InvalidArgumentError("closed-form chain quantities need N >= 2");
}

ComplexMatrix TridiagonalMatrix::dense() const {
  const Eigen::Index n = size();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = diag(i);
    if (i + 1 < n) {
      out(i + 1, i) = lower(i);
      out(i, i + 1) = upper(i);
    }
  }
  return out;
}

ComplexVector TridiagonalMatrix::apply(const ComplexVector& x) const {
  const Eigen::Index n = size();
  ComplexVector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex acc = diag(i) * x(i);
    if (i > 0) acc += lower(i - 1) * x(i - 1);
    if (i + 1 < n) acc += upper(i) * x(i + 1);
    y(i) = acc;
  }
  return y;
}

TridiagonalMatrix assemble_S(const ControllerGains& g, const ChainSize& n, Complex s) {
  const Eigen::Index size = n.index();
  const Complex p1 = g.predecessor(s);
  const Complex p2 = g.follower(s);
  TridiagonalMatrix S;
  S.diag = ComplexVector::Constant(size, s * s + p1 + p2);
  S.lower = ComplexVector::Constant(size - 1, -p1);
  S.upper = ComplexVector::Constant(size - 1, -p2);
  return S;
}

ComplexVector solve_direct(const ControllerGains& g, const ChainSize& n, Complex s, const ComplexVector& d) {
  const Eigen::Index size = n.index();
  if (d.size() != size) throw InvalidArgumentError("disturbance vector length must equal N");

  const TridiagonalMatrix S = assemble_S(g, n, s);
  // the diagonal may cancel, so scale by the terms that form it
  const double scale = std::norm(s) + std::abs(g.predecessor(s)) + std::abs(g.follower(s));
  const double tol = kPivotTol * scale;

  ComplexVector dl = S.lower;
  ComplexVector dg = S.diag;
  ComplexVector du = S.upper;
  ComplexVector du2 = ComplexVector::Zero(std::max<Eigen::Index>(size - 2, 0));
  ComplexVector b = d;

  auto singular = [&]() { return SingularSystemError("S(s) is numerically singular at " + point_text(s), s); };

  for (Eigen::Index i = 0; i + 1 < size; ++i) {
    if (std::abs(dg(i)) >= std::abs(dl(i))) {
      if (std::abs(dg(i)) < tol) throw singular();
      const Complex mult = dl(i) / dg(i);
      dg(i + 1) -= mult * du(i);
      b(i + 1) -= mult * b(i);
    } else {
      const Complex mult = dg(i) / dl(i);
      dg(i) = dl(i);
      const Complex temp = dg(i + 1);
      dg(i + 1) = du(i) - mult * temp;
      if (i + 2 < size) {
        du2(i) = du(i + 1);
        du(i + 1) = -mult * du2(i);
      }
      du(i) = temp;
      const Complex bi = b(i);
      b(i) = b(i + 1);
      b(i + 1) = bi - mult * b(i + 1);
    }
  }
  if (std::abs(dg(size - 1)) < tol) throw singular();

  ComplexVector x(size);
  for (Eigen::Index i = size - 1; i >= 0; --i) {
    Complex acc = b(i);
    if (i + 1 < size) acc -= du(i) * x(i + 1);
    if (i + 2 < size) acc -= du2(i) * x(i + 2);
    x(i) = acc / dg(i);
  }
  return x;
}

ComplexVector leading_disturbance_response(const ControllerGains& g, const ChainSize& n, Complex s,
                                           std::span<const Complex> leading) {
  const Eigen::Index size = n.index();
  if (static_cast<Eigen::Index>(leading.size()) > size) {
    throw InvalidArgumentError("more leading disturbances than vehicles");
  }
  ComplexVector e = ComplexVector::Zero(size);
  for (std::size_t j = 0; j < leading.size(); ++j) {
    if (leading[j] == Complex(0.0, 0.0)) continue;
    ComplexVector unit = ComplexVector::Zero(size);
    unit(static_cast<Eigen::Index>(j)) = 1.0;
    e += leading[j] * solve_direct(g, n, s, unit);
  }
  return e;
}

ComplexMatrix assemble_M(const ControllerGains& g, const ChainSize& n, Complex s) {
  const FlowPoint fp = evaluate_flow_point(g, s);
  require_nondegenerate_m(fp);
  const Eigen::Index size = n.index();
  const auto c1 = powers(fp.c1, n.followers());
  const auto c2 = powers(fp.c2, n.followers());
  ComplexMatrix M(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j) {
      M(i, j) = (j >= i ? c2[j - i] : c1[i - j]) / fp.m;
    }
  }
  return M;
}

double verify_MSQ(const ControllerGains& g, const ChainSize& n, Complex s) {
  if (n.followers() > kMaxDenseChain) throw InvalidArgumentError("verify_MSQ is limited to N <= 200");
  const ComplexMatrix Q = assemble_M(g, n, s) * assemble_S(g, n, s).dense();
  const Eigen::Index size = n.index();
  double residual = 0.0;
  for (Eigen::Index j = 1; j + 1 < size; ++j) {
    for (Eigen::Index i = 0; i < size; ++i) {
      const Complex expected = i == j ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
      residual = std::max(residual, std::abs(Q(i, j) - expected));
    }
  }
  return residual;
}

BoundaryEntries boundary_entries(const ControllerGains& g, const ChainSize& n, Complex s) {
  require_closed_form_size(n);
  const FlowPoint fp = evaluate_flow_point(g, s);
  require_nondegenerate_m(fp);
  const std::size_t N = n.followers();
  const auto c1 = powers(fp.c1, N + 1);
  const auto c2 = powers(fp.c2, N + 1);

  BoundaryEntries q;
  q.first_column.resize(n.index());
  q.last_column.resize(n.index());
  q.first_column(0) = (fp.z - fp.c2 * fp.p1) / fp.m;
  for (std::size_t k = 2; k <= N; ++k) {
    q.first_column(k - 1) = (c1[k - 1] * fp.z - c1[k - 2] * fp.p1) / fp.m;
  }
  for (std::size_t k = 1; k + 1 <= N; ++k) {
    q.last_column(k - 1) = (-c2[N - k - 1] * fp.p2 + c2[N - k] * fp.z) / fp.m;
  }
  q.last_column(n.index() - 1) = (fp.z - fp.c1 * fp.p2) / fp.m;
  return q;
}

DisturbanceFlows disturbance_flows(const ControllerGains& g, Complex s, const ComplexVector& d) {
  const FlowPoint fp = evaluate_flow_point(g, s);
  const Eigen::Index size = d.size();
  DisturbanceFlows flows{ComplexVector::Zero(size), ComplexVector::Zero(size)};
  for (Eigen::Index k = 1; k < size; ++k) flows.front(k) = fp.c1 * (flows.front(k - 1) + d(k - 1));
  for (Eigen::Index k = size - 2; k >= 0; --k) flows.rear(k) = fp.c2 * (flows.rear(k + 1) + d(k + 1));
  return flows;
}

Complex closed_form_denominator(const FlowPoint& fp, const ChainSize& n) {
  const Complex u = 0.5 * (fp.z + fp.m);
  const Complex product = fp.c1 * fp.c2;
  Complex pn(1.0, 0.0);
  for (std::size_t k = 0; k < n.followers(); ++k) pn *= product;
  return u * u - fp.p1 * fp.p2 * pn;
}

ChainResponse closedform_chain_response(const ControllerGains& g, const ChainSize& n, Complex s,
                                        Complex d1prime) {
  require_closed_form_size(n);
  const FlowPoint fp = evaluate_flow_point(g, s);
  require_nondegenerate_m(fp);
  const std::size_t N = n.followers();
  const Eigen::Index size = n.index();

  const Complex u = 0.5 * (fp.z + fp.m);
  const Complex v = fp.p1 * fp.c2;
  const auto c1 = powers(fp.c1, N + 1);
  const auto c1c2 = powers(fp.c1 * fp.c2, N + 1);
  const Complex den = u * u - fp.p1 * fp.p2 * c1c2[N];
  const double den_scale = std::max(std::norm(u), std::abs(fp.p1 * fp.p2 * c1c2[N]));
  if (!(std::abs(den) > kDegenerateTol * den_scale)) {
    throw DegeneratePointError("chain denominator vanishes at " + point_text(s), s);
  }

  // e_1 and e_N from the autonomous boundary pair.
  const Complex g1 = (u - v * c1c2[N - 1]) / den;
  const Complex gN = fp.c1 * fp.m / den;

  ChainResponse r;
  r.H.resize(size);
  r.G.resize(size);
  r.H(0) = g1;
  r.G(0) = g1;
  r.H(size - 1) = gN * c1[N - 2];
  r.G(size - 1) = gN;
  // Interior: front-flow term, feedback of e_1 through q_{k,1}, reflection of
  // e_N through q_{k,N}; every term carries the common factor C1^(k-2).
  for (std::size_t k = 2; k + 1 <= N; ++k) {
    const Complex local = fp.c1 / fp.m;
    const Complex from_head = -fp.c1 * fp.c1 * fp.p2 * g1 / fp.m;
    const Complex from_tail = -fp.p1 * fp.c2 * gN * c1c2[N - k] / fp.m;
    r.G(k - 1) = local + from_head + from_tail;
    r.H(k - 1) = r.G(k - 1) * c1[k - 2];
  }
  r.e = r.H * d1prime;

  ComplexVector d = ComplexVector::Zero(size);
  d(0) = d1prime;
  DisturbanceFlows flows = disturbance_flows(g, s, d);
  r.f = std::move(flows.front);
  r.g = std::move(flows.rear);
  return r;
}

DenominatorMinima check_denominator_conditions(const ControllerGains& g, const ChainSize& n,
                                               const FrequencyGrid& grid) {
  require_closed_form_size(n);
  DenominatorMinima out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
  auto visit = [&](double omega) {
    const FlowPoint fp = evaluate_flow_point(g, Complex(0.0, omega));
    out.min_abs_m = std::min(out.min_abs_m, std::abs(fp.m));
    out.min_abs_z_plus_m = std::min(out.min_abs_z_plus_m, std::abs(fp.z + fp.m));
    if (std::abs(fp.m) > 0.0) {
      // q11 qNN - q1N qN1 = denominator / m^2
      const double det = std::abs(closed_form_denominator(fp, n) / (fp.m * fp.m));
      if (std::isfinite(det)) out.min_abs_boundary_det = std::min(out.min_abs_boundary_det, det);
    }
  };
  visit(0.0);
  for (std::size_t i = 0; i < grid.points(); ++i) visit(grid.omega(i));
  return out;
}

}  // namespace stringstab
