#ifndef STRINGSTAB_CHAIN_HPP
#define STRINGSTAB_CHAIN_HPP

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "stringstab/freq_analysis.hpp"
#include "stringstab/tf_core.hpp"

namespace stringstab {

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Number of followers N; vehicles are 0..N and spacing errors e_1..e_N.
class ChainSize {
 public:
  /// Throws InvalidArgumentError for n < 1.
  explicit ChainSize(std::size_t n);

  std::size_t followers() const { return n_; }
  Eigen::Index index() const { return static_cast<Eigen::Index>(n_); }

  friend bool operator==(const ChainSize&, const ChainSize&) = default;

 private:
  std::size_t n_;
};

/// Closed forms are only defined for N >= 2.
void require_closed_form_size(const ChainSize& n);

/// Error-dynamics operator: s^2+q on the diagonal, -p1 below, -p2 above.
struct TridiagonalMatrix {
  ComplexVector lower;  // size N-1, entry i sits at (i+1, i)
  ComplexVector diag;   // size N
  ComplexVector upper;  // size N-1, entry i sits at (i, i+1)

  Eigen::Index size() const { return diag.size(); }
  ComplexMatrix dense() const;
  ComplexVector apply(const ComplexVector& x) const;
};

TridiagonalMatrix assemble_S(const ControllerGains& g, const ChainSize& n, Complex s);

/// Solves S(s) E = D' by tridiagonal elimination with partial pivoting.
/// Throws SingularSystemError when a pivot falls below 1e-12 of the largest
/// matrix entry, InvalidArgumentError when d has the wrong length.
ComplexVector solve_direct(const ControllerGains& g, const ChainSize& n, Complex s, const ComplexVector& d);

/// Response to d' supported on the first leading.size() vehicles, summed from
/// single-source direct solves.
ComplexVector leading_disturbance_response(const ControllerGains& g, const ChainSize& n, Complex s,
                                           std::span<const Complex> leading);

/// (1/m) [C2^(j-i) above the diagonal, 1 on it, C1^(i-j) below], dense.
/// Throws DegeneratePointError when m is numerically zero.
ComplexMatrix assemble_M(const ControllerGains& g, const ChainSize& n, Complex s);

/// Largest deviation of M*S from the required Q pattern on the interior
/// columns 2..N-1 (unit diagonal, zeros elsewhere). N is capped at 200.
double verify_MSQ(const ControllerGains& g, const ChainSize& n, Complex s);

struct BoundaryEntries {
  ComplexVector first_column;  // q_{k,1}, k = 1..N
  ComplexVector last_column;   // q_{k,N}, k = 1..N

  Complex q11() const { return first_column(0); }
  Complex qN1() const { return first_column(first_column.size() - 1); }
  Complex q1N() const { return last_column(0); }
  Complex qNN() const { return last_column(last_column.size() - 1); }
};

/// q_{k,1} and q_{k,N} from their defining relations. Requires N >= 2.
BoundaryEntries boundary_entries(const ControllerGains& g, const ChainSize& n, Complex s);

struct DisturbanceFlows {
  ComplexVector front;  // f_k: C1 (f_{k-1} + d'_{k-1}), f_1 = 0
  ComplexVector rear;   // g_k: C2 (g_{k+1} + d'_{k+1}), g_N = 0
};

DisturbanceFlows disturbance_flows(const ControllerGains& g, Complex s, const ComplexVector& d);

struct ChainResponse {
  ComplexVector e;  // e_k for the given d'_1
  ComplexVector H;  // e_k / d'_1
  ComplexVector G;  // G_1 = H_1, G_k = H_k / C1^(k-2) for k >= 2
  ComplexVector f;
  ComplexVector g;
};

/// Denominator u^2 - p1 p2 (C1 C2)^N of the leader-driven closed forms,
/// with u = (s^2+q+m)/2.
Complex closed_form_denominator(const FlowPoint& fp, const ChainSize& n);

/// Per-vehicle transfer values for a disturbance on the leader only.
/// Throws DegeneratePointError if m or the denominator is numerically zero.
ChainResponse closedform_chain_response(const ControllerGains& g, const ChainSize& n, Complex s,
                                        Complex d1prime);

struct DenominatorMinima {
  double min_abs_m;
  double min_abs_z_plus_m;
  double min_abs_boundary_det;  // |q11 qNN - q1N qN1|, skipped where m == 0
};

/// Minima over omega = 0 and the grid. Zero minima are reported, never thrown.
DenominatorMinima check_denominator_conditions(const ControllerGains& g, const ChainSize& n,
                                               const FrequencyGrid& grid);

}  // namespace stringstab

#endif  // STRINGSTAB_CHAIN_HPP
