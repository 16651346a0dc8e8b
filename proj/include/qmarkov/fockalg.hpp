#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "qmarkov/linalg.hpp"

namespace qmarkov {

namespace tol {
inline constexpr double hermiticity = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double min_eigenvalue = -1e-10;
inline constexpr double norm = 1e-12;
}  // namespace tol

/// Finite Hilbert space: a truncated Fock space (dimension n_max+1), a qubit,
/// or a tensor product of two spaces. Tensor indices are row-major: the state
/// |i> (x) |k> sits at index i*dim(second)+k.
class HilbertSpace {
 public:
  enum class Kind { fock, qubit, tensor };

  static HilbertSpace fock(int n_max);
  static HilbertSpace qubit();
  static HilbertSpace tensor(const HilbertSpace& first, const HilbertSpace& second);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  /// Truncation bound of a Fock space; throws for other kinds.
  int n_max() const;
  /// Factor spaces of a tensor product (empty otherwise).
  const std::vector<HilbertSpace>& factors() const { return factors_; }

  bool operator==(const HilbertSpace& other) const;

 private:
  HilbertSpace(Kind kind, Eigen::Index dim, std::vector<HilbertSpace> factors);

  Kind kind_;
  Eigen::Index dim_;
  std::vector<HilbertSpace> factors_;
};

class Operator {
 public:
  Operator(HilbertSpace space, Mat entries);

  static Operator identity(const HilbertSpace& space);
  static Operator zero(const HilbertSpace& space);

  const HilbertSpace& space() const { return space_; }
  const Mat& matrix() const { return entries_; }
  Eigen::Index dim() const { return space_.dim(); }

  Operator adjoint() const { return {space_, entries_.adjoint()}; }
  Vec apply(const Vec& v) const;

  friend Operator operator*(const Operator& lhs, const Operator& rhs);
  friend Operator operator+(const Operator& lhs, const Operator& rhs);
  friend Operator operator-(const Operator& lhs, const Operator& rhs);
  friend Operator operator*(cplx s, const Operator& op) { return {op.space_, s * op.entries_}; }
  friend Operator operator*(const Operator& op, cplx s) { return s * op; }

 private:
  HilbertSpace space_;
  Mat entries_;
};

/// tensor product of operators on the product space.
Operator tensor(const Operator& first, const Operator& second);

class StateVector {
 public:
  /// Throws invalid_state unless the squared norm is 1 within 1e-12.
  StateVector(HilbertSpace space, Vec amplitudes);

  /// Normalizes `amplitudes`; throws invalid_state for a zero vector.
  static StateVector normalized(HilbertSpace space, const Vec& amplitudes);
  static StateVector basis(const HilbertSpace& space, Eigen::Index index);

  const HilbertSpace& space() const { return space_; }
  const Vec& amplitudes() const { return amplitudes_; }

 private:
  HilbertSpace space_;
  Vec amplitudes_;
};

Vec operator*(const Operator& op, const StateVector& psi);
StateVector tensor(const StateVector& first, const StateVector& second);

struct StateCheck {
  double hermiticity_residual = 0.0;
  double trace_residual = 0.0;
  double min_eigenvalue = 0.0;

  bool ok() const {
    return hermiticity_residual < tol::hermiticity && trace_residual < tol::trace &&
           min_eigenvalue >= tol::min_eigenvalue;
  }
};

StateCheck check_density_matrix(const Mat& rho);

/// Hermitian, positive semidefinite, unit-trace operator.
class DensityOperator {
 public:
  /// Full validation of all invariants; throws invalid_state on failure.
  static DensityOperator from_matrix(HilbertSpace space, Mat entries);
  /// Hermitizes and divides by the trace. Positivity is the caller's
  /// responsibility (every update in this library is a completely positive
  /// map). Throws degenerate_outcome when the trace is below 1e-14.
  static DensityOperator from_unnormalized(HilbertSpace space, const Mat& entries);
  static DensityOperator pure(const StateVector& psi);
  static DensityOperator maximally_mixed(const HilbertSpace& space);
  static DensityOperator fock(int n, int n_max);

  const HilbertSpace& space() const { return space_; }
  const Mat& matrix() const { return entries_; }
  Eigen::Index dim() const { return space_.dim(); }

  RVec populations() const { return entries_.diagonal().real(); }
  double purity() const;
  cplx expectation(const Operator& op) const;
  StateCheck check() const { return check_density_matrix(entries_); }

 private:
  DensityOperator(HilbertSpace space, Mat entries)
      : space_(std::move(space)), entries_(std::move(entries)) {}

  HilbertSpace space_;
  Mat entries_;
};

// ---------------------------------------------------------------------------
// Harmonic oscillator

struct LadderOps {
  Operator a;
  Operator a_dag;
  Operator n;
};

/// a, a^dagger and N on span{|0>,...,|n_max>}; a^dagger|n_max> = 0.
LadderOps ladder_ops(int n_max);

/// Throws truncation_overflow unless |alpha|^2 <= n_max/4.
void check_guard_band(cplx alpha, int n_max);

StateVector coherent_state(cplx alpha, int n_max);
Operator displacement(cplx alpha, int n_max);
Operator func_of_number(const std::function<cplx(int)>& f, int n_max);

/// sin(theta(n)/2)/sqrt(n) with the value at n = 0 supplied by the caller.
Operator sin_over_sqrt_number(const std::function<double(int)>& theta, int n_max,
                              double value_at_zero);

// ---------------------------------------------------------------------------
// Jaynes-Cummings propagators on fock (x) qubit, qubit basis (|g>, |e>).

Operator jc_resonant_propagator(double theta, int n_max);
Operator jc_dispersive_propagator(double theta, int n_max);

/// Operators M_mu on S defined by U(|psi> (x) |theta_C>) = sum_mu (M_mu|psi>) (x) |lambda_mu>.
/// `u` must live on tensor(S, M). Completeness sum M^dagger M = I is checked on
/// the first `guard_dim` basis states of S (all of S when guard_dim < 0) and a
/// violation beyond `tolerance` raises invalid_propagator.
std::vector<Operator> measurement_ops_from_propagator(const Operator& u,
                                                      const StateVector& controller_state,
                                                      std::span<const StateVector> basis,
                                                      Eigen::Index guard_dim = -1,
                                                      double tolerance = 1e-10);

// ---------------------------------------------------------------------------
// Wigner function

struct WignerGridSpec {
  double x_min = -2.0;
  double x_max = 2.0;
  double p_min = -2.0;
  double p_max = 2.0;
  int n_x = 81;
  int n_p = 81;

  double x(int i) const;
  double p(int j) const;
};

struct WignerGrid {
  WignerGridSpec spec;
  RMat samples;  // n_p rows, n_x columns
  double max_imag_residue = 0.0;
};

/// W(alpha) = (2/pi) tr(exp(i pi N) D_{-alpha} rho D_alpha) at alpha = x + i p.
WignerGrid wigner(const DensityOperator& rho, const WignerGridSpec& spec);

/// Trapezoidal integral of the samples over the grid.
double integrate(const WignerGrid& grid);

void write_wigner_grid(std::ostream& out, const WignerGrid& grid);
WignerGrid read_wigner_grid(std::istream& in);

// ---------------------------------------------------------------------------
// Qubit

struct PauliOps {
  Operator sx;
  Operator sy;
  Operator sz;
  Operator sm;  // |g><e|
  Operator sp;  // |e><g|
};

PauliOps pauli_ops();

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

BlochVector bloch_coordinates(const DensityOperator& rho);

}  // namespace qmarkov
