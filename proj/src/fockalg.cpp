#include "qmarkov/fockalg.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "qmarkov/errors.hpp"

namespace qmarkov {

// ---------------------------------------------------------------------------
// HilbertSpace

HilbertSpace::HilbertSpace(Kind kind, Eigen::Index dim, std::vector<HilbertSpace> factors)
    : kind_(kind), dim_(dim), factors_(std::move(factors)) {}

HilbertSpace HilbertSpace::fock(int n_max) {
  if (n_max < 0) {
    throw Error(ErrorCode::invalid_dimension, "Fock truncation must be non-negative, got " +
                                                  std::to_string(n_max));
  }
  return {Kind::fock, n_max + 1, {}};
}

HilbertSpace HilbertSpace::qubit() { return {Kind::qubit, 2, {}}; }

HilbertSpace HilbertSpace::tensor(const HilbertSpace& first, const HilbertSpace& second) {
  return {Kind::tensor, first.dim() * second.dim(), {first, second}};
}

int HilbertSpace::n_max() const {
  if (kind_ != Kind::fock) throw Error(ErrorCode::invalid_dimension, "not a Fock space");
  return static_cast<int>(dim_) - 1;
}

bool HilbertSpace::operator==(const HilbertSpace& other) const {
  return kind_ == other.kind_ && dim_ == other.dim_ && factors_ == other.factors_;
}

namespace {

void require_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(what) + ": spaces of dimension " + std::to_string(a.dim()) +
                    " and " + std::to_string(b.dim()) + " differ");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Operator / StateVector

Operator::Operator(HilbertSpace space, Mat entries)
    : space_(std::move(space)), entries_(std::move(entries)) {
  if (entries_.rows() != space_.dim() || entries_.cols() != space_.dim()) {
    throw Error(ErrorCode::dimension_mismatch,
                "operator shape " + std::to_string(entries_.rows()) + "x" +
                    std::to_string(entries_.cols()) + " on a space of dimension " +
                    std::to_string(space_.dim()));
  }
}

Operator Operator::identity(const HilbertSpace& space) {
  return {space, Mat::Identity(space.dim(), space.dim())};
}

Operator Operator::zero(const HilbertSpace& space) {
  return {space, Mat::Zero(space.dim(), space.dim())};
}

Vec Operator::apply(const Vec& v) const {
  if (v.size() != dim()) throw Error(ErrorCode::dimension_mismatch, "operator applied to vector");
  return entries_ * v;
}

Operator operator*(const Operator& lhs, const Operator& rhs) {
  require_same_space(lhs.space_, rhs.space_, "operator product");
  return {lhs.space_, lhs.entries_ * rhs.entries_};
}

Operator operator+(const Operator& lhs, const Operator& rhs) {
  require_same_space(lhs.space_, rhs.space_, "operator sum");
  return {lhs.space_, lhs.entries_ + rhs.entries_};
}

Operator operator-(const Operator& lhs, const Operator& rhs) {
  require_same_space(lhs.space_, rhs.space_, "operator difference");
  return {lhs.space_, lhs.entries_ - rhs.entries_};
}

Operator tensor(const Operator& first, const Operator& second) {
  return {HilbertSpace::tensor(first.space(), second.space()),
          linalg::kron(first.matrix(), second.matrix())};
}

StateVector::StateVector(HilbertSpace space, Vec amplitudes)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != space_.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "state vector length does not match its space");
  }
  const double residual = std::abs(amplitudes_.squaredNorm() - 1.0);
  if (residual > tol::norm) {
    throw Error(ErrorCode::invalid_state,
                "state vector squared norm off by " + std::to_string(residual));
  }
}

StateVector StateVector::normalized(HilbertSpace space, const Vec& amplitudes) {
  const double nrm = amplitudes.norm();
  if (!(nrm > 0.0)) throw Error(ErrorCode::invalid_state, "cannot normalize a zero vector");
  return {std::move(space), amplitudes / nrm};
}

StateVector StateVector::basis(const HilbertSpace& space, Eigen::Index index) {
  if (index < 0 || index >= space.dim()) {
    throw Error(ErrorCode::invalid_dimension, "basis index out of range");
  }
  return {space, Vec::Unit(space.dim(), index)};
}

Vec operator*(const Operator& op, const StateVector& psi) {
  require_same_space(op.space(), psi.space(), "operator on state");
  return op.matrix() * psi.amplitudes();
}

StateVector tensor(const StateVector& first, const StateVector& second) {
  const Vec& a = first.amplitudes();
  const Vec& b = second.amplitudes();
  Vec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return StateVector::normalized(HilbertSpace::tensor(first.space(), second.space()), out);
}

// ---------------------------------------------------------------------------
// DensityOperator

StateCheck check_density_matrix(const Mat& rho) {
  StateCheck c;
  c.hermiticity_residual = linalg::hermiticity_residual(rho);
  c.trace_residual = std::abs(rho.trace() - 1.0);
  c.min_eigenvalue = linalg::min_eigenvalue(rho);
  return c;
}

DensityOperator DensityOperator::from_matrix(HilbertSpace space, Mat entries) {
  if (entries.rows() != space.dim() || entries.cols() != space.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "density matrix shape does not match its space");
  }
  const StateCheck c = check_density_matrix(entries);
  if (!c.ok()) {
    std::ostringstream msg;
    msg << "hermiticity residual " << c.hermiticity_residual << ", trace residual "
        << c.trace_residual << ", min eigenvalue " << c.min_eigenvalue;
    throw Error(ErrorCode::invalid_state, msg.str());
  }
  return {std::move(space), std::move(entries)};
}

DensityOperator DensityOperator::from_unnormalized(HilbertSpace space, const Mat& entries) {
  if (entries.rows() != space.dim() || entries.cols() != space.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "density matrix shape does not match its space");
  }
  const double tr = entries.trace().real();
  if (!(tr >= 1e-14)) {
    throw Error(ErrorCode::degenerate_outcome,
                "normalizing trace " + std::to_string(tr) + " below 1e-14");
  }
  return {std::move(space), linalg::hermitian_part(entries) / tr};
}

DensityOperator DensityOperator::pure(const StateVector& psi) {
  const Vec& v = psi.amplitudes();
  return {psi.space(), v * v.adjoint()};
}

DensityOperator DensityOperator::maximally_mixed(const HilbertSpace& space) {
  const auto d = space.dim();
  return {space, Mat::Identity(d, d) / static_cast<double>(d)};
}

DensityOperator DensityOperator::fock(int n, int n_max) {
  return pure(StateVector::basis(HilbertSpace::fock(n_max), n));
}

double DensityOperator::purity() const {
  return linalg::trace_of_product(entries_, entries_).real();
}

cplx DensityOperator::expectation(const Operator& op) const {
  require_same_space(space_, op.space(), "expectation value");
  return linalg::trace_of_product(op.matrix(), entries_);
}

// ---------------------------------------------------------------------------
// Harmonic oscillator

LadderOps ladder_ops(int n_max) {
  if (n_max < 1) {
    throw Error(ErrorCode::invalid_dimension,
                "ladder operators need n_max >= 1, got " + std::to_string(n_max));
  }
  const auto space = HilbertSpace::fock(n_max);
  Mat a = Mat::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Mat number = Mat::Zero(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) number(n, n) = n;
  return {Operator(space, a), Operator(space, a.adjoint()), Operator(space, number)};
}

void check_guard_band(cplx alpha, int n_max) {
  const double amp2 = std::norm(alpha);
  if (amp2 > n_max / 4.0 + 1e-12) {
    std::ostringstream msg;
    msg << "|alpha|^2 = " << amp2 << " exceeds the guard band n_max/4 = " << n_max / 4.0;
    throw Error(ErrorCode::truncation_overflow, msg.str());
  }
}

StateVector coherent_state(cplx alpha, int n_max) {
  check_guard_band(alpha, n_max);
  Vec c(n_max + 1);
  c(0) = std::exp(-std::norm(alpha) / 2.0);
  for (int n = 1; n <= n_max; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return StateVector::normalized(HilbertSpace::fock(n_max), c);
}

Operator displacement(cplx alpha, int n_max) {
  check_guard_band(alpha, n_max);
  const auto ops = ladder_ops(n_max);
  const Mat generator = alpha * ops.a_dag.matrix() - std::conj(alpha) * ops.a.matrix();
  return {ops.a.space(), linalg::expm_anti_hermitian(generator)};
}

Operator func_of_number(const std::function<cplx(int)>& f, int n_max) {
  const auto space = HilbertSpace::fock(n_max);
  Mat d = Mat::Zero(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) d(n, n) = f(n);
  return {space, d};
}

Operator sin_over_sqrt_number(const std::function<double(int)>& theta, int n_max,
                              double value_at_zero) {
  return func_of_number(
      [&](int n) -> cplx {
        if (n == 0) return value_at_zero;
        return std::sin(theta(n) / 2.0) / std::sqrt(static_cast<double>(n));
      },
      n_max);
}

// ---------------------------------------------------------------------------
// Jaynes-Cummings

namespace {

Operator qubit_projector(int row, int col) {
  Mat m = Mat::Zero(2, 2);
  m(row, col) = 1.0;
  return {HilbertSpace::qubit(), m};
}

constexpr int kG = 0;
constexpr int kE = 1;

}  // namespace

Operator jc_resonant_propagator(double theta, int n_max) {
  if (n_max < 2) {
    throw Error(ErrorCode::invalid_dimension, "resonant propagator needs n_max >= 2");
  }
  const auto ops = ladder_ops(n_max);
  const auto cos_n = func_of_number(
      [&](int n) -> cplx { return std::cos(theta * std::sqrt(static_cast<double>(n)) / 2.0); },
      n_max);
  const auto cos_n1 = func_of_number(
      [&](int n) -> cplx {
        return std::cos(theta * std::sqrt(static_cast<double>(n + 1)) / 2.0);
      },
      n_max);
  // sin(theta sqrt(n)/2)/sqrt(n) -> theta/2 at n = 0.
  const auto sinc_n = func_of_number(
      [&](int n) -> cplx {
        if (n == 0) return theta / 2.0;
        const double r = std::sqrt(static_cast<double>(n));
        return std::sin(theta * r / 2.0) / r;
      },
      n_max);

  return tensor(cos_n, qubit_projector(kG, kG)) + tensor(cos_n1, qubit_projector(kE, kE)) -
         tensor(ops.a * sinc_n, qubit_projector(kE, kG)) +
         tensor(sinc_n * ops.a_dag, qubit_projector(kG, kE));
}

Operator jc_dispersive_propagator(double theta, int n_max) {
  const auto plus = func_of_number([&](int n) { return std::exp(I_unit * (n * theta)); }, n_max);
  const auto minus =
      func_of_number([&](int n) { return std::exp(-I_unit * (n * theta)); }, n_max);
  return tensor(plus, qubit_projector(kG, kG)) + tensor(minus, qubit_projector(kE, kE));
}

std::vector<Operator> measurement_ops_from_propagator(const Operator& u,
                                                      const StateVector& controller_state,
                                                      std::span<const StateVector> basis,
                                                      Eigen::Index guard_dim, double tolerance) {
  const auto& space = u.space();
  if (space.kind() != HilbertSpace::Kind::tensor) {
    throw Error(ErrorCode::dimension_mismatch, "propagator must act on a tensor-product space");
  }
  const HilbertSpace& sys = space.factors()[0];
  const HilbertSpace& meter = space.factors()[1];
  require_same_space(controller_state.space(), meter, "controller state");
  const Eigen::Index ds = sys.dim();
  const Eigen::Index dm = meter.dim();
  if (static_cast<Eigen::Index>(basis.size()) != dm) {
    throw Error(ErrorCode::invalid_argument, "basis size must equal the controller dimension");
  }

  Mat gram(dm, dm);
  for (Eigen::Index i = 0; i < dm; ++i) {
    require_same_space(basis[i].space(), meter, "basis element");
    for (Eigen::Index j = 0; j < dm; ++j) {
      gram(i, j) = basis[i].amplitudes().dot(basis[j].amplitudes());
    }
  }
  if ((gram - Mat::Identity(dm, dm)).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::invalid_argument, "controller basis is not orthonormal");
  }

  // W = U (I_S (x) |theta_C>), a (ds*dm) x ds matrix.
  const Mat lift = linalg::kron(Mat::Identity(ds, ds), controller_state.amplitudes());
  const Mat w = u.matrix() * lift;

  std::vector<Operator> out;
  out.reserve(dm);
  Mat completeness = Mat::Zero(ds, ds);
  for (Eigen::Index mu = 0; mu < dm; ++mu) {
    const Mat project = linalg::kron(Mat::Identity(ds, ds), basis[mu].amplitudes().adjoint());
    Mat m = project * w;
    completeness += m.adjoint() * m;
    out.emplace_back(sys, std::move(m));
  }

  const Eigen::Index g = (guard_dim < 0 || guard_dim > ds) ? ds : guard_dim;
  const double residual =
      (completeness.topLeftCorner(g, g) - Mat::Identity(g, g)).cwiseAbs().maxCoeff();
  if (residual > tolerance) {
    throw Error(ErrorCode::invalid_propagator,
                "completeness violated by " + std::to_string(residual) +
                    " on the guarded subspace");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Wigner function

double WignerGridSpec::x(int i) const {
  return n_x == 1 ? x_min : x_min + (x_max - x_min) * i / (n_x - 1);
}

double WignerGridSpec::p(int j) const {
  return n_p == 1 ? p_min : p_min + (p_max - p_min) * j / (n_p - 1);
}

WignerGrid wigner(const DensityOperator& rho, const WignerGridSpec& spec) {
  const int n_max = rho.space().n_max();
  if (spec.n_x < 1 || spec.n_p < 1 || !(spec.x_max >= spec.x_min) ||
      !(spec.p_max >= spec.p_min)) {
    throw Error(ErrorCode::invalid_argument, "malformed Wigner grid");
  }
  const double max_x = std::max(std::abs(spec.x_min), std::abs(spec.x_max));
  const double max_p = std::max(std::abs(spec.p_min), std::abs(spec.p_max));
  check_guard_band({max_x, max_p}, n_max);

  const auto d = rho.dim();
  const auto ops = ladder_ops(n_max);

  // D_{x+ip} = exp(ixp) D_x D_{ip}; the phase cancels in D^dagger rho D.
  // D_x = exp(x (a^dag - a)) shares one eigenbasis for every x, and
  // D_{ip} = R D_p R^dagger with R = exp(i pi N / 2).
  const Mat h = linalg::hermitian_part(I_unit * (ops.a_dag.matrix() - ops.a.matrix()));
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Mat& basis = es.eigenvectors();
  const RVec& lambda = es.eigenvalues();
  auto real_displacement = [&](double x) -> Mat {
    const Vec phases = (-I_unit * x * lambda.cast<cplx>()).array().exp();
    return basis * phases.asDiagonal() * basis.adjoint();
  };

  Vec parity(d), quarter(d);
  for (Eigen::Index n = 0; n < d; ++n) {
    parity(n) = (n % 2 == 0) ? 1.0 : -1.0;
    quarter(n) = std::exp(I_unit * (std::numbers::pi / 2.0 * static_cast<double>(n)));
  }

  // Q_p = D_{ip} P D_{ip}^dagger, stored transposed for the trace contraction.
  std::vector<Mat> parity_p(spec.n_p);
  for (int j = 0; j < spec.n_p; ++j) {
    const Mat dp = quarter.asDiagonal() * real_displacement(spec.p(j)) *
                   quarter.conjugate().asDiagonal();
    parity_p[j] = (dp * parity.asDiagonal() * dp.adjoint()).transpose();
  }

  WignerGrid grid{spec, RMat(spec.n_p, spec.n_x), 0.0};
  for (int i = 0; i < spec.n_x; ++i) {
    const Mat dx = real_displacement(spec.x(i));
    const Mat rho_x = dx.adjoint() * rho.matrix() * dx;
    for (int j = 0; j < spec.n_p; ++j) {
      const cplx w = (2.0 / std::numbers::pi) * parity_p[j].cwiseProduct(rho_x).sum();
      grid.samples(j, i) = w.real();
      grid.max_imag_residue = std::max(grid.max_imag_residue, std::abs(w.imag()));
    }
  }
  if (grid.max_imag_residue > 1e-9) {
    throw Error(ErrorCode::invariant_violation,
                "Wigner imaginary residue " + std::to_string(grid.max_imag_residue));
  }
  return grid;
}

double integrate(const WignerGrid& grid) {
  const auto& s = grid.spec;
  auto weights = [](int n, double lo, double hi) {
    RVec w = RVec::Ones(n);
    if (n == 1) return w;
    const double h = (hi - lo) / (n - 1);
    w *= h;
    w(0) *= 0.5;
    w(n - 1) *= 0.5;
    return w;
  };
  const RVec wx = weights(s.n_x, s.x_min, s.x_max);
  const RVec wp = weights(s.n_p, s.p_min, s.p_max);
  return wp.dot(grid.samples * wx);
}

void write_wigner_grid(std::ostream& out, const WignerGrid& grid) {
  const auto& s = grid.spec;
  const auto old = out.precision(17);
  out << s.x_min << ' ' << s.x_max << ' ' << s.p_min << ' ' << s.p_max << ' ' << s.n_x << ' '
      << s.n_p << '\n';
  for (int j = 0; j < s.n_p; ++j) {
    for (int i = 0; i < s.n_x; ++i) {
      if (i) out << ' ';
      out << grid.samples(j, i);
    }
    out << '\n';
  }
  out.precision(old);
}

WignerGrid read_wigner_grid(std::istream& in) {
  WignerGrid grid;
  auto& s = grid.spec;
  if (!(in >> s.x_min >> s.x_max >> s.p_min >> s.p_max >> s.n_x >> s.n_p) || s.n_x < 1 ||
      s.n_p < 1) {
    throw Error(ErrorCode::invalid_argument, "malformed Wigner grid header");
  }
  grid.samples.resize(s.n_p, s.n_x);
  for (int j = 0; j < s.n_p; ++j) {
    for (int i = 0; i < s.n_x; ++i) {
      if (!(in >> grid.samples(j, i))) {
        throw Error(ErrorCode::invalid_argument, "truncated Wigner grid body");
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Qubit

PauliOps pauli_ops() {
  const auto q = HilbertSpace::qubit();
  Mat sm = Mat::Zero(2, 2);
  sm(kG, kE) = 1.0;
  const Mat sp = sm.adjoint();
  return {Operator(q, sm + sp), Operator(q, I_unit * sm - I_unit * sp), Operator(q, sp * sm - sm * sp),
          Operator(q, sm), Operator(q, sp)};
}

BlochVector bloch_coordinates(const DensityOperator& rho) {
  if (rho.space().kind() != HilbertSpace::Kind::qubit) {
    throw Error(ErrorCode::dimension_mismatch, "Bloch coordinates need a qubit state");
  }
  const auto p = pauli_ops();
  return {rho.expectation(p.sx).real(), rho.expectation(p.sy).real(),
          rho.expectation(p.sz).real()};
}

}  // namespace qmarkov
