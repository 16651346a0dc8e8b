#include "qmarkov/linalg.hpp"

#include <cmath>

#include "qmarkov/errors.hpp"

namespace qmarkov {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_dimension: return "invalid dimension";
    case ErrorCode::truncation_overflow: return "truncation overflow";
    case ErrorCode::invalid_propagator: return "invalid propagator";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::invalid_state: return "invalid state";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::degenerate_outcome: return "degenerate outcome";
    case ErrorCode::incompatible_outcome: return "incompatible outcome";
    case ErrorCode::dt_too_large: return "dt too large";
    case ErrorCode::invariant_violation: return "invariant violation";
  }
  return "unknown error";
}

namespace linalg {

Mat expm(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::invalid_dimension, "expm of a non-square matrix");
  }
  const Eigen::Index n = a.rows();
  if (n == 0) return a;

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  static constexpr double theta13 = 5.371920351148152;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  }
  const Mat as = a / std::ldexp(1.0, squarings);
  const Mat id = Mat::Identity(n, n);
  const Mat a2 = as * as;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;

  const Mat u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                      b[3] * a2 + b[1] * id;
  const Mat u = as * u_inner;
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                b[2] * a2 + b[0] * id;

  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

Mat expm_anti_hermitian(const Mat& a) {
  // a = -i h with h Hermitian, so exp(a) = V exp(-i lambda) V^dagger.
  const Mat h = hermitian_part(I_unit * a);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Vec phases = (-I_unit * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

RVec hermitian_eigenvalues(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Mat& a) { return hermitian_eigenvalues(a).minCoeff(); }

double hermiticity_residual(const Mat& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

cplx trace_of_product(const Mat& a, const Mat& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

RVec conjugated_diagonal(const Mat& a, const Mat& b) {
  const Mat ab = a * b;
  return ab.cwiseProduct(a.conjugate()).rowwise().sum().real();
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace linalg
}  // namespace qmarkov
