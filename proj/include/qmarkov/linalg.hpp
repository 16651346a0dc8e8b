#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qmarkov {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I_unit{0.0, 1.0};

namespace linalg {

/// exp(A) for a general square matrix: scaling and squaring with the
/// degree-13 Pade approximant (Higham 2005).
Mat expm(const Mat& a);

/// exp(A) for anti-Hermitian A through the eigendecomposition of iA.
/// The result is unitary to machine precision.
Mat expm_anti_hermitian(const Mat& a);

/// Eigenvalues (ascending) of the Hermitian part of `a`.
RVec hermitian_eigenvalues(const Mat& a);

double min_eigenvalue(const Mat& a);

/// Largest absolute entry of A - A^dagger.
double hermiticity_residual(const Mat& a);

/// (A + A^dagger)/2
Mat hermitian_part(const Mat& a);

/// tr(A B) without forming the product.
cplx trace_of_product(const Mat& a, const Mat& b);

/// Diagonal of A B A^dagger without forming the full product.
RVec conjugated_diagonal(const Mat& a, const Mat& b);

/// Kronecker product A (x) B with row index i*rows(B)+k.
Mat kron(const Mat& a, const Mat& b);

}  // namespace linalg
}  // namespace qmarkov
