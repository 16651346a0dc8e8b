#include "qmarkov/random.hpp"

#include <cmath>

namespace qmarkov::random {

Mat ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      m(i, j) = {re, im};
    }
  }
  return m;
}

Mat haar_unitary(Eigen::Index d, Rng& rng) {
  Eigen::HouseholderQR<Mat> qr(ginibre(d, d, rng));
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

Vec unit_vector(Eigen::Index d, Rng& rng) {
  Vec v = ginibre(d, 1, rng).col(0);
  return v / v.norm();
}

DensityOperator density_matrix(const HilbertSpace& space, Rng& rng, Eigen::Index rank) {
  const auto d = space.dim();
  const Mat g = ginibre(d, rank < 1 ? d : rank, rng);
  return DensityOperator::from_unnormalized(space, g * g.adjoint());
}

DensityOperator diagonal_state(const HilbertSpace& space, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  const auto d = space.dim();
  Mat m = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = e(rng);
  return DensityOperator::from_unnormalized(space, m);
}

Mat hermitian(Eigen::Index d, Rng& rng) { return linalg::hermitian_part(ginibre(d, d, rng)); }

KrausChannel channel(const HilbertSpace& space, int m, Rng& rng) {
  const auto ancilla = HilbertSpace::fock(m - 1);
  const auto joint = HilbertSpace::tensor(space, ancilla);
  const Operator u(joint, haar_unitary(joint.dim(), rng));
  std::vector<StateVector> basis;
  for (int k = 0; k < m; ++k) basis.push_back(StateVector::basis(ancilla, k));
  return KrausChannel(measurement_ops_from_propagator(u, basis.front(), basis));
}

}  // namespace qmarkov::random
