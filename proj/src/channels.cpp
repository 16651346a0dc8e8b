#include "qmarkov/channels.hpp"

#include <cmath>
#include <string>

#include "qmarkov/errors.hpp"

namespace qmarkov {

namespace {

// Eigenvalues below this are treated as zero when building square-root factors.
constexpr double kRankThreshold = 1e-14;

void require_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(what) + ": dimensions " + std::to_string(a.dim()) + " and " +
                    std::to_string(b.dim()));
  }
}

// B with rho = B B^dagger, keeping only the numerically positive spectrum.
Mat sqrt_factor(const Mat& rho) {
  Eigen::SelfAdjointEigenSolver<Mat> es(linalg::hermitian_part(rho));
  const RVec& lambda = es.eigenvalues();
  if (lambda.minCoeff() < tol::min_eigenvalue) {
    throw Error(ErrorCode::invalid_state,
                "eigenvalue " + std::to_string(lambda.minCoeff()) + " below clipping threshold");
  }
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) kept += lambda(i) > kRankThreshold;
  Mat b(rho.rows(), kept);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > kRankThreshold) b.col(col++) = es.eigenvectors().col(i) * std::sqrt(lambda(i));
  }
  return b;
}

}  // namespace

KrausChannel::KrausChannel(std::vector<Operator> operators, double tolerance,
                           Eigen::Index guard_dim)
    : operators_(std::move(operators)), tolerance_(tolerance), guard_dim_(guard_dim) {
  if (operators_.empty()) throw Error(ErrorCode::invalid_argument, "empty Kraus family");
  const auto& space = operators_.front().space();
  const auto d = space.dim();
  Mat sum = Mat::Zero(d, d);
  for (const auto& m : operators_) {
    require_same_space(space, m.space(), "Kraus operator");
    sum.noalias() += m.matrix().adjoint() * m.matrix();
  }
  const Eigen::Index g = (guard_dim_ < 0 || guard_dim_ > d) ? d : guard_dim_;
  guard_dim_ = g;
  residual_ = g == 0 ? 0.0 : (sum.topLeftCorner(g, g) - Mat::Identity(g, g)).cwiseAbs().maxCoeff();
  if (residual_ > tolerance_) {
    throw Error(ErrorCode::invalid_propagator,
                "partition of unity violated by " + std::to_string(residual_));
  }
}

KrausChannel compose(const KrausChannel& second, const KrausChannel& first) {
  require_same_space(second.space(), first.space(), "channel composition");
  std::vector<Operator> ops;
  ops.reserve(second.size() * first.size());
  for (const auto& n : second.operators()) {
    for (const auto& m : first.operators()) ops.push_back(n * m);
  }
  return KrausChannel(std::move(ops), second.tolerance() + first.tolerance(),
                      std::min(second.guard_dim(), first.guard_dim()));
}

ImperfectionMatrix::ImperfectionMatrix(RMat entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw Error(ErrorCode::invalid_dimension, "empty imperfection matrix");
  }
  if (entries_.minCoeff() < 0.0) {
    throw Error(ErrorCode::invalid_argument, "imperfection matrix has a negative entry");
  }
  const RVec sums = entries_.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < sums.size(); ++j) {
    if (std::abs(sums(j) - 1.0) > 1e-12) {
      throw Error(ErrorCode::invalid_argument,
                  "imperfection matrix column " + std::to_string(j) + " sums to " +
                      std::to_string(sums(j)));
    }
  }
}

ImperfectionMatrix ImperfectionMatrix::identity(int m) {
  return ImperfectionMatrix(RMat::Identity(m, m));
}

std::vector<Mat> kraus_terms(const KrausChannel& k, const DensityOperator& rho) {
  require_same_space(k.space(), rho.space(), "channel application");
  std::vector<Mat> out;
  out.reserve(k.size());
  for (const auto& m : k.operators()) out.push_back(m.matrix() * rho.matrix() * m.matrix().adjoint());
  return out;
}

DensityOperator apply_channel(const KrausChannel& k, const DensityOperator& rho,
                              double* leakage) {
  require_same_space(k.space(), rho.space(), "channel application");
  const auto d = rho.dim();
  Mat sum = Mat::Zero(d, d);
  for (const auto& m : k.operators()) sum.noalias() += m.matrix() * rho.matrix() * m.matrix().adjoint();
  if (leakage) *leakage = 1.0 - sum.trace().real();
  return DensityOperator::from_unnormalized(rho.space(), sum);
}

Operator apply_dual(const KrausChannel& k, const Operator& a) {
  require_same_space(k.space(), a.space(), "dual channel application");
  const auto d = a.dim();
  Mat sum = Mat::Zero(d, d);
  for (const auto& m : k.operators()) sum.noalias() += m.matrix().adjoint() * a.matrix() * m.matrix();
  return {a.space(), sum};
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_space(rho.space(), sigma.space(), "trace distance");
  return linalg::hermitian_eigenvalues(rho.matrix() - sigma.matrix()).cwiseAbs().sum();
}

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_space(rho.space(), sigma.space(), "fidelity");
  // tr sqrt(sqrt(rho) sigma sqrt(rho)) is the nuclear norm of B_rho^dagger B_sigma.
  const Mat br = sqrt_factor(rho.matrix());
  const Mat bs = sqrt_factor(sigma.matrix());
  if (br.cols() == 0 || bs.cols() == 0) return 0.0;
  const Mat overlap = br.adjoint() * bs;
  Eigen::JacobiSVD<Mat> svd(overlap);
  const double s = svd.singularValues().sum();
  return std::min(1.0, s * s);
}

ContractionReport contraction_check(const KrausChannel& k, const DensityOperator& rho,
                                    const DensityOperator& sigma, double slack) {
  const auto k_rho = apply_channel(k, rho);
  const auto k_sigma = apply_channel(k, sigma);
  ContractionReport r;
  r.distance_before = trace_distance(rho, sigma);
  r.distance_after = trace_distance(k_rho, k_sigma);
  r.fidelity_before = fidelity(rho, sigma);
  r.fidelity_after = fidelity(k_rho, k_sigma);
  r.distance_ok = r.distance_after <= r.distance_before + slack;
  r.fidelity_ok = r.fidelity_after >= r.fidelity_before - slack;
  return r;
}

FixedPointResult iterate_to_fixed_point(const KrausChannel& k, const DensityOperator& rho0,
                                        double tol, int max_iter) {
  FixedPointResult r{rho0, 0, false, 0.0};
  while (r.iterations < max_iter) {
    auto next = apply_channel(k, r.state);
    r.last_step = (next.matrix() - r.state.matrix()).norm();
    r.state = std::move(next);
    ++r.iterations;
    if (r.last_step < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace qmarkov
