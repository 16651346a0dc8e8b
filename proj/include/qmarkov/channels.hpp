#pragma once

#include <vector>

#include "qmarkov/fockalg.hpp"

namespace qmarkov {

/// Finite Kraus family {M_mu} on a common space with sum M^dagger M = I,
/// checked on the first `guard_dim` basis states (all states when negative).
class KrausChannel {
 public:
  explicit KrausChannel(std::vector<Operator> operators, double tolerance = 1e-10,
                        Eigen::Index guard_dim = -1);

  const std::vector<Operator>& operators() const { return operators_; }
  const Operator& operator[](std::size_t mu) const { return operators_[mu]; }
  std::size_t size() const { return operators_.size(); }
  const HilbertSpace& space() const { return operators_.front().space(); }
  double tolerance() const { return tolerance_; }
  Eigen::Index guard_dim() const { return guard_dim_; }

  /// Largest entry of sum M^dagger M - I on the guarded block.
  double completeness_residual() const { return residual_; }

 private:
  std::vector<Operator> operators_;
  double tolerance_;
  Eigen::Index guard_dim_;
  double residual_ = 0.0;
};

/// Composition: first `first`, then `second`. Kraus family {N_nu M_mu}.
KrausChannel compose(const KrausChannel& second, const KrausChannel& first);

/// Left-stochastic matrix eta(mu', mu): probability of reading mu' when the
/// physical outcome is mu.
class ImperfectionMatrix {
 public:
  explicit ImperfectionMatrix(RMat entries);
  static ImperfectionMatrix identity(int m);

  int readings() const { return static_cast<int>(entries_.rows()); }
  int outcomes() const { return static_cast<int>(entries_.cols()); }
  double operator()(int reading, int outcome) const { return entries_(reading, outcome); }
  const RMat& matrix() const { return entries_; }

 private:
  RMat entries_;
};

/// The unnormalized terms M_mu rho M_mu^dagger, one per Kraus operator.
std::vector<Mat> kraus_terms(const KrausChannel& k, const DensityOperator& rho);

/// sum M rho M^dagger, renormalized. The pre-normalization trace deficit is
/// written to `leakage` when provided.
DensityOperator apply_channel(const KrausChannel& k, const DensityOperator& rho,
                              double* leakage = nullptr);

/// sum M^dagger A M
Operator apply_dual(const KrausChannel& k, const Operator& a);

/// tr|rho - sigma| (no factor 1/2).
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);

/// (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);

struct ContractionReport {
  double distance_before = 0.0;
  double distance_after = 0.0;
  double fidelity_before = 0.0;
  double fidelity_after = 0.0;
  bool distance_ok = false;
  bool fidelity_ok = false;

  bool ok() const { return distance_ok && fidelity_ok; }
};

ContractionReport contraction_check(const KrausChannel& k, const DensityOperator& rho,
                                    const DensityOperator& sigma, double slack = 1e-10);

struct FixedPointResult {
  DensityOperator state;
  int iterations = 0;
  bool converged = false;
  double last_step = 0.0;  // Frobenius norm of the final step change
};

/// Power iteration rho <- K(rho) until the Frobenius step change drops below tol.
FixedPointResult iterate_to_fixed_point(const KrausChannel& k, const DensityOperator& rho0,
                                        double tol, int max_iter);

}  // namespace qmarkov
