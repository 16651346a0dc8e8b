#pragma once

#include <functional>
#include <vector>

#include "qmarkov/channels.hpp"
#include "qmarkov/trajectories.hpp"

namespace qmarkov {

// ---------------------------------------------------------------------------
// QND measurement

struct DispersiveParams {
  double phi0 = 0.61;
  double phi_r = 0.52;
  int n_max = 15;

  /// cos^2((phi0 n + phi_r)/2) on {0..n_max}.
  RVec ground_probabilities() const;
  /// True when n -> cos^2((phi0 n + phi_r)/2) is injective on {0..n_max}
  /// (pairwise gaps above `min_gap`).
  bool injective(double min_gap = 1e-9) const;
};

struct QndOps {
  Operator mg;
  Operator me;
};

/// M_g = cos((phi0 N + phi_r)/2), M_e = sin((phi0 N + phi_r)/2).
QndOps qnd_ops(const DispersiveParams& p);
KrausChannel qnd_channel(const DispersiveParams& p);

struct DetectionErrorParams {
  double eta_g = 0.0;  // P(read e | atom in g)
  double eta_e = 0.0;  // P(read g | atom in e)

  /// Rows are readings (g, e), columns physical outcomes (g, e).
  ImperfectionMatrix matrix() const;
};

/// Bayes update for reading y (0 = g, 1 = e) with detection errors.
DensityOperator error_update(const DensityOperator& rho, int y, const DispersiveParams& qnd,
                             const DetectionErrorParams& err);

// ---------------------------------------------------------------------------
// Lyapunov feedback

/// sigma_n on {0..n_max} for target n_bar.
RVec sigma_weights(int n_bar, int n_max);

struct LyapunovParams {
  int n_bar = 2;
  double epsilon = 0.1;
  double u_bar = 1.0;
  int grid_count = 41;
  RVec sigma;

  static LyapunovParams make(int n_bar, int n_max, double epsilon = 0.1, double u_bar = 1.0,
                             int grid_count = 41);
  /// Uniform grid on [-u_bar, u_bar]; odd count so 0 is a member.
  std::vector<double> control_grid() const;
};

/// V(rho) = sum_n (-epsilon p_n^2 + sigma_n p_n) with p_n = <n|rho|n>.
double lyapunov_value(const RVec& populations, const LyapunovParams& p);
double lyapunov_value(const DensityOperator& rho, const LyapunovParams& p);

/// Argmin over the control grid of V(D_u K(rho) D_u^dagger), with K the
/// averaged QND map. Ties go to the smallest |u|, then to negative u.
class LyapunovFeedback {
 public:
  LyapunovFeedback(LyapunovParams params, const DispersiveParams& qnd);

  double operator()(const DensityOperator& rho) const;
  /// V after the averaged step followed by displacement u.
  double predicted_value(const DensityOperator& rho, double u) const;
  const LyapunovParams& params() const { return params_; }

 private:
  Mat averaged(const DensityOperator& rho) const;

  LyapunovParams params_;
  RMat average_weights_;                   // c_i c_j + s_i s_j
  std::vector<double> order_;              // candidates by |u|, negatives first
  std::vector<Mat> displacements_;         // aligned with order_
};

double feedback(const DensityOperator& rho, const LyapunovParams& p, const DispersiveParams& qnd);

struct SupermartingaleGap {
  double q = 0.0;
  double residual = 0.0;
};

/// Q(rho) for V(rho) = -sum p_n^2 and |E[V(rho+)] - V(rho) + Q(rho)|.
SupermartingaleGap supermartingale_gap(const DensityOperator& rho, const DispersiveParams& qnd);

/// Channel family u -> {D_u M_g, D_u M_e} over the Lyapunov control grid.
ControlledMarkovModel controlled_photonbox_model(const DispersiveParams& qnd,
                                                 const DetectionErrorParams& err,
                                                 const LyapunovParams& p);

// ---------------------------------------------------------------------------
// Reservoir engineering

struct ReservoirParams {
  double u = 0.4;
  int n_max = 20;
  int sign = 1;
  std::function<double(int)> theta = default_theta;
  std::function<double(int)> h_k = default_h_k;

  /// (pi/2)(1 - 1/(n+1))
  static double default_theta(int n);
  /// pi n^2 / 2
  static double default_h_k(int n);
  void validate() const;
};

struct ReservoirOps {
  Operator mg;
  Operator me;
};

/// Operators in the rotating (Kerr) frame.
ReservoirOps reservoir_ops(const ReservoirParams& r);

/// rho = exp(-i h_K(N)) rho_K exp(i h_K(N)).
DensityOperator reservoir_frame(const DensityOperator& rho_k, const ReservoirParams& r);

/// Lab-frame channel; completeness is checked below n_max.
KrausChannel reservoir_channel(const ReservoirParams& r);

struct KerrCat {
  StateVector lhs;
  StateVector rhs;
  double residual;
};

/// exp(-i pi N^2/2)|alpha> against (exp(-i pi/4)/sqrt 2)(|alpha> + i|-alpha>).
KerrCat kerr_cat(double alpha, int n_max);

}  // namespace qmarkov
