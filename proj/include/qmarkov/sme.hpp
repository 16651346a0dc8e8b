#pragma once

#include <optional>
#include <vector>

#include "qmarkov/fockalg.hpp"
#include "qmarkov/trajectories.hpp"

namespace qmarkov {

struct DiffusiveChannel {
  Operator l;
  double eta = 0.0;  // detection efficiency; 0 means unmeasured
};

class DiffusiveSMEModel {
 public:
  DiffusiveSMEModel(Operator h, std::vector<DiffusiveChannel> channels);

  const Operator& hamiltonian() const { return h_; }
  const std::vector<DiffusiveChannel>& channels() const { return channels_; }
  const HilbertSpace& space() const { return h_.space(); }

 private:
  Operator h_;
  std::vector<DiffusiveChannel> channels_;
};

struct JumpChannel {
  Operator v;
  double theta_bar = 0.0;  // dark-count rate of counter mu
};

/// Diffusive model plus counters. crosstalk(mu, mu') is the probability that
/// a quantum jump through V_mu' clicks counter mu; its column sums are the
/// counter efficiencies and must not exceed 1.
class JumpDiffusiveSMEModel {
 public:
  JumpDiffusiveSMEModel(DiffusiveSMEModel base, std::vector<JumpChannel> jumps, RMat crosstalk);
  /// No counters: reproduces the diffusive model.
  explicit JumpDiffusiveSMEModel(DiffusiveSMEModel base);

  const DiffusiveSMEModel& base() const { return base_; }
  const std::vector<JumpChannel>& jumps() const { return jumps_; }
  const RMat& crosstalk() const { return crosstalk_; }
  double efficiency(std::size_t mu) const { return efficiency_(mu); }
  const HilbertSpace& space() const { return base_.space(); }

 private:
  DiffusiveSMEModel base_;
  std::vector<JumpChannel> jumps_;
  RMat crosstalk_;
  RVec efficiency_;
};

struct IntegratorConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  int record_stride = 1;    // keep every k-th step in the record list
  int snapshot_stride = 0;  // 0 disables full-state snapshots
  bool check_positivity = true;

  int steps() const;
};

/// -i[H, rho] + sum D[L](rho) + sum D[V](rho)
Mat lindblad_rhs(const DiffusiveSMEModel& model, const Mat& rho);
Mat lindblad_rhs(const JumpDiffusiveSMEModel& model, const Mat& rho);

/// One positivity-preserving Euler-Milstein step with Wiener increments dW
/// (one per diffusive channel).
DensityOperator euler_milstein_step(const DiffusiveSMEModel& model, const DensityOperator& rho,
                                    double dt, const RVec& dw);

/// Continuous-time filter step driven by the observed increments dy.
DensityOperator belavkin_filter_step(const DiffusiveSMEModel& model, const DensityOperator& rho_hat,
                                     const RVec& dy, double dt);

/// sqrt(eta) tr((L + L^dagger) rho) per channel.
RVec measurement_means(const DiffusiveSMEModel& model, const DensityOperator& rho);

struct ContinuousRecord {
  int step = 0;
  double time = 0.0;  // end of the step
  RVec dy;
  std::vector<int> dn;  // one entry per counter
  RVec populations;
  std::optional<Mat> snapshot;
};

struct ContinuousTrajectory {
  std::vector<ContinuousRecord> records;
  DensityOperator final_state;
  double min_eigenvalue = 0.0;  // over all steps (when checked)
  std::vector<long> jump_counts;
};

ContinuousTrajectory simulate_diffusive(const DiffusiveSMEModel& model, const DensityOperator& rho0,
                                        const IntegratorConfig& cfg, Rng& rng);

/// Gaussian increments are drawn first, then one uniform for the counter
/// configuration (only when counters exist).
ContinuousTrajectory simulate_jump(const JumpDiffusiveSMEModel& model, const DensityOperator& rho0,
                                   const IntegratorConfig& cfg, Rng& rng);

/// Header: "step time dy1 .. dN1 .. p0 ..".
void write_continuous_records(std::ostream& out, const std::vector<ContinuousRecord>& records);

/// Classic fourth-order integration of the Lindblad equation with fixed step h.
Mat integrate_lindblad_rk4(const JumpDiffusiveSMEModel& model, const Mat& rho0, double horizon,
                           double h);

// ---------------------------------------------------------------------------
// Coherent-feedback examples

/// H = i u (a^dagger - a), L = sqrt(kappa) a, L_c = sqrt(kappa_c) exp(i pi N) a.
DiffusiveSMEModel catkerr_model(double u, double kappa, double kappa_c, int n_max);

/// H = i u ((a^dagger)^r - a^r), L = sqrt(kappa) a^r.
DiffusiveSMEModel cat_qubit_model(int r, double u, double kappa, int n_max);

/// exp(2 i pi s / r) (2u/kappa)^(1/r)
cplx cat_qubit_amplitude(int r, double u, double kappa, int s);

struct CatKerrSteadyState {
  DensityOperator state;
  double alpha;     // 2u/(kappa + kappa_c)
  double r_c;       // 2 kappa_c/(kappa + kappa_c)
  double s_min;     // quadrature range in x = alpha tanh(s)
  double s_max;
};

/// P-representation steady state by Gauss-Legendre quadrature in s.
CatKerrSteadyState catkerr_steady_state(double u, double kappa, double kappa_c, int n_max,
                                        int nodes = 400);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, RVec& nodes, RVec& weights);

}  // namespace qmarkov
