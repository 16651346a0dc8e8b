#include "qmarkov/sme.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "qmarkov/errors.hpp"

namespace qmarkov {

DiffusiveSMEModel::DiffusiveSMEModel(Operator h, std::vector<DiffusiveChannel> channels)
    : h_(std::move(h)), channels_(std::move(channels)) {
  if (linalg::hermiticity_residual(h_.matrix()) > tol::hermiticity) {
    throw Error(ErrorCode::invalid_argument, "Hamiltonian is not Hermitian");
  }
  for (const auto& c : channels_) {
    if (!(c.l.space() == h_.space())) {
      throw Error(ErrorCode::dimension_mismatch, "channel operator on a different space");
    }
    if (!(c.eta >= 0.0 && c.eta <= 1.0)) {
      throw Error(ErrorCode::invalid_argument, "detection efficiency must lie in [0, 1]");
    }
  }
}

JumpDiffusiveSMEModel::JumpDiffusiveSMEModel(DiffusiveSMEModel base, std::vector<JumpChannel> jumps,
                                             RMat crosstalk)
    : base_(std::move(base)), jumps_(std::move(jumps)), crosstalk_(std::move(crosstalk)) {
  const auto m = static_cast<Eigen::Index>(jumps_.size());
  if (crosstalk_.rows() != m || crosstalk_.cols() != m) {
    throw Error(ErrorCode::dimension_mismatch, "crosstalk matrix must be square over the counters");
  }
  for (const auto& j : jumps_) {
    if (!(j.v.space() == base_.space())) {
      throw Error(ErrorCode::dimension_mismatch, "jump operator on a different space");
    }
    if (!(j.theta_bar >= 0.0)) throw Error(ErrorCode::invalid_argument, "negative dark-count rate");
  }
  if (m > 0 && crosstalk_.minCoeff() < 0.0) {
    throw Error(ErrorCode::invalid_argument, "negative crosstalk entry");
  }
  efficiency_ = m > 0 ? RVec(crosstalk_.colwise().sum().transpose()) : RVec();
  for (Eigen::Index k = 0; k < m; ++k) {
    if (efficiency_(k) > 1.0 + 1e-12) {
      throw Error(ErrorCode::invalid_argument, "counter efficiency above 1");
    }
  }
}

JumpDiffusiveSMEModel::JumpDiffusiveSMEModel(DiffusiveSMEModel base)
    : JumpDiffusiveSMEModel(std::move(base), {}, RMat(0, 0)) {}

int IntegratorConfig::steps() const {
  if (!(dt > 0.0) || !(horizon >= dt)) {
    throw Error(ErrorCode::invalid_argument, "need 0 < dt <= horizon");
  }
  return static_cast<int>(std::llround(horizon / dt));
}

namespace {

// Operators reused at every step.
struct Prepared {
  Mat drift;  // i H + (1/2) sum L^dagger L + (1/2) sum V^dagger V
  std::vector<Mat> l;
  std::vector<Mat> l2;
  RVec sqrt_eta;
  RVec eta;
  std::vector<Mat> v;
  RVec v_efficiency;
  RVec theta_bar;
  RMat crosstalk;
};

Prepared prepare(const DiffusiveSMEModel& base, const std::vector<JumpChannel>& jumps,
                 const RMat& crosstalk, const RVec& efficiency) {
  Prepared p;
  p.drift = I_unit * base.hamiltonian().matrix();
  const auto nl = base.channels().size();
  p.sqrt_eta.resize(nl);
  p.eta.resize(nl);
  for (std::size_t k = 0; k < nl; ++k) {
    const Mat& l = base.channels()[k].l.matrix();
    p.drift += 0.5 * l.adjoint() * l;
    p.l.push_back(l);
    p.l2.push_back(l * l);
    p.eta(k) = base.channels()[k].eta;
    p.sqrt_eta(k) = std::sqrt(p.eta(k));
  }
  p.theta_bar.resize(jumps.size());
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    const Mat& v = jumps[k].v.matrix();
    p.drift += 0.5 * v.adjoint() * v;
    p.v.push_back(v);
    p.theta_bar(k) = jumps[k].theta_bar;
  }
  p.v_efficiency = efficiency;
  p.crosstalk = crosstalk;
  return p;
}

Prepared prepare(const DiffusiveSMEModel& model) { return prepare(model, {}, RMat(0, 0), RVec()); }

Prepared prepare(const JumpDiffusiveSMEModel& model) {
  RVec eff(model.jumps().size());
  for (std::size_t k = 0; k < model.jumps().size(); ++k) eff(k) = model.efficiency(k);
  return prepare(model.base(), model.jumps(), model.crosstalk(), eff);
}

RVec means(const Prepared& p, const Mat& rho) {
  RVec out(p.l.size());
  for (std::size_t k = 0; k < p.l.size(); ++k) {
    out(k) = p.sqrt_eta(k) * 2.0 * linalg::trace_of_product(p.l[k], rho).real();
  }
  return out;
}

// K_xi(x) with xi = dy and the Milstein correction built from the innovation w:
// M = I - dt drift + sum sqrt(eta) dy L + sum (eta/2)(w^2 - dt) L^2,
// K(x) = M x M^dagger + sum (1-eta) L x L^dagger dt + sum (1-eff) V x V^dagger dt.
Mat partial_kraus(const Prepared& p, const Mat& x, double dt, const RVec& dy, const RVec& w) {
  const auto d = x.rows();
  Mat m = Mat::Identity(d, d) - dt * p.drift;
  for (std::size_t k = 0; k < p.l.size(); ++k) {
    m += (p.sqrt_eta(k) * dy(k)) * p.l[k];
    m += (0.5 * p.eta(k) * (w(k) * w(k) - dt)) * p.l2[k];
  }
  Mat out = m * x * m.adjoint();
  for (std::size_t k = 0; k < p.l.size(); ++k) {
    if (p.eta(k) < 1.0) out += ((1.0 - p.eta(k)) * dt) * (p.l[k] * x * p.l[k].adjoint());
  }
  for (std::size_t k = 0; k < p.v.size(); ++k) {
    const double leftover = 1.0 - p.v_efficiency(k);
    if (leftover > 0.0) out += (leftover * dt) * (p.v[k] * x * p.v[k].adjoint());
  }
  return out;
}

DensityOperator normalized(const HilbertSpace& space, const Mat& x) {
  return DensityOperator::from_unnormalized(space, x);
}

void check_wiener(const Prepared& p, const RVec& v, const char* what) {
  if (v.size() != static_cast<Eigen::Index>(p.l.size())) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(what) + " needs one increment per diffusive channel");
  }
}

Mat dissipator(const Mat& l, const Mat& rho) {
  const Mat ldl = l.adjoint() * l;
  return l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
}

}  // namespace

Mat lindblad_rhs(const DiffusiveSMEModel& model, const Mat& rho) {
  return lindblad_rhs(JumpDiffusiveSMEModel(model), rho);
}

Mat lindblad_rhs(const JumpDiffusiveSMEModel& model, const Mat& rho) {
  const Mat& h = model.base().hamiltonian().matrix();
  Mat out = -I_unit * (h * rho - rho * h);
  for (const auto& c : model.base().channels()) out += dissipator(c.l.matrix(), rho);
  for (const auto& j : model.jumps()) out += dissipator(j.v.matrix(), rho);
  return out;
}

RVec measurement_means(const DiffusiveSMEModel& model, const DensityOperator& rho) {
  return means(prepare(model), rho.matrix());
}

DensityOperator euler_milstein_step(const DiffusiveSMEModel& model, const DensityOperator& rho,
                                    double dt, const RVec& dw) {
  const Prepared p = prepare(model);
  check_wiener(p, dw, "Euler-Milstein step");
  const RVec dy = dw + means(p, rho.matrix()) * dt;
  return normalized(rho.space(), partial_kraus(p, rho.matrix(), dt, dy, dw));
}

DensityOperator belavkin_filter_step(const DiffusiveSMEModel& model, const DensityOperator& rho_hat,
                                     const RVec& dy, double dt) {
  const Prepared p = prepare(model);
  check_wiener(p, dy, "filter step");
  const RVec innovation = dy - means(p, rho_hat.matrix()) * dt;
  return normalized(rho_hat.space(), partial_kraus(p, rho_hat.matrix(), dt, dy, innovation));
}

ContinuousTrajectory simulate_diffusive(const DiffusiveSMEModel& model, const DensityOperator& rho0,
                                        const IntegratorConfig& cfg, Rng& rng) {
  return simulate_jump(JumpDiffusiveSMEModel(model), rho0, cfg, rng);
}

ContinuousTrajectory simulate_jump(const JumpDiffusiveSMEModel& model, const DensityOperator& rho0,
                                   const IntegratorConfig& cfg, Rng& rng) {
  if (!(model.space() == rho0.space())) {
    throw Error(ErrorCode::dimension_mismatch, "initial state and model spaces differ");
  }
  const int steps = cfg.steps();
  const double dt = cfg.dt;
  const Prepared p = prepare(model);
  const auto nl = static_cast<Eigen::Index>(p.l.size());
  const auto nv = static_cast<Eigen::Index>(p.v.size());
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ContinuousTrajectory t{{}, rho0, linalg::min_eigenvalue(rho0.matrix()),
                         std::vector<long>(nv, 0)};
  DensityOperator& rho = t.final_state;
  RVec dw(nl), rates(nv);
  for (int k = 0; k < steps; ++k) {
    for (Eigen::Index j = 0; j < nl; ++j) dw(j) = gauss(rng);
    const RVec dy = dw + means(p, rho.matrix()) * dt;

    int jumped = -1;
    Mat source = rho.matrix();
    if (nv > 0) {
      RVec v_flux(nv);
      for (Eigen::Index j = 0; j < nv; ++j) {
        v_flux(j) = linalg::conjugated_diagonal(p.v[j], rho.matrix()).sum();
      }
      rates = p.theta_bar + p.crosstalk * v_flux;
      const double p_none = 1.0 - rates.sum() * dt;
      if (!(p_none > 0.0 && p_none <= 1.0)) {
        throw Error(ErrorCode::dt_too_large,
                    "no-jump probability " + std::to_string(p_none) + " at step " +
                        std::to_string(k));
      }
      const double u = uniform(rng);
      if (u >= p_none) {
        double cumulative = p_none;
        for (Eigen::Index j = 0; j < nv; ++j) {
          cumulative += rates(j) * dt;
          jumped = static_cast<int>(j);
          if (u < cumulative) break;
        }
        source = p.theta_bar(jumped) * rho.matrix();
        for (Eigen::Index j = 0; j < nv; ++j) {
          const double w = p.crosstalk(jumped, j);
          if (w != 0.0) source += w * (p.v[j] * rho.matrix() * p.v[j].adjoint());
        }
        ++t.jump_counts[jumped];
      }
    }

    const Mat next = partial_kraus(p, source, dt, dy, dw);
    const double tr = next.trace().real();
    if (!(tr > 1e-14)) {
      throw Error(ErrorCode::invariant_violation,
                  "vanishing trace at step " + std::to_string(k));
    }
    rho = normalized(rho.space(), next);
    if (cfg.check_positivity) {
      const double lmin = linalg::min_eigenvalue(rho.matrix());
      t.min_eigenvalue = std::min(t.min_eigenvalue, lmin);
      if (lmin < tol::min_eigenvalue) {
        throw Error(ErrorCode::invariant_violation,
                    "min eigenvalue " + std::to_string(lmin) + " at step " + std::to_string(k));
      }
    }

    const bool keep = cfg.record_stride > 0 && (k + 1) % cfg.record_stride == 0;
    const bool snap = cfg.snapshot_stride > 0 && (k + 1) % cfg.snapshot_stride == 0;
    if (keep || snap) {
      ContinuousRecord r;
      r.step = k;
      r.time = (k + 1) * dt;
      r.dy = dy;
      r.dn.assign(nv, 0);
      if (jumped >= 0) r.dn[jumped] = 1;
      r.populations = rho.populations();
      if (snap) r.snapshot = rho.matrix();
      t.records.push_back(std::move(r));
    }
  }
  return t;
}

void write_continuous_records(std::ostream& out, const std::vector<ContinuousRecord>& records) {
  const auto& first = records.empty() ? ContinuousRecord{} : records.front();
  out << "step time";
  for (Eigen::Index k = 0; k < first.dy.size(); ++k) out << " dy" << k + 1;
  for (std::size_t k = 0; k < first.dn.size(); ++k) out << " dN" << k + 1;
  for (Eigen::Index n = 0; n < first.populations.size(); ++n) out << " p" << n;
  out << '\n';
  const auto old = out.precision(17);
  for (const auto& r : records) {
    out << r.step << ' ' << r.time;
    for (Eigen::Index k = 0; k < r.dy.size(); ++k) out << ' ' << r.dy(k);
    for (int n : r.dn) out << ' ' << n;
    for (Eigen::Index n = 0; n < r.populations.size(); ++n) out << ' ' << r.populations(n);
    out << '\n';
  }
  out.precision(old);
}

Mat integrate_lindblad_rk4(const JumpDiffusiveSMEModel& model, const Mat& rho0, double horizon,
                           double h) {
  const long steps = std::lround(horizon / h);
  Mat rho = rho0;
  for (long k = 0; k < steps; ++k) {
    const Mat k1 = lindblad_rhs(model, rho);
    const Mat k2 = lindblad_rhs(model, rho + 0.5 * h * k1);
    const Mat k3 = lindblad_rhs(model, rho + 0.5 * h * k2);
    const Mat k4 = lindblad_rhs(model, rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

// ---------------------------------------------------------------------------

DiffusiveSMEModel catkerr_model(double u, double kappa, double kappa_c, int n_max) {
  if (!(u > 0.0 && kappa > 0.0 && kappa_c > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "u, kappa and kappa_c must be positive");
  }
  const auto ops = ladder_ops(n_max);
  const Operator parity = func_of_number([](int n) -> cplx { return n % 2 ? -1.0 : 1.0; }, n_max);
  Operator h = (I_unit * u) * (ops.a_dag - ops.a);
  return DiffusiveSMEModel(std::move(h), {{std::sqrt(kappa) * ops.a, 0.0},
                                          {std::sqrt(kappa_c) * (parity * ops.a), 0.0}});
}

DiffusiveSMEModel cat_qubit_model(int r, double u, double kappa, int n_max) {
  if (r < 2) throw Error(ErrorCode::invalid_argument, "cat order r must be at least 2");
  if (!(u > 0.0 && kappa > 0.0)) throw Error(ErrorCode::invalid_argument, "u and kappa must be positive");
  const auto ops = ladder_ops(n_max);
  Operator ar = ops.a;
  for (int k = 1; k < r; ++k) ar = ar * ops.a;
  const Operator ar_dag = ar.adjoint();
  Operator h = (I_unit * u) * (ar_dag - ar);
  return DiffusiveSMEModel(std::move(h), {{std::sqrt(kappa) * ar, 0.0}});
}

cplx cat_qubit_amplitude(int r, double u, double kappa, int s) {
  const double magnitude = std::pow(2.0 * u / kappa, 1.0 / r);
  return magnitude * std::exp(I_unit * (2.0 * std::numbers::pi * s / r));
}

void gauss_legendre(int n, RVec& nodes, RVec& weights) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "need at least one quadrature node");
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes(i) = -x;
    nodes(n - 1 - i) = x;
    weights(i) = weights(n - 1 - i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

// log of mu(x) dx/ds at x = alpha tanh(s), up to a constant.
double catkerr_log_weight(double s, double alpha, double r_c) {
  const double a2 = alpha * alpha;
  const double t = std::tanh(s);
  // log sech^2 s = -2 (|s| + log1p(exp(-2|s|)) - log 2)
  const double log_sech2 = -2.0 * (std::abs(s) + std::log1p(std::exp(-2.0 * std::abs(s))) - std::log(2.0));
  // log(1 + tanh s) = log 2 - log1p(exp(-2 s))
  const double log_one_plus_t = std::log(2.0) - std::log1p(std::exp(-2.0 * s));
  return r_c * (a2 * (std::log(a2) + log_sech2) + a2 * t * t) + log_one_plus_t;
}

}  // namespace

CatKerrSteadyState catkerr_steady_state(double u, double kappa, double kappa_c, int n_max,
                                        int nodes) {
  if (!(u > 0.0 && kappa > 0.0 && kappa_c > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "u, kappa and kappa_c must be positive");
  }
  const double alpha = 2.0 * u / (kappa + kappa_c);
  const double r_c = 2.0 * kappa_c / (kappa + kappa_c);
  check_guard_band(alpha, n_max);

  // Range in s where the weight is within exp(-45) of its peak.
  double peak = -INFINITY;
  for (double s = -40.0; s <= 40.0; s += 0.01) peak = std::max(peak, catkerr_log_weight(s, alpha, r_c));
  const double floor = peak - 45.0;
  double s_min = 0.0, s_max = 0.0;
  while (s_min > -200.0 && catkerr_log_weight(s_min, alpha, r_c) > floor) s_min -= 0.05;
  while (s_max < 200.0 && catkerr_log_weight(s_max, alpha, r_c) > floor) s_max += 0.05;

  RVec x, w;
  gauss_legendre(nodes, x, w);
  const double half = (s_max - s_min) / 2.0;
  const double mid = (s_max + s_min) / 2.0;
  const auto d = n_max + 1;
  Mat rho = Mat::Zero(d, d);
  for (int i = 0; i < nodes; ++i) {
    const double s = mid + half * x(i);
    const double weight = w(i) * half * std::exp(catkerr_log_weight(s, alpha, r_c) - peak);
    const Vec psi = coherent_state(alpha * std::tanh(s), n_max).amplitudes();
    rho.noalias() += weight * psi * psi.adjoint();
  }
  return {DensityOperator::from_unnormalized(HilbertSpace::fock(n_max), rho), alpha, r_c, s_min,
          s_max};
}

}  // namespace qmarkov
