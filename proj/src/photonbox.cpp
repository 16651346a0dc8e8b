#include "qmarkov/photonbox.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qmarkov/errors.hpp"

namespace qmarkov {

RVec DispersiveParams::ground_probabilities() const {
  RVec c(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double x = std::cos((phi0 * n + phi_r) / 2.0);
    c(n) = x * x;
  }
  return c;
}

bool DispersiveParams::injective(double min_gap) const {
  const RVec c = ground_probabilities();
  for (int i = 0; i <= n_max; ++i) {
    for (int j = i + 1; j <= n_max; ++j) {
      if (std::abs(c(i) - c(j)) <= min_gap) return false;
    }
  }
  return true;
}

QndOps qnd_ops(const DispersiveParams& p) {
  auto angle = [&](int n) { return (p.phi0 * n + p.phi_r) / 2.0; };
  return {func_of_number([&](int n) -> cplx { return std::cos(angle(n)); }, p.n_max),
          func_of_number([&](int n) -> cplx { return std::sin(angle(n)); }, p.n_max)};
}

KrausChannel qnd_channel(const DispersiveParams& p) {
  auto ops = qnd_ops(p);
  return KrausChannel({std::move(ops.mg), std::move(ops.me)});
}

ImperfectionMatrix DetectionErrorParams::matrix() const {
  if (!(eta_g >= 0.0 && eta_g <= 1.0 && eta_e >= 0.0 && eta_e <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "detection error rates must lie in [0, 1]");
  }
  RMat m(2, 2);
  m << 1.0 - eta_g, eta_e, eta_g, 1.0 - eta_e;
  return ImperfectionMatrix(m);
}

DensityOperator error_update(const DensityOperator& rho, int y, const DispersiveParams& qnd,
                             const DetectionErrorParams& err) {
  if (y != 0 && y != 1) throw Error(ErrorCode::invalid_argument, "reading must be g (0) or e (1)");
  return filter_step(MarkovModel(qnd_channel(qnd), err.matrix()), rho, y);
}

// ---------------------------------------------------------------------------

RVec sigma_weights(int n_bar, int n_max) {
  if (n_bar < 0 || n_bar > n_max) {
    throw Error(ErrorCode::invalid_argument, "target photon number must lie in [0, n_max]");
  }
  RVec s = RVec::Zero(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    double v = 0.0;
    if (n < n_bar) {
      for (int nu = n + 1; nu <= n_bar; ++nu) v += 1.0 / nu - 1.0 / (double(nu) * nu);
      if (n == 0) v += 0.25;
    } else if (n > n_bar) {
      for (int nu = n_bar + 1; nu <= n; ++nu) v += 1.0 / nu + 1.0 / (double(nu) * nu);
    }
    s(n) = v;
  }
  return s;
}

LyapunovParams LyapunovParams::make(int n_bar, int n_max, double epsilon, double u_bar,
                                    int grid_count) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
  if (!(u_bar >= 0.0)) throw Error(ErrorCode::invalid_argument, "control bound must be >= 0");
  if (grid_count < 1 || grid_count % 2 == 0) {
    throw Error(ErrorCode::invalid_argument, "control grid count must be odd and positive");
  }
  return {n_bar, epsilon, u_bar, grid_count, sigma_weights(n_bar, n_max)};
}

std::vector<double> LyapunovParams::control_grid() const {
  if (u_bar == 0.0 || grid_count == 1) return {0.0};
  std::vector<double> g(grid_count);
  const int half = grid_count / 2;
  for (int i = 0; i < grid_count; ++i) g[i] = u_bar * (i - half) / half;
  return g;
}

double lyapunov_value(const RVec& populations, const LyapunovParams& p) {
  if (populations.size() != p.sigma.size()) {
    throw Error(ErrorCode::dimension_mismatch, "population vector and weights differ in size");
  }
  return -p.epsilon * populations.squaredNorm() + p.sigma.dot(populations);
}

double lyapunov_value(const DensityOperator& rho, const LyapunovParams& p) {
  return lyapunov_value(rho.populations(), p);
}

LyapunovFeedback::LyapunovFeedback(LyapunovParams params, const DispersiveParams& qnd)
    : params_(std::move(params)) {
  const int d = qnd.n_max + 1;
  if (params_.sigma.size() != d) {
    throw Error(ErrorCode::dimension_mismatch, "Lyapunov weights do not match the truncation");
  }
  RVec c(d), s(d);
  for (int n = 0; n < d; ++n) {
    c(n) = std::cos((qnd.phi0 * n + qnd.phi_r) / 2.0);
    s(n) = std::sin((qnd.phi0 * n + qnd.phi_r) / 2.0);
  }
  average_weights_ = c * c.transpose() + s * s.transpose();

  order_ = params_.control_grid();
  std::stable_sort(order_.begin(), order_.end(), [](double a, double b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a < b;
  });
  displacements_.reserve(order_.size());
  for (double u : order_) displacements_.push_back(displacement(u, qnd.n_max).matrix());
}

Mat LyapunovFeedback::averaged(const DensityOperator& rho) const {
  return rho.matrix().cwiseProduct(average_weights_.cast<cplx>());
}

double LyapunovFeedback::operator()(const DensityOperator& rho) const {
  const Mat avg = averaged(rho);
  double best_u = order_.front();
  double best_v = lyapunov_value(linalg::conjugated_diagonal(displacements_.front(), avg), params_);
  for (std::size_t i = 1; i < order_.size(); ++i) {
    const double v = lyapunov_value(linalg::conjugated_diagonal(displacements_[i], avg), params_);
    if (v < best_v - 1e-14) {
      best_v = v;
      best_u = order_[i];
    }
  }
  return best_u;
}

double LyapunovFeedback::predicted_value(const DensityOperator& rho, double u) const {
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (order_[i] == u) {
      return lyapunov_value(linalg::conjugated_diagonal(displacements_[i], averaged(rho)), params_);
    }
  }
  throw Error(ErrorCode::invalid_argument, "control " + std::to_string(u) + " not on the grid");
}

double feedback(const DensityOperator& rho, const LyapunovParams& p, const DispersiveParams& qnd) {
  return LyapunovFeedback(p, qnd)(rho);
}

SupermartingaleGap supermartingale_gap(const DensityOperator& rho, const DispersiveParams& qnd) {
  if (rho.dim() != qnd.n_max + 1) {
    throw Error(ErrorCode::dimension_mismatch, "state and QND truncation differ");
  }
  const RVec pop = rho.populations();
  const RVec c2 = qnd.ground_probabilities();
  const RVec s2 = RVec::Ones(c2.size()) - c2;
  const double pg = c2.dot(pop);
  const double pe = s2.dot(pop);

  // Q = p_g p_e sum_n (c_n^2 p_n / p_g - s_n^2 p_n / p_e)^2, a vanishing
  // branch dropping its conditional distribution.
  RVec diff = RVec::Zero(pop.size());
  if (pg > 1e-14) diff += c2.cwiseProduct(pop) / pg;
  if (pe > 1e-14) diff -= s2.cwiseProduct(pop) / pe;
  SupermartingaleGap out;
  out.q = pg * pe * diff.squaredNorm();

  // Exact expectation over both readings through the Kraus operators.
  const auto ops = qnd_ops(qnd);
  auto v = [](const RVec& p) { return -p.squaredNorm(); };
  double expected = 0.0;
  for (const Operator* m : {&ops.mg, &ops.me}) {
    const RVec branch = linalg::conjugated_diagonal(m->matrix(), rho.matrix());
    const double prob = branch.sum();
    if (prob > 1e-14) expected += prob * v(branch / prob);
  }
  out.residual = std::abs(expected - v(pop) + out.q);
  return out;
}

ControlledMarkovModel controlled_photonbox_model(const DispersiveParams& qnd,
                                                 const DetectionErrorParams& err,
                                                 const LyapunovParams& p) {
  const auto ops = qnd_ops(qnd);
  auto factory = [&](double u) {
    const Operator d = displacement(u, qnd.n_max);
    return KrausChannel({d * ops.mg, d * ops.me});
  };
  return ControlledMarkovModel(p.control_grid(), factory, err.matrix(), 0.0);
}

// ---------------------------------------------------------------------------

double ReservoirParams::default_theta(int n) {
  return std::numbers::pi / 2.0 * (1.0 - 1.0 / (n + 1.0));
}

double ReservoirParams::default_h_k(int n) { return std::numbers::pi * n * n / 2.0; }

void ReservoirParams::validate() const {
  if (!(u >= 0.0 && u < std::numbers::pi / 2.0)) {
    throw Error(ErrorCode::invalid_argument, "pulse angle u must lie in [0, pi/2)");
  }
  if (sign != 1 && sign != -1) throw Error(ErrorCode::invalid_argument, "sign must be +1 or -1");
  if (n_max < 2) throw Error(ErrorCode::invalid_dimension, "reservoir model needs n_max >= 2");
  if (theta(0) != 0.0) throw Error(ErrorCode::invalid_argument, "theta(0) must vanish");
  for (int n = 1; n <= n_max + 1; ++n) {
    const double t = theta(n);
    if (!(t > 0.0 && t < std::numbers::pi)) {
      throw Error(ErrorCode::invalid_argument, "theta(n) must lie in (0, pi) for n > 0");
    }
  }
}

ReservoirOps reservoir_ops(const ReservoirParams& r) {
  r.validate();
  const int n_max = r.n_max;
  const auto ops = ladder_ops(n_max);
  const double cu = std::cos(r.u / 2.0);
  const double su = std::sin(r.u / 2.0);
  const Operator cos_n =
      func_of_number([&](int n) -> cplx { return std::cos(r.theta(n) / 2.0); }, n_max);
  const Operator cos_n1 =
      func_of_number([&](int n) -> cplx { return std::cos(r.theta(n + 1) / 2.0); }, n_max);
  // theta(0) = 0, so the n = 0 limit of sin(theta/2)/sqrt(n) is taken as 0.
  const Operator sinc = sin_over_sqrt_number(r.theta, n_max, 0.0);
  const double eps = r.sign;
  return {cu * cos_n + (eps * su) * (sinc * ops.a_dag),
          su * cos_n1 - (eps * cu) * (ops.a * sinc)};
}

namespace {

Operator frame_rotation(const ReservoirParams& r) {
  return func_of_number([&](int n) { return std::exp(-I_unit * r.h_k(n)); }, r.n_max);
}

}  // namespace

DensityOperator reservoir_frame(const DensityOperator& rho_k, const ReservoirParams& r) {
  const Mat u = frame_rotation(r).matrix();
  return DensityOperator::from_unnormalized(rho_k.space(), u * rho_k.matrix() * u.adjoint());
}

KrausChannel reservoir_channel(const ReservoirParams& r) {
  const auto ops = reservoir_ops(r);
  const Operator u = frame_rotation(r);
  const Operator u_inv = u.adjoint();
  return KrausChannel({u * ops.mg * u_inv, u * ops.me * u_inv}, 1e-10, r.n_max);
}

KerrCat kerr_cat(double alpha, int n_max) {
  const StateVector plus = coherent_state(alpha, n_max);
  const StateVector minus = coherent_state(-alpha, n_max);
  const Operator kerr = func_of_number(
      [](int n) { return std::exp(-I_unit * (std::numbers::pi * n * n / 2.0)); }, n_max);
  StateVector lhs(plus.space(), kerr * plus);
  const cplx phase = std::exp(-I_unit * (std::numbers::pi / 4.0)) / std::sqrt(2.0);
  StateVector rhs(plus.space(), phase * (plus.amplitudes() + I_unit * minus.amplitudes()));
  const double residual = (lhs.amplitudes() - rhs.amplitudes()).norm();
  return {std::move(lhs), std::move(rhs), residual};
}

}  // namespace qmarkov
