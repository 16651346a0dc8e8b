#include "qmarkov/trajectories.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "qmarkov/errors.hpp"

namespace qmarkov {

namespace {

constexpr double kDegenerateTrace = 1e-14;

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

MarkovModel::MarkovModel(KrausChannel channel, ImperfectionMatrix imperfection)
    : channel_(std::move(channel)), eta_(std::move(imperfection)) {
  if (static_cast<std::size_t>(eta_.outcomes()) != channel_.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "imperfection matrix has " + std::to_string(eta_.outcomes()) +
                    " columns for " + std::to_string(channel_.size()) + " Kraus operators");
  }
}

MarkovModel MarkovModel::perfect(KrausChannel channel) {
  const int m = static_cast<int>(channel.size());
  return {std::move(channel), ImperfectionMatrix::identity(m)};
}

std::vector<Mat> reading_branches(const MarkovModel& model, const DensityOperator& rho) {
  const auto terms = kraus_terms(model.channel(), rho);
  const auto& eta = model.imperfection();
  const auto d = rho.dim();
  std::vector<Mat> out(model.readings(), Mat::Zero(d, d));
  for (int y = 0; y < model.readings(); ++y) {
    for (int mu = 0; mu < eta.outcomes(); ++mu) {
      const double w = eta(y, mu);
      if (w != 0.0) out[y] += w * terms[mu];
    }
  }
  return out;
}

namespace {

RVec branch_probabilities(const std::vector<Mat>& branches) {
  RVec p(branches.size());
  for (std::size_t y = 0; y < branches.size(); ++y) {
    double v = branches[y].trace().real();
    if (v < 0.0 && v > -1e-12) v = 0.0;
    if (v > 1.0 && v < 1.0 + 1e-12) v = 1.0;
    p(y) = v;
  }
  return p;
}

}  // namespace

RVec outcome_probabilities(const MarkovModel& model, const DensityOperator& rho) {
  return branch_probabilities(reading_branches(model, rho));
}

StepResult sample_step(const MarkovModel& model, const DensityOperator& rho, Rng& rng) {
  const auto branches = reading_branches(model, rho);
  const RVec p = branch_probabilities(branches);
  if (p.maxCoeff() < kDegenerateTrace) {
    throw Error(ErrorCode::degenerate_outcome, "every reading has probability below 1e-14");
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * p.sum();
  int y = -1;
  double cumulative = 0.0;
  for (int k = 0; k < p.size(); ++k) {
    if (p(k) < kDegenerateTrace) continue;
    cumulative += p(k);
    y = k;
    if (u < cumulative) break;
  }
  return {DensityOperator::from_unnormalized(rho.space(), branches[y]), y};
}

DensityOperator filter_step(const MarkovModel& model, const DensityOperator& rho_hat, int y) {
  if (y < 0 || y >= model.readings()) {
    throw Error(ErrorCode::invalid_argument, "reading " + std::to_string(y) + " out of range");
  }
  const auto terms = kraus_terms(model.channel(), rho_hat);
  const auto& eta = model.imperfection();
  Mat branch = Mat::Zero(rho_hat.dim(), rho_hat.dim());
  for (int mu = 0; mu < eta.outcomes(); ++mu) {
    if (eta(y, mu) != 0.0) branch += eta(y, mu) * terms[mu];
  }
  const double tr = branch.trace().real();
  if (!(tr >= kDegenerateTrace)) {
    throw Error(ErrorCode::incompatible_outcome,
                "estimate gives reading " + std::to_string(y) + " probability " +
                    std::to_string(tr));
  }
  return DensityOperator::from_unnormalized(rho_hat.space(), branch);
}

ControlledMarkovModel::ControlledMarkovModel(std::vector<double> controls,
                                             const Factory& factory,
                                             ImperfectionMatrix imperfection, double nominal)
    : controls_(std::move(controls)), nominal_(nominal) {
  if (controls_.empty()) throw Error(ErrorCode::invalid_argument, "empty control set");
  models_.reserve(controls_.size());
  for (double u : controls_) models_.emplace_back(factory(u), imperfection);
  (void)at(nominal_);
}

const MarkovModel& ControlledMarkovModel::at(double u) const {
  for (std::size_t i = 0; i < controls_.size(); ++i) {
    if (controls_[i] == u) return models_[i];
  }
  throw Error(ErrorCode::invalid_argument,
              "control " + std::to_string(u) + " is not in the control set");
}

TrajectoryRecord make_record(int step, int outcome, double control, const DensityOperator& rho,
                             const Diagnostics& diag, bool with_snapshot) {
  TrajectoryRecord r;
  r.step = step;
  r.outcome = outcome;
  r.control = control;
  r.fidelity = diag.fidelity ? diag.fidelity(rho) : 0.0;
  r.lyapunov = diag.lyapunov ? diag.lyapunov(rho) : 0.0;
  r.populations = rho.populations();
  if (with_snapshot) r.snapshot = rho.matrix();
  return r;
}

namespace {

bool snapshot_due(int step, int stride) { return stride > 0 && step % stride == 0; }

void require_valid(const DensityOperator& rho, int step) {
  const StateCheck c = rho.check();
  if (!c.ok()) {
    throw Error(ErrorCode::invariant_violation,
                "state invalid after step " + std::to_string(step) + ": min eigenvalue " +
                    std::to_string(c.min_eigenvalue) + ", trace residual " +
                    std::to_string(c.trace_residual));
  }
}

}  // namespace

Trajectory run_open_loop(const MarkovModel& model, const DensityOperator& rho0,
                         const OpenLoopOptions& options, Rng& rng) {
  Trajectory t{{}, rho0, std::nullopt};
  t.records.reserve(options.steps);
  for (int k = 0; k < options.steps; ++k) {
    auto step = sample_step(model, t.final_state, rng);
    t.final_state = std::move(step.state);
    require_valid(t.final_state, k);
    t.records.push_back(make_record(k, step.outcome, 0.0, t.final_state, options.diagnostics,
                                    snapshot_due(k, options.snapshot_stride)));
    if (options.stop && options.stop(t.records.back())) break;
  }
  return t;
}

Trajectory run_closed_loop(const ControlledMarkovModel& model, const FeedbackLaw& feedback,
                           const DensityOperator& rho0, const DensityOperator& rho_hat0,
                           const ClosedLoopOptions& options, Rng& rng) {
  if (options.delay < 0) throw Error(ErrorCode::invalid_argument, "negative loop delay");
  const int delay = options.delay;
  const double u_init = options.u_init.value_or(model.nominal());
  (void)model.at(u_init);

  Trajectory t{{}, rho0, rho_hat0};
  t.records.reserve(options.steps);
  DensityOperator& rho = t.final_state;
  DensityOperator& rho_hat = *t.final_estimate;

  // Ring buffers of the last delay+1 estimates and the controls applied.
  std::vector<DensityOperator> estimates(delay + 1, rho_hat0);
  std::vector<double> applied;
  applied.reserve(options.steps);

  for (int k = 0; k < options.steps; ++k) {
    estimates[k % (delay + 1)] = rho_hat;
    double u = u_init;
    if (k >= delay) {
      DensityOperator basis = estimates[(k - delay) % (delay + 1)];
      if (options.predict) {
        for (int j = k - delay; j < k; ++j) basis = apply_channel(model.at(applied[j]).channel(), basis);
      }
      u = feedback(basis);
    }
    const MarkovModel& m = model.at(u);
    auto step = sample_step(m, rho, rng);
    rho = std::move(step.state);
    rho_hat = filter_step(m, rho_hat, step.outcome);
    applied.push_back(u);
    require_valid(rho, k);
    t.records.push_back(make_record(k, step.outcome, u, rho, options.diagnostics,
                                    snapshot_due(k, options.snapshot_stride)));
    if (options.stop && options.stop(t.records.back())) break;
  }
  return t;
}

void write_records(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  const Eigen::Index d = records.empty() ? 0 : records.front().populations.size();
  out << "step outcome control fidelity lyapunov";
  for (Eigen::Index n = 0; n < d; ++n) out << " p" << n;
  out << '\n';
  const auto old = out.precision(17);
  for (const auto& r : records) {
    out << r.step << ' ' << r.outcome + 1 << ' ' << r.control << ' ' << r.fidelity << ' '
        << r.lyapunov;
    for (Eigen::Index n = 0; n < r.populations.size(); ++n) out << ' ' << r.populations(n);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace qmarkov
