#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "qmarkov/channels.hpp"

namespace qmarkov {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Stream seed for trajectory i is splitmix64(master + i).
struct SeedPolicy {
  std::uint64_t master = 0;

  std::uint64_t stream_seed(std::uint64_t index) const { return splitmix64(master + index); }
  Rng stream(std::uint64_t index) const { return Rng(stream_seed(index)); }
};

/// Kraus channel plus detector confusion matrix. Outcomes are 0-based here.
class MarkovModel {
 public:
  MarkovModel(KrausChannel channel, ImperfectionMatrix imperfection);
  static MarkovModel perfect(KrausChannel channel);

  const KrausChannel& channel() const { return channel_; }
  const ImperfectionMatrix& imperfection() const { return eta_; }
  int readings() const { return eta_.readings(); }
  const HilbertSpace& space() const { return channel_.space(); }

 private:
  KrausChannel channel_;
  ImperfectionMatrix eta_;
};

/// Unnormalized branch sum_mu eta(y, mu) M_mu rho M_mu^dagger for every reading y.
std::vector<Mat> reading_branches(const MarkovModel& model, const DensityOperator& rho);

RVec outcome_probabilities(const MarkovModel& model, const DensityOperator& rho);

struct StepResult {
  DensityOperator state;
  int outcome;
};

/// Inverse-CDF draw of one reading from a single uniform, then the Bayes update.
StepResult sample_step(const MarkovModel& model, const DensityOperator& rho, Rng& rng);

/// Bayes update driven by an externally observed reading.
DensityOperator filter_step(const MarkovModel& model, const DensityOperator& rho_hat, int y);

/// Finite control set with one cached channel per control value.
class ControlledMarkovModel {
 public:
  using Factory = std::function<KrausChannel(double)>;

  ControlledMarkovModel(std::vector<double> controls, const Factory& factory,
                        ImperfectionMatrix imperfection, double nominal = 0.0);

  const std::vector<double>& controls() const { return controls_; }
  double nominal() const { return nominal_; }
  /// Model for an exact member of the control set; invalid_argument otherwise.
  const MarkovModel& at(double u) const;
  const HilbertSpace& space() const { return models_.front().space(); }

 private:
  std::vector<double> controls_;
  std::vector<MarkovModel> models_;
  double nominal_;
};

/// State diagnostics evaluated on the true state after each step.
struct Diagnostics {
  std::function<double(const DensityOperator&)> fidelity;
  std::function<double(const DensityOperator&)> lyapunov;
};

struct TrajectoryRecord {
  int step = 0;
  int outcome = 0;  // 0-based; serialized 1-based
  double control = 0.0;
  double fidelity = 0.0;
  double lyapunov = 0.0;
  RVec populations;
  std::optional<Mat> snapshot;
};

TrajectoryRecord make_record(int step, int outcome, double control, const DensityOperator& rho,
                             const Diagnostics& diag, bool with_snapshot);

struct OpenLoopOptions {
  int steps = 0;
  Diagnostics diagnostics;
  int snapshot_stride = 0;  // 0 disables snapshots
  std::function<bool(const TrajectoryRecord&)> stop;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  DensityOperator final_state;
  std::optional<DensityOperator> final_estimate;
};

Trajectory run_open_loop(const MarkovModel& model, const DensityOperator& rho0,
                         const OpenLoopOptions& options, Rng& rng);

using FeedbackLaw = std::function<double(const DensityOperator&)>;

struct ClosedLoopOptions {
  int steps = 0;
  int delay = 0;
  /// Controls applied during the first `delay` steps; the model's nominal
  /// control when unset.
  std::optional<double> u_init;
  /// With delay > 0, feed the law the estimate propagated through the
  /// averaged channel over the pending controls instead of the stale estimate.
  bool predict = false;
  Diagnostics diagnostics;
  int snapshot_stride = 0;
  std::function<bool(const TrajectoryRecord&)> stop;
};

/// Observer/controller loop: the true state and the filter both see the
/// sampled reading and the same control.
Trajectory run_closed_loop(const ControlledMarkovModel& model, const FeedbackLaw& feedback,
                           const DensityOperator& rho0, const DensityOperator& rho_hat0,
                           const ClosedLoopOptions& options, Rng& rng);

/// Header: "step outcome control fidelity lyapunov p0 ... p{d-1}".
void write_records(std::ostream& out, const std::vector<TrajectoryRecord>& records);

/// Runs fn(0..count-1) on up to `jobs` threads and returns results in index
/// order. The first exception (lowest index) is rethrown after all workers join.
template <class Fn>
auto run_ensemble(std::size_t count, unsigned jobs, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace qmarkov
