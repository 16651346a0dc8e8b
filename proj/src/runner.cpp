#include "qmarkov/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qmarkov/errors.hpp"
#include "qmarkov/random.hpp"
#include "qmarkov/sme.hpp"

namespace qmarkov {

Interval wilson_interval(long successes, long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

namespace fs = std::filesystem;

std::string trajectory_path(const fs::path& dir, std::size_t index, const char* suffix) {
  char name[64];
  std::snprintf(name, sizeof name, "traj_%05zu%s", index, suffix);
  return (dir / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
  return out;
}

void write_snapshot_rows(std::ostream& out, int step, const Mat& m) {
  out << step;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) out << ' ' << m(i, j).real() << ' ' << m(i, j).imag();
  }
  out << '\n';
}

// Runs `count` jobs in chunks; each chunk's results go to `collect` in index order.
template <class Fn, class Collect>
void chunked(std::size_t count, unsigned jobs, Fn fn, Collect collect) {
  const std::size_t chunk = std::max<std::size_t>(32, 8 * std::size_t{jobs});
  for (std::size_t start = 0; start < count; start += chunk) {
    const std::size_t n = std::min(chunk, count - start);
    auto results = run_ensemble(n, jobs, [&](std::size_t i) { return fn(start + i); });
    for (std::size_t i = 0; i < n; ++i) collect(start + i, results[i]);
  }
}

struct DiscreteOutcome {
  std::vector<TrajectoryRecord> records;
  RVec final_populations;
  std::string error;
};

void write_discrete(const ExperimentConfig& cfg, const fs::path& dir, std::size_t index,
                    const DiscreteOutcome& r) {
  if (!cfg.write_records) return;
  auto out = open_out(trajectory_path(dir, index, ".txt"));
  write_records(out, r.records);
  if (cfg.snapshot_stride > 0) {
    auto snap = open_out(trajectory_path(dir, index, ".snap.txt"));
    snap.precision(17);
    for (const auto& rec : r.records) {
      if (rec.snapshot) write_snapshot_rows(snap, rec.step, *rec.snapshot);
    }
  }
}

void write_curve(const fs::path& path, const std::vector<double>& sum, const std::vector<long>& n) {
  auto out = open_out(path.string());
  out << "step mean_fidelity\n" << std::setprecision(17);
  for (std::size_t k = 0; k < sum.size(); ++k) out << k << ' ' << (n[k] ? sum[k] / n[k] : 0.0) << '\n';
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int run_discrete_qnd(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& summary) {
  const fs::path dir(opt.out_dir);
  const MarkovModel model(qnd_channel(cfg.qnd), cfg.errors.matrix());
  const DensityOperator rho0 = make_state(cfg.initial, cfg.qnd.n_max);
  const SeedPolicy seeds{cfg.seed};
  const int d = cfg.qnd.n_max + 1;

  OpenLoopOptions o;
  o.steps = cfg.steps;
  o.snapshot_stride = cfg.snapshot_stride;
  o.diagnostics.fidelity = [](const DensityOperator& r) { return r.populations().maxCoeff(); };
  o.diagnostics.lyapunov = [](const DensityOperator& r) { return -r.populations().squaredNorm(); };

  std::vector<long> converged(d, 0);
  long unconverged = 0, failures = 0;
  std::vector<double> curve(cfg.steps, 0.0);
  std::vector<long> curve_n(cfg.steps, 0);

  chunked(
      cfg.ensemble, opt.jobs,
      [&](std::size_t i) {
        DiscreteOutcome r;
        try {
          Rng rng = seeds.stream(i);
          auto t = run_open_loop(model, rho0, o, rng);
          r.final_populations = t.final_state.populations();
          r.records = std::move(t.records);
        } catch (const std::exception& e) {
          r.error = e.what();
        }
        return r;
      },
      [&](std::size_t i, const DiscreteOutcome& r) {
        if (!r.error.empty()) {
          ++failures;
          summary << "trajectory " << i << " failed: " << r.error << '\n';
          return;
        }
        write_discrete(cfg, dir, i, r);
        for (const auto& rec : r.records) {
          curve[rec.step] += rec.fidelity;
          ++curve_n[rec.step];
        }
        Eigen::Index n_hat;
        const double top = r.final_populations.maxCoeff(&n_hat);
        if (top > cfg.convergence_threshold) ++converged[n_hat];
        else ++unconverged;
      });
  write_curve(dir / "mean_max_population.txt", curve, curve_n);

  const RVec expected = rho0.populations();
  const long total = cfg.ensemble - failures;
  summary << "kind discrete-qnd  trajectories " << cfg.ensemble << "  steps " << cfg.steps
          << "  seed " << cfg.seed << '\n';
  summary << "n  expected  count  fraction  wilson_lo  wilson_hi  consistent\n";
  for (int n = 0; n < d; ++n) {
    const Interval w = wilson_interval(converged[n], total, cfg.confidence_z);
    const bool tested = expected(n) * total >= 10.0;
    summary << n << "  " << fixed(expected(n)) << "  " << converged[n] << "  "
            << fixed(total ? double(converged[n]) / total : 0.0) << "  " << fixed(w.lo) << "  "
            << fixed(w.hi) << "  " << (tested ? (w.contains(expected(n)) ? "yes" : "NO") : "-")
            << '\n';
  }
  summary << "unconverged " << unconverged << "  failures " << failures << '\n';
  return failures ? 1 : 0;
}

int run_feedback(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& summary) {
  const fs::path dir(opt.out_dir);
  const auto model = controlled_photonbox_model(cfg.qnd, cfg.errors, cfg.lyapunov);
  const LyapunovFeedback law(cfg.lyapunov, cfg.qnd);
  const DensityOperator rho0 = make_state(cfg.initial, cfg.qnd.n_max);
  const DensityOperator rho_hat0 = DensityOperator::maximally_mixed(rho0.space());
  const SeedPolicy seeds{cfg.seed};
  const int n_bar = cfg.lyapunov.n_bar;
  const auto& lp = cfg.lyapunov;

  ClosedLoopOptions o;
  o.steps = cfg.steps;
  o.delay = cfg.loop.delay;
  o.u_init = cfg.loop.u_init;
  o.predict = cfg.loop.predict;
  o.snapshot_stride = cfg.snapshot_stride;
  o.diagnostics.fidelity = [n_bar](const DensityOperator& r) { return r.matrix()(n_bar, n_bar).real(); };
  o.diagnostics.lyapunov = [&lp](const DensityOperator& r) { return lyapunov_value(r, lp); };
  const double target = cfg.loop.success_fidelity;
  if (cfg.loop.stop_on_success) {
    o.stop = [target](const TrajectoryRecord& r) { return r.fidelity > target; };
  }

  long reached = 0, final_ok = 0, failures = 0;
  std::vector<double> curve(cfg.steps, 0.0);
  std::vector<long> curve_n(cfg.steps, 0);
  chunked(
      cfg.ensemble, opt.jobs,
      [&](std::size_t i) {
        DiscreteOutcome r;
        try {
          Rng rng = seeds.stream(i);
          auto t = run_closed_loop(model, law, rho0, rho_hat0, o, rng);
          r.final_populations = t.final_state.populations();
          r.records = std::move(t.records);
        } catch (const std::exception& e) {
          r.error = e.what();
        }
        return r;
      },
      [&](std::size_t i, const DiscreteOutcome& r) {
        if (!r.error.empty()) {
          ++failures;
          summary << "trajectory " << i << " failed: " << r.error << '\n';
          return;
        }
        write_discrete(cfg, dir, i, r);
        bool hit = false;
        for (int k = 0; k < cfg.steps; ++k) {
          // Stopped trajectories keep their last fidelity for the mean curve.
          const auto& rec = r.records[std::min<std::size_t>(k, r.records.size() - 1)];
          curve[k] += rec.fidelity;
          ++curve_n[k];
        }
        for (const auto& rec : r.records) hit = hit || rec.fidelity > target;
        reached += hit;
        final_ok += r.final_populations(n_bar) > target;
      });
  write_curve(dir / "mean_fidelity.txt", curve, curve_n);

  const long total = cfg.ensemble - failures;
  const Interval w = wilson_interval(reached, total, cfg.confidence_z);
  summary << "kind feedback  trajectories " << cfg.ensemble << "  steps " << cfg.steps << "  delay "
          << cfg.loop.delay << (cfg.loop.predict ? " (predicted)" : "") << "  seed " << cfg.seed
          << '\n';
  summary << "target n_bar " << n_bar << "  success fidelity > " << target << '\n';
  summary << "reached " << reached << "/" << total << "  fraction " << fixed(total ? double(reached) / total : 0.0)
          << "  wilson [" << fixed(w.lo) << ", " << fixed(w.hi) << "]\n";
  summary << "above threshold at final step " << final_ok << "/" << total << '\n';
  summary << "failures " << failures << '\n';
  return failures ? 1 : 0;
}

int run_reservoir(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& summary) {
  const fs::path dir(opt.out_dir);
  const auto& r = cfg.reservoir;
  const KrausChannel k = reservoir_channel(r.params);
  const SeedPolicy seeds{cfg.seed};
  const auto space = HilbertSpace::fock(r.params.n_max);

  std::vector<FixedPointResult> results;
  for (int s = 0; s < r.starts; ++s) {
    Rng rng = seeds.stream(s);
    results.push_back(iterate_to_fixed_point(k, random::density_matrix(space, rng), r.tolerance,
                                             r.max_iterations));
  }
  double min_pair = 1.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t j = i + 1; j < results.size(); ++j) {
      min_pair = std::min(min_pair, fidelity(results[i].state, results[j].state));
    }
  }
  bool all_converged = true;
  summary << "kind reservoir  u " << r.params.u << "  n_max " << r.params.n_max << "  starts "
          << r.starts << '\n';
  summary << "start  iterations  converged  purity  energy\n";
  const auto ops = ladder_ops(r.params.n_max);
  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto& f = results[s];
    all_converged = all_converged && f.converged;
    summary << s << "  " << f.iterations << "  " << (f.converged ? "yes" : "no") << "  "
            << std::setprecision(12) << f.state.purity() << "  " << fixed(f.state.expectation(ops.n).real(), 6)
            << '\n';
  }
  summary << "min pairwise fidelity " << std::setprecision(12) << min_pair << '\n';

  const auto& fixed_point = results.front().state;
  {
    auto out = open_out((dir / "fixed_point_populations.txt").string());
    out << "n population\n" << std::setprecision(17);
    const RVec p = fixed_point.populations();
    for (Eigen::Index n = 0; n < p.size(); ++n) out << n << ' ' << p(n) << '\n';
  }
  const auto& g = cfg.wigner.grid;
  const double ex = std::max(std::abs(g.x_min), std::abs(g.x_max));
  const double ep = std::max(std::abs(g.p_min), std::abs(g.p_max));
  if (ex * ex + ep * ep <= r.params.n_max / 4.0) {
    auto out = open_out((dir / "fixed_point_wigner.txt").string());
    write_wigner_grid(out, wigner(fixed_point, g));
  } else {
    summary << "wigner grid skipped: corner outside the guard band of n_max " << r.params.n_max << '\n';
  }
  return all_converged ? 0 : 1;
}

DensityOperator sme_initial(const ExperimentConfig& cfg) {
  if (cfg.sme.model == SMESettings::Model::qubit) {
    const auto q = HilbertSpace::qubit();
    if (cfg.initial.type == InitialState::Type::mixed) return DensityOperator::maximally_mixed(q);
    return DensityOperator::pure(StateVector::basis(q, cfg.initial.n));
  }
  return make_state(cfg.initial, cfg.sme.n_max);
}

struct ContinuousOutcome {
  std::vector<ContinuousRecord> records;
  double energy = 0.0;
  double dy_sum = 0.0;
  double dy_sq_sum = 0.0;
  long dy_count = 0;
  long jumps = 0;
  double min_eigenvalue = 0.0;
  std::string error;
};

int run_sme(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& summary, bool jump) {
  const fs::path dir(opt.out_dir);
  const auto model = make_sme_model(cfg.sme, jump);
  const DensityOperator rho0 = sme_initial(cfg);
  const SeedPolicy seeds{cfg.seed};
  IntegratorConfig ic;
  ic.dt = cfg.sme.dt;
  ic.horizon = cfg.sme.horizon;
  ic.snapshot_stride = cfg.snapshot_stride;
  const bool oscillator = cfg.sme.model != SMESettings::Model::qubit;
  const Mat number = oscillator ? ladder_ops(cfg.sme.n_max).n.matrix()
                                : pauli_ops().sp.matrix() * pauli_ops().sm.matrix();

  std::vector<double> energies;
  double dy_sum = 0.0, dy_sq = 0.0, min_eig = 1.0;
  long dy_n = 0, jumps = 0, failures = 0;
  chunked(
      cfg.ensemble, opt.jobs,
      [&](std::size_t i) {
        ContinuousOutcome r;
        try {
          Rng rng = seeds.stream(i);
          auto t = simulate_jump(model, rho0, ic, rng);
          r.energy = linalg::trace_of_product(number, t.final_state.matrix()).real();
          const RVec means0 = measurement_means(model.base(), rho0);
          (void)means0;
          for (const auto& rec : t.records) {
            if (rec.dy.size() > 0) {
              r.dy_sum += rec.dy(0);
              r.dy_sq_sum += rec.dy(0) * rec.dy(0);
              ++r.dy_count;
            }
          }
          for (long c : t.jump_counts) r.jumps += c;
          r.min_eigenvalue = t.min_eigenvalue;
          if (cfg.write_records) r.records = std::move(t.records);
        } catch (const std::exception& e) {
          r.error = e.what();
        }
        return r;
      },
      [&](std::size_t i, const ContinuousOutcome& r) {
        if (!r.error.empty()) {
          ++failures;
          summary << "trajectory " << i << " failed: " << r.error << '\n';
          return;
        }
        if (cfg.write_records) {
          auto out = open_out(trajectory_path(dir, i, ".txt"));
          write_continuous_records(out, r.records);
          if (cfg.snapshot_stride > 0) {
            auto snap = open_out(trajectory_path(dir, i, ".snap.txt"));
            snap.precision(17);
            for (const auto& rec : r.records) {
              if (rec.snapshot) write_snapshot_rows(snap, rec.step, *rec.snapshot);
            }
          }
        }
        energies.push_back(r.energy);
        dy_sum += r.dy_sum;
        dy_sq += r.dy_sq_sum;
        dy_n += r.dy_count;
        jumps += r.jumps;
        min_eig = std::min(min_eig, r.min_eigenvalue);
      });

  const double n = static_cast<double>(energies.size());
  double mean = 0.0, var = 0.0;
  for (double e : energies) mean += e / n;
  for (double e : energies) var += (e - mean) * (e - mean) / std::max(1.0, n - 1.0);
  const double se = std::sqrt(var / n);
  const Mat reference = integrate_lindblad_rk4(model, rho0.matrix(), ic.horizon, ic.dt / 10.0);
  const double ref = linalg::trace_of_product(number, reference).real();

  summary << "kind " << (jump ? "sme-jump" : "sme-diffusive") << "  trajectories " << cfg.ensemble
          << "  dt " << ic.dt << "  horizon " << ic.horizon << "  seed " << cfg.seed << '\n';
  summary << std::setprecision(10);
  summary << "mean tr(N rho_T) " << mean << "  standard error " << se << '\n';
  summary << "Lindblad reference " << ref << "  z-score " << (se > 0 ? (mean - ref) / se : 0.0) << '\n';
  if (dy_n > 1) {
    const double m = dy_sum / dy_n;
    const double v = dy_sq / dy_n - m * m;
    summary << "dy variance / dt " << v / ic.dt << '\n';
  }
  if (jump) {
    summary << "counter clicks " << jumps << "  rate " << jumps / (n * ic.horizon) << '\n';
  }
  summary << "min eigenvalue over all steps " << min_eig << '\n';
  summary << "failures " << failures << '\n';
  return failures ? 1 : 0;
}

int run_wigner(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& summary) {
  const fs::path dir(opt.out_dir);
  const DensityOperator rho = make_state(cfg.initial, cfg.wigner.n_max);
  const WignerGrid grid = wigner(rho, cfg.wigner.grid);
  auto out = open_out((dir / "wigner.txt").string());
  write_wigner_grid(out, grid);
  summary << "kind wigner  n_max " << cfg.wigner.n_max << "  grid " << grid.spec.n_x << "x"
          << grid.spec.n_p << '\n';
  summary << std::setprecision(10) << "integral " << integrate(grid) << "  min " << grid.samples.minCoeff()
          << "  max " << grid.samples.maxCoeff() << "  imaginary residue " << grid.max_imag_residue
          << '\n';
  const double bound = 2.0 / std::numbers::pi + 1e-9;
  const bool ok = grid.samples.maxCoeff() <= bound && grid.samples.minCoeff() >= -bound;
  return ok ? 0 : 1;
}

int run_verify(const ExperimentConfig& cfg, std::ostream& summary) {
  const auto results = run_verify_suite(cfg.seed);
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  int failed = 0;
  for (const auto& r : results) {
    summary << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(int(width)) << r.name << "  "
            << r.detail << '\n';
    failed += !r.pass;
  }
  summary << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed ? 1 : 0;
}

}  // namespace

int run(const ExperimentConfig& cfg, const RunOptions& options, std::ostream& summary) {
  for (const auto& w : cfg.warnings) summary << "warning: " << w << '\n';
  if (cfg.kind != ExperimentKind::verify) fs::create_directories(options.out_dir);
  switch (cfg.kind) {
    case ExperimentKind::discrete_qnd: return run_discrete_qnd(cfg, options, summary);
    case ExperimentKind::feedback: return run_feedback(cfg, options, summary);
    case ExperimentKind::reservoir: return run_reservoir(cfg, options, summary);
    case ExperimentKind::sme_diffusive: return run_sme(cfg, options, summary, false);
    case ExperimentKind::sme_jump: return run_sme(cfg, options, summary, true);
    case ExperimentKind::wigner: return run_wigner(cfg, options, summary);
    case ExperimentKind::verify: return run_verify(cfg, summary);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// verify

namespace {

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

CheckResult check_max(const std::string& name, double value, double bound) {
  return {name, value <= bound, "max residual " + sci(value) + " (bound " + sci(bound) + ")"};
}

}  // namespace

std::vector<CheckResult> run_verify_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const SeedPolicy seeds{seed};
  auto guarded = [&](const std::string& name, const std::function<CheckResult()>& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };

  // fockalg
  guarded("fockalg.commutator", [] {
    const int n_max = 12;
    const auto ops = ladder_ops(n_max);
    const Mat c = ops.a.matrix() * ops.a_dag.matrix() - ops.a_dag.matrix() * ops.a.matrix();
    return check_max("fockalg.commutator",
                     (c.topLeftCorner(n_max, n_max) - Mat::Identity(n_max, n_max)).cwiseAbs().maxCoeff(),
                     1e-12);
  });
  guarded("fockalg.coherent_eigenvector", [] {
    const cplx alpha{0.9, -0.7};
    const auto psi = coherent_state(alpha, 30);
    const auto ops = ladder_ops(30);
    return check_max("fockalg.coherent_eigenvector", ((ops.a * psi) - alpha * psi.amplitudes()).norm(), 1e-6);
  });
  guarded("fockalg.displacement_unitarity", [] {
    const Mat d = displacement({0.8, 0.3}, 20).matrix();
    return check_max("fockalg.displacement_unitarity",
                     (d.adjoint() * d - Mat::Identity(21, 21)).cwiseAbs().maxCoeff(), 1e-12);
  });
  guarded("fockalg.jc_norm", [] {
    const int n_max = 12;
    const Mat u = jc_resonant_propagator(1.3, n_max).matrix();
    const int g = 2 * (n_max - 1);
    const Mat uu = u.adjoint() * u;
    return check_max("fockalg.jc_norm",
                     (uu.topLeftCorner(g, g) - Mat::Identity(g, g)).cwiseAbs().maxCoeff(), 1e-10);
  });
  guarded("fockalg.wigner_bounds", [] {
    const Vec v = coherent_state(1.2, 40).amplitudes() + coherent_state(-1.2, 40).amplitudes();
    const auto rho = DensityOperator::pure(StateVector::normalized(HilbertSpace::fock(40), v));
    WignerGridSpec s;
    s.n_x = s.n_p = 41;
    const auto w = wigner(rho, s);
    const double excess = std::max(w.samples.maxCoeff(), -w.samples.minCoeff()) - 2.0 / std::numbers::pi;
    return CheckResult{"fockalg.wigner_bounds", excess <= 1e-9, "max |W| - 2/pi = " + sci(excess)};
  });

  // channels
  guarded("channels.contraction", [&] {
    Rng rng = seeds.stream(1);
    int bad = 0;
    for (int t = 0; t < 200; ++t) {
      const auto space = HilbertSpace::fock(1 + t % 6);
      const auto k = random::channel(space, 2 + t % 3, rng);
      bad += !contraction_check(k, random::density_matrix(space, rng), random::density_matrix(space, rng)).ok();
    }
    return CheckResult{"channels.contraction", bad == 0, std::to_string(bad) + " of 200 violations"};
  });
  guarded("channels.duality", [&] {
    Rng rng = seeds.stream(2);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const auto space = HilbertSpace::fock(1 + t % 7);
      const auto k = random::channel(space, 3, rng);
      const auto rho = random::density_matrix(space, rng);
      const Operator a(space, random::hermitian(space.dim(), rng));
      const cplx lhs = linalg::trace_of_product(a.matrix(), apply_channel(k, rho).matrix());
      const cplx rhs = linalg::trace_of_product(apply_dual(k, a).matrix(), rho.matrix());
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    return check_max("channels.duality", worst, 1e-10);
  });

  // trajectories
  guarded("trajectories.determinism", [&] {
    DispersiveParams q{0.61, 0.4, 10};
    const auto model = MarkovModel::perfect(qnd_channel(q));
    const auto rho0 = DensityOperator::pure(coherent_state(1.2, 10));
    OpenLoopOptions o;
    o.steps = 50;
    Rng r1 = seeds.stream(3), r2 = seeds.stream(3);
    const auto a = run_open_loop(model, rho0, o, r1);
    const auto b = run_open_loop(model, rho0, o, r2);
    bool same = true;
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      same = same && a.records[k].outcome == b.records[k].outcome &&
             a.records[k].populations == b.records[k].populations;
    }
    return CheckResult{"trajectories.determinism", same, same ? "bit-identical" : "differs"};
  });
  guarded("trajectories.filter_consistency", [&] {
    DispersiveParams q{0.61, 0.4, 10};
    const auto model = MarkovModel(qnd_channel(q), DetectionErrorParams{0.1, 0.15}.matrix());
    Rng rng = seeds.stream(4);
    auto rho = random::density_matrix(HilbertSpace::fock(10), rng);
    auto hat = rho;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      auto s = sample_step(model, rho, rng);
      hat = filter_step(model, hat, s.outcome);
      rho = s.state;
      worst = std::max(worst, (rho.matrix() - hat.matrix()).cwiseAbs().maxCoeff());
    }
    return check_max("trajectories.filter_consistency", worst, 1e-12);
  });

  // photonbox
  guarded("photonbox.martingale", [&] {
    DispersiveParams q{0.61, 0.4, 15};
    const auto ops = qnd_ops(q);
    Rng rng = seeds.stream(5);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const auto rho = random::diagonal_state(HilbertSpace::fock(15), rng);
      RVec g(16);
      for (int n = 0; n < 16; ++n) g(n) = n * n;
      double expected = 0.0;
      for (const Operator* m : {&ops.mg, &ops.me}) expected += g.dot(linalg::conjugated_diagonal(m->matrix(), rho.matrix()));
      worst = std::max(worst, std::abs(expected - g.dot(rho.populations())));
    }
    return check_max("photonbox.martingale", worst, 1e-12);
  });
  guarded("photonbox.supermartingale", [&] {
    DispersiveParams q{0.61, 0.4, 15};
    Rng rng = seeds.stream(6);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      worst = std::max(worst, supermartingale_gap(random::diagonal_state(HilbertSpace::fock(15), rng), q).residual);
    }
    return check_max("photonbox.supermartingale", worst, 1e-10);
  });
  guarded("photonbox.sigma_shape", [] {
    bool ok = true;
    for (int n_bar = 0; n_bar <= 6; ++n_bar) {
      const RVec s = sigma_weights(n_bar, 15);
      for (int n = 0; n < 15; ++n) {
        if (n < n_bar) ok = ok && s(n) > s(n + 1);
        else ok = ok && s(n + 1) > s(n);
      }
      ok = ok && s(n_bar) == 0.0 && s.minCoeff() >= 0.0;
    }
    return CheckResult{"photonbox.sigma_shape", ok, ok ? "monotone with zero at target" : "shape violated"};
  });
  guarded("photonbox.kerr_cat", [] { return check_max("photonbox.kerr_cat", kerr_cat(2.0, 40).residual, 1e-8); });
  guarded("photonbox.reservoir_completeness", [] {
    ReservoirParams r;
    return check_max("photonbox.reservoir_completeness", reservoir_channel(r).completeness_residual(), 1e-10);
  });

  // sme
  guarded("sme.positivity", [&] {
    Rng rng = seeds.stream(7);
    const auto q = HilbertSpace::qubit();
    const DiffusiveSMEModel m(Operator(q, random::hermitian(2, rng)),
                              {{Operator(q, random::ginibre(2, 2, rng)), 0.7},
                               {Operator(q, random::ginibre(2, 2, rng)), 0.0}});
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.horizon = 2.0;
    ic.record_stride = 0;
    const auto t = simulate_diffusive(m, random::density_matrix(q, rng), ic, rng);
    return CheckResult{"sme.positivity", t.min_eigenvalue >= -1e-12, "min eigenvalue " + sci(t.min_eigenvalue)};
  });
  guarded("sme.cat_qubit_steady", [] {
    const auto m = cat_qubit_model(2, 1.0, 4.0, 30);
    double worst = 0.0;
    for (int s = 0; s < 2; ++s) {
      const auto rho = DensityOperator::pure(coherent_state(cat_qubit_amplitude(2, 1.0, 4.0, s), 30));
      worst = std::max(worst, lindblad_rhs(m, rho.matrix()).norm());
    }
    return check_max("sme.cat_qubit_steady", worst, 1e-8);
  });
  guarded("sme.catkerr_steady", [] {
    const auto ss = catkerr_steady_state(0.5, 1.0, 0.5, 25);
    return check_max("sme.catkerr_steady", lindblad_rhs(catkerr_model(0.5, 1.0, 0.5, 25), ss.state.matrix()).norm(), 1e-4);
  });
  return out;
}

}  // namespace qmarkov
