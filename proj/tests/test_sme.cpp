#include <cmath>
#include <sstream>

#include "qmarkov/linalg.hpp"
#include "qmarkov/random.hpp"
#include "qmarkov/sme.hpp"
#include "support.hpp"

using namespace qmarkov;

namespace {

Mat dissipator(const Mat& l, const Mat& rho) {
  const Mat ll = l.adjoint() * l;
  return l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
}

DiffusiveSMEModel damped(int n_max, double u, double kappa, double eta) {
  const auto ops = ladder_ops(n_max);
  const Operator h = cplx(0, u) * (ops.a_dag - ops.a);
  return DiffusiveSMEModel(h, {{std::sqrt(kappa) * ops.a, eta}});
}

}  // namespace

TEST_SUITE("sme") {

TEST_CASE("model validation") {
  const auto ops = ladder_ops(3);
  CHECK_THROWS(DiffusiveSMEModel(ops.a, {}));
  CHECK_THROWS(DiffusiveSMEModel(ops.n, {{ops.a, 1.5}}));
  const DiffusiveSMEModel base(ops.n, {{ops.a, 0.5}});
  RMat over(1, 1);
  over << 1.2;
  CHECK_THROWS(JumpDiffusiveSMEModel(base, {{ops.a, 0.0}}, over));
  CHECK_THROWS(JumpDiffusiveSMEModel(base, {{ops.a, -1.0}}, RMat::Ones(1, 1)));
}

TEST_CASE("Lindblad generator") {
  Rng rng(51);
  const auto s = HilbertSpace::fock(5);
  const Operator h(s, random::hermitian(6, rng));
  const Operator l1(s, random::ginibre(6, 6, rng)), l2(s, random::ginibre(6, 6, rng));
  const DiffusiveSMEModel m(h, {{l1, 0.3}, {l2, 0.0}});
  const Mat rho = random::density_matrix(s, rng).matrix();
  const Mat expected = cplx(0, -1) * (h.matrix() * rho - rho * h.matrix()) + dissipator(l1.matrix(), rho) +
                       dissipator(l2.matrix(), rho);
  CHECK((lindblad_rhs(m, rho) - expected).norm() < 1e-12);
  CHECK(std::abs(lindblad_rhs(m, rho).trace()) < 1e-12);

  // Damped driven oscillator: the coherent state 2u/kappa is stationary.
  const double u = 0.4, kappa = 1.0;
  const auto d = damped(30, u, kappa, 0.0);
  const Vec c = coherent_state(2 * u / kappa, 30).amplitudes();
  CHECK(lindblad_rhs(d, c * c.adjoint()).norm() < 1e-6);
}

TEST_CASE("Euler-Milstein step") {
  const auto s = HilbertSpace::qubit();
  Rng rng(52);
  const auto rho = random::density_matrix(s, rng);
  const DiffusiveSMEModel trivial(Operator::zero(s), {{Operator::zero(s), 1.0}});
  RVec dw(1);
  dw << 0.03;
  CHECK((euler_milstein_step(trivial, rho, 1e-3, dw).matrix() - rho.matrix()).norm() < 1e-15);

  // Hand-built scheme for one measured channel.
  const Operator h(s, random::hermitian(2, rng));
  const Operator l(s, random::ginibre(2, 2, rng));
  const double eta = 0.7, dt = 1e-3;
  const DiffusiveSMEModel m(h, {{l, eta}});
  const Mat L = l.matrix(), R = rho.matrix();
  const double mean = std::sqrt(eta) * (R * (L + L.adjoint())).trace().real();
  const double dy = dw(0) + mean * dt;
  const Mat M = Mat::Identity(2, 2) - dt * (cplx(0, 1) * h.matrix() + 0.5 * L.adjoint() * L) +
                std::sqrt(eta) * dy * L + eta / 2 * (dw(0) * dw(0) - dt) * L * L;
  Mat next = M * R * M.adjoint() + (1 - eta) * dt * L * R * L.adjoint();
  next /= next.trace();
  CHECK((euler_milstein_step(m, rho, dt, dw).matrix() - next).norm() < 1e-14);
  CHECK_THROWS(euler_milstein_step(m, rho, dt, RVec::Zero(2)));
}

TEST_CASE("positivity over long runs") {
  Rng rng(53);
  const auto s = HilbertSpace::qubit();
  const DiffusiveSMEModel m(Operator(s, random::hermitian(2, rng)), {{Operator(s, random::ginibre(2, 2, rng)), 1.0}});
  IntegratorConfig ic;
  ic.dt = 1e-3;
  ic.horizon = 10.0;
  ic.record_stride = 0;
  const auto t = simulate_diffusive(m, random::density_matrix(s, rng), ic, rng);
  CHECK(t.min_eigenvalue >= -1e-12);
  CHECK(t.records.empty());
}

TEST_CASE("weak order of the unread scheme") {
  const auto m = damped(10, 0.5, 1.0, 0.0);
  const auto rho0 = DensityOperator::fock(0, 10);
  const Mat n = ladder_ops(10).n.matrix();
  const Mat ref = integrate_lindblad_rk4(JumpDiffusiveSMEModel(m), rho0.matrix(), 1.0, 1e-4);
  auto err = [&](double dt) {
    IntegratorConfig c;
    c.dt = dt;
    c.horizon = 1.0;
    c.record_stride = 0;
    Rng rng(1);
    const auto t = simulate_diffusive(m, rho0, c, rng);
    return std::abs(linalg::trace_of_product(n, t.final_state.matrix()).real() -
                    linalg::trace_of_product(n, ref).real());
  };
  const double ratio = err(1e-3) / err(5e-4);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 3.0);
}

TEST_CASE("RK4 reference") {
  // Pure decay from |1>: p1(t) = exp(-kappa t).
  const auto m = damped(4, 0.0, 0.7, 0.0);
  const Mat out = integrate_lindblad_rk4(JumpDiffusiveSMEModel(m), DensityOperator::fock(1, 4).matrix(), 2.0, 1e-3);
  CHECK(out(1, 1).real() == doctest::Approx(std::exp(-1.4)).epsilon(1e-10));
}

TEST_CASE("ensemble mean follows the Lindblad equation") {
  const auto s = HilbertSpace::qubit();
  const auto p = pauli_ops();
  const DiffusiveSMEModel m(0.5 * 1.3 * p.sx, {{std::sqrt(0.8) * p.sm, 0.9}, {0.3 * p.sz, 0.5}});
  const auto rho0 = DensityOperator::pure(StateVector::basis(s, 1));
  IntegratorConfig ic;
  ic.dt = 1e-3;
  ic.horizon = 1.0;
  const Mat proj = p.sp.matrix() * p.sm.matrix();
  const Mat ref = integrate_lindblad_rk4(JumpDiffusiveSMEModel(m), rho0.matrix(), 1.0, 1e-4);
  const double target = linalg::trace_of_product(proj, ref).real();

  const int count = 2000;
  double sum = 0, sq = 0, dy_sum = 0, dy_sq = 0;
  long dy_n = 0;
  for (int i = 0; i < count; ++i) {
    Rng rng = SeedPolicy{99}.stream(i);
    const auto t = simulate_diffusive(m, rho0, ic, rng);
    const double v = linalg::trace_of_product(proj, t.final_state.matrix()).real();
    sum += v, sq += v * v;
    if (i < 50) {
      for (const auto& r : t.records) {
        // Innovation variance: dy minus its conditional mean is the Wiener increment.
        dy_sum += r.dy(1);
        dy_sq += r.dy(1) * r.dy(1);
        ++dy_n;
      }
    }
  }
  const double mean = sum / count, var = sq / count - mean * mean;
  CHECK(std::abs(mean - target) < 3 * std::sqrt(var / count));
  const double dy_var = dy_sq / dy_n - (dy_sum / dy_n) * (dy_sum / dy_n);
  CHECK(dy_var / ic.dt == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("generator consistency") {
  Rng rng(54);
  const auto s = HilbertSpace::qubit();
  const DiffusiveSMEModel m(Operator(s, random::hermitian(2, rng)), {{Operator(s, random::ginibre(2, 2, rng)), 0.0}});
  const auto rho = random::density_matrix(s, rng);
  const Mat g = lindblad_rhs(m, rho.matrix());
  auto err = [&](double dt) {
    const Mat step = euler_milstein_step(m, rho, dt, RVec::Zero(1)).matrix();
    return ((step - rho.matrix()) / dt - g).norm();
  };
  CHECK(err(1e-3) / err(5e-4) >= 1.5);
}

TEST_CASE("jump-diffusive simulation") {
  const auto ops = ladder_ops(8);
  const auto base = damped(8, 0.3, 0.5, 0.6);

  SUBCASE("no counters reproduces the diffusive run") {
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.horizon = 0.2;
    const auto rho0 = DensityOperator::pure(coherent_state(0.5, 8));
    Rng r1(3), r2(3);
    const auto a = simulate_diffusive(base, rho0, ic, r1);
    const auto b = simulate_jump(JumpDiffusiveSMEModel(base), rho0, ic, r2);
    CHECK(a.final_state.matrix() == b.final_state.matrix());
    std::ostringstream sa, sb;
    write_continuous_records(sa, a.records);
    write_continuous_records(sb, b.records);
    CHECK(sa.str() == sb.str());
  }
  SUBCASE("click rate matches the counting intensity") {
    const double gamma = 2.0, eff = 0.7;
    RMat x(1, 1);
    x << eff;
    const JumpDiffusiveSMEModel m(DiffusiveSMEModel(Operator::zero(ops.a.space()), {}),
                                  {{std::sqrt(gamma) * ops.a_dag * ops.a * (1.0 / 3.0), 0.0}}, x);
    // V proportional to N leaves Fock states invariant, so the rate is constant.
    const auto rho0 = DensityOperator::fock(3, 8);
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.horizon = 100.0;
    ic.record_stride = 0;
    Rng rng(4);
    const auto t = simulate_jump(m, rho0, ic, rng);
    const double rate = eff * gamma;  // (3/3)^2 gamma times efficiency
    const double expected = rate * ic.horizon;
    CHECK(std::abs(t.jump_counts[0] - expected) < 4 * std::sqrt(expected));
  }
  SUBCASE("dark counts only") {
    const double theta = 5.0;
    RMat zero = RMat::Zero(1, 1);
    const auto rho0 = DensityOperator::pure(coherent_state(0.7, 8));
    const JumpDiffusiveSMEModel m(DiffusiveSMEModel(Operator::zero(ops.a.space()), {}), {{ops.a, theta}}, zero);
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.horizon = 50.0;
    ic.record_stride = 0;
    Rng rng(5);
    const auto t = simulate_jump(m, rho0, ic, rng);
    const double expected = theta * ic.horizon;
    CHECK(std::abs(t.jump_counts[0] - expected) < 4 * std::sqrt(expected));
    // Unread jumps through V still act as damping: compare with the Lindblad solution.
    const Mat ref = integrate_lindblad_rk4(m, rho0.matrix(), ic.horizon, 1e-2);
    CHECK((t.final_state.matrix() - ref).norm() < 1e-2);
  }
  SUBCASE("too large a step is reported") {
    RMat one = RMat::Ones(1, 1);
    const JumpDiffusiveSMEModel m(DiffusiveSMEModel(Operator::zero(ops.a.space()), {}), {{ops.a, 2000.0}}, one);
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.horizon = 0.01;
    Rng rng(6);
    CHECK_ERROR_CODE(simulate_jump(m, DensityOperator::fock(0, 8), ic, rng), ErrorCode::dt_too_large);
  }
}

TEST_CASE("Belavkin filter") {
  Rng rng(55);
  const auto s = HilbertSpace::qubit();
  const DiffusiveSMEModel m(Operator(s, random::hermitian(2, rng)), {{Operator(s, random::ginibre(2, 2, rng)), 0.8}});
  const auto rho0 = random::density_matrix(s, rng);
  IntegratorConfig ic;
  ic.dt = 1e-3;
  ic.horizon = 0.5;
  const auto t = simulate_diffusive(m, rho0, ic, rng);
  auto hat = rho0;
  for (const auto& r : t.records) hat = belavkin_filter_step(m, hat, r.dy, ic.dt);
  CHECK((hat.matrix() - t.final_state.matrix()).norm() < 1e-10);
  CHECK(hat.check().ok());
}

TEST_CASE("cat-qubit steady states") {
  const auto m = cat_qubit_model(2, 1.0, 4.0, 30);
  const cplx a0 = cat_qubit_amplitude(2, 1.0, 4.0, 0);
  CHECK(std::abs(a0 - std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(cat_qubit_amplitude(2, 1.0, 4.0, 1) + std::sqrt(0.5)) < 1e-15);
  const Vec c = coherent_state(a0, 30).amplitudes();
  CHECK(lindblad_rhs(m, c * c.adjoint()).norm() < 1e-8);

  // Third-order cats.
  const auto m3 = cat_qubit_model(3, 1.0, 4.0, 30);
  for (int k = 0; k < 3; ++k) {
    const Vec v = coherent_state(cat_qubit_amplitude(3, 1.0, 4.0, k), 30).amplitudes();
    CHECK(lindblad_rhs(m3, v * v.adjoint()).norm() < 1e-8);
  }
}

TEST_CASE("CatKerr steady state") {
  const auto ss = catkerr_steady_state(0.5, 1.0, 1.0, 20);
  CHECK(ss.r_c == doctest::Approx(1.0));
  CHECK(ss.alpha == doctest::Approx(0.5));
  CHECK(ss.state.check().ok());

  const auto s2 = catkerr_steady_state(0.5, 1.0, 0.5, 25);
  CHECK(lindblad_rhs(catkerr_model(0.5, 1.0, 0.5, 25), s2.state.matrix()).norm() < 1e-4);
  // Parity-flip channel preserves trace and positivity.
  const auto m = catkerr_model(0.5, 1.0, 0.5, 10);
  Rng rng(56);
  const auto rho = random::density_matrix(HilbertSpace::fock(10), rng);
  const DensityOperator after = DensityOperator::from_unnormalized(
      rho.space(), rho.matrix() + 1e-3 * lindblad_rhs(m, rho.matrix()));
  CHECK(after.check().ok());
  CHECK_ERROR_CODE(catkerr_steady_state(5.0, 1.0, 0.5, 25), ErrorCode::truncation_overflow);
}

TEST_CASE("Gauss-Legendre rule") {
  RVec x, w;
  gauss_legendre(12, x, w);
  CHECK(w.sum() == doctest::Approx(2.0).epsilon(1e-14));
  for (int k = 0; k <= 23; ++k) {
    const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
    double q = 0.0;
    for (int i = 0; i < 12; ++i) q += w(i) * std::pow(x(i), k);
    CHECK(std::abs(q - exact) < 1e-13);
  }
}

}  // TEST_SUITE
