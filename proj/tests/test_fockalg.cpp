#include <cmath>
#include <numbers>
#include <sstream>

#include "qmarkov/fockalg.hpp"
#include "qmarkov/linalg.hpp"
#include "qmarkov/random.hpp"
#include "support.hpp"

using namespace qmarkov;
using std::numbers::pi;

TEST_SUITE("fockalg") {

TEST_CASE("ladder operators") {
  const auto ops = ladder_ops(5);
  for (int n = 0; n <= 5; ++n) CHECK(ops.n.matrix()(n, n).real() == n);
  CHECK(ops.a.apply(StateVector::basis(HilbertSpace::fock(5), 0).amplitudes()).norm() == 0.0);

  SUBCASE("commutator is the identity below the cutoff") {
    const int n_max = 9;
    const auto l = ladder_ops(n_max);
    const Mat c = l.a.matrix() * l.a_dag.matrix() - l.a_dag.matrix() * l.a.matrix();
    CHECK((c.topLeftCorner(n_max, n_max) - Mat::Identity(n_max, n_max)).norm() < 1e-14);
    CHECK(std::abs(c(n_max, n_max) - cplx(-double(n_max))) < 1e-12);
  }
  SUBCASE("a^dagger annihilates the top state") {
    const auto l = ladder_ops(4);
    CHECK(l.a_dag.matrix().col(4).norm() == 0.0);
    CHECK(std::abs(l.a_dag.matrix()(3, 2) - std::sqrt(3.0)) < 1e-15);
  }
  CHECK_ERROR_CODE(ladder_ops(0), ErrorCode::invalid_dimension);
}

TEST_CASE("coherent states") {
  CHECK((coherent_state(0.0, 10).amplitudes() - StateVector::basis(HilbertSpace::fock(10), 0).amplitudes())
            .norm() == 0.0);

  const auto psi = coherent_state(1.5, 25);
  const auto ops = ladder_ops(25);
  CHECK(std::abs(DensityOperator::pure(psi).expectation(ops.n) - 2.25) < 1e-8);

  // Poisson weights from lgamma.
  const auto one = coherent_state(1.0, 20);
  for (int n = 0; n <= 20; ++n) {
    const double poisson = std::exp(-1.0 - std::lgamma(n + 1.0));
    CHECK(std::abs(std::norm(one.amplitudes()(n)) - poisson) < 1e-10);
  }

  const cplx alpha{1.1, -0.6};
  const auto c = coherent_state(alpha, 30);
  CHECK((ops.a.space() == HilbertSpace::fock(25)));
  CHECK(((ladder_ops(30).a * c) - alpha * c.amplitudes()).norm() < 1e-6);
  CHECK_ERROR_CODE(coherent_state(2.0, 15), ErrorCode::truncation_overflow);
}

TEST_CASE("displacement") {
  CHECK((displacement(0.0, 8).matrix() - Mat::Identity(9, 9)).norm() < 1e-15);

  const Mat dd = displacement(0.8, 20).matrix() * displacement(-0.8, 20).matrix();
  CHECK((dd.topLeftCorner(11, 11) - Mat::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-8);

  // D_{-alpha} a D_alpha = a + alpha on low Fock states.
  const int n_max = 30;
  const double alpha = 0.5;
  const auto ops = ladder_ops(n_max);
  const Mat lhs = displacement(-alpha, n_max).matrix() * ops.a.matrix() * displacement(alpha, n_max).matrix();
  const Mat rhs = ops.a.matrix() + alpha * Mat::Identity(n_max + 1, n_max + 1);
  for (int n = 0; n <= 5; ++n) CHECK(((lhs - rhs).col(n)).norm() < 1e-8);

  // D_alpha |0> is the coherent state.
  const Vec d0 = displacement({0.3, 0.7}, 20).matrix().col(0);
  CHECK((d0 - coherent_state({0.3, 0.7}, 20).amplitudes()).norm() < 1e-10);
}

TEST_CASE("functions of the number operator") {
  const Mat n = func_of_number([](int k) { return cplx(k); }, 6).matrix();
  CHECK((n - ladder_ops(6).n.matrix()).norm() == 0.0);

  const double phi0 = 0.3, phi_r = 0.1;
  const Mat mg = func_of_number([&](int k) { return cplx(std::cos((phi0 * k + phi_r) / 2)); }, 10).matrix();
  for (int k = 0; k <= 10; ++k) CHECK(mg(k, k).real() == doctest::Approx(std::cos((phi0 * k + phi_r) / 2)).epsilon(1e-15));

  const double theta = 0.7;
  const auto ops = ladder_ops(12);
  const Mat r = func_of_number([&](int k) { return std::exp(cplx(0, theta * k)); }, 12).matrix();
  const Mat conj = r * ops.a.matrix() * r.adjoint();
  CHECK((conj - std::exp(cplx(0, -theta)) * ops.a.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resonant Jaynes-Cummings propagator") {
  const int n_max = 10;
  CHECK((jc_resonant_propagator(0.0, n_max).matrix() - Mat::Identity(2 * (n_max + 1), 2 * (n_max + 1))).norm() <
        1e-14);

  const Mat u = jc_resonant_propagator(1.9, n_max).matrix();
  const int g = 2 * (n_max - 1);
  CHECK(((u.adjoint() * u).topLeftCorner(g, g) - Mat::Identity(g, g)).cwiseAbs().maxCoeff() < 1e-10);

  // |0, e> -> cos(pi/6)|0, e> + sin(pi/6)|1, g>; index is 2n + q.
  const Vec out = jc_resonant_propagator(pi / 3, n_max).matrix().col(1);
  Vec expected = Vec::Zero(out.size());
  expected(1) = std::cos(pi / 6);
  expected(2) = std::sin(pi / 6);
  CHECK((out - expected).norm() < 1e-14);
  CHECK_ERROR_CODE(jc_resonant_propagator(1.0, 1), ErrorCode::invalid_dimension);
}

TEST_CASE("dispersive propagator") {
  const int n_max = 6;
  const Mat u = jc_dispersive_propagator(0.2, n_max).matrix();
  CHECK((u.adjoint() * u - Mat::Identity(14, 14)).norm() < 1e-14);
  CHECK(std::abs(u(6, 6) - std::exp(cplx(0, 0.6))) < 1e-15);  // |3, g>
  CHECK(std::abs(u(7, 7) - std::exp(cplx(0, -0.6))) < 1e-15);  // |3, e>
  CHECK((jc_dispersive_propagator(0.0, n_max).matrix() - Mat::Identity(14, 14)).norm() == 0.0);
}

TEST_CASE("measurement operators from a propagator") {
  const auto q = HilbertSpace::qubit();
  const std::vector<StateVector> basis{StateVector::basis(q, 0), StateVector::basis(q, 1)};

  SUBCASE("product propagator") {
    Rng rng(11);
    const auto s = HilbertSpace::fock(3);
    const Mat a = random::haar_unitary(4, rng);
    const Operator u(HilbertSpace::tensor(s, q), linalg::kron(a, Mat::Identity(2, 2)));
    const auto m = measurement_ops_from_propagator(u, basis[0], basis);
    CHECK((m[0].matrix() - a).norm() < 1e-14);
    CHECK(m[1].matrix().norm() < 1e-14);
  }
  SUBCASE("resonant propagator blocks") {
    const int n_max = 12;
    const double theta = 1.3;
    const auto m = measurement_ops_from_propagator(jc_resonant_propagator(theta, n_max), basis[0], basis,
                                                   n_max - 1);
    const auto ops = ladder_ops(n_max);
    Mat mg = Mat::Zero(n_max + 1, n_max + 1), s = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
      mg(n, n) = std::cos(theta * std::sqrt(n) / 2);
      s(n, n) = n == 0 ? theta / 2 : std::sin(theta * std::sqrt(n) / 2) / std::sqrt(n);
    }
    CHECK((m[0].matrix() - mg).norm() < 1e-13);
    CHECK((m[1].matrix() + ops.a.matrix() * s).norm() < 1e-13);
    const Mat c = m[0].matrix().adjoint() * m[0].matrix() + m[1].matrix().adjoint() * m[1].matrix();
    CHECK((c.topLeftCorner(n_max - 1, n_max - 1) - Mat::Identity(n_max - 1, n_max - 1)).cwiseAbs().maxCoeff() <
          1e-10);
  }
  SUBCASE("non-unitary propagator is rejected") {
    const auto s = HilbertSpace::fock(2);
    const Operator u(HilbertSpace::tensor(s, q), 1.1 * Mat::Identity(6, 6));
    CHECK_ERROR_CODE(measurement_ops_from_propagator(u, basis[0], basis), ErrorCode::invalid_propagator);
  }
}

TEST_CASE("density operators") {
  CHECK_ERROR_CODE(DensityOperator::from_matrix(HilbertSpace::qubit(), Mat::Identity(2, 2)), ErrorCode::invalid_state);
  Mat bad(2, 2);
  bad << 1.2, 0, 0, -0.2;
  CHECK_ERROR_CODE(DensityOperator::from_matrix(HilbertSpace::qubit(), bad), ErrorCode::invalid_state);
  CHECK_ERROR_CODE(StateVector(HilbertSpace::qubit(), Vec::Ones(2)), ErrorCode::invalid_state);

  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto rho = random::density_matrix(HilbertSpace::fock(5), rng);
    CHECK(rho.check().ok());
    CHECK(rho.purity() <= 1.0 + 1e-12);
  }
  CHECK(DensityOperator::maximally_mixed(HilbertSpace::fock(3)).purity() == doctest::Approx(0.25));
}

TEST_CASE("Wigner function") {
  WignerGridSpec one;
  one.x_min = one.x_max = one.p_min = one.p_max = 0.0;
  one.n_x = one.n_p = 1;
  CHECK(std::abs(wigner(DensityOperator::fock(0, 10), one).samples(0, 0) - 2 / pi) < 1e-9);
  CHECK(std::abs(wigner(DensityOperator::fock(1, 10), one).samples(0, 0) + 2 / pi) < 1e-9);

  SUBCASE("coherent state is a Gaussian") {
    WignerGridSpec s;
    s.n_x = s.n_p = 41;
    const auto w = wigner(DensityOperator::pure(coherent_state(1.0, 40)), s);
    double worst = 0.0;
    for (int j = 0; j < s.n_p; ++j) {
      for (int i = 0; i < s.n_x; ++i) {
        const double x = s.x(i), p = s.p(j);
        if (x * x + p * p > 4.0) continue;
        const double g = 2 / pi * std::exp(-2 * (x - 1) * (x - 1) - 2 * p * p);
        worst = std::max(worst, std::abs(w.samples(j, i) - g));
      }
    }
    CHECK(worst < 1e-6);
  }
  SUBCASE("bounds and normalization") {
    WignerGridSpec s;  // [-2, 2]^2 at resolution 0.05
    const Vec cat = (coherent_state(1.0, 40).amplitudes() - coherent_state(-1.0, 40).amplitudes()).normalized();
    const auto w = wigner(DensityOperator::pure(StateVector(HilbertSpace::fock(40), cat)), s);
    CHECK(w.samples.maxCoeff() <= 2 / pi + 1e-9);
    CHECK(w.samples.minCoeff() >= -2 / pi - 1e-9);
    CHECK(w.samples.minCoeff() < -0.1);  // odd cat is negative at the origin
    CHECK(std::abs(integrate(wigner(DensityOperator::fock(0, 40), s)) - 1.0) < 1e-2);
    CHECK(w.max_imag_residue < 1e-9);
  }
  SUBCASE("grid beyond the guard band") {
    WignerGridSpec s;
    CHECK_ERROR_CODE(wigner(DensityOperator::fock(0, 10), s), ErrorCode::truncation_overflow);
  }
  SUBCASE("text round trip") {
    WignerGridSpec s;
    s.x_min = -1, s.x_max = 1, s.p_min = -0.5, s.p_max = 0.5, s.n_x = 5, s.n_p = 3;
    const auto w = wigner(DensityOperator::pure(coherent_state({0.4, 0.2}, 20)), s);
    std::stringstream io;
    write_wigner_grid(io, w);
    std::string header;
    std::getline(io, header);
    CHECK(header == "-1 1 -0.5 0.5 5 3");
    io.seekg(0);
    const auto back = read_wigner_grid(io);
    CHECK(back.samples == w.samples);
    CHECK(back.spec.n_x == 5);
  }
}

TEST_CASE("Pauli algebra and Bloch coordinates") {
  const auto p = pauli_ops();
  CHECK((p.sx.matrix() * p.sx.matrix() - Mat::Identity(2, 2)).norm() == 0.0);
  CHECK((p.sx.matrix() * p.sy.matrix() - cplx(0, 1) * p.sz.matrix()).norm() < 1e-15);
  CHECK((p.sx.matrix() * p.sy.matrix() + p.sy.matrix() * p.sx.matrix()).norm() < 1e-15);

  const auto b = bloch_coordinates(DensityOperator::pure(StateVector::basis(HilbertSpace::qubit(), 0)));
  CHECK(b.x == 0.0);
  CHECK(b.y == 0.0);
  CHECK(b.z == -1.0);

  Rng rng(5);
  const auto rho = random::density_matrix(HilbertSpace::qubit(), rng);
  const auto c = bloch_coordinates(rho);
  const Mat rebuilt =
      0.5 * (Mat::Identity(2, 2) + c.x * p.sx.matrix() + c.y * p.sy.matrix() + c.z * p.sz.matrix());
  CHECK((rebuilt - rho.matrix()).norm() < 1e-14);
}

}  // TEST_SUITE
