#include <cmath>

#include "qmarkov/channels.hpp"
#include "qmarkov/linalg.hpp"
#include "qmarkov/photonbox.hpp"
#include "qmarkov/random.hpp"
#include "support.hpp"

using namespace qmarkov;

namespace {

// Eigenvalue-based oracles, independent of the library's low-rank path.
Mat psd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity_oracle(const Mat& rho, const Mat& sigma) {
  const Mat r = psd_sqrt(rho);
  const Mat inner = r * sigma * r;
  Eigen::SelfAdjointEigenSolver<Mat> es(linalg::hermitian_part(inner));
  const double t = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return t * t;
}

double trace_norm_oracle(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().sum();
}

}  // namespace

TEST_SUITE("channels") {

TEST_CASE("Kraus channel construction") {
  const auto s = HilbertSpace::fock(2);
  CHECK_ERROR_CODE(KrausChannel({Operator(s, 2.0 * Mat::Identity(3, 3))}), ErrorCode::invalid_propagator);
  const KrausChannel id({Operator::identity(s)});
  CHECK(id.completeness_residual() == 0.0);
  CHECK(id.size() == 1);
}

TEST_CASE("imperfection matrices") {
  RMat bad(2, 2);
  bad << 0.9, 0.2, 0.2, 0.8;
  CHECK_THROWS(ImperfectionMatrix(bad));
  RMat neg(2, 2);
  neg << 1.1, 0.0, -0.1, 1.0;
  CHECK_THROWS(ImperfectionMatrix(neg));
  const auto e = DetectionErrorParams{0.1, 0.3}.matrix();
  CHECK(e(0, 0) == doctest::Approx(0.9));
  CHECK(e(1, 0) == doctest::Approx(0.1));
  CHECK(e(0, 1) == doctest::Approx(0.3));
}

TEST_CASE("apply_channel") {
  Rng rng(21);
  const auto s = HilbertSpace::fock(4);
  const auto rho = random::density_matrix(s, rng);
  CHECK((apply_channel(KrausChannel({Operator::identity(s)}), rho).matrix() - rho.matrix()).norm() < 1e-15);

  SUBCASE("QND channel keeps the populations") {
    const DispersiveParams q{0.61, 0.52, 4};
    const auto out = apply_channel(qnd_channel(q), rho);
    CHECK((out.populations() - rho.populations()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("no leakage for a complete family") {
    double leakage = 1.0;
    apply_channel(random::channel(s, 3, rng), rho, &leakage);
    CHECK(std::abs(leakage) < 1e-12);
  }
  SUBCASE("composition") {
    const auto k1 = random::channel(s, 2, rng);
    const auto k2 = random::channel(s, 3, rng);
    const Mat seq = apply_channel(k2, apply_channel(k1, rho)).matrix();
    CHECK(compose(k2, k1).size() == 6);
    CHECK((apply_channel(compose(k2, k1), rho).matrix() - seq).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("positivity") {
    for (int t = 0; t < 50; ++t) {
      const auto k = random::channel(s, 2 + t % 3, rng);
      const auto out = apply_channel(k, random::density_matrix(s, rng, 1 + t % 5));
      CHECK(out.check().ok());
    }
  }
  CHECK_ERROR_CODE(apply_channel(KrausChannel({Operator::identity(HilbertSpace::fock(2))}), rho),
                   ErrorCode::dimension_mismatch);
}

TEST_CASE("dual map") {
  Rng rng(22);
  for (int t = 0; t < 50; ++t) {
    const auto s = HilbertSpace::fock(1 + t % 6);
    const auto k = random::channel(s, 2 + t % 3, rng);
    CHECK((apply_dual(k, Operator::identity(s)).matrix() - Mat::Identity(s.dim(), s.dim())).cwiseAbs().maxCoeff() <
          1e-10);
    const Operator a(s, random::hermitian(s.dim(), rng));
    const auto rho = random::density_matrix(s, rng);
    const cplx lhs = linalg::trace_of_product(a.matrix(), apply_channel(k, rho).matrix());
    const cplx rhs = linalg::trace_of_product(apply_dual(k, a).matrix(), rho.matrix());
    CHECK(std::abs(lhs - rhs) < 1e-10);
    const RVec ea = linalg::hermitian_eigenvalues(a.matrix());
    const RVec eb = linalg::hermitian_eigenvalues(apply_dual(k, a).matrix());
    CHECK(eb.minCoeff() >= ea.minCoeff() - 1e-10);
    CHECK(eb.maxCoeff() <= ea.maxCoeff() + 1e-10);
  }
}

TEST_CASE("trace distance and fidelity") {
  Rng rng(23);
  const auto s = HilbertSpace::fock(5);
  const auto rho = random::density_matrix(s, rng);
  CHECK(trace_distance(rho, rho) < 1e-14);
  CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-10));

  const auto psi = StateVector(s, random::unit_vector(s.dim(), rng));
  const double overlap = (psi.amplitudes().adjoint() * rho.matrix() * psi.amplitudes())(0, 0).real();
  CHECK(std::abs(fidelity(rho, DensityOperator::pure(psi)) - overlap) < 1e-10);

  for (int t = 0; t < 50; ++t) {
    const auto a = random::density_matrix(s, rng, 1 + t % 6);
    const auto b = random::density_matrix(s, rng, 1 + (t / 6) % 6);
    CHECK(std::abs(fidelity(a, b) - fidelity(b, a)) < 1e-10);
    // Rank-deficient inputs put square roots of roundoff into both sides.
    CHECK(std::abs(fidelity(a, b) - fidelity_oracle(a.matrix(), b.matrix())) < 1e-7);
    CHECK(std::abs(trace_distance(a, b) - trace_norm_oracle(a.matrix() - b.matrix())) < 1e-10);
    CHECK(trace_distance(a, b) <= 2.0 + 1e-12);
  }
  // Orthogonal pure states: no 1/2 factor.
  CHECK(trace_distance(DensityOperator::fock(0, 3), DensityOperator::fock(1, 3)) == doctest::Approx(2.0));
  CHECK(fidelity(DensityOperator::fock(0, 3), DensityOperator::fock(1, 3)) < 1e-14);
}

TEST_CASE("contraction") {
  Rng rng(24);
  const auto s = HilbertSpace::fock(3);
  const auto rho = random::density_matrix(s, rng);
  const auto same = contraction_check(random::channel(s, 2, rng), rho, rho);
  CHECK(same.ok());
  CHECK(same.distance_after < 1e-12);

  const Operator u(s, random::haar_unitary(4, rng));
  const auto sigma = random::density_matrix(s, rng);
  const auto r = contraction_check(KrausChannel({u}), rho, sigma);
  CHECK(std::abs(r.distance_after - r.distance_before) < 1e-10);
  CHECK(std::abs(r.fidelity_after - r.fidelity_before) < 1e-10);

  int bad = 0;
  for (int t = 0; t < 300; ++t) {
    const auto sp = HilbertSpace::fock(1 + t % 7);
    bad += !contraction_check(random::channel(sp, 2 + t % 3, rng), random::density_matrix(sp, rng),
                              random::density_matrix(sp, rng, 1))
                .ok();
  }
  CHECK(bad == 0);
}

TEST_CASE("fixed point iteration") {
  Rng rng(25);
  const auto s = HilbertSpace::fock(4);
  const auto rho = random::density_matrix(s, rng);
  const auto id = iterate_to_fixed_point(KrausChannel({Operator::identity(s)}), rho, 1e-12, 10);
  CHECK(id.converged);
  CHECK(id.iterations == 1);

  const auto diag = random::diagonal_state(s, rng);
  const auto q = iterate_to_fixed_point(qnd_channel(DispersiveParams{0.61, 0.52, 4}), diag, 1e-12, 10);
  CHECK(q.converged);
  CHECK(q.last_step < 1e-15);
  CHECK((q.state.matrix() - diag.matrix()).norm() < 1e-15);

  // A rotation never settles.
  const auto p = pauli_ops();
  const auto plus = DensityOperator::pure(StateVector::normalized(HilbertSpace::qubit(), Vec::Ones(2)));
  const auto rot = iterate_to_fixed_point(KrausChannel({p.sz}), plus, 1e-12, 25);
  CHECK_FALSE(rot.converged);
  CHECK(rot.iterations == 25);
}

}  // TEST_SUITE
