#include <doctest.h>

#include "securecran/conic.hpp"
#include "random_conic.hpp"

#include <Eigen/Eigenvalues>
#include <random>
#include <sstream>

using namespace scran;
using namespace scran::conic;

namespace {

MatC random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatC A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = Complex(nd(rng), nd(rng));
  return 0.5 * (A + A.adjoint());
}

} // namespace

TEST_CASE("svec/smat preserve inner products and round trip") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    MatX A(n, n), B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = nd(rng), B(i, j) = nd(rng);
    A = (A + A.transpose()).eval();
    B = (B + B.transpose()).eval();
    CHECK(svec(A).dot(svec(B)) == doctest::Approx((A * B).trace()).epsilon(1e-12));
    CHECK((smat(svec(A)) - A).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("hermitian_embed basics") {
  CHECK((hermitian_embed(MatC::Identity(2, 2)) - MatX::Identity(4, 4)).cwiseAbs().maxCoeff() ==
        0.0);

  MatC H(2, 2);
  H << Complex(1, 0), Complex(0, 1), Complex(0, -1), Complex(1, 0);
  Eigen::SelfAdjointEigenSolver<MatX> es(hermitian_embed(H));
  VecX ev = es.eigenvalues();
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(2.0));
  CHECK(ev[3] == doctest::Approx(2.0));

  MatC bad(2, 2);
  bad << Complex(1, 0), Complex(2, 0), Complex(0, 0), Complex(1, 0);
  CHECK_THROWS_AS(hermitian_embed(bad), NotHermitian);
}

TEST_CASE("hermitian_embed doubles the spectrum") {
  std::mt19937_64 rng(12);
  MatC H = random_hermitian(5, rng);
  Eigen::SelfAdjointEigenSolver<MatC> eh(H);
  Eigen::SelfAdjointEigenSolver<MatX> ee(hermitian_embed(H));
  for (int i = 0; i < 5; ++i) {
    CHECK(ee.eigenvalues()[2 * i] == doctest::Approx(eh.eigenvalues()[i]).epsilon(1e-9));
    CHECK(ee.eigenvalues()[2 * i + 1] == doctest::Approx(eh.eigenvalues()[i]).epsilon(1e-9));
  }
}

TEST_CASE("embedding PSD-ness matches the complex minimum eigenvalue") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    MatC H = random_hermitian(4, rng);
    Eigen::SelfAdjointEigenSolver<MatC> eh(H);
    Eigen::SelfAdjointEigenSolver<MatX> ee(hermitian_embed(H));
    const bool psd_complex = eh.eigenvalues().minCoeff() >= -1e-9;
    const bool psd_embed = ee.eigenvalues().minCoeff() >= -1e-9;
    CHECK(psd_complex == psd_embed);
  }
}

TEST_CASE("LP: minimize x subject to x >= 3") {
  ConicProblem p;
  p.c = VecX::Constant(1, 1.0);
  p.G = MatX::Constant(1, 1, -1.0);
  p.h = VecX::Constant(1, -3.0);
  p.cones = {{ConeKind::NonNeg, 1}};
  p.vars = {{"x", 0, 1}};
  auto sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("SOC: minimize t subject to ||(3,4)|| <= t") {
  ConicProblem p;
  p.c = VecX::Constant(1, 1.0);
  p.G = MatX::Zero(3, 1);
  p.G(0, 0) = -1.0;
  p.h = VecX(3);
  p.h << 0.0, 3.0, 4.0;
  p.cones = {{ConeKind::Soc, 3}};
  p.vars = {{"t", 0, 1}};
  auto sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("SDP: correlation bound, max X12 with unit diagonal") {
  // vars (X11, X12, X22); maximize X12
  ConicProblem p;
  p.c = VecX::Zero(3);
  p.c[1] = -1.0;
  p.A.resize(2, 3);
  p.A << 1, 0, 0, 0, 0, 1;
  p.b = VecX::Ones(2);
  p.G = MatX::Zero(3, 3);
  p.G(0, 0) = -1.0;
  p.G(1, 1) = -std::sqrt(2.0);
  p.G(2, 2) = -1.0;
  p.h = VecX::Zero(3);
  p.cones = {{ConeKind::Psd, 2}};
  p.vars = {{"X", 0, 3}};
  auto sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("infeasible LP is certified") {
  // x >= 3 and x <= 2
  ConicProblem p;
  p.c = VecX::Constant(1, 1.0);
  p.G.resize(2, 1);
  p.G << -1.0, 1.0;
  p.h.resize(2);
  p.h << -3.0, 2.0;
  p.cones = {{ConeKind::NonNeg, 2}};
  p.vars = {{"x", 0, 1}};
  auto sol = solve(p);
  CHECK(sol.status == SolveStatus::Infeasible);
  // certificate: z in the dual cone, G'z = 0, h'z < 0
  CHECK((p.G.transpose() * sol.z).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(p.h.dot(sol.z) < 0.0);
}

TEST_CASE("random conic instances match constructed optima") {
  int solved = 0;
  for (int i = 0; i < 30; ++i) {
    auto inst = scran_test::random_instance(1000 + i);
    auto sol = solve(inst.prob);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const double scale = std::max(1.0, std::abs(inst.opt_value));
    CHECK(std::abs(sol.primal_obj - inst.opt_value) / scale < 1e-6);
    CHECK(sol.gap <= 1e-6 * scale);
    ++solved;
  }
  CHECK(solved == 30);
}

TEST_CASE("solver is deterministic") {
  auto inst = scran_test::random_instance(7);
  auto s1 = solve(inst.prob);
  auto s2 = solve(inst.prob);
  CHECK(s1.iterations == s2.iterations);
  CHECK((s1.x - s2.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s1.z - s2.z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("complementary slackness at optimality") {
  for (int i = 0; i < 10; ++i) {
    auto inst = scran_test::random_instance(400 + i);
    auto sol = solve(inst.prob);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.s.dot(sol.z)) < 1e-6 * std::max(1.0, std::abs(inst.opt_value)));
  }
}

TEST_CASE("problem dump and variable extraction") {
  auto inst = scran_test::random_instance(55);
  std::ostringstream os;
  inst.prob.dump(os);
  CHECK(os.str().find("conic_problem") == 0);
  auto sol = solve(inst.prob);
  CHECK(sol.extract(inst.prob, "x").size() == inst.prob.num_vars());
  CHECK_THROWS(sol.extract(inst.prob, "nope"));
}
