#include <doctest.h>

#include "securecran/fronthaul.hpp"

#include <complex>
#include <random>

using namespace scran;

namespace {

VecC random_cm_vector(int n, double cap, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  VecC v(n);
  for (int i = 0; i < n; ++i) v[i] = std::polar(cap, ang(rng));
  return v;
}

double min_gain_of(const ChannelSet& ch, const VecC& w, const std::vector<RowC>& q) {
  double g = std::numeric_limits<double>::infinity();
  for (size_t l = 0; l < ch.H.size(); ++l) g = std::min(g, std::norm((q[l] * (ch.H[l] * w))(0)));
  return g;
}

} // namespace

TEST_CASE("transmit step aligns a single scalar link") {
  const Complex hval(2.0, 1.0);
  RowC h(1);
  h[0] = hval;
  VecC w_hat(1);
  w_hat[0] = std::conj(hval) / std::abs(hval);
  const VecC w = sca_transmit_step({h}, w_hat);
  const Complex g = (h * w)(0);
  CHECK(std::abs(g.imag()) < 1e-6);
  CHECK(g.real() == doctest::Approx(std::abs(hval)).epsilon(1e-6));
}

TEST_CASE("surrogate is exact at its expansion point") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int M = 5;
    RowC h(M);
    for (int m = 0; m < M; ++m) h[m] = Complex(nd(rng), nd(rng));
    const VecC w_hat = random_cm_vector(M, 1.0 / std::sqrt(double(M)), rng);
    CHECK(transmit_surrogate(h, w_hat, w_hat) ==
          doctest::Approx(std::norm((h * w_hat)(0))).epsilon(1e-12));
  }
}

TEST_CASE("surrogate gradient matches the true gain gradient at the expansion point") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  const int M = 4;
  RowC h(M);
  for (int m = 0; m < M; ++m) h[m] = Complex(nd(rng), nd(rng));
  const VecC w_hat = random_cm_vector(M, 0.3, rng);
  const double eps = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    VecC dir(M);
    for (int m = 0; m < M; ++m) dir[m] = Complex(nd(rng), nd(rng));
    auto truef = [&](double t) { return std::norm((h * (w_hat + t * dir))(0)); };
    auto surr = [&](double t) { return transmit_surrogate(h, w_hat, w_hat + t * dir); };
    const double dtrue = (truef(eps) - truef(-eps)) / (2 * eps);
    const double dsurr = (surr(eps) - surr(-eps)) / (2 * eps);
    CHECK(std::abs(dtrue - dsurr) <= 1e-4 * std::max(1.0, std::abs(dtrue)));
  }
}

TEST_CASE("transmit step solves a constructed instance exactly") {
  // rows whose entry phases all cancel against the same unit-modulus vector,
  // so every per-link bound peaks at that vector simultaneously
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> amp(0.2, 2.0);
  const int M = 8, L = 6;
  const double cap = 1.0 / std::sqrt(double(M));
  VecC wstar(M);
  for (int m = 0; m < M; ++m) wstar[m] = std::polar(cap, ang(rng));
  std::vector<RowC> h(L);
  VecX g0(L);
  for (int l = 0; l < L; ++l) {
    h[l].resize(M);
    double sum = 0;
    for (int m = 0; m < M; ++m) {
      const double a = amp(rng);
      h[l][m] = a * std::conj(wstar[m]) / cap;
      sum += a;
    }
    g0[l] = cap * sum;
  }
  const double expected = g0.array().square().minCoeff();
  const VecC w = sca_transmit_step(h, wstar);
  double achieved = std::numeric_limits<double>::infinity();
  for (int l = 0; l < L; ++l) achieved = std::min(achieved, transmit_surrogate(h[l], wstar, w));
  CHECK(achieved == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("transmit step never loses ground at the expansion point") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    const int M = 6, L = 4;
    std::vector<RowC> h(L);
    for (int l = 0; l < L; ++l) {
      h[l].resize(M);
      for (int m = 0; m < M; ++m) h[l][m] = Complex(nd(rng), nd(rng));
    }
    const VecC w_hat = random_cm_vector(M, 1.0 / std::sqrt(double(M)), rng);
    double before = std::numeric_limits<double>::infinity();
    for (int l = 0; l < L; ++l) before = std::min(before, std::norm((h[l] * w_hat)(0)));
    const VecC w = sca_transmit_step(h, w_hat);
    double after = std::numeric_limits<double>::infinity();
    for (int l = 0; l < L; ++l) after = std::min(after, transmit_surrogate(h[l], w_hat, w));
    CHECK(after >= before - 1e-9);
  }
}

TEST_CASE("modulus projection keeps phases") {
  VecC w(2);
  w << Complex(0.2, 0.0), Complex(0.0, 0.2);
  const VecC out = normalize_transmit(w);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(out[0] - Complex(r, 0)) < 1e-12);
  CHECK(std::abs(out[1] - Complex(0, r)) < 1e-12);
  CHECK((normalize_transmit(out) - out).norm() < 1e-12);

  VecC wz(2);
  wz << Complex(0.0, 0.0), Complex(0.0, -3.0);
  const VecC oz = normalize_transmit(wz);
  CHECK(std::abs(oz[0] - Complex(r, 0)) < 1e-12);
  CHECK(std::abs(oz[1] - Complex(0, -r)) < 1e-12);
}

TEST_CASE("combiner conjugates the received phases") {
  MatC H(2, 1);
  H << Complex(1, 1), Complex(0, -2);
  VecC w(1);
  w[0] = 1.0;
  const RowC q = receive_beamformer(H, w);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(q[0] - std::polar(r, -M_PI / 4)) < 1e-12);
  CHECK(std::abs(q[1] - std::polar(r, M_PI / 2)) < 1e-12);

  MatC Hp(3, 1);
  Hp << 2.0, 0.5, 1.0;
  const RowC qp = receive_beamformer(Hp, w);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(qp[i] - 1.0 / std::sqrt(3.0)) < 1e-12);
}

TEST_CASE("combiner beats random unit-modulus search") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const int N = 4;
  MatC H(N, 3);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < 3; ++j) H(i, j) = Complex(nd(rng), nd(rng));
  const VecC w = random_cm_vector(3, 1.0 / std::sqrt(3.0), rng);
  const RowC q = receive_beamformer(H, w);
  const double best = std::abs((q * (H * w))(0));
  const double cap = 1.0 / std::sqrt(double(N));
  for (int trial = 0; trial < 100000; ++trial) {
    const VecC cand = random_cm_vector(N, cap, rng);
    CHECK(std::abs((cand.transpose() * (H * w))(0)) <= best + 1e-12);
  }
}

TEST_CASE("alternating design: monotone trace and constant-modulus iterates") {
  ScenarioConfig cfg;
  cfg.M = 24;
  cfg.N = 4;
  cfg.L = 4;
  cfg.set_pmax_dbm(40.0);
  const ChannelSet ch = generate(cfg, 321);
  const FronthaulSolution fs = solve_fronthaul(ch, cfg, 77);
  REQUIRE(fs.trace.size() >= 2);
  for (size_t i = 1; i < fs.trace.size(); ++i) CHECK(fs.trace[i] >= fs.trace[i - 1] - 1e-9);
  const double wcap = 1.0 / std::sqrt(double(cfg.M));
  for (int m = 0; m < cfg.M; ++m) CHECK(std::abs(std::abs(fs.w[m]) - wcap) < 1e-10);
  const double qcap = 1.0 / std::sqrt(double(cfg.N));
  for (const auto& q : fs.q)
    for (int nn = 0; nn < cfg.N; ++nn) CHECK(std::abs(std::abs(q[nn]) - qcap) < 1e-10);
  CHECK(fs.R1 == doctest::Approx(fronthaul_rate(cfg, fs.min_gain)));
  CHECK(fs.min_gain == doctest::Approx(min_gain_of(ch, fs.w, fs.q)).epsilon(1e-12));
}

TEST_CASE("default-size drop converges within a few iterations") {
  ScenarioConfig cfg;
  const ChannelSet ch = generate(cfg, 1234);
  const FronthaulSolution fs = solve_fronthaul(ch, cfg, 555);
  const double final = fs.trace.back();
  const size_t idx = std::min<size_t>(4, fs.trace.size() - 1);
  CHECK(fs.trace[idx] >= 0.99 * final);
}

TEST_CASE("single-link design beats random constant-modulus search") {
  ScenarioConfig cfg;
  cfg.L = 1;
  cfg.M = 12;
  cfg.N = 4;
  cfg.set_pmax_dbm(40.0);
  const ChannelSet ch = generate(cfg, 9);
  const FronthaulSolution fs = solve_fronthaul(ch, cfg, 13);
  std::mt19937_64 rng(17);
  const double wcap = 1.0 / std::sqrt(double(cfg.M));
  const double qcap = 1.0 / std::sqrt(double(cfg.N));
  for (int trial = 0; trial < 10000; ++trial) {
    const VecC w = random_cm_vector(cfg.M, wcap, rng);
    std::vector<RowC> q = {random_cm_vector(cfg.N, qcap, rng).transpose()};
    CHECK(min_gain_of(ch, w, q) <= fs.min_gain + 1e-9);
  }
}

TEST_CASE("dead link rejected") {
  ScenarioConfig cfg;
  cfg.L = 2;
  cfg.M = 4;
  cfg.N = 2;
  cfg.set_pmax_dbm(40.0);
  ChannelSet ch = generate(cfg, 3);
  ch.H[1].setZero();
  CHECK_THROWS_AS(solve_fronthaul(ch, cfg, 1), DegenerateChannel);
}
