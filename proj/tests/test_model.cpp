#include <doctest.h>

#include "securecran/model.hpp"

#include <random>

using namespace scran;

namespace {

CacheState make_cache(int F, int U, int K, double omega_bits) {
  CacheState cache;
  cache.b.assign(F, std::vector<int>(U, 0));
  cache.c.assign(K, std::vector<int>(F, 0));
  for (int k = 0; k < K; ++k) cache.c[k][k % F] = 1;
  cache.omega = VecX::Constant(F, omega_bits);
  return cache;
}

} // namespace

TEST_CASE("uncached_payload per segment accounting") {
  auto cache = make_cache(4, 10, 4, 200e6);
  SUBCASE("nothing cached") { CHECK(uncached_payload(cache, 0) == doctest::Approx(200e6)); }
  SUBCASE("half cached") {
    for (int u = 0; u < 5; ++u) cache.b[0][u] = 1;
    CHECK(uncached_payload(cache, 0) == doctest::Approx(100e6));
  }
  SUBCASE("fully cached") {
    for (auto& row : cache.b)
      for (auto& v : row) v = 1;
    CHECK(uncached_payload(cache, 0) == 0.0);
  }
}

TEST_CASE("secrecy_rate clamp and degenerate eve set") {
  CHECK(secrecy_rate(5.0, {3.0, 4.0}) == doctest::Approx(1.0));
  CHECK(secrecy_rate(5.0, {7.0}) == 0.0);
  CHECK(secrecy_rate(5.0, {}) == doctest::Approx(5.0));
}

TEST_CASE("secrecy_rate bounded in [0, user_rate]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double user = uni(rng);
    std::vector<double> eves(rng() % 4);
    for (auto& e : eves) e = uni(rng);
    const double r = secrecy_rate(user, eves);
    CHECK(r >= 0.0);
    CHECK(r <= user + 1e-15);
  }
}

TEST_CASE("delays arithmetic and guards") {
  ScenarioConfig cfg;
  auto cache = make_cache(cfg.F, cfg.U, cfg.K, 200e6);
  RateReport rates;
  rates.R1 = 2.0;
  rates.R2_secrecy = VecX::Constant(cfg.K, 2.0);

  SUBCASE("access delay value") {
    auto rep = delays(cache, rates, cfg);
    CHECK(rep.T[0] == doctest::Approx(0.1)); // 200 Mbit / (1 GHz * 2)
    CHECK(rep.objective == doctest::Approx(rep.T.maxCoeff() + rep.T_front).epsilon(1e-12));
  }
  SUBCASE("fully cached has zero fronthaul delay") {
    for (auto& row : cache.b)
      for (auto& v : row) v = 1;
    auto rep = delays(cache, rates, cfg);
    CHECK(rep.T_front == 0.0);
    CHECK(rep.objective == doctest::Approx(rep.T.maxCoeff()));
  }
  SUBCASE("zero secrecy with payload is infeasible") {
    rates.R2_secrecy[1] = 0.0;
    CHECK_THROWS_AS(delays(cache, rates, cfg), InfeasibleDelay);
  }
  SUBCASE("dead fronthaul with uncached payload is infeasible") {
    rates.R1 = 0.0;
    CHECK_THROWS_AS(delays(cache, rates, cfg), InfeasibleDelay);
  }
}

TEST_CASE("caching a segment never increases payload or fronthaul delay") {
  ScenarioConfig cfg;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto cache = make_cache(cfg.F, cfg.U, cfg.K, 200e6);
    for (auto& row : cache.b)
      for (auto& v : row) v = rng() % 2;
    const int f = rng() % cfg.F;
    const int u = rng() % cfg.U;
    auto flipped = cache;
    flipped.b[f][u] = 1;
    for (int k = 0; k < cfg.K; ++k)
      CHECK(uncached_payload(flipped, k) <= uncached_payload(cache, k) + 1e-9);
  }
}

TEST_CASE("config and cache validation") {
  ScenarioConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.S = 0;
  CHECK_NOTHROW(cfg.validate());
  cfg.L = 0;
  CHECK_THROWS(cfg.validate());

  auto cache = make_cache(4, 10, 4, 1.0);
  CHECK_NOTHROW(cache.validate());
  cache.c[0][1] = 1; // two requests for one actuator
  CHECK_THROWS(cache.validate());
}

TEST_CASE("dbm conversion") {
  CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
  CHECK(dbm_to_watt(40.0) == doctest::Approx(10.0));
  CHECK(watt_to_dbm(dbm_to_watt(46.0)) == doctest::Approx(46.0));
}
