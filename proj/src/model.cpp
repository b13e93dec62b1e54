#include "securecran/model.hpp"

#include <algorithm>
#include <cmath>

namespace scran {

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ScenarioConfig: ") + what);
  };
  require(L >= 1 && K >= 1 && M >= 1 && N >= 1 && F >= 1 && U >= 1, "counts must be >= 1");
  require(S >= 0, "S must be >= 0");
  require(P > 0 && sigma2 > 0 && bandwidth_hz > 0, "powers, noise and bandwidth must be > 0");
  require(Pmax.size() == L && (Pmax.array() > 0).all(), "Pmax must have L positive entries");
  require(pl_exp_fronthaul > 0 && pl_exp_access > 0, "pathloss exponents must be > 0");
  require(d0_m > 0 && cell_radius_m > 0 && cp_distance_m > 0, "geometry must be > 0");
  require(G >= 1, "G must be >= 1");
  require(tau_frac >= 0, "tau_frac must be >= 0");
}

void CacheState::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("CacheState: ") + what);
  };
  const int F = static_cast<int>(b.size());
  require(F >= 1, "no files");
  require(omega.size() == F, "omega size mismatch");
  for (const auto& row : b)
    for (int v : row) require(v == 0 || v == 1, "b entries must be binary");
  for (const auto& row : c) {
    require(static_cast<int>(row.size()) == F, "c row size mismatch");
    int sum = 0;
    for (int v : row) {
      require(v == 0 || v == 1, "c entries must be binary");
      sum += v;
    }
    require(sum == 1, "each actuator requests exactly one file");
  }
}

double uncached_payload(const CacheState& cache, int k) {
  const int F = static_cast<int>(cache.b.size());
  const int U = static_cast<int>(cache.b.front().size());
  double bits = 0.0;
  for (int f = 0; f < F; ++f) {
    if (!cache.c[k][f]) continue;
    int missing = 0;
    for (int u = 0; u < U; ++u) missing += 1 - cache.b[f][u];
    bits += cache.omega[f] / U * missing;
  }
  return bits;
}

double total_payload(const CacheState& cache, int k) {
  const int F = static_cast<int>(cache.b.size());
  double bits = 0.0;
  for (int f = 0; f < F; ++f)
    if (cache.c[k][f]) bits += cache.omega[f];
  return bits;
}

double secrecy_rate(double user_rate, const std::vector<double>& eve_rates) {
  if (eve_rates.empty()) return user_rate;
  const double worst = *std::max_element(eve_rates.begin(), eve_rates.end());
  return std::max(0.0, user_rate - worst);
}

DelayReport delays(const CacheState& cache, const RateReport& rates, const ScenarioConfig& cfg) {
  const int K = cfg.K;
  DelayReport rep;
  rep.psi.resize(K);
  rep.psi_hat.resize(K);
  rep.t.resize(K);
  rep.T.resize(K);
  const double W = cfg.bandwidth_hz;
  for (int k = 0; k < K; ++k) {
    rep.psi[k] = uncached_payload(cache, k);
    rep.psi_hat[k] = total_payload(cache, k);
    if (rep.psi[k] > 0 && rates.R1 <= 0)
      throw InfeasibleDelay("dead fronthaul with uncached payload");
    rep.t[k] = rep.psi[k] > 0 ? rep.psi[k] / (W * rates.R1) : 0.0;
    const double rs = rates.R2_secrecy[k];
    if (rep.psi_hat[k] > 0 && rs <= 0)
      throw InfeasibleDelay("zero secrecy rate with nonzero payload");
    rep.T[k] = rep.psi_hat[k] > 0 ? rep.psi_hat[k] / (W * rs) : 0.0;
  }
  rep.T_front = rep.t.sum();
  rep.objective = rep.T.maxCoeff() + rep.T_front;
  return rep;
}

} // namespace scran
