#pragma once

#include "securecran/types.hpp"

#include <stdexcept>
#include <vector>

namespace scran {

/// Network dimensions, powers and channel parameters. All powers are linear
/// watts; dBm conversion happens at the configuration boundary.
struct ScenarioConfig {
  int L = 6;   // RRHs in the cooperative cluster
  int K = 4;   // actuators
  int S = 2;   // eavesdroppers (0 allowed)
  int M = 120; // CP antennas
  int N = 6;   // antennas per RRH
  int F = 4;   // files
  int U = 10;  // segments per file

  double P = dbm_to_watt(46.0); // CP transmit power
  VecX Pmax;                    // per-RRH power cap, size L
  double sigma2 = 0.01;         // noise power, shared by all receivers
  double bandwidth_hz = 1e9;

  // geometry and propagation
  double cell_radius_m = 100.0;
  double cp_distance_m = 300.0;
  double d0_m = 10.0;
  double pl_exp_fronthaul = 2.0; // rho
  double pl_exp_access = 4.0;    // varsigma
  int G = 4;                     // multipath count on access/Eve links (fronthaul is single-path)
  double tau_frac = 0.05;        // relative Eve CSI-error bound

  ScenarioConfig() { Pmax = VecX::Constant(L, dbm_to_watt(40.0)); }

  void set_pmax_dbm(double dbm) { Pmax = VecX::Constant(L, dbm_to_watt(dbm)); }
  void validate() const;
};

/// Binary cache/request state plus file sizes in bits.
struct CacheState {
  std::vector<std::vector<int>> b; // F x U cache indicator per segment
  std::vector<std::vector<int>> c; // K x F request indicator, one file per actuator
  VecX omega;                      // file sizes in bits, size F

  void validate() const;
};

struct RateReport {
  VecX R2;              // per-actuator access rate, bits/s/Hz
  MatX R2_eve;          // K x S eavesdropper rates
  VecX R2_secrecy;      // per-actuator secrecy rate
  VecX R_fronthaul;     // per-RRH fronthaul rate
  double R1 = 0.0;      // min fronthaul rate
};

struct DelayReport {
  VecX psi;      // uncached payload per actuator, bits
  VecX psi_hat;  // total payload per actuator, bits
  VecX t;        // per-actuator fronthaul time, s
  double T_front = 0.0;
  VecX T;        // per-actuator secure access delay, s
  double objective = 0.0; // max_k T_k + T_front
};

struct InfeasibleDelay : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bits that still have to cross the fronthaul for actuator k.
double uncached_payload(const CacheState& cache, int k);

/// Total bits delivered to actuator k on the access link.
double total_payload(const CacheState& cache, int k);

/// Clamped user-minus-best-eavesdropper rate. Empty eve list degenerates to
/// the user rate.
double secrecy_rate(double user_rate, const std::vector<double>& eve_rates);

/// Assembles per-phase delays and the max-delay objective. Throws
/// InfeasibleDelay when a payload needs a rate that is zero.
DelayReport delays(const CacheState& cache, const RateReport& rates, const ScenarioConfig& cfg);

} // namespace scran
