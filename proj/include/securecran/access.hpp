#pragma once

#include "securecran/channel.hpp"
#include "securecran/conic.hpp"
#include "securecran/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace scran {

struct MalformedIterate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoFeasibleDelay : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroTrace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-RRH analog stage and the equivalent single-antenna channels it leaves
/// behind: gbar[k] = g_k Z and gbar_hat_e[s] = ghat_s Z, both 1 x L.
struct AnalogDesign {
  std::vector<VecC> z;             // L phase vectors, length N, modulus 1/sqrt(N)
  std::vector<RowC> gbar;          // K equivalent actuator rows
  std::vector<RowC> gbar_hat_e;    // S equivalent estimated Eve rows
  VecX tau;                        // S squared-norm bounds on the equivalent rows
};

/// Expansion points carried across the SCA iterations of the secure design.
/// alpha/beta/mu/kappa are per actuator; phi/psi/gam/eps get one column per
/// eavesdropper so the worst one binds.
struct SdpIterate {
  VecX alpha, beta, mu, kappa; // size K
  MatX phi, psi, gam, eps;     // K x S
};

struct ScaResult {
  bool feasible = false;
  double slack = 0.0;              // final constraint slack (>= 0 when feasible)
  std::vector<MatC> V;             // K covariances, L x L Hermitian PSD
  SdpIterate iterate;              // expansion point after the last accepted solve
  std::vector<Real> slack_trace;   // per-iteration slack objective
  int iterations = 0;
};

struct AccessSolution {
  AnalogDesign analog;
  std::vector<MatC> V;             // K covariances at t_star
  std::vector<VecC> v;             // extracted precoders, length L
  double t_star = 0.0;             // smallest feasible access delay, seconds
  VecX rank_ratio;                 // per-k lambda_max / trace
  VecX worstcase_secrecy;          // per-k reported worst-case secrecy rate
  std::vector<Real> sca_trace;     // slack history of the final feasibility run
  int sca_iters = 0;               // SCA solves spent at t_star
  int bisect_probes = 0;
};

/// Phase-matched analog beamformer with round-robin actuator assignment
/// k(l) = ((l-1) mod K) + 1; each z_l maximizes its assigned gain under the
/// constant-modulus constraint.
AnalogDesign analog_beamformer(const ChannelSet& cs, const ScenarioConfig& cfg);

/// Assembles the fixed-t secure feasibility SDP over Hermitian-embedded
/// covariances: linear secrecy rows with a shared slack variable, interference
/// bounds, the product surrogate as rotated second-order cones, the robust
/// Eve LMIs with their multipliers, the 2x2 Schur blocks, the kappa tangent
/// rows and the per-RRH power rows. psi_hat holds the per-actuator access
/// payload in bits.
conic::ConicProblem build_secure_sdp(const AnalogDesign& an, const SdpIterate& it, double t,
                                     const VecX& psi_hat, const ScenarioConfig& cfg);

/// Default expansion point: uniform half-power diagonal covariances and
/// auxiliaries evaluated from them.
SdpIterate init_iterate(const AnalogDesign& an, const ScenarioConfig& cfg);

/// Alternates solve / re-expand until the slack objective stalls (relative
/// 1e-4) or 30 iterations. stop_at_feasible ends the loop at the first
/// nonnegative slack, which is enough for a feasibility probe.
ScaResult sca_feasibility(const AnalogDesign& an, double t, const VecX& psi_hat,
                          const ScenarioConfig& cfg, const SdpIterate& init,
                          bool stop_at_feasible = false);

/// Outer bisection on the delay target: doubles from 0.1 s until feasible
/// (NoFeasibleDelay past 1e4 s), then bisects to relative width 1e-3 and
/// re-solves the SCA to convergence at the returned t.
AccessSolution bisect_delay(const ChannelSet& cs, const ScenarioConfig& cfg,
                            const CacheState& cache, std::uint64_t seed = 1);

/// lambda_max(V) / Tr(V); throws ZeroTrace when the trace vanishes.
double rank_one_ratio(const MatC& V);

/// Leading-eigenvector extraction when rank_one_ratio >= 0.999, otherwise
/// Gaussian randomization with 100 candidates rescaled into the per-RRH power
/// region, keeping the candidate with the best min worst-case secrecy rate.
std::vector<VecC> extract_precoders(const std::vector<MatC>& V, const AnalogDesign& an,
                                    const ScenarioConfig& cfg, std::uint64_t seed = 1);

/// Secrecy rate per actuator with the Eve SINR maximized over sampled ball
/// perturbations plus a gradient-ascent boundary point (reporting only).
VecX report_worstcase_secrecy(const std::vector<VecC>& v, const AnalogDesign& an,
                              const ScenarioConfig& cfg, int samples = 10000,
                              std::uint64_t seed = 1);

} // namespace scran
