#pragma once

#include "securecran/channel.hpp"
#include "securecran/conic.hpp"
#include "securecran/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace scran {

struct DegenerateChannel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Alternating max-min design of the multicast link between the central
// processor and the remote radio heads. The transmit side uses a single
// constant-modulus beamformer w shared by all heads; each head combines with
// a constant-modulus row q_l.
struct FronthaulSolution {
  VecC w;                  // length M, |w_m| = 1/sqrt(M)
  std::vector<RowC> q;     // per-head rows of length N, |q_{l,n}| = 1/sqrt(N)
  Real min_gain = 0.0;     // min_l |q_l H_l w|^2
  Real R1 = 0.0;           // min spectral efficiency over heads (bits/s/Hz)
  std::vector<Real> trace; // min_gain after each outer iteration
};

// One inner ascent step: maximizes the common tangent lower bound of the
// per-head gains |h_eff[l] * w|^2 around w_hat, subject to per-element
// modulus caps 1/sqrt(M). Returns the relaxed (not yet projected) w.
VecC sca_transmit_step(const std::vector<RowC>& h_eff, const VecC& w_hat);

// Surrogate value used by the step above; exact at w = w_hat.
Real transmit_surrogate(const RowC& h_eff, const VecC& w_hat, const VecC& w);

// Projects every element to modulus 1/sqrt(M), keeping its phase. Elements
// smaller than 1e-12 in modulus get phase 0.
VecC normalize_transmit(const VecC& w);

// Matched-phase constant-modulus combiner for one head.
RowC receive_beamformer(const MatC& H_l, const VecC& w);

Real fronthaul_rate(const ScenarioConfig& cfg, Real min_gain);

FronthaulSolution solve_fronthaul(const ChannelSet& channels, const ScenarioConfig& cfg,
                                  std::uint64_t init_seed);

} // namespace scran
