#pragma once

#include "securecran/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace scran {

/// Limited-scattering mmWave channel realization for one drop.
struct ChannelSet {
  std::vector<MatC> H;       // L fronthaul matrices, N x M
  std::vector<RowC> g;       // K access rows, 1 x NL (per-RRH blocks concatenated)
  std::vector<RowC> g_hat_e; // S estimated Eve rows, 1 x NL
  VecX tau;                  // S squared-norm error bounds on the stored rows

  struct PathMeta {
    std::vector<VecX> fronthaul_gain2; // |alpha|^2 per path, per RRH
    std::vector<VecX> fronthaul_aoa;   // theta per path
    std::vector<VecX> fronthaul_aod;   // phi per path
  } meta;
};

/// Unit-modulus steering vector, entry_n = exp(j*pi*n*angle).
VecC steering(double angle, int A);

/// 1/(1+(d/d0)^exponent), in (0,1].
double pathloss(double d, double d0, double exponent);

/// Seeded drop generation: single-path fronthaul, G-path access/Eve links,
/// uniform node placement in the cell, circular-Gaussian path gains scaled by
/// sqrt(pathloss). Eve draws come last so a run with larger S extends a run
/// with smaller S without reshuffling.
ChannelSet generate(const ScenarioConfig& cfg, std::uint64_t seed);

/// Uniform sample from the complex ball of squared radius tau (validation
/// sampling only, never used inside the robust optimizer).
RowC sample_perturbation(int dim, double tau, std::uint64_t seed);

void dump_channels(std::ostream& os, const ChannelSet& cs);
ChannelSet load_channels(std::istream& is);

} // namespace scran
