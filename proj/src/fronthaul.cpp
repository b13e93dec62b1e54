#include "securecran/fronthaul.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <random>

namespace scran {

namespace {

Complex unit_phase(Complex v, double fallback_mod) {
  const double a = std::abs(v);
  if (a < 1e-12) {
    std::fprintf(stderr, "securecran: zero entry during modulus projection, phase set to 0\n");
    return Complex(fallback_mod, 0.0);
  }
  return v / a * fallback_mod;
}

} // namespace

Real transmit_surrogate(const RowC& h_eff, const VecC& w_hat, const VecC& w) {
  const Complex g0 = (h_eff * w_hat)(0);
  const Complex g = (h_eff * w)(0);
  return std::norm(g0) + 2.0 * std::real(std::conj(g0) * (g - g0));
}

VecC sca_transmit_step(const std::vector<RowC>& h_eff, const VecC& w_hat) {
  const int M = static_cast<int>(w_hat.size());
  const int L = static_cast<int>(h_eff.size());
  const int n = 2 * M + 1;
  const double cap = 1.0 / std::sqrt(static_cast<double>(M));

  conic::ConicProblem p;
  p.c = VecX::Zero(n);
  p.c[2 * M] = -1.0;
  const int rows = L + 3 * M;
  p.G = MatX::Zero(rows, n);
  p.h = VecX::Zero(rows);
  p.cones.push_back({conic::ConeKind::NonNeg, L});

  for (int l = 0; l < L; ++l) {
    const Complex g0 = (h_eff[l] * w_hat)(0);
    const RowC d = std::conj(g0) * h_eff[l];
    for (int m = 0; m < M; ++m) {
      p.G(l, m) = -2.0 * d[m].real();
      p.G(l, M + m) = 2.0 * d[m].imag();
    }
    p.G(l, 2 * M) = 1.0;
    p.h[l] = -std::norm(g0);
  }
  for (int m = 0; m < M; ++m) {
    const int r = L + 3 * m;
    p.h[r] = cap;
    p.G(r + 1, m) = -1.0;
    p.G(r + 2, M + m) = -1.0;
    p.cones.push_back({conic::ConeKind::Soc, 3});
  }
  p.vars = {{"w_re", 0, M}, {"w_im", M, M}, {"eta", 2 * M, 1}};

  const auto sol = conic::solve(p);
  if (sol.status != conic::SolveStatus::Optimal)
    throw conic::SolverFailed("transmit step: status " + std::to_string(static_cast<int>(sol.status)));

  VecC w(M);
  for (int m = 0; m < M; ++m) w[m] = Complex(sol.x[m], sol.x[M + m]);
  return w;
}

VecC normalize_transmit(const VecC& w) {
  const double cap = 1.0 / std::sqrt(static_cast<double>(w.size()));
  VecC out(w.size());
  for (int m = 0; m < w.size(); ++m) out[m] = unit_phase(w[m], cap);
  return out;
}

RowC receive_beamformer(const MatC& H_l, const VecC& w) {
  const VecC r = H_l * w;
  const double cap = 1.0 / std::sqrt(static_cast<double>(r.size()));
  RowC q(r.size());
  for (int nn = 0; nn < r.size(); ++nn) q[nn] = unit_phase(std::conj(r[nn]), cap);
  return q;
}

Real fronthaul_rate(const ScenarioConfig& cfg, Real min_gain) {
  return std::log2(1.0 + cfg.P * min_gain / cfg.sigma2);
}

FronthaulSolution solve_fronthaul(const ChannelSet& channels, const ScenarioConfig& cfg,
                                  std::uint64_t init_seed) {
  const int L = static_cast<int>(channels.H.size());
  const int M = cfg.M, N = cfg.N;
  for (int l = 0; l < L; ++l)
    if (channels.H[l].norm() < 1e-12) throw DegenerateChannel("dead link at head " + std::to_string(l));

  std::mt19937_64 rng(init_seed);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);

  FronthaulSolution fs;
  fs.w.resize(M);
  const double wcap = 1.0 / std::sqrt(static_cast<double>(M));
  for (int m = 0; m < M; ++m) fs.w[m] = std::polar(wcap, ang(rng));
  fs.q.resize(L);
  const double qcap = 1.0 / std::sqrt(static_cast<double>(N));
  for (int l = 0; l < L; ++l) {
    fs.q[l].resize(N);
    for (int nn = 0; nn < N; ++nn) fs.q[l][nn] = std::polar(qcap, ang(rng));
  }

  auto gain_at = [&](const VecC& w, const std::vector<RowC>& q) {
    Real g = std::numeric_limits<Real>::infinity();
    for (int l = 0; l < L; ++l) g = std::min(g, std::norm((q[l] * (channels.H[l] * w))(0)));
    return g;
  };

  fs.min_gain = gain_at(fs.w, fs.q);
  fs.trace.push_back(fs.min_gain);

  std::vector<RowC> h_eff(L);
  for (int it = 0; it < 30; ++it) {
    for (int l = 0; l < L; ++l) h_eff[l] = fs.q[l] * channels.H[l];
    const VecC w_new = normalize_transmit(sca_transmit_step(h_eff, fs.w));
    std::vector<RowC> q_new(L);
    for (int l = 0; l < L; ++l) q_new[l] = receive_beamformer(channels.H[l], w_new);
    const Real g_new = gain_at(w_new, q_new);

    const Real prev = fs.min_gain;
    if (g_new >= prev) {
      fs.w = w_new;
      fs.q = q_new;
      fs.min_gain = g_new;
    }
    fs.trace.push_back(fs.min_gain);
    if (std::abs(fs.min_gain - prev) < 1e-4 * std::max(prev, Real(1e-300))) break;
  }

  fs.R1 = fronthaul_rate(cfg, fs.min_gain);
  return fs;
}

} // namespace scran
