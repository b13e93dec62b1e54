#include "securecran/access.hpp"

#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <random>

namespace scran {

namespace {

using conic::ConeBlock;
using conic::ConeKind;
using conic::ConicProblem;

Complex unit_phase_or_one(Complex v) {
  const double a = std::abs(v);
  if (a < 1e-12) return Complex(1.0, 0.0);
  return v / a;
}

// Hermitian basis for an L x L matrix: L diagonal parameters followed by
// (re, im) pairs for every strictly lower entry, column-major.
int herm_params(int L) { return L * L; }

MatC herm_basis(int L, int p) {
  MatC E = MatC::Zero(L, L);
  if (p < L) {
    E(p, p) = 1.0;
    return E;
  }
  int q = p - L;
  const int pair = q / 2;
  const bool imag = q % 2;
  int idx = 0;
  for (int j = 0; j < L; ++j)
    for (int i = j + 1; i < L; ++i, ++idx)
      if (idx == pair) {
        if (imag) {
          E(i, j) = Complex(0.0, 1.0);
          E(j, i) = Complex(0.0, -1.0);
        } else {
          E(i, j) = 1.0;
          E(j, i) = 1.0;
        }
        return E;
      }
  throw std::out_of_range("herm_basis: parameter index");
}

MatC herm_from_params(int L, const Eigen::Ref<const VecX>& x) {
  MatC V = MatC::Zero(L, L);
  for (int j = 0; j < L; ++j) V(j, j) = x[j];
  int p = L;
  for (int j = 0; j < L; ++j)
    for (int i = j + 1; i < L; ++i) {
      V(i, j) = Complex(x[p], x[p + 1]);
      V(j, i) = std::conj(V(i, j));
      p += 2;
    }
  return V;
}

VecX herm_to_params(const MatC& V) {
  const int L = static_cast<int>(V.rows());
  VecX x(herm_params(L));
  for (int j = 0; j < L; ++j) x[j] = V(j, j).real();
  int p = L;
  for (int j = 0; j < L; ++j)
    for (int i = j + 1; i < L; ++i) {
      x[p] = V(i, j).real();
      x[p + 1] = V(i, j).imag();
      p += 2;
    }
  return x;
}

// Row of coefficients c with c . params = g V g^H (real for Hermitian V).
VecX trace_form(const RowC& g) {
  const int L = static_cast<int>(g.size());
  VecX c(herm_params(L));
  for (int j = 0; j < L; ++j) c[j] = std::norm(g[j]);
  int p = L;
  for (int j = 0; j < L; ++j)
    for (int i = j + 1; i < L; ++i) {
      // lower entry V(i,j) = re + j*im contributes 2*Re{V(i,j) g_i conj(g_j)}
      const Complex w = std::conj(g[i]) * g[j];
      c[p] = 2.0 * w.real();
      c[p + 1] = 2.0 * w.imag();
      p += 2;
    }
  return c;
}

struct Builder {
  ConicProblem prob;
  int n = 0;
  std::vector<double> cvec;
  // rows are accumulated per cone block in declaration order
  std::vector<ConeBlock> cones;
  std::vector<Eigen::Triplet<double>> gts; // (row, col, value)
  std::vector<double> hvec;
  int rows = 0;

  int add_var(const std::string& name, int size, double cost = 0.0) {
    prob.vars.push_back({name, n, size});
    n += size;
    for (int i = 0; i < size; ++i) cvec.push_back(cost);
    return prob.vars.back().offset;
  }

  // one linear row: expr = h - sum coeff*x >= 0
  void nonneg_row(double h, const std::vector<std::pair<int, double>>& terms) {
    if (!cones.empty() && cones.back().kind == ConeKind::NonNeg) {
      ++cones.back().size;
    } else {
      cones.push_back({ConeKind::NonNeg, 1});
    }
    for (const auto& [col, v] : terms) gts.emplace_back(rows, col, v);
    hvec.push_back(h);
    ++rows;
  }

  // SOC block from explicit rows: each row is (h, terms) with the cone acting
  // on h - Gx.
  void soc_block(const std::vector<std::pair<double, std::vector<std::pair<int, double>>>>& rws) {
    cones.push_back({ConeKind::Soc, static_cast<int>(rws.size())});
    for (const auto& [h, terms] : rws) {
      for (const auto& [col, v] : terms) gts.emplace_back(rows, col, v);
      hvec.push_back(h);
      ++rows;
    }
  }

  // real symmetric PSD block M0 + sum x_v * Bv >= 0
  void psd_block(const MatX& M0, const std::vector<std::pair<int, MatX>>& basis) {
    const int ord = static_cast<int>(M0.rows());
    cones.push_back({ConeKind::Psd, ord});
    const VecX h0 = conic::svec(M0);
    const int dim = static_cast<int>(h0.size());
    for (int i = 0; i < dim; ++i) hvec.push_back(h0[i]);
    for (const auto& [col, B] : basis) {
      const VecX sv = conic::svec(B);
      for (int i = 0; i < dim; ++i)
        if (sv[i] != 0.0) gts.emplace_back(rows + i, col, -sv[i]);
    }
    rows += dim;
  }

  ConicProblem finish() {
    prob.c = Eigen::Map<VecX>(cvec.data(), n);
    prob.G = MatX::Zero(rows, n);
    for (const auto& t : gts) prob.G(t.row(), t.col()) += t.value();
    prob.h = Eigen::Map<VecX>(hvec.data(), rows);
    prob.cones = cones;
    prob.A.resize(0, 0);
    prob.b.resize(0);
    return std::move(prob);
  }
};

// Hermitian-embedded PSD block: M0 + sum x_v * Bv >= 0 with complex Hermitian
// M0, Bv.
void psd_block_c(Builder& b, const MatC& M0, const std::vector<std::pair<int, MatC>>& basis) {
  std::vector<std::pair<int, MatX>> rb;
  rb.reserve(basis.size());
  for (const auto& [col, B] : basis) rb.emplace_back(col, conic::hermitian_embed(B));
  b.psd_block(conic::hermitian_embed(M0), rb);
}

double eve_sinr(const RowC& g, const std::vector<VecC>& v, int k, double sigma2) {
  double num = std::norm((g * v[k])(0));
  double den = sigma2;
  for (size_t i = 0; i < v.size(); ++i)
    if (static_cast<int>(i) != k) den += std::norm((g * v[i])(0));
  return num / den;
}

} // namespace

AnalogDesign analog_beamformer(const ChannelSet& cs, const ScenarioConfig& cfg) {
  AnalogDesign an;
  const int L = cfg.L, N = cfg.N, K = cfg.K, S = cfg.S;
  an.z.resize(L);
  for (int l = 0; l < L; ++l) {
    const int k = l % K; // round-robin assignment, 0-based
    an.z[l].resize(N);
    for (int nn = 0; nn < N; ++nn)
      an.z[l][nn] = unit_phase_or_one(std::conj(cs.g[k][l * N + nn])) / std::sqrt(double(N));
  }
  auto equivalent = [&](const RowC& g) {
    RowC r(L);
    for (int l = 0; l < L; ++l) r[l] = (g.segment(l * N, N) * an.z[l])(0);
    return r;
  };
  an.gbar.resize(K);
  for (int k = 0; k < K; ++k) an.gbar[k] = equivalent(cs.g[k]);
  an.gbar_hat_e.resize(S);
  an.tau.resize(S);
  for (int s = 0; s < S; ++s) {
    an.gbar_hat_e[s] = equivalent(cs.g_hat_e[s]);
    an.tau[s] = cfg.tau_frac * an.gbar_hat_e[s].squaredNorm();
  }
  return an;
}

conic::ConicProblem build_secure_sdp(const AnalogDesign& an, const SdpIterate& it, double t,
                                     const VecX& psi_hat, const ScenarioConfig& cfg) {
  if (t <= 0) throw MalformedIterate("t must be positive");
  const int L = cfg.L, K = cfg.K, S = cfg.S;
  const int NP = herm_params(L);
  for (int k = 0; k < K; ++k) {
    if (!(it.alpha[k] > 0) || !(it.mu[k] > 0))
      throw MalformedIterate("nonpositive alpha/mu expansion point");
    if (S > 0 && !(it.kappa[k] > 0)) throw MalformedIterate("nonpositive kappa expansion point");
  }

  Builder b;
  const int vslack = b.add_var("slack", 1, -1.0); // maximize the slack
  std::vector<int> va(K), vb(K), vm(K), vk(K), vu1(K), vu2(K), vV(K);
  MatX vphi(K, std::max(S, 1)), vpsi(K, std::max(S, 1)), vgam(K, std::max(S, 1)),
      veps(K, std::max(S, 1));
  for (int k = 0; k < K; ++k) {
    va[k] = b.add_var("alpha" + std::to_string(k), 1);
    vm[k] = b.add_var("mu" + std::to_string(k), 1);
    vu1[k] = b.add_var("u1_" + std::to_string(k), 1);
    vu2[k] = b.add_var("u2_" + std::to_string(k), 1);
    vV[k] = b.add_var("V" + std::to_string(k), NP);
    if (S > 0) {
      vb[k] = b.add_var("beta" + std::to_string(k), 1);
      vk[k] = b.add_var("kappa" + std::to_string(k), 1);
      for (int s = 0; s < S; ++s) {
        const std::string suf = std::to_string(k) + "_" + std::to_string(s);
        vphi(k, s) = b.add_var("phi" + suf, 1);
        vpsi(k, s) = b.add_var("psi" + suf, 1);
        vgam(k, s) = b.add_var("gam" + suf, 1);
        veps(k, s) = b.add_var("eps" + suf, 1);
      }
    }
  }

  std::vector<VecX> tf_user(K);
  for (int k = 0; k < K; ++k) tf_user[k] = trace_form(an.gbar[k]);

  for (int k = 0; k < K; ++k) {
    // secrecy target at fixed t, exact linear form with the shared slack
    const double expo = psi_hat[k] / (cfg.bandwidth_hz * t);
    const double factor = std::exp2(std::min(expo, 900.0));
    std::vector<std::pair<int, double>> sec = {{va[k], -1.0}, {vslack, 1.0}};
    if (S > 0) sec.push_back({vb[k], factor});
    b.nonneg_row(1.0 - factor, sec);

    // interference bound: mu >= sum_{i != k} Tr(Gbar_k V_i) + sigma^2
    {
      std::vector<std::pair<int, double>> terms = {{vm[k], -1.0}};
      for (int i = 0; i < K; ++i) {
        if (i == k) continue;
        for (int p = 0; p < NP; ++p)
          if (tf_user[k][p] != 0.0) terms.push_back({vV[i] + p, tf_user[k][p]});
      }
      b.nonneg_row(-cfg.sigma2, terms);
    }

    // product surrogate: u1 >= (ah/2mh) mu^2, u2 >= (mh/2ah) alpha^2,
    // u1 + u2 <= Tr(Gbar_k V_k)
    {
      const double c1 = 2.0 * it.mu[k] / it.alpha[k];  // c1*u1 >= mu^2
      const double c2 = 2.0 * it.alpha[k] / it.mu[k];  // c2*u2 >= alpha^2
      b.soc_block({{1.0, {{vu1[k], -c1}}}, {0.0, {{vm[k], -2.0}}}, {-1.0, {{vu1[k], -c1}}}});
      b.soc_block({{1.0, {{vu2[k], -c2}}}, {0.0, {{va[k], -2.0}}}, {-1.0, {{vu2[k], -c2}}}});
      std::vector<std::pair<int, double>> terms = {{vu1[k], 1.0}, {vu2[k], 1.0}};
      for (int p = 0; p < NP; ++p)
        if (tf_user[k][p] != 0.0) terms.push_back({vV[k] + p, -tf_user[k][p]});
      b.nonneg_row(0.0, terms);
    }

    b.nonneg_row(0.0, {{va[k], -1.0}});
    b.nonneg_row(0.0, {{vm[k], -1.0}});
    if (S > 0) {
      b.nonneg_row(0.0, {{vb[k], -1.0}});
      b.nonneg_row(0.0, {{vk[k], -1.0}});
      for (int s = 0; s < S; ++s) {
        b.nonneg_row(0.0, {{(int)vphi(k, s), -1.0}});
        b.nonneg_row(0.0, {{(int)vpsi(k, s), -1.0}});
        b.nonneg_row(0.0, {{(int)vgam(k, s), -1.0}});
        b.nonneg_row(0.0, {{(int)veps(k, s), -1.0}});
        // tangent: 2*kh*kappa - kh^2 >= psi
        const double kh = it.kappa[k];
        b.nonneg_row(-kh * kh, {{vk[k], -2.0 * kh}, {(int)vpsi(k, s), 1.0}});
      }
    }
  }

  // per-RRH power rows
  for (int l = 0; l < L; ++l) {
    std::vector<std::pair<int, double>> terms;
    for (int k = 0; k < K; ++k) terms.push_back({vV[k] + l, 1.0});
    b.nonneg_row(cfg.Pmax[l], terms);
  }

  if (S > 0) {
    for (int k = 0; k < K; ++k)
      for (int s = 0; s < S; ++s) {
        const RowC& ge = an.gbar_hat_e[s];
        const double tau = an.tau[s];
        // Schur block [[beta, kappa], [kappa, phi]]
        {
          MatX B1 = MatX::Zero(2, 2), B2 = MatX::Zero(2, 2), B3 = MatX::Zero(2, 2);
          B1(0, 0) = 1.0;
          B2(0, 1) = B2(1, 0) = 1.0;
          B3(1, 1) = 1.0;
          b.psd_block(MatX::Zero(2, 2),
                      {{vb[k], B1}, {vk[k], B2}, {(int)vphi(k, s), B3}});
        }
        // Eve-on-signal LMI with multiplier gamma and slack psi
        {
          std::vector<std::pair<int, MatC>> basis;
          MatC Bg = MatC::Zero(L + 1, L + 1);
          Bg.topLeftCorner(L, L) = MatC::Identity(L, L);
          Bg(L, L) = -tau;
          basis.emplace_back(vgam(k, s), Bg);
          MatC Bp = MatC::Zero(L + 1, L + 1);
          Bp(L, L) = 1.0;
          basis.emplace_back(vpsi(k, s), Bp);
          for (int p = 0; p < NP; ++p) {
            const MatC E = herm_basis(L, p);
            const RowC gE = ge * E;
            MatC B = MatC::Zero(L + 1, L + 1);
            B.topLeftCorner(L, L) = -E;
            B.block(0, L, L, 1) = -gE.adjoint();
            B.block(L, 0, 1, L) = -gE;
            B(L, L) = -(gE * ge.adjoint())(0).real();
            basis.emplace_back(vV[k] + p, B);
          }
          psd_block_c(b, MatC::Zero(L + 1, L + 1), basis);
        }
        // Eve-on-interference LMI with multiplier eps and level phi
        {
          std::vector<std::pair<int, MatC>> basis;
          MatC Be = MatC::Zero(L + 1, L + 1);
          Be.topLeftCorner(L, L) = MatC::Identity(L, L);
          Be(L, L) = -tau;
          basis.emplace_back(veps(k, s), Be);
          MatC Bf = MatC::Zero(L + 1, L + 1);
          Bf(L, L) = -1.0;
          basis.emplace_back(vphi(k, s), Bf);
          for (int i = 0; i < K; ++i) {
            if (i == k) continue;
            for (int p = 0; p < NP; ++p) {
              const MatC E = herm_basis(L, p);
              const RowC gE = ge * E;
              MatC B = MatC::Zero(L + 1, L + 1);
              B.topLeftCorner(L, L) = E;
              B.block(0, L, L, 1) = gE.adjoint();
              B.block(L, 0, 1, L) = gE;
              B(L, L) = (gE * ge.adjoint())(0).real();
              basis.emplace_back(vV[i] + p, B);
            }
          }
          MatC M0 = MatC::Zero(L + 1, L + 1);
          M0(L, L) = cfg.sigma2;
          psd_block_c(b, M0, basis);
        }
      }
  }

  // covariance PSD blocks
  for (int k = 0; k < K; ++k) {
    std::vector<std::pair<int, MatC>> basis;
    basis.reserve(NP);
    for (int p = 0; p < NP; ++p) basis.emplace_back(vV[k] + p, herm_basis(L, p));
    psd_block_c(b, MatC::Zero(L, L), basis);
  }

  return b.finish();
}

SdpIterate init_iterate(const AnalogDesign& an, const ScenarioConfig& cfg) {
  const int L = cfg.L, K = cfg.K, S = cfg.S;
  SdpIterate it;
  it.alpha.resize(K);
  it.beta = VecX::Zero(K);
  it.mu.resize(K);
  it.kappa = VecX::Zero(K);
  it.phi = MatX::Zero(K, std::max(S, 1));
  it.psi = MatX::Zero(K, std::max(S, 1));
  it.gam = MatX::Zero(K, std::max(S, 1));
  it.eps = MatX::Zero(K, std::max(S, 1));

  std::vector<MatC> V0(K);
  for (int k = 0; k < K; ++k) {
    V0[k] = MatC::Zero(L, L);
    for (int l = 0; l < L; ++l) V0[k](l, l) = 0.5 * cfg.Pmax[l] / K;
  }
  auto quad = [&](const RowC& g, const MatC& V) { return (g * V * g.adjoint())(0).real(); };
  for (int k = 0; k < K; ++k) {
    double intf = cfg.sigma2;
    for (int i = 0; i < K; ++i)
      if (i != k) intf += quad(an.gbar[k], V0[i]);
    it.mu[k] = intf;
    it.alpha[k] = std::max(quad(an.gbar[k], V0[k]) / intf, 1e-9);
    if (S > 0) {
      double beta = 0.0;
      for (int s = 0; s < S; ++s) {
        double e_intf = cfg.sigma2;
        for (int i = 0; i < K; ++i)
          if (i != k) e_intf += quad(an.gbar_hat_e[s], V0[i]);
        beta = std::max(beta, quad(an.gbar_hat_e[s], V0[k]) / e_intf);
      }
      it.beta[k] = std::max(beta * (1.0 + cfg.tau_frac), 1e-9);
      double phimin = std::numeric_limits<double>::infinity();
      for (int s = 0; s < S; ++s) {
        double lvl = cfg.sigma2;
        for (int i = 0; i < K; ++i)
          if (i != k) lvl += quad(an.gbar_hat_e[s], V0[i]);
        const double phi = 0.9 * lvl;
        it.phi(k, s) = phi;
        phimin = std::min(phimin, phi);
      }
      it.kappa[k] = std::sqrt(it.beta[k] * phimin);
      for (int s = 0; s < S; ++s) {
        it.psi(k, s) = it.kappa[k] * it.kappa[k];
        it.gam(k, s) = 1.0;
        it.eps(k, s) = 1.0;
      }
    }
  }
  return it;
}

ScaResult sca_feasibility(const AnalogDesign& an, double t, const VecX& psi_hat,
                          const ScenarioConfig& cfg, const SdpIterate& init,
                          bool stop_at_feasible) {
  const int K = cfg.K, S = cfg.S;
  ScaResult res;
  res.iterate = init;

  // cheap impossibility bound: even interference-free full power cannot reach
  // the required rate
  for (int k = 0; k < K; ++k) {
    double amp = 0.0;
    for (int l = 0; l < cfg.L; ++l) amp += std::sqrt(cfg.Pmax[l]) * std::abs(an.gbar[k][l]);
    const double cap = std::log2(1.0 + amp * amp / cfg.sigma2);
    if (psi_hat[k] / (cfg.bandwidth_hz * t) > cap) {
      res.feasible = false;
      res.slack = -std::numeric_limits<double>::infinity();
      return res;
    }
  }

  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int itn = 0; itn < 30; ++itn) {
    const ConicProblem prob = build_secure_sdp(an, res.iterate, t, psi_hat, cfg);
    const conic::ConicSolution sol = conic::solve(prob);
    if (sol.status == conic::SolveStatus::Infeasible) {
      if (itn == 0) {
        res.feasible = false;
        res.slack = -std::numeric_limits<double>::infinity();
        return res;
      }
      throw conic::SolverFailed("secure SDP infeasible after a feasible iterate");
    }
    if (sol.status != conic::SolveStatus::Optimal &&
        sol.status != conic::SolveStatus::MaxIter)
      throw conic::SolverFailed("secure SDP solve failed");

    const double slack = sol.extract(prob, "slack")(0);
    res.slack_trace.push_back(slack);
    res.slack = slack;
    res.iterations = itn + 1;

    res.V.resize(K);
    for (int k = 0; k < K; ++k) {
      const std::string vk = "V" + std::to_string(k);
      res.V[k] = herm_from_params(cfg.L, sol.extract(prob, vk));
      res.iterate.alpha[k] =
          std::max(sol.extract(prob, "alpha" + std::to_string(k))(0), 1e-11);
      res.iterate.mu[k] = std::max(sol.extract(prob, "mu" + std::to_string(k))(0), 1e-11);
      if (S > 0) {
        res.iterate.beta[k] =
            std::max(sol.extract(prob, "beta" + std::to_string(k))(0), 0.0);
        res.iterate.kappa[k] =
            std::max(sol.extract(prob, "kappa" + std::to_string(k))(0), 1e-11);
        for (int s = 0; s < S; ++s) {
          const std::string suf = std::to_string(k) + "_" + std::to_string(s);
          res.iterate.phi(k, s) = sol.extract(prob, "phi" + suf)(0);
          res.iterate.psi(k, s) = sol.extract(prob, "psi" + suf)(0);
          res.iterate.gam(k, s) = sol.extract(prob, "gam" + suf)(0);
          res.iterate.eps(k, s) = sol.extract(prob, "eps" + suf)(0);
        }
      }
    }

    if (stop_at_feasible && slack >= 0.0) break;
    if (itn > 0 && std::abs(slack - prev) < 1e-4 * std::max(std::abs(prev), 1e-12)) break;
    prev = slack;
  }
  res.feasible = res.slack >= -1e-9;
  return res;
}

AccessSolution bisect_delay(const ChannelSet& cs, const ScenarioConfig& cfg,
                            const CacheState& cache, std::uint64_t seed) {
  AccessSolution out;
  out.analog = analog_beamformer(cs, cfg);
  VecX psi_hat(cfg.K);
  for (int k = 0; k < cfg.K; ++k) psi_hat[k] = total_payload(cache, k);

  const SdpIterate cold = init_iterate(out.analog, cfg);
  double t_hi = 0.1;
  double t_lo = 0.0;
  ScaResult feas;
  int probes = 0;
  for (;;) {
    feas = sca_feasibility(out.analog, t_hi, psi_hat, cfg, cold, true);
    ++probes;
    if (feas.feasible) break;
    t_lo = t_hi;
    t_hi *= 2.0;
    if (t_hi > 1e4) throw NoFeasibleDelay("no feasible delay up to 1e4 s");
  }

  SdpIterate warm = feas.iterate;
  while (t_hi - t_lo > 1e-3 * t_hi) {
    const double t_mid = 0.5 * (t_lo + t_hi);
    const ScaResult probe = sca_feasibility(out.analog, t_mid, psi_hat, cfg, warm, true);
    ++probes;
    if (probe.feasible) {
      t_hi = t_mid;
      feas = probe;
      warm = probe.iterate;
    } else {
      t_lo = t_mid;
    }
  }

  // converge the SCA at the accepted delay to report a stationary design
  ScaResult fin = sca_feasibility(out.analog, t_hi, psi_hat, cfg, warm, false);
  if (!fin.feasible) fin = feas; // keep the probe solution if polish drifted

  out.t_star = t_hi;
  out.V = fin.V;
  out.sca_trace = fin.slack_trace;
  out.sca_iters = fin.iterations;
  out.bisect_probes = probes;
  out.rank_ratio.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k)
    out.rank_ratio[k] = rank_one_ratio(out.V[k]);
  out.v = extract_precoders(out.V, out.analog, cfg, seed);
  out.worstcase_secrecy = report_worstcase_secrecy(out.v, out.analog, cfg, 10000, seed);
  return out;
}

double rank_one_ratio(const MatC& V) {
  const double tr = V.trace().real();
  if (!(tr > 1e-300)) throw ZeroTrace("covariance trace is not positive");
  Eigen::SelfAdjointEigenSolver<MatC> es(V, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / tr;
}

std::vector<VecC> extract_precoders(const std::vector<MatC>& V, const AnalogDesign& an,
                                    const ScenarioConfig& cfg, std::uint64_t seed) {
  const int K = static_cast<int>(V.size());
  const int L = cfg.L;
  std::vector<VecC> v(K);
  std::vector<int> randomized;
  for (int k = 0; k < K; ++k) {
    const double tr = V[k].trace().real();
    if (!(tr > 1e-300)) {
      v[k] = VecC::Zero(L);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<MatC> es(V[k]);
    const int top = L - 1;
    if (es.eigenvalues()[top] / tr >= 0.999) {
      v[k] = std::sqrt(std::max(es.eigenvalues()[top], 0.0)) * es.eigenvectors().col(top);
    } else {
      randomized.push_back(k);
      v[k] = std::sqrt(std::max(es.eigenvalues()[top], 0.0)) * es.eigenvectors().col(top);
    }
  }

  auto rescale = [&](std::vector<VecC>& cand) {
    double worst = 1.0;
    for (int l = 0; l < L; ++l) {
      double p = 0.0;
      for (int k = 0; k < K; ++k) p += std::norm(cand[k][l]);
      if (p > cfg.Pmax[l]) worst = std::max(worst, p / cfg.Pmax[l]);
    }
    const double zeta = 1.0 / std::sqrt(worst);
    for (auto& c : cand) c *= zeta;
  };
  rescale(v);
  if (randomized.empty()) return v;

  // Gaussian randomization for the covariances that are far from rank one:
  // keep the candidate set with the best minimum secrecy rate (worst-case
  // proxy: ascent boundary point only, sampling is left to reporting)
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> nd;
  std::vector<VecC> best = v;
  double best_score = report_worstcase_secrecy(best, an, cfg, 0, seed).minCoeff();
  std::vector<MatC> sqrtV(K);
  for (int k : randomized) {
    Eigen::SelfAdjointEigenSolver<MatC> es(V[k]);
    sqrtV[k] = es.eigenvectors() *
               es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
               es.eigenvectors().adjoint();
  }
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<VecC> cand = v;
    for (int k : randomized) {
      VecC xi(L);
      for (int l = 0; l < L; ++l) xi[l] = Complex(nd(rng), nd(rng)) / std::sqrt(2.0);
      cand[k] = sqrtV[k] * xi;
    }
    rescale(cand);
    const double score = report_worstcase_secrecy(cand, an, cfg, 0, seed).minCoeff();
    if (score > best_score) {
      best_score = score;
      best = cand;
    }
  }
  return best;
}

VecX report_worstcase_secrecy(const std::vector<VecC>& v, const AnalogDesign& an,
                              const ScenarioConfig& cfg, int samples, std::uint64_t seed) {
  const int K = cfg.K, S = cfg.S, L = cfg.L;
  VecX out(K);
  for (int k = 0; k < K; ++k) {
    const double user = std::log2(1.0 + eve_sinr(an.gbar[k], v, k, cfg.sigma2));
    double worst_eve = 0.0;
    for (int s = 0; s < S; ++s) {
      const double tau = an.tau[s];
      const RowC& ghat = an.gbar_hat_e[s];
      auto sinr_at = [&](const RowC& dg) {
        RowC g = ghat + dg;
        return eve_sinr(g, v, k, cfg.sigma2);
      };
      RowC best_dg = RowC::Zero(L);
      double best = sinr_at(best_dg);
      for (int i = 0; i < samples; ++i) {
        const RowC dg =
            sample_perturbation(L, tau, seed + 1000003ull * (i + 1) + 7919ull * s);
        const double val = sinr_at(dg);
        if (val > best) {
          best = val;
          best_dg = dg;
        }
      }
      if (tau > 0) {
        // projected gradient ascent from the incumbent
        RowC dg = best_dg;
        double val = best;
        double step = std::sqrt(tau) * 0.1;
        for (int itn = 0; itn < 60; ++itn) {
          // numerical gradient over the 2L real coordinates
          RowC grad(L);
          const double h0 = std::sqrt(tau) * 1e-6;
          for (int l = 0; l < L; ++l) {
            RowC d1 = dg, d2 = dg;
            d1[l] += h0;
            d2[l] += Complex(0, h0);
            grad[l] = Complex((sinr_at(d1) - val) / h0, (sinr_at(d2) - val) / h0);
          }
          const double gn = grad.norm();
          if (gn < 1e-14) break;
          RowC cand = dg + step * grad / gn;
          const double cn2 = cand.squaredNorm();
          if (cn2 > tau) cand *= std::sqrt(tau / cn2);
          const double cval = sinr_at(cand);
          if (cval > val) {
            dg = cand;
            val = cval;
          } else {
            step *= 0.5;
            if (step < 1e-12 * std::sqrt(tau)) break;
          }
        }
        best = std::max(best, val);
      }
      worst_eve = std::max(worst_eve, std::log2(1.0 + best));
    }
    out[k] = std::max(0.0, user - worst_eve);
  }
  return out;
}

} // namespace scran
