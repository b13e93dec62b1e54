#include "securecran/channel.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace scran {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Pos {
  double x, y;
};

double dist(const Pos& a, const Pos& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Pos uniform_in_disk(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double r = radius * std::sqrt(uni(rng));
  const double phi = 2.0 * kPi * uni(rng);
  return {r * std::cos(phi), r * std::sin(phi)};
}

Complex circular_gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Complex(n(rng), n(rng)) / std::sqrt(2.0);
}

// Multipath row channel from an N-antenna transmitter, 1 x N.
RowC path_row(std::mt19937_64& rng, int N, int paths, double pl) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  RowC row = RowC::Zero(N);
  for (int g = 0; g < paths; ++g) {
    const Complex alpha = circular_gaussian(rng) * std::sqrt(pl);
    const double theta = angle(rng);
    row += alpha * steering(theta, N).adjoint();
  }
  return row;
}

} // namespace

VecC steering(double angle, int A) {
  if (A < 1) throw std::invalid_argument("steering: A must be >= 1");
  VecC a(A);
  for (int n = 0; n < A; ++n) a[n] = std::polar(1.0, kPi * n * angle);
  return a;
}

double pathloss(double d, double d0, double exponent) {
  return 1.0 / (1.0 + std::pow(d / d0, exponent));
}

ChannelSet generate(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);

  const Pos cp{cfg.cp_distance_m, 0.0}; // cell centered at the origin

  std::vector<Pos> rrh(cfg.L), act(cfg.K);
  for (auto& p : rrh) p = uniform_in_disk(rng, cfg.cell_radius_m);
  for (auto& p : act) p = uniform_in_disk(rng, cfg.cell_radius_m);

  ChannelSet cs;
  cs.H.resize(cfg.L);
  cs.meta.fronthaul_gain2.resize(cfg.L);
  cs.meta.fronthaul_aoa.resize(cfg.L);
  cs.meta.fronthaul_aod.resize(cfg.L);

  // CP-to-RRH links are single-path.
  for (int l = 0; l < cfg.L; ++l) {
    const double pl = pathloss(dist(cp, rrh[l]), cfg.d0_m, cfg.pl_exp_fronthaul);
    cs.meta.fronthaul_gain2[l].resize(1);
    cs.meta.fronthaul_aoa[l].resize(1);
    cs.meta.fronthaul_aod[l].resize(1);
    const Complex alpha = circular_gaussian(rng) * std::sqrt(pl);
    const double theta = angle(rng);
    const double phi = angle(rng);
    cs.meta.fronthaul_gain2[l][0] = std::norm(alpha);
    cs.meta.fronthaul_aoa[l][0] = theta;
    cs.meta.fronthaul_aod[l][0] = phi;
    cs.H[l] = alpha * steering(theta, cfg.N) * steering(phi, cfg.M).adjoint();
  }

  cs.g.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    RowC row(cfg.N * cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
      const double pl = pathloss(dist(rrh[l], act[k]), cfg.d0_m, cfg.pl_exp_access);
      row.segment(l * cfg.N, cfg.N) = path_row(rng, cfg.N, cfg.G, pl);
    }
    cs.g[k] = row;
  }

  // Eves last: a larger S extends the same drop rather than reshuffling it.
  cs.g_hat_e.resize(cfg.S);
  cs.tau.resize(cfg.S);
  for (int s = 0; s < cfg.S; ++s) {
    const Pos eve = uniform_in_disk(rng, cfg.cell_radius_m);
    RowC row(cfg.N * cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
      const double pl = pathloss(dist(rrh[l], eve), cfg.d0_m, cfg.pl_exp_access);
      row.segment(l * cfg.N, cfg.N) = path_row(rng, cfg.N, cfg.G, pl);
    }
    cs.g_hat_e[s] = row;
    cs.tau[s] = cfg.tau_frac * row.squaredNorm();
  }
  return cs;
}

RowC sample_perturbation(int dim, double tau, std::uint64_t seed) {
  if (tau < 0) throw std::invalid_argument("sample_perturbation: tau must be >= 0");
  if (tau == 0) return RowC::Zero(dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  RowC d(dim);
  for (int i = 0; i < dim; ++i) d[i] = circular_gaussian(rng);
  const double norm = d.norm();
  if (norm == 0) return RowC::Zero(dim);
  // radius ~ R * u^{1/(2*dim)} makes the sample uniform over the ball
  const double radius = std::sqrt(tau) * std::pow(uni(rng), 1.0 / (2.0 * dim));
  return d * (radius / norm);
}

namespace {

void dump_row(std::ostream& os, const RowC& r) {
  for (int i = 0; i < r.size(); ++i)
    os << (i ? " " : "") << r[i].real() << "," << r[i].imag();
  os << "\n";
}

RowC read_row(std::istream& is, int n) {
  RowC r(n);
  for (int i = 0; i < n; ++i) {
    double re, im;
    char comma;
    if (!(is >> re >> comma >> im)) throw std::runtime_error("channel load: truncated row");
    r[i] = Complex(re, im);
  }
  return r;
}

} // namespace

void dump_channels(std::ostream& os, const ChannelSet& cs) {
  const int L = static_cast<int>(cs.H.size());
  const int K = static_cast<int>(cs.g.size());
  const int S = static_cast<int>(cs.g_hat_e.size());
  const int N = L ? static_cast<int>(cs.H[0].rows()) : 0;
  const int M = L ? static_cast<int>(cs.H[0].cols()) : 0;
  os << "channels " << L << " " << K << " " << S << " " << N << " " << M << "\n";
  os.precision(17);
  for (const auto& H : cs.H)
    for (int r = 0; r < H.rows(); ++r) dump_row(os, H.row(r));
  for (const auto& g : cs.g) dump_row(os, g);
  for (const auto& e : cs.g_hat_e) dump_row(os, e);
  for (int s = 0; s < S; ++s) os << cs.tau[s] << "\n";
}

ChannelSet load_channels(std::istream& is) {
  std::string tag;
  int L, K, S, N, M;
  if (!(is >> tag >> L >> K >> S >> N >> M) || tag != "channels")
    throw std::runtime_error("channel load: bad header");
  ChannelSet cs;
  cs.H.resize(L);
  for (auto& H : cs.H) {
    H.resize(N, M);
    for (int r = 0; r < N; ++r) H.row(r) = read_row(is, M);
  }
  cs.g.resize(K);
  for (auto& g : cs.g) g = read_row(is, N * L);
  cs.g_hat_e.resize(S);
  for (auto& e : cs.g_hat_e) e = read_row(is, N * L);
  cs.tau.resize(S);
  for (int s = 0; s < S; ++s)
    if (!(is >> cs.tau[s])) throw std::runtime_error("channel load: missing tau");
  return cs;
}

} // namespace scran
