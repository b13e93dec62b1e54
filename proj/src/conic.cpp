#include "securecran/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <limits>
#include <ostream>

namespace scran::conic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// svec / smat / hermitian embedding
// ---------------------------------------------------------------------------

VecX svec(const MatX& S) {
  const int n = static_cast<int>(S.rows());
  VecX v(n * (n + 1) / 2);
  const double r2 = std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    v[idx++] = S(j, j);
    for (int i = j + 1; i < n; ++i) v[idx++] = r2 * S(i, j);
  }
  return v;
}

MatX smat(const VecX& v) {
  const int n = static_cast<int>((std::sqrt(8.0 * v.size() + 1.0) - 1.0) / 2.0 + 0.5);
  MatX S(n, n);
  const double ir2 = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    S(j, j) = v[idx++];
    for (int i = j + 1; i < n; ++i) {
      S(i, j) = S(j, i) = ir2 * v[idx++];
    }
  }
  return S;
}

MatX hermitian_embed(const MatC& H, double tol) {
  const int n = static_cast<int>(H.rows());
  if (H.cols() != n) throw NotHermitian("hermitian_embed: not square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if (((H - H.adjoint()).cwiseAbs().maxCoeff()) > tol * scale)
    throw NotHermitian("hermitian_embed: symmetry check failed");
  MatX E(2 * n, 2 * n);
  E.topLeftCorner(n, n) = H.real();
  E.topRightCorner(n, n) = -H.imag();
  E.bottomLeftCorner(n, n) = H.imag();
  E.bottomRightCorner(n, n) = H.real();
  return E;
}

// ---------------------------------------------------------------------------
// ConicProblem
// ---------------------------------------------------------------------------

int ConicProblem::cone_rows() const {
  int m = 0;
  for (const auto& b : cones) m += cone_dim(b);
  return m;
}

const VariableInfo& ConicProblem::var(const std::string& name) const {
  for (const auto& v : vars)
    if (v.name == name) return v;
  throw std::out_of_range("ConicProblem: unknown variable " + name);
}

void ConicProblem::validate() const {
  const int n = num_vars();
  const int m = cone_rows();
  if (n <= 0) throw std::invalid_argument("ConicProblem: no variables");
  if (G.rows() != m || G.cols() != n || h.size() != m)
    throw std::invalid_argument("ConicProblem: cone rows inconsistent with G/h");
  if (A.size() > 0 && (A.cols() != n || b.size() != A.rows()))
    throw std::invalid_argument("ConicProblem: equality rows inconsistent");
  for (const auto& blk : cones) {
    if (blk.size < 1) throw std::invalid_argument("ConicProblem: empty cone block");
    if (blk.kind == ConeKind::Soc && blk.size < 2)
      throw std::invalid_argument("ConicProblem: SOC dimension must be >= 2");
  }
  std::vector<char> seen(n, 0);
  for (const auto& v : vars) {
    if (v.offset < 0 || v.offset + v.size > n)
      throw std::invalid_argument("ConicProblem: variable out of range");
    for (int i = v.offset; i < v.offset + v.size; ++i) {
      if (seen[i]) throw std::invalid_argument("ConicProblem: overlapping variables");
      seen[i] = 1;
    }
  }
}

void ConicProblem::dump(std::ostream& os) const {
  os << "conic_problem n=" << num_vars() << " eq=" << (A.size() ? A.rows() : 0)
     << " cone_rows=" << cone_rows() << "\n";
  os << "vars:";
  for (const auto& v : vars) os << " " << v.name << "[" << v.offset << ":" << v.size << "]";
  os << "\ncones:";
  for (const auto& blk : cones) {
    const char* k = blk.kind == ConeKind::NonNeg ? "nonneg"
                    : blk.kind == ConeKind::Soc  ? "soc"
                                                 : "psd";
    os << " " << k << ":" << blk.size;
  }
  os << "\nc: " << c.transpose() << "\n";
  if (A.size()) {
    os << "A:\n" << A << "\nb: " << b.transpose() << "\n";
  }
  os << "G:\n" << G << "\nh: " << h.transpose() << "\n";
}

VecX ConicSolution::extract(const ConicProblem& p, const std::string& name) const {
  const auto& v = p.var(name);
  return x.segment(v.offset, v.size);
}

// ---------------------------------------------------------------------------
// Cone-block scaling machinery (Nesterov-Todd)
// ---------------------------------------------------------------------------

namespace {

struct BlockScale {
  ConeKind kind;
  int size;   // block parameter (count / dim / order)
  int dim;    // rows occupied in the cone vector
  int offset; // start row

  // NonNeg
  VecX w; // W = diag(w)

  // Soc
  MatX Wm, Wminv, W2, W2inv;

  // Psd
  MatX R, Rti, Q, RRt; // Q = (R R')^{-1}
  VecX sigma;

  VecX lambda; // scaled point for this block
};

int jordan_degree(const ConeBlock& b) {
  switch (b.kind) {
    case ConeKind::NonNeg: return b.size;
    case ConeKind::Soc: return 1;
    case ConeKind::Psd: return b.size;
  }
  return 0;
}

// Largest step alpha with u + alpha*du staying in the cone (u strictly inside).
double step_to_boundary(const ConeBlock& blk, const Eigen::Ref<const VecX>& u,
                        const Eigen::Ref<const VecX>& du) {
  switch (blk.kind) {
    case ConeKind::NonNeg: {
      double alpha = kInf;
      for (int i = 0; i < blk.size; ++i)
        if (du[i] < 0) alpha = std::min(alpha, -u[i] / du[i]);
      return alpha;
    }
    case ConeKind::Soc: {
      const double a = du[0] * du[0] - du.tail(blk.size - 1).squaredNorm();
      const double b = u[0] * du[0] - u.tail(blk.size - 1).dot(du.tail(blk.size - 1));
      const double c = u[0] * u[0] - u.tail(blk.size - 1).squaredNorm();
      // first positive root of c + 2b t + a t^2 = 0
      if (a == 0.0) return b >= 0 ? kInf : -c / (2.0 * b);
      const double disc = b * b - a * c;
      if (a > 0) {
        if (b >= 0 || disc <= 0) return kInf;
        return (-b - std::sqrt(disc)) / a;
      }
      return (-b - std::sqrt(std::max(0.0, disc))) / a;
    }
    case ConeKind::Psd: {
      const MatX U = smat(u);
      const MatX dU = smat(du);
      Eigen::LLT<MatX> llt(U);
      if (llt.info() != Eigen::Success) return 0.0;
      const MatX Linv_dU =
          llt.matrixL().solve(llt.matrixL().solve(dU).transpose()).transpose();
      Eigen::SelfAdjointEigenSolver<MatX> es(Linv_dU, Eigen::EigenvaluesOnly);
      const double emin = es.eigenvalues().minCoeff();
      return emin >= 0 ? kInf : -1.0 / emin;
    }
  }
  return 0.0;
}

double min_cone_eig(const ConeBlock& blk, const Eigen::Ref<const VecX>& u) {
  switch (blk.kind) {
    case ConeKind::NonNeg: return u.minCoeff();
    case ConeKind::Soc: return u[0] - u.tail(blk.size - 1).norm();
    case ConeKind::Psd: {
      Eigen::SelfAdjointEigenSolver<MatX> es(smat(u), Eigen::EigenvaluesOnly);
      return es.eigenvalues().minCoeff();
    }
  }
  return 0.0;
}

void cone_identity(const ConeBlock& blk, Eigen::Ref<VecX> out) {
  switch (blk.kind) {
    case ConeKind::NonNeg: out.setOnes(); return;
    case ConeKind::Soc:
      out.setZero();
      out[0] = 1.0;
      return;
    case ConeKind::Psd: out = svec(MatX::Identity(blk.size, blk.size)); return;
  }
}

void jordan_prod(const ConeBlock& blk, const Eigen::Ref<const VecX>& u,
                 const Eigen::Ref<const VecX>& v, Eigen::Ref<VecX> out) {
  switch (blk.kind) {
    case ConeKind::NonNeg: out = u.cwiseProduct(v); return;
    case ConeKind::Soc:
      out[0] = u.dot(v);
      out.tail(blk.size - 1) = u[0] * v.tail(blk.size - 1) + v[0] * u.tail(blk.size - 1);
      return;
    case ConeKind::Psd: {
      const MatX U = smat(u), V = smat(v);
      out = svec(0.5 * (U * V + V * U));
      return;
    }
  }
}

struct Scalings {
  std::vector<BlockScale> blocks;
  int total_dim = 0;
  bool identity = false;

  static Scalings make_identity(const std::vector<ConeBlock>& cones) {
    Scalings sc;
    sc.identity = true;
    int off = 0;
    for (const auto& c : cones) {
      BlockScale b;
      b.kind = c.kind;
      b.size = c.size;
      b.dim = cone_dim(c);
      b.offset = off;
      off += b.dim;
      sc.blocks.push_back(std::move(b));
    }
    sc.total_dim = off;
    return sc;
  }

  // NT scaling from a strictly feasible primal-dual pair.
  static bool compute(const std::vector<ConeBlock>& cones, const VecX& s, const VecX& z,
                      Scalings& sc) {
    sc.blocks.clear();
    sc.identity = false;
    int off = 0;
    for (const auto& c : cones) {
      BlockScale b;
      b.kind = c.kind;
      b.size = c.size;
      b.dim = cone_dim(c);
      b.offset = off;
      const auto sb = s.segment(off, b.dim);
      const auto zb = z.segment(off, b.dim);
      switch (c.kind) {
        case ConeKind::NonNeg: {
          if ((sb.array() <= 0).any() || (zb.array() <= 0).any()) return false;
          b.w = (sb.array() / zb.array()).sqrt();
          b.lambda = (sb.array() * zb.array()).sqrt();
          break;
        }
        case ConeKind::Soc: {
          const int d = c.size;
          const double js = sb[0] * sb[0] - sb.tail(d - 1).squaredNorm();
          const double jz = zb[0] * zb[0] - zb.tail(d - 1).squaredNorm();
          if (js <= 0 || jz <= 0 || sb[0] <= 0 || zb[0] <= 0) return false;
          const double ss = std::sqrt(js), zz = std::sqrt(jz);
          VecX sbar = sb / ss, zbar = zb / zz;
          const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
          VecX Jz = zbar;
          Jz.tail(d - 1) *= -1.0;
          VecX wbar = (sbar + Jz) / (2.0 * gamma);
          const double eta = std::sqrt(ss / zz);
          b.Wm.resize(d, d);
          b.Wm(0, 0) = wbar[0];
          b.Wm.row(0).tail(d - 1) = wbar.tail(d - 1).transpose();
          b.Wm.col(0).tail(d - 1) = wbar.tail(d - 1);
          b.Wm.bottomRightCorner(d - 1, d - 1) =
              MatX::Identity(d - 1, d - 1) +
              wbar.tail(d - 1) * wbar.tail(d - 1).transpose() / (1.0 + wbar[0]);
          b.Wm *= eta;
          b.W2 = b.Wm * b.Wm;
          // W J W = eta^2 J, so W^{-1} = J W J / eta^2 (no inversion needed)
          b.Wminv = b.Wm / (eta * eta);
          b.Wminv.row(0).tail(d - 1) *= -1.0;
          b.Wminv.col(0).tail(d - 1) *= -1.0;
          b.W2inv = b.Wminv * b.Wminv;
          b.lambda = b.Wm * zb;
          break;
        }
        case ConeKind::Psd: {
          const MatX S = smat(sb), Z = smat(zb);
          Eigen::LLT<MatX> ls(S), lz(Z);
          if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
          const MatX Ls = ls.matrixL();
          const MatX Lz = lz.matrixL();
          Eigen::JacobiSVD<MatX> svd(Lz.transpose() * Ls,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
          b.sigma = svd.singularValues();
          if (b.sigma.minCoeff() <= 0) return false;
          const VecX isq = b.sigma.array().sqrt().inverse();
          b.R = Ls * svd.matrixV() * isq.asDiagonal();
          b.Rti = Lz * svd.matrixU() * isq.asDiagonal();
          b.RRt = b.R * b.R.transpose();
          b.Q = b.Rti * b.Rti.transpose();
          // lambda matrix is diag(sigma)
          b.lambda = svec(MatX(b.sigma.asDiagonal()));
          break;
        }
      }
      off += b.dim;
      sc.blocks.push_back(std::move(b));
    }
    sc.total_dim = off;
    return true;
  }

  VecX lambda_full() const {
    VecX l(total_dim);
    if (identity) {  // never used: identity scaling has no lambda
      l.setOnes();
      return l;
    }
    for (const auto& b : blocks) l.segment(b.offset, b.dim) = b.lambda;
    return l;
  }

  // out = W'W * in
  void apply_WtW(const VecX& in, VecX& out) const {
    out.resize(total_dim);
    if (identity) {
      out = in;
      return;
    }
    for (const auto& b : blocks) {
      const auto u = in.segment(b.offset, b.dim);
      auto o = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::NonNeg: o = u.cwiseProduct(b.w.cwiseProduct(b.w)); break;
        case ConeKind::Soc: o = b.W2 * u; break;
        case ConeKind::Psd: o = svec(b.RRt * smat(u) * b.RRt); break;
      }
    }
  }

  void apply_inv_WtW(const VecX& in, VecX& out) const {
    out.resize(total_dim);
    if (identity) {
      out = in;
      return;
    }
    for (const auto& b : blocks) {
      const auto u = in.segment(b.offset, b.dim);
      auto o = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::NonNeg: o = u.cwiseQuotient(b.w.cwiseProduct(b.w)); break;
        case ConeKind::Soc: o = b.W2inv * u; break;
        case ConeKind::Psd: o = svec(b.Q * smat(u) * b.Q); break;
      }
    }
  }

  // out = W' * in
  void apply_Wt(const VecX& in, VecX& out) const {
    out.resize(total_dim);
    if (identity) {
      out = in;
      return;
    }
    for (const auto& b : blocks) {
      const auto u = in.segment(b.offset, b.dim);
      auto o = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::NonNeg: o = u.cwiseProduct(b.w); break;
        case ConeKind::Soc: o = b.Wm * u; break;
        case ConeKind::Psd: o = svec(b.R * smat(u) * b.R.transpose()); break;
      }
    }
  }

  // out = W * in
  void apply_W(const VecX& in, VecX& out) const {
    out.resize(total_dim);
    if (identity) {
      out = in;
      return;
    }
    for (const auto& b : blocks) {
      const auto u = in.segment(b.offset, b.dim);
      auto o = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::NonNeg: o = u.cwiseProduct(b.w); break;
        case ConeKind::Soc: o = b.Wm * u; break;
        case ConeKind::Psd: o = svec(b.R.transpose() * smat(u) * b.R); break;
      }
    }
  }

  // out = W^{-T} * in
  void apply_inv_Wt(const VecX& in, VecX& out) const {
    out.resize(total_dim);
    if (identity) {
      out = in;
      return;
    }
    for (const auto& b : blocks) {
      const auto u = in.segment(b.offset, b.dim);
      auto o = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::NonNeg: o = u.cwiseQuotient(b.w); break;
        case ConeKind::Soc: o = b.Wminv * u; break;
        case ConeKind::Psd: o = svec(b.Rti.transpose() * smat(u) * b.Rti); break;
      }
    }
  }

  // out = W^{-1} * in
  void apply_inv_W(const VecX& in, VecX& out) const {
    out.resize(total_dim);
    if (identity) {
      out = in;
      return;
    }
    for (const auto& b : blocks) {
      const auto u = in.segment(b.offset, b.dim);
      auto o = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::NonNeg: o = u.cwiseQuotient(b.w); break;
        case ConeKind::Soc: o = b.Wminv * u; break;
        case ConeKind::Psd: o = svec(b.Rti * smat(u) * b.Rti.transpose()); break;
      }
    }
  }

  // out = lambda \ in  (Jordan division by the scaled point)
  void jordan_div_lambda(const VecX& in, VecX& out) const {
    out.resize(total_dim);
    for (const auto& b : blocks) {
      const auto u = in.segment(b.offset, b.dim);
      auto o = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::NonNeg: o = u.cwiseQuotient(b.lambda); break;
        case ConeKind::Soc: {
          MatX arw = MatX::Zero(b.dim, b.dim);
          arw(0, 0) = b.lambda[0];
          arw.row(0).tail(b.dim - 1) = b.lambda.tail(b.dim - 1).transpose();
          arw.col(0).tail(b.dim - 1) = b.lambda.tail(b.dim - 1);
          for (int i = 1; i < b.dim; ++i) arw(i, i) = b.lambda[0];
          o = arw.ldlt().solve(u);
          break;
        }
        case ConeKind::Psd: {
          const MatX D = smat(u);
          MatX X(b.size, b.size);
          for (int i = 0; i < b.size; ++i)
            for (int j = 0; j < b.size; ++j) X(i, j) = 2.0 * D(i, j) / (b.sigma[i] + b.sigma[j]);
          o = svec(X);
          break;
        }
      }
    }
  }
};

// ---------------------------------------------------------------------------
// KKT kernel:  [0 A' G'; A 0 0; G 0 -W'W] (ux,uy,uz) = (bx,by,bz)
// solved in the scaled variable uzs = W uz, where the system reads
//   A'uy + B'uzs = bx,  A ux = by,  B ux - uzs = W^{-T} bz,  B = W^{-T} G.
// Elimination through H = B'B; refinement in the scaled variables keeps every
// matrix-vector product at cond(W) instead of cond(W)^2, which is what limits
// the attainable direction accuracy near convergence.
// ---------------------------------------------------------------------------

struct BlockCols {
  std::vector<int> cols; // active variable columns for this cone block
  MatX Gsub;             // dim x n_active slice of G
};

struct Kernel {
  const ConicProblem& p;
  const Scalings& sc;
  const std::vector<BlockCols>& pattern;
  bool qr = false; // slower, better conditioned (cond sqrt'd vs normal equations)
  MatX B; // W^{-T} G
  MatX H;
  Eigen::LLT<MatX> Hllt;
  MatX Rqr; // upper factor of B
  MatX HinvAt;
  Eigen::LLT<MatX> Sllt; // A H^{-1} A'
  bool ok = false;

  Kernel(const ConicProblem& prob, const Scalings& scal, const std::vector<BlockCols>& pat,
         bool use_qr = false)
      : p(prob), sc(scal), pattern(pat), qr(use_qr) {
    const int n = p.num_vars();
    const int m = p.cone_rows();
    if (qr && m < n) qr = false;
    B = MatX::Zero(m, n);
    if (!qr) H = MatX::Zero(n, n);
    for (size_t bi = 0; bi < sc.blocks.size(); ++bi) {
      const auto& blk = sc.blocks[bi];
      const auto& pc = pattern[bi];
      const int na = static_cast<int>(pc.cols.size());
      if (na == 0) continue;
      MatX Y(blk.dim, na);
      if (sc.identity) {
        Y = pc.Gsub;
      } else {
        switch (blk.kind) {
          case ConeKind::NonNeg: {
            const VecX iw = blk.w.array().inverse();
            Y = iw.asDiagonal() * pc.Gsub;
            break;
          }
          case ConeKind::Soc: Y = blk.Wminv * pc.Gsub; break;
          case ConeKind::Psd: {
            for (int j = 0; j < na; ++j)
              Y.col(j) = svec(blk.Rti.transpose() * smat(pc.Gsub.col(j)) * blk.Rti);
            break;
          }
        }
      }
      for (int j = 0; j < na; ++j) B.block(blk.offset, pc.cols[j], blk.dim, 1) += Y.col(j);
      if (!qr) {
        const MatX Hsub = Y.transpose() * Y;
        for (int j = 0; j < na; ++j)
          for (int i = 0; i < na; ++i) H(pc.cols[i], pc.cols[j]) += Hsub(i, j);
      }
    }
    if (qr) {
      Eigen::HouseholderQR<MatX> bqr(B);
      Rqr = bqr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
      const VecX d = Rqr.diagonal().cwiseAbs();
      ok = d.minCoeff() > 1e-14 * std::max(d.maxCoeff(), 1e-300);
    } else {
      // jittered Cholesky: escalate until the factorization goes through
      double jitter = 0.0;
      const double base = std::max(1e-14 * H.trace() / n, 1e-300);
      for (int attempt = 0; attempt < 6; ++attempt) {
        MatX Hj = H;
        if (jitter > 0) Hj.diagonal().array() += jitter;
        Hllt.compute(Hj);
        if (Hllt.info() == Eigen::Success) {
          ok = true;
          break;
        }
        jitter = jitter == 0 ? base : jitter * 100.0;
      }
    }
    if (!ok) return;
    if (p.A.size()) {
      HinvAt = hsolve_mat(p.A.transpose());
      Sllt.compute(p.A * HinvAt);
      if (Sllt.info() != Eigen::Success) ok = false;
    }
  }

  VecX hsolve(const VecX& v) const {
    if (!qr) return Hllt.solve(v);
    const VecX t = Rqr.triangularView<Eigen::Upper>().transpose().solve(v);
    return Rqr.triangularView<Eigen::Upper>().solve(t);
  }

  MatX hsolve_mat(const MatX& V) const {
    if (!qr) return Hllt.solve(V);
    const MatX T = Rqr.triangularView<Eigen::Upper>().transpose().solve(V);
    return Rqr.triangularView<Eigen::Upper>().solve(T);
  }

  // scaled system: A'uy + B'uzs = bx, A ux = by, B ux - uzs = bzs
  void solve_once(const VecX& bx, const VecX& by, const VecX& bzs, VecX& ux, VecX& uy,
                  VecX& uzs) const {
    const VecX t1 = bx + B.transpose() * bzs;
    if (p.A.size()) {
      const VecX Hit1 = hsolve(t1);
      uy = Sllt.solve(p.A * Hit1 - by);
      ux = hsolve(t1 - p.A.transpose() * uy);
    } else {
      ux = hsolve(t1);
      uy.resize(0);
    }
    uzs = B * ux - bzs;
  }

  double residual(const VecX& bx, const VecX& by, const VecX& bzs, const VecX& ux, const VecX& uy,
                  const VecX& uzs, VecX& r1, VecX& r2, VecX& r3) const {
    r1 = bx - B.transpose() * uzs;
    if (p.A.size()) r1 -= p.A.transpose() * uy;
    r2 = p.A.size() ? VecX(by - p.A * ux) : VecX();
    r3 = bzs - (B * ux - uzs);
    return std::sqrt(r1.squaredNorm() + r2.squaredNorm() + r3.squaredNorm());
  }

  // returns the relative residual of the returned solution (in scaled variables)
  double solve(const VecX& bx, const VecX& by, const VecX& bz, VecX& ux, VecX& uy,
               VecX& uz) const {
    VecX bzs;
    sc.apply_inv_Wt(bz, bzs);
    VecX uzs;
    solve_once(bx, by, bzs, ux, uy, uzs);
    const double bscale =
        std::max(1.0, std::sqrt(bx.squaredNorm() + by.squaredNorm() + bzs.squaredNorm()));
    VecX r1, r2, r3;
    double res = residual(bx, by, bzs, ux, uy, uzs, r1, r2, r3);
    for (int pass = 0; pass < 4 && res > 1e-14 * bscale; ++pass) {
      VecX dx, dy, dz;
      solve_once(r1, r2, r3, dx, dy, dz);
      const VecX nx = ux + dx;
      const VecX ny = p.A.size() ? VecX(uy + dy) : VecX();
      const VecX nz = uzs + dz;
      VecX q1, q2, q3;
      const double nres = residual(bx, by, bzs, nx, ny, nz, q1, q2, q3);
      if (nres >= 0.9 * res) break;
      ux = nx;
      uy = ny;
      uzs = nz;
      r1.swap(q1);
      r2.swap(q2);
      r3.swap(q3);
      res = nres;
    }
    sc.apply_inv_W(uzs, uz);
    return res / bscale;
  }
};

std::vector<BlockCols> build_pattern(const ConicProblem& p) {
  std::vector<BlockCols> pat;
  const int n = p.num_vars();
  int off = 0;
  for (const auto& c : p.cones) {
    const int dim = cone_dim(c);
    BlockCols bc;
    for (int j = 0; j < n; ++j) {
      bool any = false;
      for (int i = 0; i < dim && !any; ++i) any = p.G(off + i, j) != 0.0;
      if (any) bc.cols.push_back(j);
    }
    bc.Gsub.resize(dim, bc.cols.size());
    for (size_t j = 0; j < bc.cols.size(); ++j) bc.Gsub.col(j) = p.G.block(off, bc.cols[j], dim, 1);
    pat.push_back(std::move(bc));
    off += dim;
  }
  return pat;
}

} // namespace

// ---------------------------------------------------------------------------
// Homogeneous self-dual path-following solver
// ---------------------------------------------------------------------------

ConicSolution solve(const ConicProblem& p, const SolverParams& params) {
  p.validate();
  const int n = p.num_vars();
  const int m = p.cone_rows();
  const bool has_eq = p.A.size() > 0;
  const auto pattern = build_pattern(p);

  ConicSolution sol;

  int degree = 0;
  for (const auto& c : p.cones) degree += jordan_degree(c);

  // ---- initial point: least-squares primal/dual shifted into the cone
  VecX x, y, s, z;
  {
    const Scalings id = Scalings::make_identity(p.cones);
    Kernel k0(p, id, pattern);
    if (!k0.ok) {
      sol.status = SolveStatus::NumericalFailure;
      return sol;
    }
    VecX zhat;
    k0.solve(VecX::Zero(n), p.b, p.h, x, y, zhat);
    VecX shat = -zhat; // h - Gx
    VecX xd, yd;
    k0.solve(-p.c, has_eq ? VecX::Zero(p.A.rows()) : VecX(), VecX::Zero(m), xd, yd, zhat);

    VecX e(m);
    int off = 0;
    for (const auto& c : p.cones) {
      cone_identity(c, e.segment(off, cone_dim(c)));
      off += cone_dim(c);
    }
    auto shift_into_cone = [&](VecX& u) {
      double t = kInf;
      int o = 0;
      for (const auto& c : p.cones) {
        t = std::min(t, min_cone_eig(c, u.segment(o, cone_dim(c))));
        o += cone_dim(c);
      }
      if (t <= 0) u += (1.0 - t) * e;
    };
    s = shat;
    shift_into_cone(s);
    z = zhat;
    shift_into_cone(z);
    if (!has_eq) y.resize(0);
  }
  double tau = 1.0, kappa = 1.0;

  const double cnorm = std::max(1.0, p.c.norm());
  const double hnorm = std::max(1.0, p.h.norm());
  const double bnorm = has_eq ? std::max(1.0, p.b.norm()) : 1.0;

  auto finish_point = [&](SolveStatus st) {
    sol.status = st;
    sol.x = x / tau;
    sol.y = has_eq ? VecX(y / tau) : VecX();
    sol.z = z / tau;
    sol.s = s / tau;
    sol.primal_obj = p.c.dot(sol.x);
    sol.dual_obj = -(p.h.dot(sol.z) + (has_eq ? p.b.dot(sol.y) : 0.0));
    sol.gap = sol.s.dot(sol.z);
  };

  Scalings sc;
  VecX rx(n), rz(m), ry;

  struct BestPoint {
    double merit = kInf;
    VecX x, y, z, s;
    double tau = 1, kappa = 1;
    double pres = kInf, dres = kInf, relgap = kInf, g = kInf;
    int iter = 0;
  } best;

  for (int iter = 0; iter <= params.max_iter; ++iter) {
    // residuals
    rx = p.G.transpose() * z + p.c * tau;
    if (has_eq) rx += p.A.transpose() * y;
    if (has_eq) ry = p.A * x - p.b * tau;
    rz = p.G * x + s - p.h * tau;
    const double rtau = kappa + p.c.dot(x) + p.h.dot(z) + (has_eq ? p.b.dot(y) : 0.0);

    const double gap = s.dot(z);
    const double mu = (gap + tau * kappa) / (degree + 1);

    const double pcost = p.c.dot(x) / tau;
    const double dcost = -(p.h.dot(z) + (has_eq ? p.b.dot(y) : 0.0)) / tau;
    const double g = gap / (tau * tau);
    double relgap = kInf;
    if (pcost < 0)
      relgap = g / -pcost;
    else if (dcost > 0)
      relgap = g / dcost;

    const double pres =
        std::max(has_eq ? ry.norm() / bnorm : 0.0, rz.norm() / hnorm) / tau;
    const double dres = rx.norm() / cnorm / tau;

    sol.primal_resid = pres;
    sol.dual_resid = dres;
    sol.rel_gap = relgap;
    sol.iterations = iter;

    const double merit = std::max({pres, dres, std::min(relgap, g)});
    if (merit < best.merit) {
      best.merit = merit;
      best.x = x;
      best.y = y;
      best.z = z;
      best.s = s;
      best.tau = tau;
      best.kappa = kappa;
      best.pres = pres;
      best.dres = dres;
      best.relgap = relgap;
      best.g = g;
      best.iter = iter;
    }

    if (params.verbose) {
      // pcost dcost gap pres dres
      std::fprintf(stderr, "it %3d  pcost % .6e dcost % .6e gap %.2e pres %.2e dres %.2e\n",
                   iter, pcost, dcost, g, pres, dres);
    }

    if (pres <= params.feas_tol && dres <= params.feas_tol &&
        (relgap <= params.gap_tol || g <= params.gap_tol * 1e-2)) {
      finish_point(SolveStatus::Optimal);
      sol.rel_gap = relgap;
      return sol;
    }

    // primal infeasibility certificate: A'y + G'z ~ 0 with h'z + b'y < 0
    const double hz_by = -(p.h.dot(z) + (has_eq ? p.b.dot(y) : 0.0));
    if (hz_by > 0) {
      VecX cert = p.G.transpose() * z;
      if (has_eq) cert += p.A.transpose() * y;
      if (cert.norm() / cnorm / hz_by <= params.feas_tol) {
        sol.status = SolveStatus::Infeasible;
        sol.x = VecX::Zero(n);
        sol.y = has_eq ? VecX(y / hz_by) : VecX();
        sol.z = z / hz_by;
        sol.s = s / hz_by;
        return sol;
      }
    }
    // certificate of unboundedness (dual infeasibility); outside the spec's
    // status set since bounded powers preclude it, reported as failure
    if (-pcost * tau > 0) {
      const double dinf =
          std::max(has_eq ? (p.A * x).norm() / bnorm : 0.0, (p.G * x + s).norm() / hnorm) /
          (-p.c.dot(x));
      if (dinf <= params.feas_tol) {
        sol.status = SolveStatus::NumericalFailure;
        sol.x = x / -p.c.dot(x);
        return sol;
      }
    }

    if (iter == params.max_iter) {
      finish_point(SolveStatus::MaxIter);
      return sol;
    }

    if (!Scalings::compute(p.cones, s, z, sc)) {
      if (params.verbose) std::fprintf(stderr, "   scaling breakdown\n");
      break;
    }

    const Kernel* K = nullptr;
    VecX x1, y1, z1;
    double dg1 = 0;

    VecX lam_lam(m);
    for (const auto& b : sc.blocks)
      jordan_prod({b.kind, b.size}, b.lambda, b.lambda, lam_lam.segment(b.offset, b.dim));
    VecX e_full(m);
    {
      int off = 0;
      for (const auto& c : p.cones) {
        cone_identity(c, e_full.segment(off, cone_dim(c)));
        off += cone_dim(c);
      }
    }

    struct Dir {
      VecX x, y, z, s;
      double tau = 0, kap = 0;
    };

    // full self-dual Newton operator, used to refine assembled directions
    auto newton_apply = [&](const Dir& D, VecX& ox, VecX& oy, VecX& oz, double& otau, VecX& os,
                            double& okap) {
      ox = p.G.transpose() * D.z + p.c * D.tau;
      if (has_eq) ox += p.A.transpose() * D.y;
      if (has_eq) oy = p.A * D.x - p.b * D.tau;
      oz = p.G * D.x + D.s - p.h * D.tau;
      otau = p.c.dot(D.x) + (has_eq ? p.b.dot(D.y) : 0.0) + p.h.dot(D.z) + D.kap;
      VecX WDz, WiDs;
      sc.apply_W(D.z, WDz);
      sc.apply_inv_Wt(D.s, WiDs);
      WDz += WiDs;
      os.resize(m);
      for (const auto& b : sc.blocks)
        jordan_prod({b.kind, b.size}, b.lambda, WDz.segment(b.offset, b.dim),
                    os.segment(b.offset, b.dim));
      okap = tau * D.kap + kappa * D.tau;
    };

    auto newton_raw = [&](const VecX& bx, const VecX& by, const VecX& bz, double btau,
                          const VecX& ds, double dkap, Dir& D) {
      VecX wds;
      sc.jordan_div_lambda(ds, wds);
      VecX Wt_wds;
      sc.apply_Wt(wds, Wt_wds);
      VecX x0, y0, z0;
      const double kres = K->solve(bx, by, bz - Wt_wds, x0, y0, z0);
      if (params.verbose && kres > 1e-10)
        std::fprintf(stderr, "   kernel res %.2e\n", kres);
      const double num =
          btau - dkap / tau - (p.c.dot(x0) + (has_eq ? p.b.dot(y0) : 0.0) + p.h.dot(z0));
      const double den = dg1 - kappa / tau;
      D.tau = num / den;
      D.x = x0 + D.tau * x1;
      if (has_eq) D.y = y0 + D.tau * y1;
      D.z = z0 + D.tau * z1;
      VecX WtWDz;
      sc.apply_WtW(D.z, WtWDz);
      D.s = Wt_wds - WtWDz;
      D.kap = (dkap - kappa * D.tau) / tau;
    };

    // solve + residual refinement over all six equation blocks; returns the
    // relative residual of the accepted direction
    auto newton_solve = [&](const VecX& bx, const VecX& by, const VecX& bz, double btau,
                            const VecX& ds, double dkap, Dir& D) {
      const double scale =
          std::max(1.0, std::sqrt(bx.squaredNorm() + by.squaredNorm() + bz.squaredNorm() +
                                  btau * btau + ds.squaredNorm() + dkap * dkap));
      VecX ex, ey, ez, es;
      double etau, ekap;
      auto resid = [&](const Dir& Dc) {
        VecX ox, oy, oz, os;
        double otau, okap;
        newton_apply(Dc, ox, oy, oz, otau, os, okap);
        ex = bx - ox;
        ey = has_eq ? VecX(by - oy) : VecX();
        ez = bz - oz;
        etau = btau - otau;
        es = ds - os;
        ekap = dkap - okap;
        return std::sqrt(ex.squaredNorm() + ey.squaredNorm() + ez.squaredNorm() + etau * etau +
                         es.squaredNorm() + ekap * ekap);
      };
      newton_raw(bx, by, bz, btau, ds, dkap, D);
      double res = resid(D);
      if (params.verbose && res > 1e-6 * scale)
        std::fprintf(stderr, "   raw ex %.2e ey %.2e ez %.2e etau %.2e es %.2e ekap %.2e\n",
                     ex.norm(), ey.size() ? ey.norm() : 0.0, ez.norm(), etau, es.norm(), ekap);
      for (int pass = 0; pass < 3 && res > 1e-14 * scale; ++pass) {
        Dir C;
        newton_raw(ex, ey, ez, etau, es, ekap, C);
        Dir Dn = D;
        Dn.x += C.x;
        if (has_eq) Dn.y += C.y;
        Dn.z += C.z;
        Dn.s += C.s;
        Dn.tau += C.tau;
        Dn.kap += C.kap;
        const double rn = resid(Dn);
        if (rn >= 0.9 * res) break;
        D = Dn;
        res = rn;
      }
      return res / scale;
    };

    auto max_step = [&](const VecX& sv, const VecX& dsv, const VecX& zv, const VecX& dzv,
                        double dtau_, double dkap_) {
      double alpha = kInf;
      int off = 0;
      for (const auto& c : p.cones) {
        const int dim = cone_dim(c);
        alpha = std::min(alpha, step_to_boundary(c, sv.segment(off, dim), dsv.segment(off, dim)));
        alpha = std::min(alpha, step_to_boundary(c, zv.segment(off, dim), dzv.segment(off, dim)));
        off += dim;
      }
      if (dtau_ < 0) alpha = std::min(alpha, -tau / dtau_);
      if (dkap_ < 0) alpha = std::min(alpha, -kappa / dkap_);
      return alpha;
    };

    // predictor-corrector directions; if the fast normal-equations kernel has
    // degraded, the iteration is retried through the better-conditioned QR kernel
    Dir Dc;
    double alpha = 0;
    bool have_dir = false;
    for (int mode = 0; mode < 2 && !have_dir; ++mode) {
      const Kernel kern(p, sc, pattern, mode == 1);
      if (params.verbose && m <= 8 && n <= 8) {
        Eigen::JacobiSVD<MatX> bs(kern.B);
        std::fprintf(stderr, "   mode %d svals:", mode);
        for (int i = 0; i < bs.singularValues().size(); ++i)
          std::fprintf(stderr, " %.3e", bs.singularValues()[i]);
        std::fprintf(stderr, "\n");
        std::ostringstream os;
        os << kern.B;
        std::fprintf(stderr, "B =\n%s\n", os.str().c_str());
      }
      if (!kern.ok) continue;
      K = &kern;
      kern.solve(-p.c, has_eq ? p.b : VecX(), p.h, x1, y1, z1);
      // c'x1 + b'y1 + h'z1 = -|W z1|^2 exactly; the inner-product form cancels
      // catastrophically near convergence
      VecX Wz1;
      sc.apply_W(z1, Wz1);
      dg1 = -Wz1.squaredNorm();

      Dir Da;
      const double qa =
          newton_solve(-rx, has_eq ? VecX(-ry) : VecX(), -rz, -rtau, -lam_lam, -tau * kappa, Da);
      if (!(qa < 1e-4)) {
        if (params.verbose) std::fprintf(stderr, "   mode %d: predictor quality %.2e\n", mode, qa);
        continue;
      }

      const double alpha_aff = std::min(1.0, max_step(s, Da.s, z, Da.z, Da.tau, Da.kap));
      const double mu_aff = ((s + alpha_aff * Da.s).dot(z + alpha_aff * Da.z) +
                             (tau + alpha_aff * Da.tau) * (kappa + alpha_aff * Da.kap)) /
                            (degree + 1);
      const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

      // Mehrotra second-order correction
      VecX Winv_dsa, W_dza;
      sc.apply_inv_Wt(Da.s, Winv_dsa);
      sc.apply_W(Da.z, W_dza);
      VecX corr(m);
      for (const auto& b : sc.blocks) {
        jordan_prod({b.kind, b.size}, Winv_dsa.segment(b.offset, b.dim),
                    W_dza.segment(b.offset, b.dim), corr.segment(b.offset, b.dim));
      }
      const VecX ds_comb = sigma * mu * e_full - lam_lam - corr;
      const double dkap_comb = sigma * mu - tau * kappa - Da.tau * Da.kap;

      const double f = 1.0 - sigma;
      const double qc = newton_solve(-f * rx, has_eq ? VecX(-f * ry) : VecX(), -f * rz, -f * rtau,
                                     ds_comb, dkap_comb, Dc);
      if (!(qc < 1e-4)) {
        if (params.verbose) std::fprintf(stderr, "   mode %d: corrector quality %.2e\n", mode, qc);
        continue;
      }

      alpha = std::min(1.0, 0.99 * max_step(s, Dc.s, z, Dc.z, Dc.tau, Dc.kap));
      if (!std::isfinite(alpha) || alpha <= 1e-14) {
        if (params.verbose) std::fprintf(stderr, "   mode %d: step %.2e\n", mode, alpha);
        continue;
      }
      have_dir = true;
    }
    K = nullptr;
    if (!have_dir) break; // degraded beyond repair; fall back to the best iterate

    x += alpha * Dc.x;
    if (has_eq) y += alpha * Dc.y;
    z += alpha * Dc.z;
    s += alpha * Dc.s;
    tau += alpha * Dc.tau;
    kappa += alpha * Dc.kap;
    if (!(tau > 0) || !std::isfinite(tau) || !x.allFinite() || !s.allFinite() || !z.allFinite())
      break;
  }

  // numerical breakdown: report the best iterate seen, honestly flagged
  if (best.x.size()) {
    x = best.x;
    y = best.y;
    z = best.z;
    s = best.s;
    tau = best.tau;
    kappa = best.kappa;
  }
  finish_point(SolveStatus::NumericalFailure);
  sol.primal_resid = best.pres;
  sol.dual_resid = best.dres;
  sol.rel_gap = best.relgap;
  sol.iterations = best.iter;
  return sol;
}

} // namespace scran::conic
