#pragma once

#include "securecran/types.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace scran::conic {

enum class ConeKind { NonNeg, Soc, Psd };

/// One block of the cone K. `size` is the entry count for NonNeg, the cone
/// dimension for Soc (leading entry is the norm bound) and the matrix order
/// for Psd (stored in svec coordinates).
struct ConeBlock {
  ConeKind kind;
  int size;
};

inline int cone_dim(const ConeBlock& b) {
  return b.kind == ConeKind::Psd ? b.size * (b.size + 1) / 2 : b.size;
}

struct VariableInfo {
  std::string name;
  int offset;
  int size;
};

/// Dense conic program:  minimize c'x  s.t.  A x = b,  h - G x in K.
struct ConicProblem {
  VecX c;
  MatX A;
  VecX b;
  MatX G;
  VecX h;
  std::vector<ConeBlock> cones;
  std::vector<VariableInfo> vars;

  int num_vars() const { return static_cast<int>(c.size()); }
  int cone_rows() const;
  const VariableInfo& var(const std::string& name) const;
  void validate() const;
  void dump(std::ostream& os) const;
};

enum class SolveStatus { Optimal, Infeasible, MaxIter, NumericalFailure };

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  VecX x;       // primal variables (certificate ray when Infeasible)
  VecX y;       // equality duals
  VecX z;       // cone duals
  VecX s;       // cone slacks
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;      // absolute duality gap s'z
  double rel_gap = 0.0;
  double primal_resid = 0.0;
  double dual_resid = 0.0;
  int iterations = 0;

  VecX extract(const ConicProblem& p, const std::string& name) const;
};

struct SolverParams {
  double gap_tol = 1e-7;
  double feas_tol = 1e-7;
  int max_iter = 200;
  bool verbose = false;
};

ConicSolution solve(const ConicProblem& p, const SolverParams& params = {});

struct NotHermitian : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// [[Re H, -Im H], [Im H, Re H]]; PSD iff H is, with the spectrum doubled.
MatX hermitian_embed(const MatC& H, double tol = 1e-10);

/// Symmetric vectorization with sqrt(2)-scaled off-diagonals, so that
/// svec(A)'svec(B) = Tr(AB). Column-major lower triangle order.
VecX svec(const MatX& S);
MatX smat(const VecX& v);

} // namespace scran::conic
