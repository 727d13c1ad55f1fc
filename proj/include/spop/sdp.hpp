#pragma once

// Block-diagonal SDPs in standard form and a primal-dual interior-point solver.
//
//   primal:  min ⟨C, X⟩  s.t. ⟨A_q, X⟩ = b_q,  X ⪰ 0
//   dual:    max bᵀz     s.t. Z = C − Σ_q z_q A_q ⪰ 0
//
// A moment relaxation maps onto the dual side: the moment vector is
// y = y_p + N z after the equality rows (and y_0 = 1) are eliminated.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "spop/relax.hpp"

namespace spop {

struct SparseEntry {
  int r = 0;
  int c = 0;
  double v = 0.0;
};

/// Nonzeros of one symmetric constraint matrix restricted to one PSD block;
/// both triangles are listed.
struct BlockTerm {
  int q = 0;
  std::vector<SparseEntry> entries;
};

struct StandardSdp {
  std::vector<int> sides;
  std::vector<Eigen::MatrixXd> C;
  std::vector<std::vector<BlockTerm>> A;  // per PSD block, sorted by q
  Eigen::VectorXd b;

  // Map back to the moment vector (empty when built by hand).
  Eigen::VectorXd y_particular;
  Eigen::SparseMatrix<double> null_basis;  // |𝕌_k| x (number of free moments)
  double objective_offset = 0.0;           // fᵀ y_p
  int dropped_rows = 0;                    // redundant equality rows removed
  bool inconsistent = false;               // the linear rows admit no y at all

  int num_constraints() const { return static_cast<int>(b.size()); }
  int total_dim() const;
  Eigen::VectorXd moments(const Eigen::VectorXd& z) const;
};

/// Eliminates the linear rows of a relaxation and returns the standard form.
/// Throws CapError when the free-moment count or the total PSD dimension
/// exceeds `psd_cap`.
StandardSdp to_standard(const SdpProblem& prob, int psd_cap);

enum class SdpStatus { Optimal, NearOptimal, InfeasibleCertificate, UnboundedCertificate, Stalled };

std::string to_string(SdpStatus s);

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
  int psd_cap = 2000;
  double step_fraction = 0.95;

  /// psd_cap from SPOP_PSD_CAP when set.
  static SolverOptions from_env();
};

struct IterationLog {
  int iter = 0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_inf = 0.0;
  double dual_inf = 0.0;
  double gap = 0.0;
  double mu = 0.0;
  double step_primal = 0.0;
  double step_dual = 0.0;
};

struct SdpSolution {
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> Z;
  Eigen::VectorXd z;
  double primal_objective = 0.0;  // ⟨C, X⟩
  double dual_objective = 0.0;    // bᵀz
  SdpStatus status = SdpStatus::Stalled;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::vector<IterationLog> log;

  bool solved() const { return status == SdpStatus::Optimal || status == SdpStatus::NearOptimal; }
};

SdpSolution solve(const StandardSdp& sdp, const SolverOptions& opts = {});

/// Solved moment relaxation: bound = fᵀy on the moment side, sos_bound on the
/// Gram side (they agree up to the duality gap).
struct RelaxationSolve {
  SdpProblem problem;
  StandardSdp standard;
  SdpSolution solution;
  Eigen::VectorXd y;
  double bound = 0.0;
  double sos_bound = 0.0;
};

RelaxationSolve solve_relaxation(SdpProblem problem, const SolverOptions& opts = {});

}  // namespace spop
