#pragma once

// Dense symmetric kernels shared by the solver, extraction and certificates.

#include <Eigen/Dense>
#include <optional>

namespace spop {

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
  double residual = 0.0;    // ‖A V − V Λ‖_F / max(1, ‖A‖_F)
  bool converged = true;
};

SymEig sym_eig(const Eigen::MatrixXd& a);

/// Lower Cholesky factor, or nullopt when a is not numerically positive definite.
std::optional<Eigen::MatrixXd> chol(const Eigen::MatrixXd& a);

/// Nearest PSD matrix in Frobenius norm (eigenvalues clipped at `floor`).
Eigen::MatrixXd psd_project(const Eigen::MatrixXd& a, double floor = 0.0);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

/// Number of singular values above rel_tol * σ_max; 0 for the zero matrix.
int numeric_rank(const Eigen::MatrixXd& a, double rel_tol = 1e-6);

/// σ_r / σ_{r+1} for the given rank (infinity when σ_{r+1} vanishes or r is full).
double rank_gap(const Eigen::MatrixXd& a, int rank);

}  // namespace spop
