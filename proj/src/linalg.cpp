#include "spop/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spop {

SymEig sym_eig(const Eigen::MatrixXd& a) {
  SymEig out;
  if (a.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
  out.converged = es.info() == Eigen::Success;
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  out.residual = (a * out.vectors - out.vectors * out.values.asDiagonal()).norm() / std::max(1.0, a.norm());
  return out;
}

std::optional<Eigen::MatrixXd> chol(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Eigen::MatrixXd l = llt.matrixL();
  if ((l.diagonal().array() <= 0.0).any()) return std::nullopt;
  return l;
}

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& a, double floor) {
  const auto e = sym_eig(a);
  const Eigen::VectorXd clipped = e.values.cwiseMax(floor);
  return e.vectors * clipped.asDiagonal() * e.vectors.transpose();
}

namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  // Symmetric input: singular values are |eigenvalues|, sorted descending.
  Eigen::VectorXd s = sym_eig(a).values.cwiseAbs();
  std::sort(s.data(), s.data() + s.size(), std::greater<>());
  return s;
}

}  // namespace

int numeric_rank(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.size() == 0) return 0;
  const auto s = singular_values(a);
  if (s[0] <= 0.0) return 0;
  int r = 0;
  while (r < s.size() && s[r] > rel_tol * s[0]) ++r;
  return r;
}

double rank_gap(const Eigen::MatrixXd& a, int rank) {
  const auto s = singular_values(a);
  if (rank <= 0 || rank >= s.size() || s[rank] <= 0.0) return std::numeric_limits<double>::infinity();
  return s[rank - 1] / s[rank];
}

}  // namespace spop
