#pragma once

// Tightness, ε- and infeasibility certificates recovered from the Gram side of
// a solved relaxation, plus an independent verifier that re-expands them.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "spop/relax.hpp"
#include "spop/sdp.hpp"

namespace spop {

/// generator * [x_vars]_dᵀ G [x_vars]_d.
struct GramTerm {
  Polynomial generator;
  std::vector<int> vars;
  int basis_degree = 0;
  Eigen::MatrixXd gram;
  std::string label;

  Polynomial expand() const;
};

/// multiplier * generator with generator = h_ij.
struct IdealTerm {
  int constraint = 0;
  Polynomial generator;
  Polynomial multiplier;
};

struct BlockCertificate {
  int block = 0;
  std::vector<GramTerm> sos;
  std::vector<IdealTerm> ideal;

  /// Σ generator·σ + Σ multiplier·h.
  Polynomial expand(int n) const;
};

/// Σ p_i + γ = 0 and f_i + p_i + ε ∈ Ideal_{Δi}[h_i]_{2k} + QM/Pre_{Δi}[g_i]_{2k}.
struct TightnessCertificate {
  Model model = Model::SparsePutinar;
  int k = 1;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::vector<Polynomial> p;
  std::vector<BlockCertificate> blocks;
  double identity_residual = 0.0;
  std::vector<double> membership_residual;
};

struct SplitResult {
  std::optional<TightnessCertificate> certificate;
  double gamma_hat = 0.0;  // best γ the recovered Gram data supports
  std::string diagnostic;
};

/// Recovers per-block representations s_i from the Gram side and sets
/// p_i = s_i − f_i − ε (after shifting σ_0 so that Σ p_i = −γ). γ defaults to
/// the recovered value; a target above γ_hat + mε cannot be certified.
SplitResult split_representation(const RelaxationSolve& solved, const SparsePOP& pop,
                                 std::optional<double> gamma = std::nullopt, double epsilon = 0.0);

struct VerifyOptions {
  double residual_tol = 1e-5;  // relative to max(1, ‖f‖∞)
  double eig_floor = -1e-9;
  double zero_tol = 1e-5;      // achievability test on candidates
};

struct VerifyReport {
  bool valid = false;
  /// "tightness" when (ii) holds at a candidate, "epsilon" when ε > 0,
  /// "lower-bound" for a valid identity without a common zero.
  std::string kind;
  double identity_residual = 0.0;
  std::vector<double> membership_residual;
  double min_eigenvalue = 0.0;
  std::vector<std::string> problems;
  std::optional<bool> achievable;
  std::vector<double> candidate_values;  // Σ_i |f_i + p_i + ε| at each candidate
};

/// Independent re-expansion with symmetrized, eigenvalue-floored Gram matrices.
VerifyReport verify_certificate(const TightnessCertificate& cert, const SparsePOP& pop,
                                const std::vector<std::vector<double>>& candidates = {},
                                const VerifyOptions& opts = {});

enum class Membership { Member, NotMember, Indeterminate };

std::string to_string(Membership m);

struct MembershipResult {
  Membership verdict = Membership::Indeterminate;
  double gamma = 0.0;  // max{γ : q − γ ∈ cone}
  BlockCertificate representation;
  double residual = 0.0;  // ‖q − representation‖∞ on acceptance
  std::optional<Eigen::VectorXd> separating_y;
  std::shared_ptr<const UnionIndex> index;
  std::string diagnostic;
};

/// Is q ∈ Ideal[h]_{2k} + QM[g]_{2k} (or Pre[g]_{2k} when preordering) over `vars`?
MembershipResult check_membership(const Polynomial& q, const std::vector<int>& vars,
                                  const std::vector<Polynomial>& h, const std::vector<Polynomial>& g, int k,
                                  bool preordering = false, const SolverOptions& opts = {});

/// Σ p_i = 0 with −1 + p_i ∈ Ideal_{Δi}[h_i]_{2k} + Pre_{Δi}[g_i]_{2k}.
struct InfeasibilityCertificate {
  int k = 1;
  std::vector<Polynomial> p;
  std::vector<BlockCertificate> blocks;
  double sum_residual = 0.0;
  std::vector<double> membership_residual;
};

enum class InfeasibilityStatus { Found, NotFound, Indeterminate };

std::string to_string(InfeasibilityStatus s);

struct InfeasibilityResult {
  InfeasibilityStatus status = InfeasibilityStatus::Indeterminate;
  std::optional<InfeasibilityCertificate> certificate;
  std::string diagnostic;
};

InfeasibilityResult sparse_infeasibility(const SparsePOP& pop, int k, const SolverOptions& opts = {});

VerifyReport verify_infeasibility(const InfeasibilityCertificate& cert, const SparsePOP& pop,
                                  const VerifyOptions& opts = {});

}  // namespace spop
