#pragma once

// Rank analysis of moment matrices, flat truncation, atom extraction and the
// assembly of global minimizers from per-block atoms.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spop/relax.hpp"
#include "spop/sparsity.hpp"

namespace spop {

/// M^{(t)} over the variables `vars` (a block or an overlap) read from y on 𝕌_k.
Eigen::MatrixXd moment_matrix(const UnionIndex& index, const Eigen::VectorXd& y, const std::vector<int>& vars, int t);

/// y restricted to ℕ^{vars}_{2t}, in the order of MonomialBasis(vars, 2t).
Eigen::VectorXd local_moments(const UnionIndex& index, const Eigen::VectorXd& y, const std::vector<int>& vars, int t);

struct LevelRank {
  int t = 0;
  int rank = 0;        // rank M^{(t)}
  int rank_lower = 0;  // rank M^{(t - d)}
  double gap = 0.0;    // σ_r / σ_{r+1} of M^{(t)}
};

struct BlockFlatness {
  int block = 0;
  int d = 1;  // degree drop used in the comparison
  std::vector<LevelRank> levels;
  std::optional<int> t;  // smallest flat level
  int rank = 0;          // rank at t (or at k when not flat)
};

struct OverlapRank {
  int i = 0;
  int j = 0;
  std::vector<int> vars;
  int rank = 0;        // rank M^{(t)}_{Δij}
  int rank_lower = 0;  // rank M^{(t-1)}_{Δij}
};

struct FlatReport {
  double rank_tol = 1e-6;
  std::vector<BlockFlatness> blocks;
  /// Smallest t ∈ [k0, k] at which every block is flat.
  std::optional<int> common_t;
  /// Ranks at common_t (or at k when there is none).
  std::vector<OverlapRank> overlaps;
  std::vector<std::string> warnings;

  std::vector<int> ranks_at(int t) const;
};

/// Level comparison uses d = max(d_i, 1).
FlatReport flat_truncation(const SparsePOP& pop, const UnionIndex& index, const Eigen::VectorXd& y, int k,
                           double rank_tol = 1e-6);

struct Atom {
  double weight = 0.0;
  std::vector<double> point;  // coordinates for `vars` of the owning measure
};

struct AtomicMeasure {
  int block = -1;  // -1 for global points
  std::vector<int> vars;
  int t = 0;
  std::vector<Atom> atoms;
  double reconstruction_error = 0.0;  // ‖y|_{2t} − Σ λ_j [u_j]_{2t}‖∞
};

struct ExtractOptions {
  /// Pivot thresholds tried in order when selecting the monomial basis.
  std::vector<double> pivot_tols{1e-6, 1e-4, 1e-3};
  double negative_weight_tol = 1e-8;
  double complex_tol = 1e-8;
  /// ‖y|_{2t} − Σ λ_j [u_j]_{2t}‖∞ allowed, relative to max(1, ‖y‖∞).
  double max_reconstruction_error = 1e-4;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct Extraction {
  std::optional<AtomicMeasure> measure;
  std::string diagnostic;
};

/// y_local over ℕ^{vars}_{2t} (MonomialBasis order); r atoms are expected.
Extraction extract_atoms(const std::vector<int>& vars, const Eigen::VectorXd& y_local, int t, int r,
                         const ExtractOptions& opts = {});

/// Σ λ_j [u_j]_{2t} over ℕ^{vars}_{2t}.
Eigen::VectorXd atomic_moments(const std::vector<int>& vars, const std::vector<Atom>& atoms, int t);

enum class StitchStatus { Stitched, Refused, Unstitchable };

std::string to_string(StitchStatus s);

struct StitchResult {
  StitchStatus status = StitchStatus::Refused;
  std::vector<std::vector<double>> points;  // global, length n
  std::string reason;
  std::optional<std::pair<int, int>> offending;  // (block, atom) left unmatched
};

/// Induction along the RIP ordering, matching each block's atoms to the partial
/// points on the already covered variables. Refuses without RIP, without a
/// connected cover or with unequal atom counts.
StitchResult stitch(const std::vector<AtomicMeasure>& measures, const SparsityPattern& pattern, const RipReport& rip,
                    double match_tol = 1e-5);

/// Every x whose block projections all lie in the extracted atom sets (no RIP
/// needed). Coordinates outside every block are set to 0.
std::vector<std::vector<double>> consistent_points(const std::vector<AtomicMeasure>& measures,
                                                   const SparsityPattern& pattern, double match_tol = 1e-5);

enum class Verdict { TightMinimizer, NotTight, InfeasiblePoint };

std::string to_string(Verdict v);

struct ValueCheck {
  Verdict verdict = Verdict::NotTight;
  double value = 0.0;
  double violation = 0.0;
};

/// Feasible within tol and f(x) − bound ≤ tol (1 + |bound|).
ValueCheck certify_by_value(std::span<const double> x, const SparsePOP& pop, double bound, double tol);

/// Lower-level flatness is usable only when the order-t and order-k bounds agree.
bool bounds_agree(double bound_t, double bound_k, double tol);

}  // namespace spop
