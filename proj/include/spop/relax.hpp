#pragma once

// Moment relaxations (sparse/dense, Putinar/Schmüdgen) assembled as symbolic
// block-diagonal SDPs over one shared moment vector y indexed by 𝕌_k.

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spop/polyring.hpp"
#include "spop/sparsity.hpp"

namespace spop {

enum class Model { SparsePutinar, SparseSchmudgen, DensePutinar, DenseSchmudgen };

std::string to_string(Model model);
/// Accepts sparse-putinar | sparse-schmudgen | dense-putinar | dense-schmudgen.
Model parse_model(const std::string& name);
bool is_dense(Model model);
bool is_schmudgen(Model model);

/// min f_1(x_Δ1) + ... + f_m(x_Δm) s.t. h_i(x_Δi) = 0, g_i(x_Δi) >= 0.
struct SparsePOP {
  SparsityPattern pattern;
  std::vector<Polynomial> f;
  std::vector<std::vector<Polynomial>> h;
  std::vector<std::vector<Polynomial>> g;
  std::vector<std::string> labels;

  int n() const { return pattern.n(); }
  int m() const { return pattern.m(); }

  /// Throws FormatError when sizes disagree or a polynomial leaves its block.
  void validate() const;

  Polynomial objective() const;
  double objective_value(std::span<const double> x) const;
  /// max over |h_ij(x)| and max(0, -g_ij(x)).
  double max_violation(std::span<const double> x) const;
  std::string block_name(int i) const;
};

/// Single block [n] carrying the summed objective and the union of constraints
/// (exact duplicates removed).
SparsePOP dense_version(const SparsePOP& pop);

struct OrderInfo {
  int k0 = 1;
  /// d_i = max(ceil(deg h_i / 2), ceil(deg g_i / 2)).
  std::vector<int> d;
};

OrderInfo min_order(const SparsePOP& pop);

/// Bijection between 𝕌_k = ∪_i ℕ^{Δi}_{2k} and 0..|𝕌_k|-1 in graded lex order.
class UnionIndex {
 public:
  UnionIndex(const SparsityPattern& pattern, int k);

  int k() const { return k_; }
  std::size_t size() const { return monomials_.size(); }
  const SparsityPattern& pattern() const { return pattern_; }
  const std::vector<Exponent>& monomials() const { return monomials_; }
  std::optional<int> position(const Exponent& e) const;
  /// Throws std::out_of_range when e is not in 𝕌_k.
  int at(const Exponent& e) const;
  /// Positions of ℕ^{Δi}_{2k} in the block's graded lex order.
  const std::vector<int>& block_positions(int i) const { return block_positions_[i]; }

 private:
  SparsityPattern pattern_;
  int k_;
  std::vector<Exponent> monomials_;
  std::unordered_map<Exponent, int, ExponentHash> lookup_;
  std::vector<std::vector<int>> block_positions_;
};

/// constant + Σ coef * y[position].
struct AffineForm {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;  // sorted by position, no duplicates

  double eval(const Eigen::VectorXd& y) const;
  void add(int position, double coef);
  void finalize();
  bool operator==(const AffineForm&) const = default;
};

enum class BlockKind { Moment, Localizing };

/// A symmetric matrix whose entries are affine forms in y.
struct SymbolicBlock {
  BlockKind kind = BlockKind::Moment;
  int block = 0;              // index of Δ_i (0-based)
  std::vector<int> vars;      // Δ_i
  int basis_degree = 0;       // the localizing basis is [x_Δi]_{basis_degree}
  Polynomial generator;       // 1 for moment blocks, g_ij or g_{i,J} otherwise
  std::string label;
  int side = 0;
  std::vector<AffineForm> entries;  // row-major side x side

  const AffineForm& at(int r, int c) const { return entries[static_cast<std::size_t>(r) * side + c]; }
};

struct EqualityRow {
  int block = 0;
  int constraint = 0;  // j in h_ij
  Exponent shift;      // β in h_ij * x^β
  AffineForm form;
};

struct SdpProblem {
  Model model = Model::SparsePutinar;
  int k = 1;
  std::shared_ptr<const UnionIndex> index;
  std::vector<SymbolicBlock> psd;
  std::vector<EqualityRow> equalities;
  std::vector<std::pair<int, double>> objective;  // ⟨f, y⟩ over positions
  /// When set, y_0 = 1 is imposed.
  bool normalized = true;
  /// Constraints left out because their degree exceeds 2k (allow_low_order only).
  std::vector<std::string> skipped;

  std::size_t num_moments() const { return index->size(); }
  std::size_t total_psd_dim() const;
  int max_side() const;
  std::size_t count(BlockKind kind) const;
};

SymbolicBlock localizing_matrix_template(const Polynomial& p, const UnionIndex& index, int block, int k);
SymbolicBlock moment_matrix_template(const UnionIndex& index, int block, int t);
/// Rows Riesz(h * x^β) for β ∈ ℕ^{Δi}_{2k - deg h}; throws FormatError for h = 0.
std::vector<EqualityRow> localizing_vector_template(const Polynomial& h, const UnionIndex& index, int block,
                                                    int k);

struct AssembleOptions {
  int schmudgen_cap = 12;
  /// Below k0, constraints of degree > 2k are skipped (reported) instead of rejected.
  bool allow_low_order = false;
  bool normalized = true;
};

/// For dense models the problem is built on dense_version(pop).
SdpProblem assemble(const SparsePOP& pop, int k, Model model, const AssembleOptions& opts = {});

struct SizeEstimate {
  std::size_t moments = 0;  // |𝕌_k| (saturates at SIZE_MAX)
  std::size_t total_psd_dim = 0;
  std::size_t max_side = 0;
  std::size_t psd_blocks = 0;
};

/// Sizes of assemble(pop, k, model) computed without building it.
SizeEstimate estimate_size(const SparsePOP& pop, int k, Model model, int schmudgen_cap = 12);

/// g_{i,J} = Π_{j∈J} g_ij for every J ⊆ [s_i] encoded as bit masks (index 0 is the constant 1).
/// Products whose degree exceeds max_degree are left as the zero polynomial.
std::vector<Polynomial> preordering_products(const std::vector<Polynomial>& g, int n, int cap,
                                             int max_degree = std::numeric_limits<int>::max());

Eigen::MatrixXd evaluate(const SymbolicBlock& block, const Eigen::VectorXd& y);

/// [u]_{spa,2k}: y_α = u^α for α ∈ 𝕌_k.
Eigen::VectorXd point_moments(const UnionIndex& index, std::span<const double> u);

/// ⟨p, y⟩; throws std::out_of_range if p has a monomial outside 𝕌_k.
double riesz(const Polynomial& p, const UnionIndex& index, const Eigen::VectorXd& y);

}  // namespace spop
