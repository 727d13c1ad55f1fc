#pragma once

// Correlative sparsity analysis: CSP graph, running intersection property,
// connected covers and block overlaps.

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace spop {

/// Variable blocks Δ_1..Δ_m over [n]. Block indices are 0-based in the API,
/// variable indices are 1-based.
class SparsityPattern {
 public:
  SparsityPattern() = default;
  /// Sorts each block; throws FormatError on empty blocks or indices outside [1, n].
  SparsityPattern(int n, std::vector<std::vector<int>> blocks);

  int n() const { return n_; }
  int m() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& block(int i) const { return blocks_[i]; }

 private:
  int n_ = 0;
  std::vector<std::vector<int>> blocks_;
};

/// Undirected simple graph on vertices 1..n.
class Graph {
 public:
  explicit Graph(int n = 0) : adj_(n) {}
  int n() const { return static_cast<int>(adj_.size()); }
  void add_edge(int a, int b);
  bool has_edge(int a, int b) const;
  const std::vector<int>& neighbors(int v) const { return adj_[v - 1]; }
  std::size_t edge_count() const;

 private:
  std::vector<std::vector<int>> adj_;  // sorted
};

struct RipReport {
  bool holds = false;
  /// Block order satisfying the running intersection property when holds.
  std::vector<int> ordering;
  /// witness[j] for j >= 1 is the block t (earlier in `ordering`) containing
  /// Δ_{ordering[j]} ∩ (union of earlier blocks); witness[0] = -1.
  std::vector<int> witness;
  /// When !holds: a pair of blocks whose intersection is not contained in
  /// every block on the spanning-tree path between them.
  std::optional<std::pair<int, int>> violation;
  bool connected_cover = false;
  std::vector<std::vector<int>> components;
};

/// Edge (a,b) iff {a,b} ⊆ Δ_i for some i.
Graph csp_graph(const SparsityPattern& pattern);

/// Maximum-weight spanning forest of the block intersection graph followed by
/// a clique-intersection check; exact for arbitrary block families.
RipReport check_rip(const SparsityPattern& pattern);

/// Checks an explicit ordering against the defining subset relation; returns the
/// witnesses (first entry -1) or nullopt on the first violating position.
std::optional<std::vector<int>> rip_witnesses(const SparsityPattern& pattern, const std::vector<int>& ordering);

struct CoverReport {
  bool connected_cover = false;
  bool covers_all_variables = false;
  /// Connected components of the block-overlap graph (block indices, sorted).
  std::vector<std::vector<int>> components;
};

CoverReport connected_cover(const SparsityPattern& pattern);

/// Nonempty Δ_i ∩ Δ_j for i < j.
std::map<std::pair<int, int>, std::vector<int>> overlaps(const SparsityPattern& pattern);

/// Maximum cardinality search followed by a perfect elimination check.
bool is_chordal(const Graph& g);

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace spop
