#include "spop/sparsity.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <tuple>

#include "spop/error.hpp"

namespace spop {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

SparsityPattern::SparsityPattern(int n, std::vector<std::vector<int>> blocks) : n_(n), blocks_(std::move(blocks)) {
  if (n_ < 1) throw FormatError("pattern needs n >= 1");
  if (blocks_.empty()) throw FormatError("pattern has no blocks");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    auto& b = blocks_[i];
    if (b.empty()) throw FormatError("block " + std::to_string(i + 1) + " is empty");
    std::sort(b.begin(), b.end());
    if (std::adjacent_find(b.begin(), b.end()) != b.end()) {
      throw FormatError("block " + std::to_string(i + 1) + " repeats a variable");
    }
    if (b.front() < 1 || b.back() > n_) {
      throw FormatError("block " + std::to_string(i + 1) + " has a variable outside [1, " + std::to_string(n_) + "]");
    }
  }
}

void Graph::add_edge(int a, int b) {
  if (a == b) return;
  auto ins = [](std::vector<int>& v, int x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  ins(adj_[a - 1], b);
  ins(adj_[b - 1], a);
}

bool Graph::has_edge(int a, int b) const {
  const auto& v = adj_[a - 1];
  return std::binary_search(v.begin(), v.end(), b);
}

std::size_t Graph::edge_count() const {
  std::size_t s = 0;
  for (const auto& v : adj_) s += v.size();
  return s / 2;
}

Graph csp_graph(const SparsityPattern& pattern) {
  Graph g(pattern.n());
  for (const auto& b : pattern.blocks()) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t j = i + 1; j < b.size(); ++j) g.add_edge(b[i], b[j]);
    }
  }
  return g;
}

std::optional<std::vector<int>> rip_witnesses(const SparsityPattern& pattern, const std::vector<int>& ordering) {
  std::vector<int> witness{-1};
  std::vector<int> seen = ordering.empty() ? std::vector<int>{} : pattern.block(ordering[0]);
  for (std::size_t j = 1; j < ordering.size(); ++j) {
    const auto& bj = pattern.block(ordering[j]);
    const auto shared = intersect(bj, seen);
    int found = -1;
    for (std::size_t t = 0; t < j; ++t) {
      if (is_subset(shared, pattern.block(ordering[t]))) {
        found = ordering[t];
        break;
      }
    }
    if (found < 0) return std::nullopt;
    witness.push_back(found);
    std::vector<int> merged;
    std::set_union(seen.begin(), seen.end(), bj.begin(), bj.end(), std::back_inserter(merged));
    seen = std::move(merged);
  }
  return witness;
}

CoverReport connected_cover(const SparsityPattern& pattern) {
  const int m = pattern.m();
  DisjointSets ds(m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (!intersect(pattern.block(i), pattern.block(j)).empty()) ds.unite(i, j);
    }
  }
  CoverReport rep;
  std::map<int, std::vector<int>> comps;
  for (int i = 0; i < m; ++i) comps[ds.find(i)].push_back(i);
  for (auto& [root, members] : comps) rep.components.push_back(std::move(members));
  std::vector<char> covered(pattern.n() + 1, 0);
  for (const auto& b : pattern.blocks()) {
    for (int v : b) covered[v] = 1;
  }
  rep.covers_all_variables = std::all_of(covered.begin() + 1, covered.end(), [](char c) { return c != 0; });
  rep.connected_cover = rep.components.size() == 1 && rep.covers_all_variables;
  return rep;
}

std::map<std::pair<int, int>, std::vector<int>> overlaps(const SparsityPattern& pattern) {
  std::map<std::pair<int, int>, std::vector<int>> out;
  for (int i = 0; i < pattern.m(); ++i) {
    for (int j = i + 1; j < pattern.m(); ++j) {
      auto s = intersect(pattern.block(i), pattern.block(j));
      if (!s.empty()) out.emplace(std::make_pair(i, j), std::move(s));
    }
  }
  return out;
}

RipReport check_rip(const SparsityPattern& pattern) {
  const int m = pattern.m();
  RipReport rep;
  const auto cover = connected_cover(pattern);
  rep.connected_cover = cover.connected_cover;
  rep.components = cover.components;

  // Duplicate blocks are attached to their first occurrence afterwards.
  std::vector<int> rep_of(m, -1);
  std::vector<int> uniq;
  for (int i = 0; i < m; ++i) {
    for (int u : uniq) {
      if (pattern.block(u) == pattern.block(i)) {
        rep_of[i] = u;
        break;
      }
    }
    if (rep_of[i] < 0) {
      rep_of[i] = i;
      uniq.push_back(i);
    }
  }

  // Kruskal on the intersection graph, heaviest first, ties by smallest (i, j).
  std::vector<std::tuple<int, int, int>> edges;
  for (std::size_t a = 0; a < uniq.size(); ++a) {
    for (std::size_t b = a + 1; b < uniq.size(); ++b) {
      const int w = static_cast<int>(intersect(pattern.block(uniq[a]), pattern.block(uniq[b])).size());
      if (w > 0) edges.emplace_back(-w, uniq[a], uniq[b]);
    }
  }
  std::sort(edges.begin(), edges.end());
  DisjointSets ds(m);
  std::vector<std::vector<int>> tree(m);
  for (const auto& [negw, a, b] : edges) {
    if (ds.unite(a, b)) {
      tree[a].push_back(b);
      tree[b].push_back(a);
    }
  }
  for (auto& nb : tree) std::sort(nb.begin(), nb.end());

  // BFS order per tree component; parent pointers double as witnesses.
  std::vector<int> parent(m, -2);
  std::vector<int> order;
  std::vector<int> comp_of(m, -1);
  for (int root : uniq) {
    if (parent[root] != -2) continue;
    parent[root] = -1;
    std::deque<int> q{root};
    while (!q.empty()) {
      const int v = q.front();
      q.pop_front();
      comp_of[v] = root;
      order.push_back(v);
      for (int w : tree[v]) {
        if (parent[w] == -2) {
          parent[w] = v;
          q.push_back(w);
        }
      }
    }
  }

  auto path = [&](int a, int b) {
    // Walk both to the root, then splice at the lowest common ancestor.
    std::vector<int> pa, pb;
    for (int v = a; v >= 0; v = parent[v]) pa.push_back(v);
    for (int v = b; v >= 0; v = parent[v]) pb.push_back(v);
    while (pa.size() > 1 && pb.size() > 1 && pa[pa.size() - 2] == pb[pb.size() - 2]) {
      pa.pop_back();
      pb.pop_back();
    }
    std::vector<int> out = pa;
    for (auto it = pb.rbegin() + 1; it != pb.rend(); ++it) out.push_back(*it);
    return out;
  };

  for (std::size_t a = 0; a < uniq.size() && !rep.violation; ++a) {
    for (std::size_t b = a + 1; b < uniq.size(); ++b) {
      const int i = uniq[a], j = uniq[b];
      const auto s = intersect(pattern.block(i), pattern.block(j));
      if (s.empty()) continue;
      if (comp_of[i] != comp_of[j]) {
        rep.violation = std::make_pair(i, j);
        break;
      }
      for (int v : path(i, j)) {
        if (!is_subset(s, pattern.block(v))) {
          rep.violation = std::make_pair(i, j);
          break;
        }
      }
      if (rep.violation) break;
    }
  }
  if (rep.violation) return rep;

  std::vector<int> ordering;
  for (int v : order) {
    ordering.push_back(v);
    for (int i = 0; i < m; ++i) {
      if (i != v && rep_of[i] == v) ordering.push_back(i);
    }
  }
  auto wit = rip_witnesses(pattern, ordering);
  if (!wit) return rep;
  rep.holds = true;
  rep.ordering = std::move(ordering);
  rep.witness = std::move(*wit);
  return rep;
}

bool is_chordal(const Graph& g) {
  const int n = g.n();
  std::vector<int> weight(n + 1, 0);
  std::vector<char> numbered(n + 1, 0);
  std::vector<int> visit;  // MCS visit order; its reverse is a perfect elimination order
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 1; v <= n; ++v) {
      if (!numbered[v] && (best < 0 || weight[v] > weight[best])) best = v;
    }
    numbered[best] = 1;
    visit.push_back(best);
    for (int w : g.neighbors(best)) {
      if (!numbered[w]) ++weight[w];
    }
  }
  std::vector<int> pos(n + 1);
  for (int i = 0; i < n; ++i) pos[visit[i]] = i;
  for (int v = 1; v <= n; ++v) {
    std::vector<int> earlier;
    for (int w : g.neighbors(v)) {
      if (pos[w] < pos[v]) earlier.push_back(w);
    }
    for (std::size_t a = 0; a < earlier.size(); ++a) {
      for (std::size_t b = a + 1; b < earlier.size(); ++b) {
        if (!g.has_edge(earlier[a], earlier[b])) return false;
      }
    }
  }
  return true;
}

}  // namespace spop
