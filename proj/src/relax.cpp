#include "spop/relax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "spop/error.hpp"

namespace spop {

std::string to_string(Model model) {
  switch (model) {
    case Model::SparsePutinar: return "sparse-putinar";
    case Model::SparseSchmudgen: return "sparse-schmudgen";
    case Model::DensePutinar: return "dense-putinar";
    case Model::DenseSchmudgen: return "dense-schmudgen";
  }
  return "?";
}

Model parse_model(const std::string& name) {
  if (name == "sparse-putinar") return Model::SparsePutinar;
  if (name == "sparse-schmudgen") return Model::SparseSchmudgen;
  if (name == "dense-putinar") return Model::DensePutinar;
  if (name == "dense-schmudgen") return Model::DenseSchmudgen;
  throw FormatError("unknown model '" + name + "'");
}

bool is_dense(Model model) { return model == Model::DensePutinar || model == Model::DenseSchmudgen; }
bool is_schmudgen(Model model) { return model == Model::SparseSchmudgen || model == Model::DenseSchmudgen; }

// ---------------------------------------------------------------------------

std::string SparsePOP::block_name(int i) const {
  if (i < static_cast<int>(labels.size()) && !labels[i].empty()) return "'" + labels[i] + "'";
  return std::to_string(i + 1);
}

void SparsePOP::validate() const {
  const auto mm = static_cast<std::size_t>(m());
  if (f.size() != mm || h.size() != mm || g.size() != mm) {
    throw FormatError("objective/eq/ineq lists must have one entry per block (m=" + std::to_string(mm) + ")");
  }
  auto check = [&](const Polynomial& p, int i, const std::string& what) {
    if (!support_check(p, pattern.block(i))) {
      std::string set;
      for (int v : pattern.block(i)) set += (set.empty() ? "" : ",") + std::to_string(v);
      throw FormatError(what + " of block " + block_name(i) + " {" + set + "} uses a variable outside the block: " +
                        p.to_string());
    }
  };
  for (int i = 0; i < m(); ++i) {
    check(f[i], i, "objective");
    for (std::size_t j = 0; j < h[i].size(); ++j) check(h[i][j], i, "equality " + std::to_string(j + 1));
    for (std::size_t j = 0; j < g[i].size(); ++j) check(g[i][j], i, "inequality " + std::to_string(j + 1));
  }
}

Polynomial SparsePOP::objective() const {
  Polynomial total(n());
  for (const auto& fi : f) total = total + fi;
  return total;
}

double SparsePOP::objective_value(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& fi : f) s += fi.eval(x);
  return s;
}

double SparsePOP::max_violation(std::span<const double> x) const {
  double v = 0.0;
  for (int i = 0; i < m(); ++i) {
    for (const auto& hij : h[i]) v = std::max(v, std::abs(hij.eval(x)));
    for (const auto& gij : g[i]) v = std::max(v, -gij.eval(x));
  }
  return v;
}

SparsePOP dense_version(const SparsePOP& pop) {
  std::vector<int> all(pop.n());
  for (int v = 1; v <= pop.n(); ++v) all[v - 1] = v;
  SparsePOP dense;
  dense.pattern = SparsityPattern(pop.n(), {all});
  dense.f = {pop.objective()};
  dense.h.resize(1);
  dense.g.resize(1);
  auto add_unique = [](std::vector<Polynomial>& list, const Polynomial& p) {
    for (const auto& q : list) {
      if (q.terms() == p.terms()) return;
    }
    list.push_back(p);
  };
  for (int i = 0; i < pop.m(); ++i) {
    for (const auto& p : pop.h[i]) add_unique(dense.h[0], p);
    for (const auto& p : pop.g[i]) add_unique(dense.g[0], p);
  }
  return dense;
}

OrderInfo min_order(const SparsePOP& pop) {
  auto half_up = [](int d) { return (d + 1) / 2; };
  OrderInfo info;
  info.k0 = std::max(1, half_up(pop.objective().degree()));
  for (int i = 0; i < pop.m(); ++i) {
    int di = 0;
    for (const auto& p : pop.h[i]) di = std::max(di, half_up(p.degree()));
    for (const auto& p : pop.g[i]) di = std::max(di, half_up(p.degree()));
    info.d.push_back(di);
    info.k0 = std::max(info.k0, di);
  }
  return info;
}

// ---------------------------------------------------------------------------

UnionIndex::UnionIndex(const SparsityPattern& pattern, int k) : pattern_(pattern), k_(k) {
  if (k < 1) throw FormatError("relaxation order must be >= 1");
  std::vector<MonomialBasis> bases;
  bases.reserve(pattern.m());
  for (const auto& b : pattern.blocks()) {
    bases.emplace_back(b, 2 * k);
    for (const auto& e : bases.back().exponents()) {
      if (lookup_.emplace(e, 0).second) monomials_.push_back(e);
    }
  }
  std::sort(monomials_.begin(), monomials_.end(), grlex_less);
  for (std::size_t i = 0; i < monomials_.size(); ++i) lookup_[monomials_[i]] = static_cast<int>(i);
  for (const auto& basis : bases) {
    std::vector<int> pos;
    pos.reserve(basis.size());
    for (const auto& e : basis.exponents()) pos.push_back(lookup_.at(e));
    block_positions_.push_back(std::move(pos));
  }
}

std::optional<int> UnionIndex::position(const Exponent& e) const {
  auto it = lookup_.find(e);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

int UnionIndex::at(const Exponent& e) const {
  auto it = lookup_.find(e);
  if (it == lookup_.end()) throw std::out_of_range("monomial " + e.to_string() + " not in the moment index");
  return it->second;
}

// ---------------------------------------------------------------------------

double AffineForm::eval(const Eigen::VectorXd& y) const {
  double s = constant;
  for (const auto& [p, c] : terms) s += c * y[p];
  return s;
}

void AffineForm::add(int position, double coef) { terms.emplace_back(position, coef); }

void AffineForm::finalize() {
  std::sort(terms.begin(), terms.end());
  std::vector<std::pair<int, double>> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().first == t.first) merged.back().second += t.second;
    else merged.push_back(t);
  }
  std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
  terms = std::move(merged);
}

std::size_t SdpProblem::total_psd_dim() const {
  std::size_t s = 0;
  for (const auto& b : psd) s += b.side;
  return s;
}

int SdpProblem::max_side() const {
  int s = 0;
  for (const auto& b : psd) s = std::max(s, b.side);
  return s;
}

std::size_t SdpProblem::count(BlockKind kind) const {
  return static_cast<std::size_t>(std::count_if(psd.begin(), psd.end(), [&](const auto& b) { return b.kind == kind; }));
}

SymbolicBlock localizing_matrix_template(const Polynomial& p, const UnionIndex& index, int block, int k) {
  const auto& vars = index.pattern().block(block);
  const int dp = p.degree();
  if (dp > 2 * k) throw FormatError("localizing polynomial degree " + std::to_string(dp) + " exceeds 2k");
  if (p.is_zero()) throw FormatError("localizing matrix of the zero polynomial");
  const int k2 = (2 * k - dp) / 2;
  const MonomialBasis basis(vars, k2);
  SymbolicBlock out;
  out.kind = (p.degree() == 0 && p.coefficient(Exponent()) == 1.0) ? BlockKind::Moment : BlockKind::Localizing;
  out.block = block;
  out.vars = vars;
  out.basis_degree = k2;
  out.generator = p;
  out.side = static_cast<int>(basis.size());
  out.entries.resize(static_cast<std::size_t>(out.side) * out.side);
  for (int r = 0; r < out.side; ++r) {
    for (int c = r; c < out.side; ++c) {
      AffineForm form;
      const Exponent rc = basis[r] + basis[c];
      for (const auto& [e, coef] : p.terms()) form.add(index.at(rc + e), coef);
      form.finalize();
      out.entries[static_cast<std::size_t>(r) * out.side + c] = form;
      out.entries[static_cast<std::size_t>(c) * out.side + r] = std::move(form);
    }
  }
  return out;
}

SymbolicBlock moment_matrix_template(const UnionIndex& index, int block, int t) {
  if (t > index.k()) throw FormatError("moment matrix order exceeds the index order");
  auto out = localizing_matrix_template(Polynomial::constant(index.pattern().n(), 1.0), index, block, t);
  out.kind = BlockKind::Moment;
  out.label = "M[" + std::to_string(block + 1) + "]";
  return out;
}

std::vector<EqualityRow> localizing_vector_template(const Polynomial& h, const UnionIndex& index, int block, int k) {
  if (h.is_zero()) throw FormatError("equality constraint is the zero polynomial");
  const int dh = h.degree();
  if (dh > 2 * k) throw FormatError("equality degree " + std::to_string(dh) + " exceeds 2k");
  const MonomialBasis basis(index.pattern().block(block), 2 * k - dh);
  std::vector<EqualityRow> rows;
  rows.reserve(basis.size());
  for (const auto& beta : basis.exponents()) {
    EqualityRow row;
    row.block = block;
    row.shift = beta;
    for (const auto& [e, coef] : h.terms()) row.form.add(index.at(beta + e), coef);
    row.form.finalize();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Polynomial> preordering_products(const std::vector<Polynomial>& g, int n, int cap, int max_degree) {
  if (static_cast<int>(g.size()) > cap) {
    throw CapError("Schmüdgen products: " + std::to_string(g.size()) + " inequalities in one block exceed the cap " +
                   std::to_string(cap));
  }
  const std::size_t count = std::size_t{1} << g.size();
  std::vector<Polynomial> prods(count);
  std::vector<int> degree(count, 0);
  prods[0] = Polynomial::constant(n, 1.0);
  for (std::size_t mask = 1; mask < count; ++mask) {
    const int top = 63 - __builtin_clzll(mask);
    const std::size_t rest = mask & ~(std::size_t{1} << top);
    degree[mask] = degree[rest] + g[top].degree();
    if (degree[mask] > max_degree) {
      prods[mask] = Polynomial(n);
      continue;
    }
    prods[mask] = rest == 0 ? g[top] : prods[rest] * g[top];
  }
  return prods;
}

SdpProblem assemble(const SparsePOP& input, int k, Model model, const AssembleOptions& opts) {
  const SparsePOP pop = is_dense(model) ? dense_version(input) : input;
  pop.validate();
  const auto info = min_order(pop);
  if (k < info.k0 && !opts.allow_low_order) {
    throw FormatError("relaxation order " + std::to_string(k) + " is below the minimum order " +
                      std::to_string(info.k0));
  }
  SdpProblem prob;
  prob.model = model;
  prob.k = k;
  prob.normalized = opts.normalized;
  prob.index = std::make_shared<const UnionIndex>(pop.pattern, k);
  const auto& index = *prob.index;

  for (int i = 0; i < pop.m(); ++i) {
    prob.psd.push_back(moment_matrix_template(index, i, k));
    if (is_schmudgen(model)) {
      const auto prods = preordering_products(pop.g[i], pop.n(), opts.schmudgen_cap, 2 * k);
      for (std::size_t mask = 1; mask < prods.size(); ++mask) {
        // Products beyond degree 2k have no room in the truncation.
        if (prods[mask].degree() > 2 * k || prods[mask].is_zero()) continue;
        auto blk = localizing_matrix_template(prods[mask], index, i, k);
        blk.label = "L[" + std::to_string(i + 1) + ",J=" + std::to_string(mask) + "]";
        prob.psd.push_back(std::move(blk));
      }
    } else {
      for (std::size_t j = 0; j < pop.g[i].size(); ++j) {
        if (pop.g[i][j].degree() > 2 * k) {
          if (!opts.allow_low_order) throw FormatError("inequality degree exceeds 2k in block " + pop.block_name(i));
          prob.skipped.push_back("inequality " + std::to_string(j + 1) + " of block " + pop.block_name(i));
          continue;
        }
        auto blk = localizing_matrix_template(pop.g[i][j], index, i, k);
        blk.kind = BlockKind::Localizing;
        blk.label = "L[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
        prob.psd.push_back(std::move(blk));
      }
    }
    for (std::size_t j = 0; j < pop.h[i].size(); ++j) {
      if (pop.h[i][j].degree() > 2 * k && opts.allow_low_order) {
        prob.skipped.push_back("equality " + std::to_string(j + 1) + " of block " + pop.block_name(i));
        continue;
      }
      auto rows = localizing_vector_template(pop.h[i][j], index, i, k);
      for (auto& r : rows) {
        r.constraint = static_cast<int>(j);
        prob.equalities.push_back(std::move(r));
      }
    }
  }
  AffineForm obj;
  for (int i = 0; i < pop.m(); ++i) {
    if (pop.f[i].degree() > 2 * k) {
      throw FormatError("objective of block " + pop.block_name(i) + " has degree " +
                        std::to_string(pop.f[i].degree()) + " > 2k = " + std::to_string(2 * k));
    }
    for (const auto& [e, c] : pop.f[i].terms()) obj.add(index.at(e), c);
  }
  obj.finalize();
  prob.objective = std::move(obj.terms);
  return prob;
}

namespace {

std::size_t sat_binomial(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  if (r >= 1.8e19) return SIZE_MAX;
  return static_cast<std::size_t>(std::llround(r));
}

}  // namespace

SizeEstimate estimate_size(const SparsePOP& input, int k, Model model, int schmudgen_cap) {
  SizeEstimate est;
  std::vector<std::vector<int>> blocks;
  std::vector<std::vector<Polynomial>> g;
  if (is_dense(model)) {
    const auto dense = dense_version(input);
    blocks = dense.pattern.blocks();
    g = dense.g;
    est.moments = sat_binomial(static_cast<std::size_t>(input.n()) + 2 * k, 2 * k);
  } else {
    blocks = input.pattern.blocks();
    g = input.g;
    est.moments = UnionIndex(input.pattern, k).size();
  }
  auto add_block = [&](std::size_t vars, int deg) {
    if (deg > 2 * k) return;
    const auto side = sat_binomial(vars + (2 * k - deg) / 2, (2 * k - deg) / 2);
    est.total_psd_dim = side == SIZE_MAX || est.total_psd_dim == SIZE_MAX ? SIZE_MAX : est.total_psd_dim + side;
    est.max_side = std::max(est.max_side, side);
    ++est.psd_blocks;
  };
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    add_block(blocks[i].size(), 0);
    if (is_schmudgen(model)) {
      if (static_cast<int>(g[i].size()) > schmudgen_cap) throw CapError("Schmüdgen products exceed the cap");
      // Products multiply leading forms, so their degrees add.
      const std::size_t count = std::size_t{1} << g[i].size();
      for (std::size_t mask = 1; mask < count; ++mask) {
        int deg = 0;
        for (std::size_t j = 0; j < g[i].size(); ++j) {
          if (mask >> j & 1u) deg += g[i][j].degree();
        }
        add_block(blocks[i].size(), deg);
      }
    } else {
      for (const auto& p : g[i]) add_block(blocks[i].size(), p.degree());
    }
  }
  return est;
}

Eigen::MatrixXd evaluate(const SymbolicBlock& block, const Eigen::VectorXd& y) {
  Eigen::MatrixXd out(block.side, block.side);
  for (int r = 0; r < block.side; ++r) {
    for (int c = 0; c < block.side; ++c) out(r, c) = block.at(r, c).eval(y);
  }
  return out;
}

Eigen::VectorXd point_moments(const UnionIndex& index, std::span<const double> u) {
  if (static_cast<int>(u.size()) != index.pattern().n()) throw DimensionError("point_moments: wrong point size");
  Eigen::VectorXd y(static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) y[static_cast<Eigen::Index>(i)] = monomial_value(index.monomials()[i], u);
  return y;
}

double riesz(const Polynomial& p, const UnionIndex& index, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (const auto& [e, c] : p.terms()) s += c * y[index.at(e)];
  return s;
}

}  // namespace spop
