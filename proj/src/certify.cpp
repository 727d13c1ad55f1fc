#include "spop/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "spop/error.hpp"
#include "spop/linalg.hpp"

namespace spop {

Polynomial GramTerm::expand() const {
  const MonomialBasis basis(vars, basis_degree);
  std::vector<std::pair<double, Exponent>> terms;
  terms.reserve(basis.size() * basis.size());
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = 0; b < basis.size(); ++b) {
      terms.emplace_back(gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), basis[a] + basis[b]);
    }
  }
  return Polynomial(generator.n(), terms) * generator;
}

Polynomial BlockCertificate::expand(int n) const {
  Polynomial s(n);
  for (const auto& t : sos) s = s + t.expand();
  for (const auto& t : ideal) s = s + t.multiplier * t.generator;
  return s;
}

namespace {

SparsePOP effective(const SparsePOP& pop, Model model) { return is_dense(model) ? dense_version(pop) : pop; }

double max_abs(const Polynomial& p) { return p.max_abs_coefficient(); }

struct Recovered {
  std::vector<BlockCertificate> blocks;
  double gamma_hat = 0.0;
};

// Gram blocks are read off X; the equality multipliers (and the constant when
// normalized) come from a least-squares fit of the remaining coefficient gap.
Recovered recover(const RelaxationSolve& solved, const SparsePOP& eff) {
  const auto& prob = solved.problem;
  const auto& index = *prob.index;
  const auto nmom = static_cast<Eigen::Index>(index.size());
  const int n = eff.n();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(nmom);
  for (std::size_t b = 0; b < prob.psd.size(); ++b) {
    const auto& blk = prob.psd[b];
    const auto& x = solved.solution.X[b];
    for (int r = 0; r < blk.side; ++r) {
      for (int c = 0; c < blk.side; ++c) {
        for (const auto& [p, coef] : blk.at(r, c).terms) a[p] += coef * x(r, c);
      }
    }
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(nmom);
  for (const auto& [p, c] : prob.objective) f[p] += c;
  const Eigen::Index shift = prob.normalized ? 1 : 0;
  const auto ncols = shift + static_cast<Eigen::Index>(prob.equalities.size());
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(ncols);
  if (ncols > 0) {
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(nmom, ncols);
    if (prob.normalized) design(0, 0) = 1.0;
    for (std::size_t e = 0; e < prob.equalities.size(); ++e) {
      for (const auto& [p, c] : prob.equalities[e].form.terms) design(p, shift + static_cast<Eigen::Index>(e)) += c;
    }
    coef = design.completeOrthogonalDecomposition().solve(f - a);
  }
  Recovered rec;
  rec.gamma_hat = prob.normalized ? coef[0] : 0.0;
  rec.blocks.resize(eff.m());
  for (int i = 0; i < eff.m(); ++i) rec.blocks[i].block = i;
  for (std::size_t b = 0; b < prob.psd.size(); ++b) {
    const auto& blk = prob.psd[b];
    GramTerm t;
    t.generator = blk.generator.with_ambient(n);
    t.vars = blk.vars;
    t.basis_degree = blk.basis_degree;
    t.gram = symmetrize(solved.solution.X[b]);
    t.label = blk.label;
    rec.blocks[blk.block].sos.push_back(std::move(t));
  }
  std::map<std::pair<int, int>, std::vector<std::pair<double, Exponent>>> mult;
  for (std::size_t e = 0; e < prob.equalities.size(); ++e) {
    const auto& row = prob.equalities[e];
    mult[{row.block, row.constraint}].emplace_back(coef[shift + static_cast<Eigen::Index>(e)], row.shift);
  }
  for (auto& [key, terms] : mult) {
    IdealTerm it;
    it.constraint = key.second;
    it.generator = eff.h[key.first][key.second];
    it.multiplier = Polynomial(n, terms);
    rec.blocks[key.first].ideal.push_back(std::move(it));
  }
  return rec;
}

GramTerm* sigma0(BlockCertificate& bc) {
  for (auto& t : bc.sos) {
    if (t.generator.degree() == 0 && t.generator.coefficient(Exponent()) == 1.0) return &t;
  }
  return nullptr;
}

}  // namespace

SplitResult split_representation(const RelaxationSolve& solved, const SparsePOP& pop, std::optional<double> gamma,
                                  double epsilon) {
  SplitResult out;
  const Model model = solved.problem.model;
  const SparsePOP eff = effective(pop, model);
  if (!solved.solution.solved()) {
    out.diagnostic = "solver status " + to_string(solved.solution.status) +
                     ": duality gap too large to recover Gram data, no certificate";
    return out;
  }
  if (epsilon < 0.0) throw FormatError("epsilon must be nonnegative");
  auto rec = recover(solved, eff);
  out.gamma_hat = rec.gamma_hat;
  const int m = eff.m();
  const double target = gamma.value_or(rec.gamma_hat);
  const double shift = (rec.gamma_hat + m * epsilon - target) / m;
  if (shift < -1e-9 * (1.0 + std::abs(target))) {
    out.diagnostic = "target γ exceeds the recovered value γ_hat + mε; no certificate at this target";
    return out;
  }
  TightnessCertificate cert;
  cert.model = model;
  cert.k = solved.problem.k;
  cert.gamma = target;
  cert.epsilon = epsilon;
  const int n = eff.n();
  Polynomial total(n);
  for (int i = 0; i < m; ++i) {
    auto& bc = rec.blocks[i];
    if (auto* s0 = sigma0(bc)) s0->gram(0, 0) += shift;
    const Polynomial s = bc.expand(n);
    Polynomial p = s - eff.f[i] - Polynomial::constant(n, epsilon);
    cert.membership_residual.push_back(max_abs(eff.f[i] + p + Polynomial::constant(n, epsilon) - s));
    total = total + p;
    cert.p.push_back(std::move(p));
  }
  cert.identity_residual = max_abs(total + Polynomial::constant(n, target));
  cert.blocks = std::move(rec.blocks);
  out.certificate = std::move(cert);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool same_poly(const Polynomial& a, const Polynomial& b) {
  return max_abs(a - b) <= 1e-12 * std::max(1.0, std::max(max_abs(a), max_abs(b)));
}

bool within(const Polynomial& p, const std::vector<int>& vars) { return support_check(p, vars); }

}  // namespace

VerifyReport verify_certificate(const TightnessCertificate& cert, const SparsePOP& pop,
                                const std::vector<std::vector<double>>& candidates, const VerifyOptions& opts) {
  VerifyReport rep;
  const SparsePOP eff = effective(pop, cert.model);
  const int m = eff.m();
  const int n = eff.n();
  if (static_cast<int>(cert.p.size()) != m || static_cast<int>(cert.blocks.size()) != m) {
    rep.problems.push_back("certificate has " + std::to_string(cert.p.size()) + " parts for " + std::to_string(m) +
                           " blocks");
    return rep;
  }
  if (cert.epsilon < 0.0) rep.problems.push_back("negative epsilon");
  const double scale = std::max(1.0, max_abs(eff.objective()));
  const double tol = opts.residual_tol * scale;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  Polynomial total(n);
  for (int i = 0; i < m; ++i) {
    const auto& vars = eff.pattern.block(i);
    const auto& bc = cert.blocks[i];
    std::vector<Polynomial> allowed{Polynomial::constant(n, 1.0)};
    if (is_schmudgen(cert.model)) {
      const auto prods = preordering_products(eff.g[i], n, 20);
      allowed.insert(allowed.end(), prods.begin() + 1, prods.end());
    } else {
      allowed.insert(allowed.end(), eff.g[i].begin(), eff.g[i].end());
    }
    Polynomial s(n);
    for (const auto& t : bc.sos) {
      const std::string where = "block " + std::to_string(i + 1) + " term " + t.label;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const Polynomial& a) { return same_poly(a, t.generator); })) {
        rep.problems.push_back(where + ": generator " + t.generator.to_string() + " is not admissible");
      }
      if (!std::includes(vars.begin(), vars.end(), t.vars.begin(), t.vars.end())) {
        rep.problems.push_back(where + ": Gram basis leaves the block");
      }
      if (t.generator.degree() + 2 * t.basis_degree > 2 * cert.k) {
        rep.problems.push_back(where + ": degree exceeds 2k");
      }
      const auto side = static_cast<Eigen::Index>(binomial(t.vars.size() + t.basis_degree, t.basis_degree));
      if (t.gram.rows() != side || t.gram.cols() != side) {
        rep.problems.push_back(where + ": Gram matrix has the wrong size");
        continue;
      }
      const Eigen::MatrixXd sym = symmetrize(t.gram);
      const double lmin = side > 0 ? sym_eig(sym).values.minCoeff() : 0.0;
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, lmin);
      if (lmin < opts.eig_floor) {
        rep.problems.push_back(where + ": Gram matrix has eigenvalue " + std::to_string(lmin));
      }
      GramTerm floored = t;
      floored.gram = lmin < 0.0 ? psd_project(sym, 0.0) : sym;
      s = s + floored.expand();
    }
    for (const auto& t : bc.ideal) {
      const std::string where = "block " + std::to_string(i + 1) + " ideal term " + std::to_string(t.constraint + 1);
      if (std::none_of(eff.h[i].begin(), eff.h[i].end(), [&](const Polynomial& h) { return same_poly(h, t.generator); })) {
        rep.problems.push_back(where + ": generator is not an equality of the block");
      }
      if (!within(t.multiplier, vars)) rep.problems.push_back(where + ": multiplier leaves the block");
      if (!t.multiplier.is_zero() && t.multiplier.degree() + t.generator.degree() > 2 * cert.k) {
        rep.problems.push_back(where + ": degree exceeds 2k");
      }
      s = s + t.multiplier * t.generator;
    }
    const auto& p = cert.p[i];
    if (!within(p, vars)) rep.problems.push_back("p_" + std::to_string(i + 1) + " leaves its block");
    if (p.degree() > 2 * cert.k) rep.problems.push_back("p_" + std::to_string(i + 1) + " has degree above 2k");
    rep.membership_residual.push_back(max_abs(eff.f[i] + p + Polynomial::constant(n, cert.epsilon) - s));
    total = total + p;
  }
  rep.identity_residual = max_abs(total + Polynomial::constant(n, cert.gamma));
  if (rep.identity_residual > tol) {
    rep.problems.push_back("identity residual " + std::to_string(rep.identity_residual) + " above tolerance");
  }
  for (std::size_t i = 0; i < rep.membership_residual.size(); ++i) {
    if (rep.membership_residual[i] > tol) {
      rep.problems.push_back("membership residual of block " + std::to_string(i + 1) + " is " +
                             std::to_string(rep.membership_residual[i]));
    }
  }
  rep.valid = rep.problems.empty();
  if (!candidates.empty()) {
    rep.achievable = false;
    for (const auto& u : candidates) {
      double v = 0.0;
      for (int i = 0; i < m; ++i) v += std::abs(eff.f[i].eval(u) + cert.p[i].eval(u) + cert.epsilon);
      rep.candidate_values.push_back(v);
      if (eff.max_violation(u) <= opts.zero_tol && v <= opts.zero_tol * scale) rep.achievable = true;
    }
  }
  if (!rep.valid) rep.kind = "invalid";
  else if (cert.epsilon > 0.0) rep.kind = "epsilon";
  else if (rep.achievable.value_or(false)) rep.kind = "tightness";
  else rep.kind = "lower-bound";
  return rep;
}

// ---------------------------------------------------------------------------

std::string to_string(Membership m) {
  switch (m) {
    case Membership::Member: return "member";
    case Membership::NotMember: return "not-member";
    case Membership::Indeterminate: return "indeterminate";
  }
  return "?";
}

MembershipResult check_membership(const Polynomial& q, const std::vector<int>& vars, const std::vector<Polynomial>& h,
                                  const std::vector<Polynomial>& g, int k, bool preordering,
                                  const SolverOptions& opts) {
  int n = q.n();
  for (int v : vars) n = std::max(n, v);
  for (const auto& p : h) n = std::max(n, p.n());
  for (const auto& p : g) n = std::max(n, p.n());
  SparsePOP pop;
  pop.pattern = SparsityPattern(n, {vars});
  pop.f = {q.with_ambient(n)};
  pop.h.resize(1);
  pop.g.resize(1);
  for (const auto& p : h) pop.h[0].push_back(p.with_ambient(n));
  for (const auto& p : g) pop.g[0].push_back(p.with_ambient(n));
  pop.validate();
  if (q.degree() > 2 * k) throw FormatError("membership: deg q exceeds 2k");

  MembershipResult res;
  AssembleOptions aopts;
  aopts.allow_low_order = true;
  const Model model = preordering ? Model::SparseSchmudgen : Model::SparsePutinar;
  auto solved = solve_relaxation(assemble(pop, k, model, aopts), opts);
  res.index = solved.problem.index;
  const double qscale = 1.0 + max_abs(q);
  const auto st = solved.solution.status;
  if (st == SdpStatus::UnboundedCertificate || (solved.solution.solved() && solved.bound < -1e-6 * qscale)) {
    if (solved.y.size() > 0 && riesz(pop.f[0], *res.index, solved.y) < 0.0) {
      res.verdict = Membership::NotMember;
      res.gamma = solved.bound;
      res.separating_y = solved.y;
      return res;
    }
    res.diagnostic = "no separating functional available";
    return res;
  }
  if (!solved.solution.solved()) {
    res.diagnostic = "solver status " + to_string(st);
    return res;
  }
  auto rec = recover(solved, pop);
  res.gamma = rec.gamma_hat;
  auto& bc = rec.blocks[0];
  if (auto* s0 = sigma0(bc)) s0->gram(0, 0) += std::max(rec.gamma_hat, 0.0);
  res.residual = max_abs(pop.f[0] - bc.expand(n));
  for (const auto& t : bc.sos) {
    if (sym_eig(t.gram).values.minCoeff() < -1e-9) {
      res.diagnostic = "recovered Gram matrix is not PSD";
      return res;
    }
  }
  res.representation = std::move(bc);
  if (res.residual <= 1e-6 * qscale) {
    res.verdict = Membership::Member;
  } else {
    res.diagnostic = "reconstruction residual " + std::to_string(res.residual) + " above tolerance";
  }
  return res;
}

// ---------------------------------------------------------------------------

std::string to_string(InfeasibilityStatus s) {
  switch (s) {
    case InfeasibilityStatus::Found: return "found";
    case InfeasibilityStatus::NotFound: return "not-found";
    case InfeasibilityStatus::Indeterminate: return "indeterminate";
  }
  return "?";
}

namespace {

SparsePOP minus_one_objective(const SparsePOP& pop) {
  SparsePOP out = pop;
  for (auto& f : out.f) f = Polynomial::constant(pop.n(), -1.0);
  return out;
}

}  // namespace

InfeasibilityResult sparse_infeasibility(const SparsePOP& pop, int k, const SolverOptions& opts) {
  pop.validate();
  if (k < min_order(pop).k0) throw FormatError("infeasibility search needs k >= k0");
  InfeasibilityResult res;
  const SparsePOP aux = minus_one_objective(pop);
  AssembleOptions aopts;
  aopts.normalized = false;
  auto solved = solve_relaxation(assemble(aux, k, Model::SparseSchmudgen, aopts), opts);
  const auto st = solved.solution.status;
  if (st == SdpStatus::UnboundedCertificate) {
    res.status = InfeasibilityStatus::NotFound;
    res.diagnostic = "moment side unbounded: no certificate at this order";
    return res;
  }
  if (!solved.solution.solved()) {
    res.diagnostic = "solver status " + to_string(st);
    return res;
  }
  auto rec = recover(solved, aux);
  InfeasibilityCertificate cert;
  cert.k = k;
  const int n = pop.n();
  Polynomial total(n);
  for (int i = 0; i < pop.m(); ++i) {
    const Polynomial s = rec.blocks[i].expand(n);
    Polynomial p = s + Polynomial::constant(n, 1.0);
    cert.membership_residual.push_back(max_abs(Polynomial::constant(n, -1.0) + p - s));
    total = total + p;
    cert.p.push_back(std::move(p));
  }
  cert.sum_residual = max_abs(total);
  cert.blocks = std::move(rec.blocks);
  if (cert.sum_residual > 1e-6 * pop.m()) {
    res.status = InfeasibilityStatus::NotFound;
    res.diagnostic = "recovered representation leaves residual " + std::to_string(cert.sum_residual);
    return res;
  }
  res.status = InfeasibilityStatus::Found;
  res.certificate = std::move(cert);
  return res;
}

VerifyReport verify_infeasibility(const InfeasibilityCertificate& cert, const SparsePOP& pop,
                                  const VerifyOptions& opts) {
  TightnessCertificate t;
  t.model = Model::SparseSchmudgen;
  t.k = cert.k;
  t.gamma = 0.0;
  t.p = cert.p;
  t.blocks = cert.blocks;
  auto rep = verify_certificate(t, minus_one_objective(pop), {}, opts);
  if (rep.valid) rep.kind = "infeasibility";
  return rep;
}

}  // namespace spop
