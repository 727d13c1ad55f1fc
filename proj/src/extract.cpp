#include "spop/extract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spop/error.hpp"
#include "spop/linalg.hpp"

namespace spop {

Eigen::MatrixXd moment_matrix(const UnionIndex& index, const Eigen::VectorXd& y, const std::vector<int>& vars, int t) {
  const MonomialBasis basis(vars, t);
  const auto s = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd m(s, s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = a; b < s; ++b) {
      m(a, b) = m(b, a) = y[index.at(basis[a] + basis[b])];
    }
  }
  return m;
}

Eigen::VectorXd local_moments(const UnionIndex& index, const Eigen::VectorXd& y, const std::vector<int>& vars, int t) {
  const MonomialBasis basis(vars, 2 * t);
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[index.at(basis[i])];
  return out;
}

std::vector<int> FlatReport::ranks_at(int t) const {
  std::vector<int> out;
  for (const auto& b : blocks) {
    int r = -1;
    for (const auto& l : b.levels) {
      if (l.t == t) r = l.rank;
    }
    out.push_back(r);
  }
  return out;
}

FlatReport flat_truncation(const SparsePOP& pop, const UnionIndex& index, const Eigen::VectorXd& y, int k,
                           double rank_tol) {
  FlatReport rep;
  rep.rank_tol = rank_tol;
  const auto info = min_order(pop);
  const int k0 = std::min(info.k0, k);
  for (int i = 0; i < pop.m(); ++i) {
    BlockFlatness bf;
    bf.block = i;
    bf.d = std::max(info.d[i], 1);
    const auto& vars = pop.pattern.block(i);
    std::vector<int> rank(k + 1);
    std::vector<double> gap(k + 1);
    for (int t = 0; t <= k; ++t) {
      const auto m = moment_matrix(index, y, vars, t);
      rank[t] = numeric_rank(m, rank_tol);
      gap[t] = rank_gap(m, rank[t]);
    }
    for (int t = k0; t <= k; ++t) {
      const int lower = std::max(t - bf.d, 0);
      bf.levels.push_back({t, rank[t], rank[lower], gap[t]});
      if (!bf.t && rank[t] == rank[lower]) bf.t = t;
    }
    bf.rank = rank[bf.t.value_or(k)];
    const double g = gap[bf.t.value_or(k)];
    if (g < 10.0) {
      std::ostringstream os;
      os << "block " << pop.block_name(i) << ": rank gap " << g << " < 10, rank decision is numerically ambiguous";
      rep.warnings.push_back(os.str());
    }
    rep.blocks.push_back(std::move(bf));
  }
  for (int t = k0; t <= k && !rep.common_t; ++t) {
    bool all = true;
    for (const auto& bf : rep.blocks) {
      bool flat = false;
      for (const auto& l : bf.levels) {
        if (l.t == t) flat = l.rank == l.rank_lower;
      }
      all = all && flat;
    }
    if (all) rep.common_t = t;
  }
  const int ts = rep.common_t.value_or(k);
  for (const auto& [ij, vars] : overlaps(pop.pattern)) {
    OverlapRank o;
    o.i = ij.first;
    o.j = ij.second;
    o.vars = vars;
    o.rank = numeric_rank(moment_matrix(index, y, vars, ts), rank_tol);
    o.rank_lower = numeric_rank(moment_matrix(index, y, vars, std::max(ts - 1, 0)), rank_tol);
    rep.overlaps.push_back(std::move(o));
  }
  return rep;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd atomic_moments(const std::vector<int>& vars, const std::vector<Atom>& atoms, int t) {
  const MonomialBasis basis(vars, 2 * t);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (const auto& a : atoms) {
    const auto vals = basis.evaluate_local(a.point);
    for (std::size_t i = 0; i < vals.size(); ++i) y[static_cast<Eigen::Index>(i)] += a.weight * vals[i];
  }
  return y;
}

namespace {

// Greedy graded selection of r well-conditioned rows of v.
std::vector<int> select_rows(const Eigen::MatrixXd& v, int r, double tol) {
  const double scale = std::max(v.rowwise().norm().maxCoeff(), 1e-300);
  std::vector<int> chosen;
  Eigen::MatrixXd q(v.cols(), 0);
  for (Eigen::Index a = 0; a < v.rows() && static_cast<int>(chosen.size()) < r; ++a) {
    Eigen::VectorXd w = v.row(a).transpose();
    if (q.cols() > 0) w -= q * (q.transpose() * w);
    const double nw = w.norm();
    if (nw > tol * scale) {
      chosen.push_back(static_cast<int>(a));
      q.conservativeResize(Eigen::NoChange, q.cols() + 1);
      q.col(q.cols() - 1) = w / nw;
    }
  }
  return chosen;
}

}  // namespace

Extraction extract_atoms(const std::vector<int>& vars, const Eigen::VectorXd& y_local, int t, int r,
                         const ExtractOptions& opts) {
  Extraction out;
  const MonomialBasis bt(vars, t);
  const MonomialBasis b2(vars, 2 * t);
  if (static_cast<std::size_t>(y_local.size()) != b2.size()) {
    throw DimensionError("extract_atoms: moment vector has " + std::to_string(y_local.size()) + " entries, expected " +
                         std::to_string(b2.size()));
  }
  const auto s = static_cast<Eigen::Index>(bt.size());
  if (r < 1 || r > s) {
    out.diagnostic = "rank " + std::to_string(r) + " outside [1, " + std::to_string(s) + "]";
    return out;
  }
  Eigen::MatrixXd m(s, s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) m(a, b) = y_local[static_cast<Eigen::Index>(*b2.position(bt[a] + bt[b]))];
  }
  const auto eig = sym_eig(m);
  const Eigen::VectorXd top = eig.values.tail(r).cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd v = eig.vectors.rightCols(r) * top.asDiagonal();

  // Basis monomials of degree ≤ t-1 may be shifted by one variable inside [x]_t.
  std::vector<std::string> notes;
  for (double ptol : opts.pivot_tols) {
    const auto rows = select_rows(v, r, ptol);
    std::ostringstream tag;
    tag << "pivot tol " << ptol << ": ";
    if (static_cast<int>(rows.size()) < r) {
      notes.push_back(tag.str() + "only " + std::to_string(rows.size()) + " independent rows");
      continue;
    }
    if (std::any_of(rows.begin(), rows.end(), [&](int a) { return bt[a].degree() >= t; })) {
      notes.push_back(tag.str() + "selected basis reaches degree t (not graded-closed)");
      continue;
    }
    Eigen::MatrixXd w(r, r);
    for (int j = 0; j < r; ++j) w.row(j) = v.row(rows[j]);
    const Eigen::MatrixXd u = v * w.inverse();
    std::vector<Eigen::MatrixXd> mult;
    for (int var : vars) {
      Eigen::MatrixXd nv(r, r);
      for (int j = 0; j < r; ++j) {
        const auto pos = bt.position(bt[rows[j]] + Exponent::variable(var));
        nv.row(j) = u.row(static_cast<Eigen::Index>(*pos));
      }
      mult.push_back(std::move(nv));
    }
    for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
      std::mt19937_64 rng(opts.seed + attempt);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Eigen::MatrixXd comb = Eigen::MatrixXd::Zero(r, r);
      double csum = 0.0;
      std::vector<double> c(vars.size());
      for (auto& ci : c) csum += (ci = unif(rng));
      for (std::size_t j = 0; j < vars.size(); ++j) comb += (c[j] / csum) * mult[j];
      Eigen::RealSchur<Eigen::MatrixXd> schur(comb);
      if (schur.info() != Eigen::Success) {
        notes.push_back(tag.str() + "Schur decomposition did not converge");
        continue;
      }
      const Eigen::MatrixXd& tm = schur.matrixT();
      const Eigen::MatrixXd& qm = schur.matrixU();
      const double tnorm = std::max(tm.norm(), 1.0);
      bool complex_pair = false;
      for (int j = 0; j + 1 < r; ++j) complex_pair = complex_pair || std::abs(tm(j + 1, j)) > opts.complex_tol * tnorm;
      if (complex_pair) {
        notes.push_back(tag.str() + "multiplication matrices have complex eigenvalues");
        continue;
      }
      std::vector<Atom> atoms(r);
      for (int j = 0; j < r; ++j) {
        atoms[j].point.resize(vars.size());
        for (std::size_t vi = 0; vi < vars.size(); ++vi) {
          atoms[j].point[vi] = qm.col(j).dot(mult[vi] * qm.col(j));
        }
      }
      Eigen::MatrixXd vand(static_cast<Eigen::Index>(b2.size()), r);
      for (int j = 0; j < r; ++j) {
        const auto vals = b2.evaluate_local(atoms[j].point);
        for (std::size_t a = 0; a < vals.size(); ++a) vand(static_cast<Eigen::Index>(a), j) = vals[a];
      }
      const Eigen::VectorXd lambda = vand.colPivHouseholderQr().solve(y_local);
      if (lambda.minCoeff() < -opts.negative_weight_tol) {
        std::ostringstream os;
        os << tag.str() << "negative weight " << lambda.minCoeff();
        notes.push_back(os.str());
        continue;
      }
      const double err = (vand * lambda - y_local).cwiseAbs().maxCoeff();
      if (err > opts.max_reconstruction_error * std::max(1.0, y_local.cwiseAbs().maxCoeff())) {
        std::ostringstream os;
        os << tag.str() << "atoms reproduce the moments only to " << err;
        notes.push_back(os.str());
        continue;
      }
      for (int j = 0; j < r; ++j) atoms[j].weight = lambda[j];
      AtomicMeasure meas;
      meas.vars = vars;
      meas.t = t;
      meas.atoms = std::move(atoms);
      meas.reconstruction_error = err;
      out.measure = std::move(meas);
      return out;
    }
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < notes.size(); ++i) os << (i ? "; " : "") << notes[i];
  out.diagnostic = os.str();
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(StitchStatus s) {
  switch (s) {
    case StitchStatus::Stitched: return "stitched";
    case StitchStatus::Refused: return "refused";
    case StitchStatus::Unstitchable: return "unstitchable";
  }
  return "?";
}

namespace {

double coord(const AtomicMeasure& m, const Atom& a, int var) {
  const auto it = std::lower_bound(m.vars.begin(), m.vars.end(), var);
  return a.point[static_cast<std::size_t>(it - m.vars.begin())];
}

}  // namespace

StitchResult stitch(const std::vector<AtomicMeasure>& measures, const SparsityPattern& pattern, const RipReport& rip,
                    double match_tol) {
  StitchResult res;
  const int m = pattern.m();
  if (static_cast<int>(measures.size()) != m) throw DimensionError("stitch: one measure per block is required");
  if (!rip.holds) {
    res.reason = "running intersection property fails; stitching disabled";
    return res;
  }
  if (!rip.connected_cover) {
    res.reason = "blocks are not a connected cover of the variables";
    return res;
  }
  const std::size_t r = measures[0].atoms.size();
  for (const auto& meas : measures) {
    if (meas.atoms.size() != r) {
      res.reason = "atom counts differ across blocks";
      return res;
    }
  }
  const int n = pattern.n();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> partial(r, std::vector<double>(n, nan));
  std::vector<char> covered(n + 1, 0);
  const int first = rip.ordering[0];
  for (std::size_t a = 0; a < r; ++a) {
    for (int v : pattern.block(first)) partial[a][v - 1] = coord(measures[first], measures[first].atoms[a], v);
  }
  for (int v : pattern.block(first)) covered[v] = 1;

  for (std::size_t pos = 1; pos < rip.ordering.size(); ++pos) {
    const int j = rip.ordering[pos];
    const auto& meas = measures[j];
    std::vector<int> shared;
    for (int v : pattern.block(j)) {
      if (covered[v]) shared.push_back(v);
    }
    auto dist = [&](std::size_t p, std::size_t a) {
      double d = 0.0;
      for (int v : shared) d = std::max(d, std::abs(partial[p][v - 1] - coord(meas, meas.atoms[a], v)));
      return d;
    };
    std::vector<int> assign(r, -1);
    std::vector<char> used(r, 0);
    for (std::size_t p = 0; p < r; ++p) {
      int best = -1;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < r; ++a) {
        if (used[a]) continue;
        const double d = dist(p, a);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(a);
        }
      }
      if (best < 0 || bd > match_tol) {
        res.status = StitchStatus::Unstitchable;
        res.reason = "no atom of block " + std::to_string(j + 1) + " matches partial point " + std::to_string(p + 1) +
                     " on the overlap";
        res.offending = std::make_pair(j, static_cast<int>(p));
        return res;
      }
      used[best] = 1;
      assign[p] = best;
    }
    // Every partial point must have exactly one compatible atom.
    for (std::size_t p = 0; p < r; ++p) {
      for (std::size_t a = 0; a < r; ++a) {
        if (static_cast<int>(a) != assign[p] && dist(p, a) <= match_tol) {
          res.status = StitchStatus::Unstitchable;
          res.reason = "ambiguous overlap match in block " + std::to_string(j + 1);
          res.offending = std::make_pair(j, static_cast<int>(a));
          return res;
        }
      }
    }
    for (std::size_t p = 0; p < r; ++p) {
      for (int v : pattern.block(j)) {
        if (!covered[v]) partial[p][v - 1] = coord(meas, meas.atoms[assign[p]], v);
      }
    }
    for (int v : pattern.block(j)) covered[v] = 1;
  }
  for (auto& p : partial) {
    for (auto& x : p) {
      if (std::isnan(x)) x = 0.0;
    }
  }
  res.status = StitchStatus::Stitched;
  res.points = std::move(partial);
  return res;
}

std::vector<std::vector<double>> consistent_points(const std::vector<AtomicMeasure>& measures,
                                                   const SparsityPattern& pattern, double match_tol) {
  const int m = pattern.m();
  if (static_cast<int>(measures.size()) != m) throw DimensionError("consistent_points: one measure per block");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> found;
  std::vector<double> x(pattern.n(), nan);
  constexpr std::size_t kMaxPoints = 4096;

  auto recurse = [&](auto&& self, int i) -> void {
    if (found.size() >= kMaxPoints) return;
    if (i == m) {
      std::vector<double> p = x;
      for (auto& v : p) {
        if (std::isnan(v)) v = 0.0;
      }
      for (const auto& q : found) {
        double d = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) d = std::max(d, std::abs(p[c] - q[c]));
        if (d <= match_tol) return;
      }
      found.push_back(std::move(p));
      return;
    }
    const auto& meas = measures[i];
    for (const auto& atom : meas.atoms) {
      bool ok = true;
      for (std::size_t c = 0; c < meas.vars.size() && ok; ++c) {
        const double cur = x[meas.vars[c] - 1];
        ok = std::isnan(cur) || std::abs(cur - atom.point[c]) <= match_tol;
      }
      if (!ok) continue;
      std::vector<int> set;
      for (std::size_t c = 0; c < meas.vars.size(); ++c) {
        if (std::isnan(x[meas.vars[c] - 1])) {
          x[meas.vars[c] - 1] = atom.point[c];
          set.push_back(meas.vars[c]);
        }
      }
      self(self, i + 1);
      for (int v : set) x[v - 1] = nan;
    }
  };
  recurse(recurse, 0);
  return found;
}

// ---------------------------------------------------------------------------

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::TightMinimizer: return "tight-minimizer";
    case Verdict::NotTight: return "not-tight";
    case Verdict::InfeasiblePoint: return "infeasible-point";
  }
  return "?";
}

ValueCheck certify_by_value(std::span<const double> x, const SparsePOP& pop, double bound, double tol) {
  ValueCheck vc;
  vc.violation = pop.max_violation(x);
  vc.value = pop.objective_value(x);
  if (vc.violation > tol) {
    vc.verdict = Verdict::InfeasiblePoint;
  } else if (vc.value - bound <= tol * (1.0 + std::abs(bound))) {
    vc.verdict = Verdict::TightMinimizer;
  } else {
    vc.verdict = Verdict::NotTight;
  }
  return vc;
}

bool bounds_agree(double bound_t, double bound_k, double tol) {
  return std::abs(bound_t - bound_k) <= tol * (1.0 + std::abs(bound_k));
}

}  // namespace spop
