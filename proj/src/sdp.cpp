#include "spop/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>

#include "spop/error.hpp"
#include "spop/linalg.hpp"

namespace spop {

int StandardSdp::total_dim() const {
  int s = 0;
  for (int d : sides) s += d;
  return s;
}

Eigen::VectorXd StandardSdp::moments(const Eigen::VectorXd& z) const {
  if (null_basis.cols() != z.size()) throw DimensionError("moments: z does not match the null basis");
  return y_particular + null_basis * z;
}

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::NearOptimal: return "near-optimal";
    case SdpStatus::InfeasibleCertificate: return "infeasible-certificate";
    case SdpStatus::UnboundedCertificate: return "unbounded-certificate";
    case SdpStatus::Stalled: return "stalled";
  }
  return "?";
}

SolverOptions SolverOptions::from_env() {
  SolverOptions o;
  if (const char* env = std::getenv("SPOP_PSD_CAP")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) o.psd_cap = static_cast<int>(v);
  }
  return o;
}

// ---------------------------------------------------------------------------

StandardSdp to_standard(const SdpProblem& prob, int psd_cap) {
  const int nmom = static_cast<int>(prob.num_moments());
  const int free_bound = prob.normalized ? nmom - 1 : nmom;
  if (free_bound > psd_cap) {
    throw CapError("relaxation has " + std::to_string(free_bound) + " free moments, above the cap " +
                   std::to_string(psd_cap));
  }
  if (static_cast<int>(prob.total_psd_dim()) > psd_cap) {
    throw CapError("total PSD dimension " + std::to_string(prob.total_psd_dim()) + " exceeds the cap " +
                   std::to_string(psd_cap));
  }

  StandardSdp out;
  // Gauss-Jordan on [E | rhs]; the normalization row (if any) comes first and pivots on y_0.
  const int nrows = static_cast<int>(prob.equalities.size()) + (prob.normalized ? 1 : 0);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(nrows, nmom + 1);
  int row = 0;
  if (prob.normalized) {
    R(0, 0) = 1.0;
    R(0, nmom) = 1.0;
    row = 1;
  }
  for (const auto& eq : prob.equalities) {
    for (const auto& [p, c] : eq.form.terms) R(row, p) += c;
    R(row, nmom) = -eq.form.constant;
    ++row;
  }
  std::vector<int> pivot_col(nrows, -1);
  std::vector<char> is_pivot(nmom, 0);
  for (int i = 0; i < nrows; ++i) {
    const double scale = std::max(1.0, R.row(i).head(nmom).cwiseAbs().maxCoeff());
    int best = -1;
    double best_abs = 0.0;
    if (prob.normalized && i == 0) {
      best = 0;
      best_abs = 1.0;
    } else {
      for (int j = nmom - 1; j >= 0; --j) {
        if (is_pivot[j]) continue;
        const double a = std::abs(R(i, j));
        if (a > best_abs) {
          best_abs = a;
          best = j;
        }
      }
    }
    if (best < 0 || best_abs <= 1e-10 * scale) {
      if (std::abs(R(i, nmom)) > 1e-9 * scale) out.inconsistent = true;
      ++out.dropped_rows;
      R.row(i).setZero();
      continue;
    }
    R.row(i) /= R(i, best);
    for (int k = 0; k < nrows; ++k) {
      if (k != i && R(k, best) != 0.0) R.row(k) -= R(k, best) * R.row(i);
    }
    pivot_col[i] = best;
    is_pivot[best] = 1;
  }

  std::vector<int> free_index(nmom, -1);
  int nfree = 0;
  for (int j = 0; j < nmom; ++j) {
    if (!is_pivot[j]) free_index[j] = nfree++;
  }
  // Rows of N as sparse lists: y_α = y_p,α + Σ_q N_αq z_q.
  std::vector<std::vector<std::pair<int, double>>> nrow(nmom);
  out.y_particular = Eigen::VectorXd::Zero(nmom);
  for (int j = 0; j < nmom; ++j) {
    if (free_index[j] >= 0) nrow[j].emplace_back(free_index[j], 1.0);
  }
  for (int i = 0; i < nrows; ++i) {
    const int c = pivot_col[i];
    if (c < 0) continue;
    out.y_particular[c] = R(i, nmom);
    for (int j = 0; j < nmom; ++j) {
      if (free_index[j] >= 0 && std::abs(R(i, j)) > 1e-14) nrow[c].emplace_back(free_index[j], -R(i, j));
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < nmom; ++j) {
    for (const auto& [q, v] : nrow[j]) trips.emplace_back(j, q, v);
  }
  out.null_basis.resize(nmom, nfree);
  out.null_basis.setFromTriplets(trips.begin(), trips.end());

  for (const auto& blk : prob.psd) {
    const int side = blk.side;
    out.sides.push_back(side);
    Eigen::MatrixXd C(side, side);
    struct Quad {
      int q, r, c;
      double v;
    };
    std::vector<Quad> quads;
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const auto& form = blk.at(r, c);
        double cv = form.constant;
        for (const auto& [p, coef] : form.terms) {
          cv += coef * out.y_particular[p];
          for (const auto& [q, v] : nrow[p]) quads.push_back({q, r, c, -coef * v});
        }
        C(r, c) = cv;
      }
    }
    std::sort(quads.begin(), quads.end(),
              [](const Quad& a, const Quad& b) { return std::tie(a.q, a.r, a.c) < std::tie(b.q, b.r, b.c); });
    std::vector<BlockTerm> terms;
    for (std::size_t s = 0; s < quads.size();) {
      std::size_t e = s;
      double v = 0.0;
      while (e < quads.size() && quads[e].q == quads[s].q && quads[e].r == quads[s].r && quads[e].c == quads[s].c) {
        v += quads[e].v;
        ++e;
      }
      if (v != 0.0) {
        if (terms.empty() || terms.back().q != quads[s].q) terms.push_back({quads[s].q, {}});
        terms.back().entries.push_back({quads[s].r, quads[s].c, v});
      }
      s = e;
    }
    out.C.push_back(std::move(C));
    out.A.push_back(std::move(terms));
  }

  Eigen::VectorXd f = Eigen::VectorXd::Zero(nmom);
  for (const auto& [p, c] : prob.objective) f[p] += c;
  out.b = -(out.null_basis.transpose() * f);
  out.objective_offset = f.dot(out.y_particular);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using Blocks = std::vector<Eigen::MatrixXd>;

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i].array() * b[i].array()).sum();
  return s;
}

double fro(const Blocks& a) { return std::sqrt(inner(a, a)); }

double term_dot(const BlockTerm& t, const Eigen::MatrixXd& m) {
  double s = 0.0;
  for (const auto& e : t.entries) s += e.v * m(e.r, e.c);
  return s;
}

class Ipm {
 public:
  Ipm(const StandardSdp& sdp, const SolverOptions& opts) : sdp_(sdp), opts_(opts) {
    nb_ = static_cast<int>(sdp.sides.size());
    p_ = sdp.num_constraints();
    for (int i = 0; i < nb_; ++i) {
      if (static_cast<int>(sdp.C[i].rows()) != sdp.sides[i] || static_cast<int>(sdp.C[i].cols()) != sdp.sides[i]) {
        throw DimensionError("standard SDP: C block " + std::to_string(i) + " has the wrong side");
      }
      for (const auto& t : sdp.A[i]) {
        if (t.q < 0 || t.q >= p_) throw DimensionError("standard SDP: constraint index out of range");
        for (const auto& e : t.entries) {
          if (e.r < 0 || e.c < 0 || e.r >= sdp.sides[i] || e.c >= sdp.sides[i]) {
            throw DimensionError("standard SDP: entry outside its block");
          }
        }
      }
    }
    if (sdp.total_dim() > opts.psd_cap) {
      throw CapError("total PSD dimension " + std::to_string(sdp.total_dim()) + " exceeds the cap " +
                     std::to_string(opts.psd_cap));
    }
    ntot_ = std::max(1, sdp.total_dim());
  }

  SdpSolution run();

 private:
  Eigen::VectorXd apply_a(const Blocks& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p_);
    for (int i = 0; i < nb_; ++i) {
      for (const auto& t : sdp_.A[i]) out[t.q] += term_dot(t, x[i]);
    }
    return out;
  }

  Blocks apply_at(const Eigen::VectorXd& z) const {
    Blocks out(nb_);
    for (int i = 0; i < nb_; ++i) {
      out[i] = Eigen::MatrixXd::Zero(sdp_.sides[i], sdp_.sides[i]);
      for (const auto& t : sdp_.A[i]) {
        const double zq = z[t.q];
        if (zq == 0.0) continue;
        for (const auto& e : t.entries) out[i](e.r, e.c) += zq * e.v;
      }
    }
    return out;
  }

  // Largest α with m + α d ⪰ 0 (infinity if d keeps it PSD), using the Cholesky factor of m.
  static double max_step(const std::vector<Eigen::MatrixXd>& lfac, const Blocks& d) {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i].rows() == 0) continue;
      const auto& l = lfac[i];
      Eigen::MatrixXd s = l.triangularView<Eigen::Lower>().solve(d[i]);
      s = l.triangularView<Eigen::Lower>().solve(s.transpose()).transpose();
      const double lmin = sym_eig(s).values.minCoeff();
      if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
    }
    return alpha;
  }

  bool factor_schur(const Blocks& x, const Blocks& zinv);
  void newton(const Blocks& x, const Blocks& zinv, const Eigen::VectorXd& rp, const Blocks& rd, const Blocks& rc,
              Blocks& dx, Eigen::VectorXd& dz, Blocks& dzm) const;

  const StandardSdp& sdp_;
  SolverOptions opts_;
  int nb_ = 0;
  int p_ = 0;
  int ntot_ = 1;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool use_ldlt_ = false;
};

bool Ipm::factor_schur(const Blocks& x, const Blocks& zinv) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p_, p_);
  for (int i = 0; i < nb_; ++i) {
    const auto& terms = sdp_.A[i];
    const int side = sdp_.sides[i];
    for (std::size_t a = 0; a < terms.size(); ++a) {
      // G = X A_q Z⁻¹ built from the columns touched by A_q.
      std::vector<int> cols;
      for (const auto& e : terms[a].entries) cols.push_back(e.c);
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(side, static_cast<Eigen::Index>(cols.size()));
      for (const auto& e : terms[a].entries) {
        const auto k = std::lower_bound(cols.begin(), cols.end(), e.c) - cols.begin();
        w.col(k) += e.v * x[i].col(e.r);
      }
      Eigen::MatrixXd zc(static_cast<Eigen::Index>(cols.size()), side);
      for (std::size_t k = 0; k < cols.size(); ++k) zc.row(static_cast<Eigen::Index>(k)) = zinv[i].row(cols[k]);
      const Eigen::MatrixXd g = w * zc;
      for (std::size_t b = a; b < terms.size(); ++b) {
        double s = 0.0;
        for (const auto& e : terms[b].entries) s += e.v * g(e.c, e.r);
        m(terms[b].q, terms[a].q) += s;
      }
    }
  }
  m = m.selfadjointView<Eigen::Lower>();
  llt_.compute(m);
  use_ldlt_ = llt_.info() != Eigen::Success;
  if (use_ldlt_) {
    const double reg = 1e-14 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += reg;
    ldlt_.compute(m);
    return ldlt_.info() == Eigen::Success;
  }
  return true;
}

void Ipm::newton(const Blocks& x, const Blocks& zinv, const Eigen::VectorXd& rp, const Blocks& rd, const Blocks& rc,
                 Blocks& dx, Eigen::VectorXd& dz, Blocks& dzm) const {
  Blocks t(nb_);
  for (int i = 0; i < nb_; ++i) t[i] = (x[i] * rd[i] - rc[i]) * zinv[i];
  const Eigen::VectorXd rhs = rp + apply_a(t);
  dz = use_ldlt_ ? Eigen::VectorXd(ldlt_.solve(rhs)) : Eigen::VectorXd(llt_.solve(rhs));
  const Blocks adz = apply_at(dz);
  dzm.resize(nb_);
  dx.resize(nb_);
  for (int i = 0; i < nb_; ++i) {
    dzm[i] = rd[i] - adz[i];
    dx[i] = symmetrize((rc[i] - x[i] * dzm[i]) * zinv[i]);
  }
}

SdpSolution Ipm::run() {
  double scale = 1.0;
  if (p_ > 0) scale = std::max(scale, 1.0 + sdp_.b.cwiseAbs().maxCoeff());
  for (const auto& c : sdp_.C) {
    if (c.size() > 0) scale = std::max(scale, 1.0 + c.cwiseAbs().maxCoeff());
  }
  Blocks x(nb_), zm(nb_);
  for (int i = 0; i < nb_; ++i) {
    x[i] = scale * Eigen::MatrixXd::Identity(sdp_.sides[i], sdp_.sides[i]);
    zm[i] = x[i];
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(p_);

  const double bnorm = p_ > 0 ? sdp_.b.norm() : 0.0;
  const double cnorm = fro(sdp_.C);
  const double near_tol = std::max(1e-6, 100.0 * opts_.tol);

  SdpSolution best;
  double best_merit = std::numeric_limits<double>::infinity();
  SdpSolution sol;
  int tiny_steps = 0;

  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd ax = apply_a(x);
    const Eigen::VectorXd rp = sdp_.b - ax;
    const Blocks az = apply_at(z);
    Blocks rd(nb_);
    for (int i = 0; i < nb_; ++i) rd[i] = sdp_.C[i] - az[i] - zm[i];
    const double pobj = inner(sdp_.C, x);
    const double dobj = p_ > 0 ? sdp_.b.dot(z) : 0.0;
    const double mu = inner(x, zm) / ntot_;
    const double pinf = rp.norm() / (1.0 + bnorm);
    const double dinf = fro(rd) / (1.0 + cnorm);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    IterationLog entry{iter, pobj, dobj, pinf, dinf, gap, mu, 0.0, 0.0};
    const double merit = std::max({pinf, dinf, gap});
    if (merit < best_merit) {
      best_merit = merit;
      best.X = x;
      best.Z = zm;
      best.z = z;
      best.primal_objective = pobj;
      best.dual_objective = dobj;
      best.primal_residual = pinf;
      best.dual_residual = dinf;
      best.gap = gap;
      best.iterations = iter;
    }

    auto finish = [&](SdpStatus st) {
      sol.X = x;
      sol.Z = zm;
      sol.z = z;
      sol.primal_objective = pobj;
      sol.dual_objective = dobj;
      sol.primal_residual = pinf;
      sol.dual_residual = dinf;
      sol.gap = gap;
      sol.iterations = iter;
      sol.status = st;
    };

    if (pinf <= opts_.tol && dinf <= opts_.tol && gap <= opts_.tol) {
      sol.log.push_back(entry);
      finish(SdpStatus::Optimal);
      return sol;
    }
    if (pobj < 0.0 && ax.norm() / std::abs(pobj) < opts_.tol) {
      sol.log.push_back(entry);
      finish(SdpStatus::InfeasibleCertificate);
      return sol;
    }
    if (dobj > 0.0 && (cnorm + fro(rd)) / dobj < opts_.tol) {
      sol.log.push_back(entry);
      finish(SdpStatus::UnboundedCertificate);
      return sol;
    }
    if (iter >= opts_.max_iter || tiny_steps >= 3) {
      sol.log.push_back(entry);
      break;
    }

    std::vector<Eigen::MatrixXd> lx(nb_), lz(nb_);
    Blocks zinv(nb_);
    bool ok = true;
    for (int i = 0; i < nb_ && ok; ++i) {
      auto fx = chol(x[i]);
      auto fz = chol(zm[i]);
      if (!fx || !fz) {
        ok = false;
        break;
      }
      lx[i] = *fx;
      lz[i] = *fz;
      const Eigen::MatrixXd li = lz[i].triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(sdp_.sides[i], sdp_.sides[i]));
      zinv[i] = li.transpose() * li;
    }
    if (!ok || !factor_schur(x, zinv)) {
      sol.log.push_back(entry);
      break;
    }

    // Predictor.
    Blocks rc(nb_), dx, dzm;
    Eigen::VectorXd dz;
    for (int i = 0; i < nb_; ++i) rc[i] = -x[i] * zm[i];
    newton(x, zinv, rp, rd, rc, dx, dz, dzm);
    const double ap_aff = std::min(1.0, max_step(lx, dx));
    const double ad_aff = std::min(1.0, max_step(lz, dzm));
    double mu_aff = 0.0;
    for (int i = 0; i < nb_; ++i) {
      mu_aff += ((x[i] + ap_aff * dx[i]).array() * (zm[i] + ad_aff * dzm[i]).array()).sum();
    }
    mu_aff /= ntot_;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (int i = 0; i < nb_; ++i) {
      rc[i] = sigma * mu * Eigen::MatrixXd::Identity(sdp_.sides[i], sdp_.sides[i]) - x[i] * zm[i] - dx[i] * dzm[i];
    }
    Blocks dx2, dzm2;
    Eigen::VectorXd dz2;
    newton(x, zinv, rp, rd, rc, dx2, dz2, dzm2);
    const double ap = std::min(1.0, opts_.step_fraction * max_step(lx, dx2));
    const double ad = std::min(1.0, opts_.step_fraction * max_step(lz, dzm2));
    entry.step_primal = ap;
    entry.step_dual = ad;
    sol.log.push_back(entry);
    for (int i = 0; i < nb_; ++i) {
      x[i] = symmetrize(x[i] + ap * dx2[i]);
      zm[i] = symmetrize(zm[i] + ad * dzm2[i]);
    }
    z += ad * dz2;
    tiny_steps = (ap < 1e-8 && ad < 1e-8) ? tiny_steps + 1 : 0;
  }

  auto log = std::move(sol.log);
  sol = std::move(best);
  sol.log = std::move(log);
  sol.iterations = static_cast<int>(sol.log.size()) - 1;
  sol.status = best_merit <= near_tol ? SdpStatus::NearOptimal : SdpStatus::Stalled;
  return sol;
}

}  // namespace

SdpSolution solve(const StandardSdp& sdp, const SolverOptions& opts) {
  if (static_cast<int>(sdp.C.size()) != static_cast<int>(sdp.sides.size()) || sdp.A.size() != sdp.sides.size()) {
    throw DimensionError("standard SDP: block lists disagree in length");
  }
  return Ipm(sdp, opts).run();
}

RelaxationSolve solve_relaxation(SdpProblem problem, const SolverOptions& opts) {
  RelaxationSolve out;
  out.standard = to_standard(problem, opts.psd_cap);
  out.problem = std::move(problem);
  if (out.standard.inconsistent) {
    out.solution.status = SdpStatus::InfeasibleCertificate;
    out.bound = out.sos_bound = std::numeric_limits<double>::infinity();
    return out;
  }
  out.solution = solve(out.standard, opts);
  out.y = out.standard.moments(out.solution.z);
  out.bound = out.standard.objective_offset - out.solution.dual_objective;
  out.sos_bound = out.standard.objective_offset - out.solution.primal_objective;
  if (out.solution.status == SdpStatus::InfeasibleCertificate) {
    out.bound = out.sos_bound = std::numeric_limits<double>::infinity();
  } else if (out.solution.status == SdpStatus::UnboundedCertificate) {
    out.bound = out.sos_bound = -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace spop
