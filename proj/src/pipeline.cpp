#include <chrono>
#include <cmath>

#include "spop/error.hpp"
#include "spop/frontend.hpp"

namespace spop {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "+inf" : "-inf";
}

Json one_based(const std::vector<int>& v) {
  Json out = Json::array();
  for (int x : v) out.push_back(x + 1);
  return out;
}

Json sizes_to_json(const SizeEstimate& s) {
  return {{"moments", s.moments}, {"psd_blocks", s.psd_blocks}, {"max_side", s.max_side},
          {"total_psd_dim", s.total_psd_dim}};
}

Json flat_to_json(const FlatReport& flat) {
  Json out;
  out["rank_tol"] = flat.rank_tol;
  out["common_t"] = flat.common_t ? Json(*flat.common_t) : Json(nullptr);
  out["blocks"] = Json::array();
  for (const auto& b : flat.blocks) {
    Json levels = Json::array();
    for (const auto& l : b.levels) {
      levels.push_back({{"t", l.t}, {"rank", l.rank}, {"rank_lower", l.rank_lower}, {"gap", num(l.gap)}});
    }
    out["blocks"].push_back({{"block", b.block + 1},
                             {"d", b.d},
                             {"t", b.t ? Json(*b.t) : Json(nullptr)},
                             {"rank", b.rank},
                             {"levels", levels}});
  }
  out["overlaps"] = Json::array();
  for (const auto& o : flat.overlaps) {
    out["overlaps"].push_back(
        {{"blocks", {o.i + 1, o.j + 1}}, {"vars", o.vars}, {"rank", o.rank}, {"rank_lower", o.rank_lower}});
  }
  out["warnings"] = flat.warnings;
  return out;
}

Json measure_to_json(const AtomicMeasure& m) {
  Json atoms = Json::array();
  for (const auto& a : m.atoms) atoms.push_back({{"weight", a.weight}, {"point", a.point}});
  return {{"block", m.block + 1},
          {"vars", m.vars},
          {"t", m.t},
          {"reconstruction_error", m.reconstruction_error},
          {"atoms", atoms}};
}

Json verify_to_json(const VerifyReport& v, const VerifyOptions& opts) {
  Json out;
  out["valid"] = v.valid;
  out["kind"] = v.kind;
  out["identity_residual"] = v.identity_residual;
  out["membership_residual"] = v.membership_residual;
  out["min_eigenvalue"] = v.min_eigenvalue;
  out["achievable"] = v.achievable ? Json(*v.achievable) : Json(nullptr);
  out["candidate_values"] = v.candidate_values;
  out["problems"] = v.problems;
  out["tolerances"] = {{"residual_tol", opts.residual_tol}, {"eig_floor", opts.eig_floor}, {"zero_tol", opts.zero_tol}};
  return out;
}

StitchResult overlap_refusal(const FlatReport& flat, const std::vector<int>& ranks) {
  for (const auto& o : flat.overlaps) {
    if (o.rank != ranks[o.i] || o.rank != ranks[o.j]) {
      StitchResult r;
      r.status = StitchStatus::Refused;
      r.reason = "overlap rank of blocks " + std::to_string(o.i + 1) + "," + std::to_string(o.j + 1) +
                 " differs from the block ranks";
      return r;
    }
  }
  return {};
}

}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::TightCertified: return "tight-certified";
    case Outcome::BoundOnly: return "bound-only";
    case Outcome::InfeasibilityCertified: return "infeasibility-certified";
    case Outcome::Error: return "error";
  }
  return "error";
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::TightCertified: return 0;
    case Outcome::Error: return 1;
    case Outcome::BoundOnly: return 2;
    case Outcome::InfeasibilityCertified: return 3;
  }
  return 1;
}

Json rip_to_json(const RipReport& rip) {
  Json out;
  out["holds"] = rip.holds;
  out["ordering"] = one_based(rip.ordering);
  Json wit = Json::array();
  for (int w : rip.witness) wit.push_back(w < 0 ? Json(nullptr) : Json(w + 1));
  out["witness"] = wit;
  out["violation"] = rip.violation ? Json::array({rip.violation->first + 1, rip.violation->second + 1}) : Json(nullptr);
  out["connected_cover"] = rip.connected_cover;
  out["components"] = Json::array();
  for (const auto& c : rip.components) out["components"].push_back(one_based(c));
  return out;
}

SolveResult run_solve(const SparsePOP& pop, const SolveConfig& config) {
  const auto start = Clock::now();
  SolveResult res;
  Json& rep = res.report;
  const ExtractOptions xopts;
  const VerifyOptions vopts;
  rep["config"] = {{"source", config.source},
                   {"model", to_string(config.model)},
                   {"order", config.k},
                   {"tol", config.tol},
                   {"extract", config.extract},
                   {"certify", config.certify},
                   {"epsilon", config.epsilon},
                   {"force", config.force},
                   {"psd_cap", config.psd_cap},
                   {"rank_tol", config.rank_tol},
                   {"value_tol", config.value_tol},
                   {"extract_seed", xopts.seed}};
  rep["instance"] = config.instance.is_null() ? Json{{"n", pop.n()}, {"m", pop.m()}, {"blocks", pop.pattern.blocks()}}
                                              : config.instance;
  Json timings;
  try {
    pop.validate();
    const auto info = min_order(pop);
    const int k = config.k > 0 ? config.k : info.k0;
    if (k < info.k0 && !config.force) {
      throw FormatError("order " + std::to_string(k) + " is below the minimal order k0=" + std::to_string(info.k0) +
                        " (use --force)");
    }
    rep["order"] = {{"k", k}, {"k0", info.k0}, {"d", info.d}};
    const SparsePOP eff = is_dense(config.model) ? dense_version(pop) : pop;
    const auto rip = check_rip(eff.pattern);
    rep["rip"] = rip_to_json(rip);

    const auto sizes = estimate_size(pop, k, config.model);
    rep["sizes"] = sizes_to_json(sizes);
    if (sizes.moments > static_cast<std::size_t>(config.psd_cap) ||
        sizes.total_psd_dim > static_cast<std::size_t>(config.psd_cap)) {
      throw CapError("relaxation exceeds the dimension cap " + std::to_string(config.psd_cap) + " (moments " +
                     std::to_string(sizes.moments) + ", total PSD dimension " + std::to_string(sizes.total_psd_dim) +
                     ")");
    }
    SolverOptions sopts;
    sopts.tol = config.tol;
    sopts.psd_cap = config.psd_cap;
    AssembleOptions aopts;
    aopts.allow_low_order = config.force;

    auto t0 = Clock::now();
    auto prob = assemble(pop, k, config.model, aopts);
    timings["assemble"] = seconds_since(t0);
    if (!prob.skipped.empty()) rep["skipped_constraints"] = prob.skipped;
    t0 = Clock::now();
    res.relaxation = solve_relaxation(std::move(prob), sopts);
    timings["solve"] = seconds_since(t0);
    const auto& rs = *res.relaxation;
    const auto& sol = rs.solution;
    rep["solver"] = {{"status", to_string(sol.status)},
                     {"iterations", sol.iterations},
                     {"primal_residual", sol.primal_residual},
                     {"dual_residual", sol.dual_residual},
                     {"gap", sol.gap},
                     {"tol", config.tol},
                     {"free_moments", rs.standard.num_constraints()},
                     {"dropped_rows", rs.standard.dropped_rows}};
    rep["bound"] = num(rs.bound);
    rep["sos_bound"] = num(rs.sos_bound);
    res.outcome = Outcome::BoundOnly;

    if (sol.status == SdpStatus::InfeasibleCertificate) {
      rep["feasibility"] = "moment relaxation infeasible";
      if (config.certify) {
        t0 = Clock::now();
        SolverOptions iopts = sopts;
        const auto inf = sparse_infeasibility(eff, k, iopts);
        Json ij{{"status", to_string(inf.status)}, {"diagnostic", inf.diagnostic}};
        if (inf.certificate) {
          const auto v = verify_infeasibility(*inf.certificate, eff, vopts);
          ij["sum_residual"] = inf.certificate->sum_residual;
          ij["verification"] = verify_to_json(v, vopts);
          if (v.valid) {
            res.infeasibility = inf.certificate;
            res.outcome = Outcome::InfeasibilityCertified;
          }
        }
        rep["infeasibility"] = ij;
        timings["certify"] = seconds_since(t0);
      }
    }

    if (sol.solved() && (config.extract || config.certify)) {
      t0 = Clock::now();
      res.flat = flat_truncation(eff, *rs.problem.index, rs.y, k, config.rank_tol);
      const auto& flat = *res.flat;
      rep["flat"] = flat_to_json(flat);
      Json mins;
      mins["value_tol"] = config.value_tol;
      std::string blocked;
      if (!flat.common_t) blocked = "no common flat level";
      int t = flat.common_t.value_or(k);
      if (blocked.empty() && t < k) {
        auto low = solve_relaxation(assemble(pop, t, config.model, aopts), sopts);
        const bool agree = low.solution.solved() && bounds_agree(low.bound, rs.bound, config.value_tol);
        mins["lower_level"] = {{"t", t}, {"bound", num(low.bound)}, {"agree", agree}};
        if (!agree) blocked = "order-t and order-k bounds differ";
      }
      if (blocked.empty()) {
        const auto ranks = flat.ranks_at(t);
        Json failures = Json::array();
        for (int i = 0; i < eff.m(); ++i) {
          const auto& vars = eff.pattern.block(i);
          auto ex = extract_atoms(vars, local_moments(*rs.problem.index, rs.y, vars, t), t, ranks[i], xopts);
          if (!ex.measure) {
            failures.push_back({{"block", i + 1}, {"diagnostic", ex.diagnostic}});
            continue;
          }
          ex.measure->block = i;
          res.measures.push_back(std::move(*ex.measure));
        }
        if (!failures.empty()) {
          mins["extraction_failures"] = failures;
          blocked = "atom extraction failed";
        }
      }
      Json atoms = Json::array();
      for (const auto& m : res.measures) atoms.push_back(measure_to_json(m));
      rep["atoms"] = atoms;
      if (blocked.empty()) {
        auto st = overlap_refusal(flat, flat.ranks_at(t));
        if (st.reason.empty()) st = stitch(res.measures, eff.pattern, rip, config.value_tol);
        res.stitched = st;
        mins["stitch"] = {{"status", to_string(st.status)}, {"reason", st.reason}};
        std::vector<std::vector<double>> points;
        if (st.status == StitchStatus::Stitched) {
          res.candidate_route = "stitch";
          points = st.points;
        } else {
          res.candidate_route = "consistent-combination";
          points = consistent_points(res.measures, eff.pattern, config.value_tol);
        }
        for (auto& x : points) {
          res.candidates.push_back({x, certify_by_value(x, pop, rs.bound, config.value_tol)});
        }
      } else {
        mins["blocked"] = blocked;
        if (rip.holds) {
          mins["stitch"] = {{"status", "not-attempted"}, {"reason", blocked}};
        } else {
          mins["stitch"] = {{"status", "refused"}, {"reason", "running intersection property fails"}};
        }
      }
      mins["route"] = res.candidate_route;
      mins["points"] = Json::array();
      for (const auto& c : res.candidates) {
        mins["points"].push_back({{"x", c.x},
                                  {"value", c.check.value},
                                  {"violation", c.check.violation},
                                  {"verdict", to_string(c.check.verdict)}});
      }
      rep["minimizers"] = mins;
      timings["extract"] = seconds_since(t0);
    }

    if (sol.solved() && config.certify) {
      t0 = Clock::now();
      std::vector<std::vector<double>> tight;
      std::optional<double> best;
      for (const auto& c : res.candidates) {
        if (c.check.verdict != Verdict::TightMinimizer) continue;
        tight.push_back(c.x);
        if (!best || c.check.value < *best) best = c.check.value;
      }
      std::optional<double> target;
      if (config.epsilon > 0.0 && best) target = best;
      auto split = split_representation(rs, pop, target, config.epsilon);
      if (!split.certificate && target) split = split_representation(rs, pop, std::nullopt, config.epsilon);
      Json cj{{"gamma_hat", num(split.gamma_hat)}, {"diagnostic", split.diagnostic}};
      if (split.certificate) {
        res.certificate = split.certificate;
        const auto v = verify_certificate(*split.certificate, pop, tight, vopts);
        res.verification = v;
        cj["gamma"] = split.certificate->gamma;
        cj["epsilon"] = split.certificate->epsilon;
        cj["verification"] = verify_to_json(v, vopts);
        if (v.valid && v.achievable.value_or(false) && !tight.empty()) res.outcome = Outcome::TightCertified;
      }
      rep["certificate"] = cj;
      timings["certify"] = seconds_since(t0);
    }
  } catch (const CapError& e) {
    res.outcome = Outcome::Error;
    rep["error"] = {{"type", "cap"}, {"marker", "oom-analog"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    res.outcome = Outcome::Error;
    rep["error"] = {{"type", "error"}, {"message", e.what()}};
  }
  rep["outcome"] = to_string(res.outcome);
  rep["exit_code"] = exit_code(res.outcome);
  timings["total"] = seconds_since(start);
  rep["timings"] = timings;
  return res;
}

CompareRow run_compare(const SparsePOP& pop, int k, const SolverOptions& opts, bool predict_equal, double agree_tol) {
  CompareRow row;
  auto side = [&](Model model) {
    CompareSide s;
    s.model = to_string(model);
    try {
      s.sizes = estimate_size(pop, k, model);
      if (s.sizes.moments > static_cast<std::size_t>(opts.psd_cap) ||
          s.sizes.total_psd_dim > static_cast<std::size_t>(opts.psd_cap)) {
        throw CapError("over the dimension cap " + std::to_string(opts.psd_cap));
      }
      const auto t0 = Clock::now();
      const auto rs = solve_relaxation(assemble(pop, k, model), opts);
      s.seconds = seconds_since(t0);
      s.status = to_string(rs.solution.status);
      s.bound = rs.bound;
    } catch (const CapError& e) {
      s.refused = true;
      s.status = "oom-analog";
      s.reason = e.what();
    }
    return s;
  };
  row.sparse = side(Model::SparsePutinar);
  row.dense = side(Model::DensePutinar);
  if (row.sparse.bound && row.dense.bound) {
    const double a = *row.sparse.bound, b = *row.dense.bound;
    row.relative_difference = std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
    const bool optimal = row.sparse.status == "optimal" && row.dense.status == "optimal";
    if (!predict_equal) {
      row.agreement = "not-predicted";
    } else if (optimal) {
      row.agreement = row.relative_difference <= agree_tol ? "agree" : "disagree";
    }
  }
  return row;
}

Json compare_to_json(const CompareRow& row) {
  auto side = [](const CompareSide& s) {
    Json j{{"model", s.model},
           {"refused", s.refused},
           {"status", s.status},
           {"reason", s.reason},
           {"bound", s.bound ? num(*s.bound) : Json(nullptr)},
           {"sizes", sizes_to_json(s.sizes)},
           {"seconds", s.seconds}};
    if (s.refused) j["marker"] = "oom-analog";
    return j;
  };
  return {{"sparse", side(row.sparse)},
          {"dense", side(row.dense)},
          {"agreement", row.agreement},
          {"relative_difference", row.relative_difference}};
}

}  // namespace spop
