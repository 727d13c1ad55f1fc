#include <gtest/gtest.h>

#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spop/error.hpp"
#include "spop/frontend.hpp"

using namespace spop;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string error_of(const std::string& text) {
  try {
    parse_problem(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

bool same_problem(const SparsePOP& a, const SparsePOP& b) {
  if (a.n() != b.n() || a.m() != b.m() || a.pattern.blocks() != b.pattern.blocks()) return false;
  for (int i = 0; i < a.m(); ++i) {
    if (a.f[i].terms() != b.f[i].terms()) return false;
    if (a.h[i].size() != b.h[i].size() || a.g[i].size() != b.g[i].size()) return false;
    for (std::size_t j = 0; j < a.h[i].size(); ++j) {
      if (a.h[i][j].terms() != b.h[i][j].terms()) return false;
    }
    for (std::size_t j = 0; j < a.g[i].size(); ++j) {
      if (a.g[i][j].terms() != b.g[i][j].terms()) return false;
    }
  }
  return true;
}

// Independent replay of the generator stream for one block: b, c, R_Q, R_B.
struct ReplayedBlock {
  Eigen::VectorXd b, c;
  Eigen::MatrixXd rq, rb;
};

std::vector<ReplayedBlock> replay_qcqp(int n, int w, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  auto uni = [&] { return std::ldexp(static_cast<double>(eng() >> 11), -53); };
  auto nrm = [&] {
    const double u1 = uni(), u2 = uni();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };
  std::vector<ReplayedBlock> out;
  for (int i = 0; i < n; ++i) {
    ReplayedBlock r{Eigen::VectorXd(w), Eigen::VectorXd(w), Eigen::MatrixXd(w, w), Eigen::MatrixXd(w, w)};
    for (int a = 0; a < w; ++a) r.b[a] = nrm();
    for (int a = 0; a < w; ++a) r.c[a] = nrm();
    for (int a = 0; a < w; ++a) {
      for (int q = 0; q < w; ++q) r.rq(a, q) = nrm();
    }
    for (int a = 0; a < w; ++a) {
      for (int q = 0; q < w; ++q) r.rb(a, q) = nrm();
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(ProblemFile, ParsesExample) {
  const auto pop = load_problem(oracle::problem_path("two_sphere.spop.json"));
  EXPECT_EQ(pop.n(), 3);
  EXPECT_EQ(pop.m(), 2);
  EXPECT_EQ(pop.objective().degree(), 2);
  EXPECT_EQ(pop.g[0].size(), 1u);
  const double s = std::sqrt(0.5);
  EXPECT_NEAR(pop.objective().eval(std::vector<double>{s, -s, s}), -4.0, 1e-12);
}

TEST(ProblemFile, OptionalSections) {
  const auto pop = parse_problem(R"({"version": 1, "n": 2, "blocks": [[1, 2]],
    "objective": [[{"c": 1, "e": [[1, 2]]}, {"c": 1, "e": [[2, 2]]}]]})");
  EXPECT_TRUE(pop.h[0].empty());
  EXPECT_TRUE(pop.g[0].empty());
}

TEST(ProblemFile, Rejections) {
  EXPECT_NE(error_of(R"({"version": 1, "n": 2, "blocks": [], "objective": []})"), "");
  EXPECT_NE(error_of(R"({"version": 1, "n": 2, "blocks": [[1], []], "objective": [[], []]})"), "");
  EXPECT_NE(error_of(R"({"version": 1, "n": 2, "blocks": [[1, 1]], "objective": [[]]})").find("repeated"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"version": 2, "n": 1, "blocks": [[1]], "objective": [[]]})").find("version"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"version": 1, "n": 1, "blocks": [[1]], "objective": [[]], "extra": 0})").find("extra"),
            std::string::npos);
  const auto coeff = error_of(R"({"version": 1, "n": 1, "blocks": [[1]], "objective": [[{"c": "one", "e": []}]]})");
  EXPECT_NE(coeff.find("non-numeric"), std::string::npos) << coeff;
  EXPECT_NE(coeff.find("term 1"), std::string::npos) << coeff;
  EXPECT_NE(error_of(R"({"version": 1, "n": 1, "blocks": [[2]], "objective": [[]]})"), "");
}

TEST(ProblemFile, SupportViolationNamesBlock) {
  const auto msg = error_of(R"({"version": 1, "n": 3, "blocks": [[1, 2], [2, 3]],
    "objective": [[{"c": 1, "e": [[3, 2]]}], []]})");
  EXPECT_NE(msg.find("block 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("{1,2}"), std::string::npos) << msg;
}

TEST(ProblemFile, SyntaxErrorPosition) {
  const auto msg = error_of("{\n  \"version\": 1,\n  \"n\": ,\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(ProblemFile, EmitParseRoundTrip) {
  for (const auto* name : {"unequal_ranks", "two_sphere", "four_minimizers", "cyclic_cover", "ring_no_rip", "box_split"}) {
    const auto pop = oracle::example(name);
    EXPECT_TRUE(same_problem(pop, parse_problem(emit_problem(pop)))) << name;
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto q = gen_qcqp(7, 3, seed);
    EXPECT_TRUE(same_problem(q, parse_problem(emit_problem(q))));
    const auto r = gen_quartic(5, 2, seed);
    EXPECT_TRUE(same_problem(r, parse_problem(emit_problem(r))));
    // emit ∘ parse is a fixed point on text as well.
    EXPECT_EQ(emit_problem(parse_problem(emit_problem(r))), emit_problem(r));
  }
}

TEST(ProblemFile, ShippedFilesReemitIdentically) {
  const auto pop = load_problem(oracle::problem_path("four_minimizers.spop.json"));
  EXPECT_TRUE(same_problem(pop, parse_problem(read_file(oracle::problem_path("four_minimizers.spop.json")))));
}

TEST(Generators, WrapBlocks) {
  EXPECT_EQ(wrap_blocks(6, 2), (std::vector<std::vector<int>>{{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 1}}));
  const auto pop = gen_qcqp(6, 2, 1);
  EXPECT_EQ(pop.m(), 6);
  EXPECT_EQ(pop.pattern.blocks()[5], (std::vector<int>{1, 6}));
  const auto full = gen_qcqp(4, 4, 2);
  for (const auto& b : full.pattern.blocks()) {
    EXPECT_EQ(std::set<int>(b.begin(), b.end()), (std::set<int>{1, 2, 3, 4}));
  }
  EXPECT_THROW(gen_qcqp(3, 4, 1), FormatError);
  EXPECT_THROW(gen_quartic(3, 4, 1), FormatError);
  EXPECT_THROW(gen_qcqp(3, 1, 1), FormatError);
}

TEST(Generators, StreamMatchesIndependentReplay) {
  const int n = 5, w = 3;
  const std::uint64_t seed = 11;
  const auto pop = gen_qcqp(n, w, seed);
  const auto rep = replay_qcqp(n, w, seed);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nrm;
  const auto wrapped = wrap_blocks(n, w);
  for (int i = 0; i < n; ++i) {
    const auto& vars = wrapped[i];  // generator coordinates follow the wrap order
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> x(n);
      for (auto& v : x) v = nrm(rng);
      Eigen::VectorXd xl(w);
      for (int a = 0; a < w; ++a) xl[a] = x[vars[a] - 1];
      const double f_ref = xl.dot(rep[i].rq.transpose() * rep[i].rq * xl) + rep[i].b.dot(xl);
      const double g_ref = 1.0 - rep[i].c.dot(xl) - xl.dot(rep[i].rb.transpose() * rep[i].rb * xl);
      EXPECT_NEAR(pop.f[i].eval(x), f_ref, 1e-9 * (1 + std::abs(f_ref)));
      EXPECT_NEAR(pop.g[i][0].eval(x), g_ref, 1e-9 * (1 + std::abs(g_ref)));
    }
  }
}

TEST(Generators, Deterministic) {
  EXPECT_EQ(emit_problem(gen_quartic(6, 3, 42)), emit_problem(gen_quartic(6, 3, 42)));
  EXPECT_NE(emit_problem(gen_quartic(6, 3, 42)), emit_problem(gen_quartic(6, 3, 43)));
  InstanceRng a(9), b(9);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Generators, ConvexObjectivesAndDegrees) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto q = gen_qcqp(6, 3, seed);
    const auto r = gen_quartic(4, 2, seed);
    for (int i = 0; i < r.m(); ++i) {
      EXPECT_EQ(r.f[i].degree(), 4);
      EXPECT_EQ(r.g[i][0].degree(), 4);
    }
    // Quadratic objectives: Hessian (constant) must be PSD.
    for (int i = 0; i < q.m(); ++i) {
      const auto& vars = q.pattern.blocks()[i];
      Eigen::MatrixXd hess(vars.size(), vars.size());
      for (std::size_t a = 0; a < vars.size(); ++a) {
        const auto da = q.f[i].derivative(vars[a]);
        for (std::size_t c = 0; c < vars.size(); ++c) {
          hess(a, c) = da.derivative(vars[c]).eval(std::vector<double>(6, 0.0));
        }
      }
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(Pipeline, OutcomesAndExitCodes) {
  SolveConfig cfg;
  cfg.certify = cfg.extract = true;
  cfg.k = 2;
  const auto tight = run_solve(oracle::example("two_sphere"), cfg);
  EXPECT_EQ(tight.outcome, Outcome::TightCertified);
  EXPECT_EQ(exit_code(tight.outcome), 0);
  EXPECT_EQ(tight.candidates.size(), 2u);
  EXPECT_EQ(tight.report["outcome"], "tight-certified");

  const auto box = run_solve(oracle::example("box_split"), cfg);
  EXPECT_EQ(box.outcome, Outcome::BoundOnly);
  EXPECT_EQ(exit_code(box.outcome), 2);
  EXPECT_TRUE(box.report["rip"]["holds"].get<bool>());

  cfg.k = 3;
  const auto ring = run_solve(oracle::example("ring_no_rip"), cfg);
  EXPECT_EQ(ring.outcome, Outcome::BoundOnly);
  EXPECT_EQ(ring.report["minimizers"]["stitch"]["status"], "refused");

  SparsePOP bad;
  bad.pattern = SparsityPattern(1, {{1}});
  bad.f = {Polynomial::variable(1, 1)};
  bad.h = {{}};
  bad.g = {{Polynomial::variable(1, 1) - Polynomial::constant(1, 1), Polynomial::variable(1, 1).scale(-1)}};
  cfg.k = 1;
  const auto inf = run_solve(bad, cfg);
  EXPECT_EQ(inf.outcome, Outcome::InfeasibilityCertified);
  EXPECT_EQ(exit_code(inf.outcome), 3);
  EXPECT_TRUE(inf.infeasibility.has_value());

  cfg.psd_cap = 5;
  const auto capped = run_solve(oracle::example("two_sphere"), cfg);
  EXPECT_EQ(capped.outcome, Outcome::Error);
  EXPECT_EQ(exit_code(capped.outcome), 1);
  EXPECT_EQ(capped.report["error"]["marker"], "oom-analog");
}

TEST(Pipeline, ReportsAreDeterministic) {
  SolveConfig cfg;
  cfg.certify = cfg.extract = true;
  cfg.k = 2;
  auto a = run_solve(oracle::example("four_minimizers"), cfg).report;
  auto b = run_solve(oracle::example("four_minimizers"), cfg).report;
  a.erase("timings");
  b.erase("timings");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Compare, SizesAndAgreement) {
  SolverOptions opts;
  const auto row = run_compare(gen_qcqp(20, 5, 1), 1, opts, true);
  EXPECT_EQ(row.sparse.sizes.max_side, 6u);
  EXPECT_EQ(row.dense.sizes.max_side, 21u);

  const auto small = run_compare(gen_qcqp(12, 5, 3), 1, opts, true);
  ASSERT_TRUE(small.sparse.bound && small.dense.bound);
  EXPECT_EQ(small.agreement, "agree");
  EXPECT_LE(small.relative_difference, 1e-5);

  const auto big = run_compare(gen_quartic(30, 3, 1), 2, opts, true);
  EXPECT_TRUE(big.dense.refused);
  EXPECT_FALSE(big.sparse.refused);
  EXPECT_EQ(compare_to_json(big)["dense"]["marker"], "oom-analog");
}

TEST(CertificateFile, RoundTripStillVerifies) {
  const auto pop = oracle::example("two_sphere");
  const auto rs = solve_relaxation(assemble(pop, 2, Model::SparsePutinar));
  const auto cert = *split_representation(rs, pop).certificate;
  const auto back = certificate_from_json(Json::parse(certificate_to_json(cert).dump()), pop.n());
  EXPECT_EQ(back.blocks.size(), cert.blocks.size());
  EXPECT_DOUBLE_EQ(back.gamma, cert.gamma);
  EXPECT_TRUE(verify_certificate(back, pop).valid);
  auto j = certificate_to_json(cert);
  j["blocks"][0]["sos"][0]["gram"][0] = j["blocks"][0]["sos"][0]["gram"][0].get<double>() + 1e-3;
  EXPECT_FALSE(verify_certificate(certificate_from_json(j, pop.n()), pop).valid);
  EXPECT_THROW(certificate_from_json(Json{{"kind", "other"}}, 3), FormatError);
}
