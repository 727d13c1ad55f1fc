#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spop/certify.hpp"
#include "spop/extract.hpp"

using namespace spop;

namespace {

struct Solved {
  SparsePOP pop;
  RelaxationSolve rs;
};

Solved solved(const std::string& name, int k, Model model = Model::SparsePutinar) {
  auto pop = oracle::example(name);
  auto rs = solve_relaxation(assemble(pop, k, model));
  return {std::move(pop), std::move(rs)};
}

double sum_identity_error(const TightnessCertificate& c, int n) {
  Polynomial s = Polynomial::constant(n, c.gamma);
  for (const auto& p : c.p) s = s + p;
  return s.max_abs_coefficient();
}

Polynomial X(int n, int v) { return Polynomial::variable(n, v); }
Polynomial C(int n, double c) { return Polynomial::constant(n, c); }

}  // namespace

TEST(Certificate, TightExamplesVerify) {
  const double s = std::sqrt(0.5);
  const std::vector<std::tuple<std::string, int, std::vector<std::vector<double>>>> cases{
      {"two_sphere", 2, {{s, -s, s}, {-s, s, -s}}},
      {"four_minimizers", 2, {{0, 0, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 0}, {1, 1, 0, 1}}},
      {"unequal_ranks", 3, {}},
      {"cyclic_cover", 3, {}}};
  for (const auto& [name, k, points] : cases) {
    const auto sv = solved(name, k);
    const auto split = split_representation(sv.rs, sv.pop);
    ASSERT_TRUE(split.certificate.has_value()) << name << ": " << split.diagnostic;
    const auto& cert = *split.certificate;
    EXPECT_NEAR(cert.gamma, sv.rs.bound, 1e-5 * (1 + std::abs(sv.rs.bound))) << name;
    EXPECT_LE(sum_identity_error(cert, sv.pop.n()), 1e-5) << name;
    const auto v = verify_certificate(cert, sv.pop, points);
    EXPECT_TRUE(v.valid) << name;
    EXPECT_LE(v.identity_residual, 1e-5) << name;
    for (double r : v.membership_residual) EXPECT_LE(r, 1e-5) << name;
    if (!points.empty()) {
      EXPECT_EQ(v.kind, "tightness") << name;
      EXPECT_TRUE(v.achievable.value_or(false)) << name;
    }
  }
}

TEST(Certificate, GramMutationIsRejected) {
  std::mt19937_64 rng(99);
  for (const auto& [name, k] : std::vector<std::pair<std::string, int>>{{"two_sphere", 2}, {"four_minimizers", 2}, {"cyclic_cover", 3}}) {
    const auto sv = solved(name, k);
    const auto cert = *split_representation(sv.rs, sv.pop).certificate;
    ASSERT_TRUE(verify_certificate(cert, sv.pop).valid);
    for (int trial = 0; trial < 10; ++trial) {
      auto bad = cert;
      auto& blk = bad.blocks[std::uniform_int_distribution<std::size_t>(0, bad.blocks.size() - 1)(rng)];
      auto& term = blk.sos[std::uniform_int_distribution<std::size_t>(0, blk.sos.size() - 1)(rng)];
      const auto side = term.gram.rows();
      const auto r = std::uniform_int_distribution<Eigen::Index>(0, side - 1)(rng);
      const auto c = std::uniform_int_distribution<Eigen::Index>(0, side - 1)(rng);
      term.gram(r, c) += 1e-3;
      if (r != c) term.gram(c, r) += 1e-3;
      const auto v = verify_certificate(bad, sv.pop);
      EXPECT_FALSE(v.valid) << name << " trial " << trial << " entry " << r << "," << c;
      EXPECT_FALSE(v.problems.empty());
    }
  }
}

TEST(Certificate, InadmissibleGeneratorRejected) {
  const auto sv = solved("two_sphere", 2);
  auto cert = *split_representation(sv.rs, sv.pop).certificate;
  for (auto& t : cert.blocks[0].sos) {
    if (t.generator.degree() > 0) t.generator = X(3, 1);
  }
  EXPECT_FALSE(verify_certificate(cert, sv.pop).valid);
}

TEST(Certificate, SupportOutsideBlockRejected) {
  const auto sv = solved("two_sphere", 2);
  auto cert = *split_representation(sv.rs, sv.pop).certificate;
  cert.blocks[0].sos[0].vars = {1, 3};
  EXPECT_FALSE(verify_certificate(cert, sv.pop).valid);
}

TEST(Certificate, EpsilonKnob) {
  const auto sv = solved("two_sphere", 2);
  const auto split = split_representation(sv.rs, sv.pop, std::nullopt, 1e-4);
  ASSERT_TRUE(split.certificate.has_value());
  EXPECT_DOUBLE_EQ(split.certificate->epsilon, 1e-4);
  const auto v = verify_certificate(*split.certificate, sv.pop);
  EXPECT_TRUE(v.valid);
  EXPECT_EQ(v.kind, "epsilon");
  // ε buys room above the recovered value: γ = γ_hat + mε is still certifiable.
  const auto up = split_representation(sv.rs, sv.pop, split.gamma_hat + 2e-4, 1e-4);
  ASSERT_TRUE(up.certificate.has_value()) << up.diagnostic;
  EXPECT_TRUE(verify_certificate(*up.certificate, sv.pop).valid);
}

TEST(Certificate, TargetAboveRecoveredValueRefused) {
  const auto sv = solved("two_sphere", 2);
  const auto split = split_representation(sv.rs, sv.pop, -3.99);
  EXPECT_FALSE(split.certificate.has_value());
  EXPECT_FALSE(split.diagnostic.empty());
}

TEST(Certificate, BoxExampleSparseCannotReachMinimum) {
  // The sparse relaxation stays below f_min = 1, so γ = 1 has no certificate.
  for (int k = 2; k <= 3; ++k) {
    const auto sv = solved("box_split", k);
    EXPECT_LT(sv.rs.bound, 1.0 - 1e-3);
    EXPECT_FALSE(split_representation(sv.rs, sv.pop, 1.0).certificate.has_value()) << "k=" << k;
    const auto lower = split_representation(sv.rs, sv.pop);
    ASSERT_TRUE(lower.certificate.has_value());
    const auto v = verify_certificate(*lower.certificate, sv.pop);
    EXPECT_TRUE(v.valid);
    EXPECT_EQ(v.kind, "lower-bound");
  }
}

TEST(Certificate, DenseModelCertificate) {
  const auto sv = solved("box_split", 2, Model::DensePutinar);
  EXPECT_NEAR(sv.rs.bound, 1.0, 1e-6);
  const auto split = split_representation(sv.rs, sv.pop);
  ASSERT_TRUE(split.certificate.has_value());
  const auto v = verify_certificate(*split.certificate, sv.pop, {{0.0, 0.0, 1.0}});
  EXPECT_TRUE(v.valid);
  EXPECT_EQ(v.kind, "tightness");
}

TEST(Membership, SimpleCases) {
  const std::vector<int> vars{1};
  const auto x = X(1, 1);
  const auto sq = (x - C(1, 1)) * (x - C(1, 1));
  const auto m = check_membership(sq, vars, {}, {}, 1);
  EXPECT_EQ(m.verdict, Membership::Member);
  EXPECT_LE(m.residual, 1e-6);
  EXPECT_LE((m.representation.expand(1) - sq).max_abs_coefficient(), 1e-6);
  EXPECT_EQ(check_membership(C(1, -1), vars, {}, {}, 1).verdict, Membership::NotMember);
  const auto lin = check_membership(x, vars, {}, {}, 1);
  EXPECT_EQ(lin.verdict, Membership::NotMember);
  // x ∈ QM[x] trivially.
  EXPECT_EQ(check_membership(x, vars, {}, {x}, 1).verdict, Membership::Member);
  // x² − 1 lies in the ideal of x² − 1.
  EXPECT_EQ(check_membership(x * x - C(1, 1), vars, {x * x - C(1, 1)}, {}, 1).verdict, Membership::Member);
}

TEST(Membership, BoxExampleDenseOrderTwo) {
  const auto pop = oracle::example("box_split");
  const auto g = dense_version(pop).g[0];
  const auto m = check_membership(pop.objective() - C(3, 1.0), {1, 2, 3}, {}, g, 2);
  EXPECT_EQ(m.verdict, Membership::Member) << m.diagnostic;
  EXPECT_LE(m.residual, 1e-5);
}

TEST(Membership, MonotoneInOrder) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nrm;
  int accepted = 0;
  for (int trial = 0; trial < 8; ++trial) {
    // q = Σ (random affine)² + c·(1 − x1² − x2²) + s, c, s > 0.
    const int n = 2;
    Polynomial q = C(n, 0.1 + std::abs(nrm(rng)));
    for (int j = 0; j < 3; ++j) {
      const auto l = C(n, nrm(rng)) + X(n, 1).scale(nrm(rng)) + X(n, 2).scale(nrm(rng));
      q = q + l * l;
    }
    const auto g = C(n, 1) - X(n, 1) * X(n, 1) - X(n, 2) * X(n, 2);
    q = q + g.scale(std::abs(nrm(rng)));
    const auto m1 = check_membership(q, {1, 2}, {}, {g}, 1);
    if (m1.verdict != Membership::Member) continue;
    ++accepted;
    EXPECT_EQ(check_membership(q, {1, 2}, {}, {g}, 2).verdict, Membership::Member) << "trial " << trial;
  }
  EXPECT_GE(accepted, 6);
}

TEST(Infeasibility, ContradictoryInequalities) {
  SparsePOP pop;
  pop.pattern = SparsityPattern(1, {{1}});
  pop.f = {X(1, 1)};
  pop.h = {{}};
  pop.g = {{X(1, 1) - C(1, 1), -X(1, 1)}};
  const auto res = sparse_infeasibility(pop, 1);
  ASSERT_EQ(res.status, InfeasibilityStatus::Found) << res.diagnostic;
  const auto v = verify_infeasibility(*res.certificate, pop);
  EXPECT_TRUE(v.valid);
  auto bad = *res.certificate;
  bad.blocks[0].sos[0].gram(0, 0) += 1e-3;
  EXPECT_FALSE(verify_infeasibility(bad, pop).valid);
}

TEST(Infeasibility, ConflictAcrossBlocks) {
  // x1 = 0 in one block and x1 = 1 in another: each block alone is feasible.
  SparsePOP pop;
  pop.pattern = SparsityPattern(2, {{1, 2}, {1}});
  pop.f = {X(2, 2), Polynomial(2)};
  pop.h = {{X(2, 1)}, {X(2, 1) - C(2, 1)}};
  pop.g = {{}, {}};
  const auto res = sparse_infeasibility(pop, 1);
  ASSERT_EQ(res.status, InfeasibilityStatus::Found) << res.diagnostic;
  EXPECT_TRUE(verify_infeasibility(*res.certificate, pop).valid);
}

TEST(Infeasibility, FeasibleProblemHasNone) {
  const auto pop = oracle::example("two_sphere");
  EXPECT_EQ(sparse_infeasibility(pop, 1).status, InfeasibilityStatus::NotFound);
}

TEST(Certificate, BoxExampleSparseValueMatchesApproximationError) {
  // With x2 the only shared variable the sparse value is 1 − 2·E_2k, where E_n
  // is the best uniform error of degree-n polynomials for 1/(1+t²) on [−1,1],
  // E_n = (√2 − 1)^n / 4.
  const auto pop = oracle::example("box_split");
  for (int k = 2; k <= 4; ++k) {
    const double predicted = 1.0 - std::pow(3.0 - 2.0 * std::sqrt(2.0), k) / 2.0;
    EXPECT_NEAR(solve_relaxation(assemble(pop, k, Model::SparsePutinar)).bound, predicted, 1e-6) << "k=" << k;
  }
}
