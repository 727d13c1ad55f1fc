#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spop/error.hpp"
#include "spop/sdp.hpp"

using namespace spop;

namespace {

// min cᵀx s.t. Ax = b, x >= 0 written as an SDP with 1x1 blocks.
StandardSdp diagonal_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  StandardSdp s;
  const int n = static_cast<int>(c.size());
  for (int j = 0; j < n; ++j) {
    s.sides.push_back(1);
    s.C.push_back(Eigen::MatrixXd::Constant(1, 1, c[j]));
    std::vector<BlockTerm> terms;
    for (int q = 0; q < a.rows(); ++q) {
      if (a(q, j) != 0.0) terms.push_back({q, {{0, 0, a(q, j)}}});
    }
    s.A.push_back(terms);
  }
  s.b = b;
  return s;
}

// Cheapest basic feasible solution by enumerating every column subset.
double lp_vertex_oracle(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const int m = static_cast<int>(a.rows()), n = static_cast<int>(a.cols());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != m) continue;
    Eigen::MatrixXd basis(m, m);
    std::vector<int> cols;
    for (int j = 0; j < n; ++j) {
      if (mask >> j & 1u) cols.push_back(j);
    }
    for (int i = 0; i < m; ++i) basis.col(i) = a.col(cols[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.rank() < m) continue;
    const Eigen::VectorXd xb = lu.solve(b);
    if (xb.minCoeff() < -1e-12) continue;
    double v = 0.0;
    for (int i = 0; i < m; ++i) v += c[cols[i]] * xb[i];
    best = std::min(best, v);
  }
  return best;
}

SparsePOP univariate(const Polynomial& f) {
  SparsePOP p;
  p.pattern = SparsityPattern(1, {{1}});
  p.f = {f};
  p.h = {{}};
  p.g = {{}};
  return p;
}

}  // namespace

TEST(Sdp, ScalarProblem) {
  // max z s.t. 1 - z >= 0, i.e. min x s.t. x = 1, x >= 0.
  StandardSdp s;
  s.sides = {1};
  s.C = {Eigen::MatrixXd::Ones(1, 1)};
  s.A = {{{0, {{0, 0, 1.0}}}}};
  s.b = Eigen::VectorXd::Ones(1);
  const auto sol = solve(s);
  EXPECT_EQ(sol.status, SdpStatus::Optimal);
  EXPECT_NEAR(sol.primal_objective, 1.0, 1e-7);
  EXPECT_NEAR(sol.dual_objective, 1.0, 1e-7);
}

TEST(Sdp, TwoByTwoCorrelation) {
  // min 2 X12 s.t. X11 = X22 = 1 → X12 = -1, value -2.
  StandardSdp s;
  s.sides = {2};
  Eigen::MatrixXd c(2, 2);
  c << 0, 1, 1, 0;
  s.C = {c};
  s.A = {{{0, {{0, 0, 1.0}}}, {1, {{1, 1, 1.0}}}}};
  s.b = Eigen::VectorXd::Ones(2);
  const auto sol = solve(s);
  ASSERT_TRUE(sol.solved());
  EXPECT_NEAR(sol.primal_objective, -2.0, 1e-7);
  EXPECT_NEAR(sol.X[0](0, 1), -1.0, 1e-4);
}

TEST(Sdp, RandomLinearProgramsMatchVertexEnumeration) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::normal_distribution<double> nrm;
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + trial % 3, n = 7;
    Eigen::MatrixXd a(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = nrm(rng);
    }
    Eigen::VectorXd x0(n), c(n);
    for (int j = 0; j < n; ++j) x0[j] = u(rng), c[j] = u(rng);  // c > 0 keeps the LP bounded
    const Eigen::VectorXd b = a * x0;
    const auto sol = solve(diagonal_lp(a, b, c));
    ASSERT_TRUE(sol.solved()) << "trial " << trial;
    const double ref = lp_vertex_oracle(a, b, c);
    EXPECT_NEAR(sol.primal_objective, ref, 1e-6 * (1 + std::abs(ref))) << "trial " << trial;
    EXPECT_NEAR(sol.dual_objective, ref, 1e-6 * (1 + std::abs(ref))) << "trial " << trial;
  }
}

TEST(Sdp, UnivariateQuarticIsExact) {
  // x⁴ − 3x² + x: minimize through the stationary points (cubic roots).
  const auto x = Polynomial::variable(1, 1);
  const auto f = x * x * x * x - (x * x).scale(3.0) + x;
  Eigen::Matrix3d companion;
  companion << 0, 0, -1.0 / 4.0, 1, 0, 6.0 / 4.0, 0, 1, 0;  // roots of 4x³ − 6x + 1
  const Eigen::VectorXcd roots = companion.eigenvalues();
  double ref = std::numeric_limits<double>::infinity();
  for (const auto& r : roots) ref = std::min(ref, f.eval(std::vector<double>{r.real()}));
  const auto rs = solve_relaxation(assemble(univariate(f), 2, Model::SparsePutinar));
  EXPECT_EQ(rs.solution.status, SdpStatus::Optimal);
  EXPECT_NEAR(rs.bound, ref, 1e-6);
  EXPECT_NEAR(rs.sos_bound, ref, 1e-6);
}

TEST(Sdp, MomentSideInfeasible) {
  const auto x = Polynomial::variable(1, 1);
  auto pop = univariate(x);
  pop.g = {{x - Polynomial::constant(1, 1.0), -x}};
  const auto rs = solve_relaxation(assemble(pop, 1, Model::SparsePutinar));
  EXPECT_EQ(rs.solution.status, SdpStatus::InfeasibleCertificate);
  EXPECT_TRUE(std::isinf(rs.bound) && rs.bound > 0);
}

TEST(Sdp, InconsistentEqualities) {
  const auto x = Polynomial::variable(1, 1);
  auto pop = univariate(x * x);
  pop.h = {{x, x - Polynomial::constant(1, 1.0)}};
  const auto prob = assemble(pop, 1, Model::SparsePutinar);
  EXPECT_TRUE(to_standard(prob, 2000).inconsistent);
  const auto rs = solve_relaxation(prob);
  EXPECT_EQ(rs.solution.status, SdpStatus::InfeasibleCertificate);
}

TEST(Sdp, MomentSideUnbounded) {
  const auto rs = solve_relaxation(assemble(univariate(Polynomial::variable(1, 1)), 1, Model::SparsePutinar));
  EXPECT_EQ(rs.solution.status, SdpStatus::UnboundedCertificate);
}

TEST(Sdp, RedundantRowsDropped) {
  const auto x = Polynomial::variable(1, 1);
  auto pop = univariate(x);
  pop.h = {{x * x - x, (x * x - x).scale(2.0)}};
  const auto st = to_standard(assemble(pop, 2, Model::SparsePutinar), 2000);
  EXPECT_FALSE(st.inconsistent);
  EXPECT_GT(st.dropped_rows, 0);
  const auto rs = solve_relaxation(assemble(pop, 2, Model::SparsePutinar));
  EXPECT_NEAR(rs.bound, 0.0, 1e-6);
}

TEST(Sdp, CapRefusesLargeProblems) {
  const auto pop = gen_qcqp(20, 20, 1);
  EXPECT_THROW(to_standard(assemble(pop, 2, Model::SparsePutinar), 2000), CapError);
}

TEST(Sdp, EnvironmentCap) {
  setenv("SPOP_PSD_CAP", "123", 1);
  EXPECT_EQ(SolverOptions::from_env().psd_cap, 123);
  setenv("SPOP_PSD_CAP", "junk", 1);
  EXPECT_EQ(SolverOptions::from_env().psd_cap, 2000);
  unsetenv("SPOP_PSD_CAP");
}

TEST(Sdp, StandardFormReproducesMoments) {
  // y = y_p + N z must satisfy every equality row for any z.
  const auto pop = oracle::example("four_minimizers");
  const auto prob = assemble(pop, 2, Model::SparsePutinar);
  const auto st = to_standard(prob, 2000);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nrm;
  Eigen::VectorXd z(st.num_constraints());
  for (auto& v : z) v = nrm(rng);
  const auto y = st.moments(z);
  EXPECT_NEAR(y[0], 1.0, 1e-12);
  for (const auto& r : prob.equalities) EXPECT_NEAR(r.form.eval(y), 0.0, 1e-9);
}

TEST(Sdp, DualityGapClosesOnExamples) {
  for (const auto& [name, k] : std::vector<std::pair<std::string, int>>{{"two_sphere", 2}, {"four_minimizers", 2}, {"box_split", 2}}) {
    const auto rs = solve_relaxation(assemble(oracle::example(name), k, Model::SparsePutinar));
    ASSERT_TRUE(rs.solution.solved()) << name;
    EXPECT_NEAR(rs.bound, rs.sos_bound, 1e-6 * (1 + std::abs(rs.bound))) << name;
    EXPECT_LE(rs.solution.primal_residual, 1e-7) << name;
    EXPECT_LE(rs.solution.dual_residual, 1e-7) << name;
  }
}
