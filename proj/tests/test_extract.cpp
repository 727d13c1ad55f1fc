#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spop/extract.hpp"
#include "spop/linalg.hpp"
#include "spop/sdp.hpp"

using namespace spop;

namespace {

struct RandomMeasure {
  std::vector<int> vars;
  std::vector<Atom> atoms;
};

// Atoms in [-1,1]^|Δ| at pairwise distance >= 0.25 with weights >= 0.1 (normalized).
RandomMeasure random_measure(std::mt19937_64& rng, int t) {
  RandomMeasure m;
  const int dim = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int v = 1; v <= dim; ++v) m.vars.push_back(v);
  const int max_r = std::min<int>(4, static_cast<int>(binomial(dim + t - 1, t - 1)));
  const int r = std::uniform_int_distribution<int>(1, max_r)(rng);
  std::uniform_real_distribution<double> coord(-1.0, 1.0), w(0.1, 1.0);
  double total = 0.0;
  while (static_cast<int>(m.atoms.size()) < r) {
    Atom a;
    for (int j = 0; j < dim; ++j) a.point.push_back(coord(rng));
    bool far = true;
    for (const auto& b : m.atoms) {
      double d = 0.0;
      for (int j = 0; j < dim; ++j) d += (a.point[j] - b.point[j]) * (a.point[j] - b.point[j]);
      far = far && std::sqrt(d) >= 0.25;
    }
    if (!far) continue;
    a.weight = w(rng);
    total += a.weight;
    m.atoms.push_back(a);
  }
  for (auto& a : m.atoms) a.weight /= total;
  return m;
}

// Best matching error between two atom lists of equal size (brute force over permutations).
std::pair<double, double> match_error(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  std::vector<int> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::pair<double, double> best{1e300, 1e300};
  do {
    double pe = 0.0, we = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a[i].point.size(); ++j) {
        pe = std::max(pe, std::abs(a[i].point[j] - b[perm[i]].point[j]));
      }
      we = std::max(we, std::abs(a[i].weight - b[perm[i]].weight));
    }
    if (pe < best.first) best = {pe, we};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

AtomicMeasure measure(int block, std::vector<int> vars, std::vector<std::vector<double>> pts) {
  AtomicMeasure m;
  m.block = block;
  m.vars = std::move(vars);
  for (auto& p : pts) m.atoms.push_back({1.0 / 3.0, p});
  return m;
}

}  // namespace

TEST(Extract, RoundTripRandomAtomicMeasures) {
  std::mt19937_64 rng(1234);
  const int t = 3;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_measure(rng, t);
    const auto y = atomic_moments(m.vars, m.atoms, t);
    const MonomialBasis bt(m.vars, t);
    Eigen::MatrixXd mm(bt.size(), bt.size());
    const MonomialBasis b2t(m.vars, 2 * t);
    for (std::size_t r = 0; r < bt.size(); ++r) {
      for (std::size_t c = 0; c < bt.size(); ++c) mm(r, c) = y[*b2t.position(bt[r] + bt[c])];
    }
    const int rank = numeric_rank(mm);
    ASSERT_EQ(rank, static_cast<int>(m.atoms.size())) << "trial " << trial;
    const auto ex = extract_atoms(m.vars, y, t, rank);
    ASSERT_TRUE(ex.measure.has_value()) << "trial " << trial << ": " << ex.diagnostic;
    ASSERT_EQ(ex.measure->atoms.size(), m.atoms.size());
    const auto [pe, we] = match_error(m.atoms, ex.measure->atoms);
    EXPECT_LE(pe, 1e-6) << "trial " << trial;
    EXPECT_LE(we, 1e-6) << "trial " << trial;
    EXPECT_LE(ex.measure->reconstruction_error, 1e-8);
  }
}

TEST(Extract, RejectsNonAtomicData) {
  // Moments of the uniform measure on [-1,1] are not finitely atomic at rank 2.
  const std::vector<int> vars{1};
  Eigen::VectorXd y(5);
  y << 1.0, 0.0, 1.0 / 3.0, 0.0, 1.0 / 5.0;
  const auto ex = extract_atoms(vars, y, 2, 2);
  EXPECT_FALSE(ex.measure.has_value());
  EXPECT_FALSE(ex.diagnostic.empty());
}

TEST(Flat, PointMomentsAreFlatAtRankOne) {
  const auto pop = oracle::example("two_sphere");
  const UnionIndex idx(pop.pattern, 3);
  const std::vector<double> u{0.3, -0.2, 0.5};
  const auto fr = flat_truncation(pop, idx, point_moments(idx, u), 3);
  ASSERT_TRUE(fr.common_t.has_value());
  EXPECT_EQ(*fr.common_t, 1);
  for (int r : fr.ranks_at(*fr.common_t)) EXPECT_EQ(r, 1);
  ASSERT_EQ(fr.overlaps.size(), 1u);
  EXPECT_EQ(fr.overlaps[0].rank, 1);
}

TEST(Flat, ExampleTwoAtomsPerBlock) {
  const auto pop = oracle::example("two_sphere");
  const auto rs = solve_relaxation(assemble(pop, 2, Model::SparsePutinar));
  const auto fr = flat_truncation(pop, *rs.problem.index, rs.y, 2);
  ASSERT_TRUE(fr.common_t.has_value());
  EXPECT_EQ(fr.ranks_at(*fr.common_t), (std::vector<int>{2, 2}));
}

TEST(Flat, BoxExampleIsNotFlat) {
  const auto pop = oracle::example("box_split");
  const auto rs = solve_relaxation(assemble(pop, 2, Model::SparsePutinar));
  EXPECT_FALSE(flat_truncation(pop, *rs.problem.index, rs.y, 2).common_t.has_value());
}

TEST(Stitch, ChainOfMatchingAtoms) {
  const SparsityPattern p(3, {{1, 2}, {2, 3}});
  const std::vector<AtomicMeasure> ms{measure(0, {1, 2}, {{1, 2}, {3, 4}, {5, 6}}),
                                      measure(1, {2, 3}, {{6, 7}, {2, 8}, {4, 9}})};
  const auto st = stitch(ms, p, check_rip(p));
  ASSERT_EQ(st.status, StitchStatus::Stitched);
  ASSERT_EQ(st.points.size(), 3u);
  std::set<std::vector<double>> got(st.points.begin(), st.points.end());
  EXPECT_TRUE(got.count({1, 2, 8}));
  EXPECT_TRUE(got.count({3, 4, 9}));
  EXPECT_TRUE(got.count({5, 6, 7}));
}

TEST(Stitch, UnmatchedAtomIsUnstitchable) {
  const SparsityPattern p(3, {{1, 2}, {2, 3}});
  const std::vector<AtomicMeasure> ms{measure(0, {1, 2}, {{1, 2}, {3, 4}}), measure(1, {2, 3}, {{2, 0}, {5, 0}})};
  const auto st = stitch(ms, p, check_rip(p));
  EXPECT_EQ(st.status, StitchStatus::Unstitchable);
  EXPECT_TRUE(st.offending.has_value());
}

TEST(Stitch, RefusedWithoutRip) {
  const SparsityPattern p(3, {{1, 2}, {2, 3}, {1, 3}});
  const std::vector<AtomicMeasure> ms{measure(0, {1, 2}, {{1, 1}}), measure(1, {2, 3}, {{1, 1}}),
                                      measure(2, {1, 3}, {{1, 1}})};
  const auto st = stitch(ms, p, check_rip(p));
  EXPECT_EQ(st.status, StitchStatus::Refused);
  EXPECT_TRUE(st.points.empty());
  // The combination route still finds the consistent point.
  const auto pts = consistent_points(ms, p);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0], (std::vector<double>{1, 1, 1}));
}

TEST(Stitch, RefusedOnUnequalCounts) {
  const SparsityPattern p(3, {{1, 2}, {2, 3}});
  const std::vector<AtomicMeasure> ms{measure(0, {1, 2}, {{1, 2}, {-1, 2}}), measure(1, {2, 3}, {{2, 5}})};
  EXPECT_EQ(stitch(ms, p, check_rip(p)).status, StitchStatus::Refused);
  EXPECT_EQ(consistent_points(ms, p).size(), 2u);
}

TEST(Stitch, RingAtomsHaveNoConsistentPoint) {
  // Block atoms of the ring example: no x has all three projections in the sets.
  const SparsityPattern p(3, {{1, 2}, {2, 3}, {1, 3}});
  const std::vector<AtomicMeasure> ms{measure(0, {1, 2}, {{1, 1}, {2, 2}}), measure(1, {2, 3}, {{1, 2}, {2, 1}}),
                                      measure(2, {1, 3}, {{1, 1}, {2, 2}})};
  EXPECT_TRUE(consistent_points(ms, p).empty());
}

TEST(ValueCheck, Verdicts) {
  const auto pop = oracle::example("two_sphere");
  const double s = std::sqrt(0.5);
  const std::vector<double> xstar{s, -s, s};
  EXPECT_EQ(certify_by_value(xstar, pop, -4.0, 1e-6).verdict, Verdict::TightMinimizer);
  EXPECT_EQ(certify_by_value(std::vector<double>{0, 0, 0}, pop, -4.0, 1e-6).verdict, Verdict::NotTight);
  EXPECT_EQ(certify_by_value(std::vector<double>{2, 0, 0}, pop, -4.0, 1e-6).verdict, Verdict::InfeasiblePoint);
  EXPECT_TRUE(bounds_agree(-4.0, -4.0 + 1e-9, 1e-6));
  EXPECT_FALSE(bounds_agree(-4.1, -4.0, 1e-6));
}
