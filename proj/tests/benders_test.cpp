#include <gtest/gtest.h>

#include <random>

#include "dro/benders.hpp"
#include "dro_oracle.hpp"
#include "fl_fixtures.hpp"
#include "toy_problems.hpp"

namespace dro {
namespace {

using testing::generated;
using testing::linear_toy;
using testing::scalar_moment;

CcgOptions exact() {
  CcgOptions o;
  o.wcev.tol.outer_tol = 1e-9;
  return o;
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-6 * (1.0 + std::abs(b)); }

TEST(BendersDro, ScalarToy) {
  const TwoStageProblem p = linear_toy(BoxSpace{{0.0}, {1.0}}, scalar_moment(0.3), {10.0});
  for (BendersMode mode : {BendersMode::kDro, BendersMode::kBasic}) {
    const BendersResult r = solve_benders(p, mode, exact());
    EXPECT_EQ(r.status, SolveStatus::kOptimal);
    EXPECT_NEAR(r.objective, 3.0, 1e-9);
    EXPECT_EQ(r.cuts, r.cut_list.size());
  }
}

// One scenario: plain Benders on a transportation recourse.
TEST(BendersDro, DeterministicTransportation) {
  FlSpec spec = parse_generator_spec("fl:d,uncap,moment,n=4,seed=5");
  FlInstance inst = generate_instance(spec);
  inst.demand_lower = inst.demand_upper = inst.moment_bound = inst.demand;
  const TwoStageProblem p = encode(inst);
  const testing::DroTruth truth = testing::enumerate_dro(p, enumerate_space(p.space, 1u << 10));
  for (BendersMode mode : {BendersMode::kDro, BendersMode::kBasic}) {
    const BendersResult r = solve_benders(p, mode, exact());
    ASSERT_EQ(r.status, SolveStatus::kOptimal);
    EXPECT_TRUE(near(r.objective, truth.objective)) << r.objective << " vs " << truth.objective;
    // Each cut is a distinct dual vertex at the single scenario.
    EXPECT_LE(r.state.t, static_cast<int>(r.cuts) + 1);
  }
}

TEST(BendersDro, CutsAreValidAtRandomProbes) {
  std::mt19937_64 rng(3);
  for (const char* g : {"fl:d,uncap,moment,n=5", "fl:u,cap,moment,n=4,k=1"}) {
    const TwoStageProblem p = generated(g, 2, 1.3);
    const BendersResult r = solve_benders(p, BendersMode::kDro, exact());
    ASSERT_FALSE(r.cut_list.empty());
    const int n = static_cast<int>(p.first.binaries.size());
    RecourseEvaluator rev(p, Tolerances{});
    for (int probe = 0; probe < 20; ++probe) {
      std::vector<double> x(p.first.size(), 0.0);
      for (int j = 0; j < n; ++j) x[j] = std::uniform_int_distribution<int>(0, 1)(rng);
      const BendersCut& cut = r.cut_list[std::uniform_int_distribution<std::size_t>(0, r.cut_list.size() - 1)(rng)];
      EXPECT_NO_THROW(check_cut(p, cut));
      const Scenario& s = cut.scenario;
      if (cut.kind == CutKind::kOptimality) {
        const RecourseValue q = rev.evaluate(x, s, RecourseMode::kPlain);
        if (q.feasible) {
          EXPECT_LE(cut.value(p, x), q.value + 1e-6 * (1.0 + q.value)) << g;
        }
      } else {
        const RecourseValue q = rev.evaluate(x, s, RecourseMode::kFeasibility);
        EXPECT_LE(cut.value(p, x), q.value + 1e-6) << g;
      }
    }
  }
}

class BendersAgreement : public ::testing::TestWithParam<const char*> {};

TEST_P(BendersAgreement, MatchesEnumeration) {
  for (double factor : {0.8, 1.3}) {
    for (int seed = 1; seed <= 2; ++seed) {
      const TwoStageProblem p = generated(GetParam(), seed, factor);
      const testing::DroTruth truth = testing::enumerate_dro(p, enumerate_space(p.space, 1u << 10));
      const BendersResult r = solve_benders(p, BendersMode::kDro, exact());
      if (!truth.feasible) {
        EXPECT_EQ(r.status, SolveStatus::kDroInfeasible);
        continue;
      }
      ASSERT_EQ(r.status, SolveStatus::kOptimal) << "factor " << factor << " seed " << seed;
      EXPECT_TRUE(near(r.objective, truth.objective)) << r.objective << " vs " << truth.objective;
      for (std::size_t t = 1; t < r.state.trace.size(); ++t) {
        EXPECT_GE(r.state.trace[t].lb, r.state.trace[t - 1].lb);
        EXPECT_LE(r.state.trace[t].ub, r.state.trace[t - 1].ub);
        EXPECT_GE(r.state.trace[t].cuts, r.state.trace[t - 1].cuts);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Generated, BendersAgreement,
                         ::testing::Values("fl:u,cap,moment,n=4,k=1", "fl:u,cap,wass,n=4,k=1",
                                           "fl:u,cap,mip,n=4,k=1", "fl:d,cap,moment,n=3"));

TEST(BendersDro, AgreesWithCcgAndNeedsFewerIterationsThanBasic) {
  for (const char* g : {"fl:d,uncap,moment,n=5", "fl:u,uncap,moment,n=5", "fl:d,uncap,wass,n=5"}) {
    for (int seed = 1; seed <= 2; ++seed) {
      const TwoStageProblem p = generated(g, seed);
      const SolveResult c = solve_ccg_dro(p);
      const BendersResult d = solve_benders(p, BendersMode::kDro);
      const BendersResult b = solve_benders(p, BendersMode::kBasic);
      ASSERT_EQ(c.status, SolveStatus::kOptimal);
      ASSERT_EQ(d.status, SolveStatus::kOptimal);
      ASSERT_EQ(b.status, SolveStatus::kOptimal);
      const double tol = 2 * 0.005 * std::abs(c.objective);
      EXPECT_LE(std::abs(d.objective - c.objective), tol) << g << " seed " << seed;
      EXPECT_LE(std::abs(b.objective - c.objective), tol) << g << " seed " << seed;
      EXPECT_LE(d.state.t, b.state.t) << g << " seed " << seed;
    }
  }
}

TEST(BendersDro, DuplicateDualsAreSkipped) {
  detail::CutStore store(1e-7);
  const Scenario s{{1.0}};
  EXPECT_TRUE(store.add({s, {10.0}, CutKind::kOptimality}));
  EXPECT_FALSE(store.add({s, {10.0 + 1e-12}, CutKind::kOptimality}));
  EXPECT_TRUE(store.add({s, {5.0}, CutKind::kOptimality}));
  EXPECT_TRUE(store.add({s, {1.0}, CutKind::kFeasibility}));
  EXPECT_EQ(store.all().size(), 3u);
  EXPECT_EQ(store.optimality_cuts()[0].size(), 2u);
}

TEST(BendersDro, RejectsDualInfeasibleCut) {
  const TwoStageProblem p = linear_toy(BoxSpace{{0.0}, {1.0}}, scalar_moment(0.3), {10.0});
  EXPECT_THROW(check_cut(p, {Scenario{{1.0}}, {11.0}, CutKind::kOptimality}), Error);
  EXPECT_THROW(check_cut(p, {Scenario{{1.0}}, {-1.0}, CutKind::kOptimality}), Error);
  EXPECT_THROW(check_cut(p, {Scenario{{1.0}}, {2.0}, CutKind::kFeasibility}), Error);
}

TEST(BasicBenders, RejectsUnsupportedProblems) {
  EXPECT_THROW(solve_benders(generated("fl:d,cap,moment,n=4", 1), BendersMode::kBasic), Error);
  EXPECT_THROW(solve_benders(generated("fl:u,uncap,mip,n=4,k=1", 1), BendersMode::kBasic), Error);
}

}  // namespace
}  // namespace dro
