#include <gtest/gtest.h>

#include <random>

#include "dro/flp.hpp"
#include "dro/pricing.hpp"
#include "fl_fixtures.hpp"
#include "toy_problems.hpp"

namespace dro {
namespace {

using testing::linear_toy;
using testing::scalar_moment;

TEST(PspMoment, ToyPicksUpperEndpoint) {
  const TwoStageProblem p = linear_toy(BoxSpace{{0.0}, {1.0}}, scalar_moment(0.3), {10.0});
  TargetEvaluator ev(p, {0.0}, Target::kOptimality, {});
  const std::vector<double> zero{0.0};
  const PricingResult a = psp_solve(ev, Matrix::from_rows({{1.0}}), 0.0, zero);
  ASSERT_TRUE(a.found);
  EXPECT_EQ(a.scenario.values, std::vector<double>{1.0});
  EXPECT_NEAR(a.reduced_cost, 10.0, 1e-9);
  const std::vector<double> ten{10.0};
  const PricingResult b = psp_solve(ev, Matrix::from_rows({{1.0}}), 0.0, ten);
  EXPECT_NEAR(b.reduced_cost, 0.0, 1e-9);
}

TEST(PspMoment, RejectsNegativeShadowPrice) {
  const TwoStageProblem p = linear_toy(BoxSpace{{0.0}, {1.0}}, scalar_moment(0.3), {10.0});
  TargetEvaluator ev(p, {0.0}, Target::kOptimality, {});
  const std::vector<double> neg{-1.0};
  EXPECT_THROW(psp_solve(ev, Matrix::from_rows({{1.0}}), 0.0, neg), Error);
}

TEST(PspWasserstein, TransportPriceDecidesMove) {
  const WassersteinAmbiguity w{{Scenario{{0.2}}}, {1.0}, 0.3, WassersteinNorm::kL1};
  const TwoStageProblem p = linear_toy(BoxSpace{{0.0}, {1.0}}, w, {10.0});
  TargetEvaluator ev(p, {0.0}, Target::kOptimality, {});
  // Stay at 0.2 is worth 2 - α; moving to 1 costs 0.8 β and gains 8.
  const PricingResult stay = psp_wasserstein_solve(ev, w, 0, 2.0, 10.0);
  EXPECT_NEAR(stay.reduced_cost, 0.0, 1e-9);
  const PricingResult move = psp_wasserstein_solve(ev, w, 0, 2.0, 5.0);
  EXPECT_NEAR(move.reduced_cost, 4.0, 1e-9);
  EXPECT_NEAR(move.scenario.values[0], 1.0, 1e-9);
}

TEST(PspFeasibility, AllFeasibleDecisionPricesNonPositive) {
  for (int seed = 1; seed <= 5; ++seed) {
    FlSpec spec = parse_generator_spec("fl:d,cap,moment,n=4");
    spec.seed = seed;
    const TwoStageProblem p = encode(generate_instance(spec));
    std::vector<double> x(p.first.size(), 0.0);
    for (int j = 0; j < 4; ++j) x[j] = 1.0;
    TargetEvaluator ev(p, x, Target::kFeasibility, {});
    bool all_ok = true;
    for (const auto& s : enumerate_space(p.space, 1u << 16)) all_ok = all_ok && ev.value(s) <= 1e-9;
    if (!all_ok) continue;
    const auto& m = std::get<MomentAmbiguity>(p.ambiguity);
    const std::vector<double> zero(m.gamma.size(), 0.0);
    EXPECT_LE(psp_solve(ev, m.psi, 0.0, zero).reduced_cost, 1e-9);
  }
}

// Problem-based pricing agrees with enumeration over box vertices, for both targets.
TEST(PspProperties, MatchesVertexEnumeration) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    FlSpec spec = parse_generator_spec(trial % 3 == 0 ? "fl:d,cap,moment,n=4" : "fl:u,cap,moment,n=4");
    spec.seed = trial + 1;
    FlInstance inst = generate_instance(spec);
    for (double& f : inst.capacity) f *= 0.5 + 0.5 * u(rng);
    const TwoStageProblem p = encode(inst);
    std::vector<double> x(p.first.size(), 0.0);
    x[trial % 4] = 1.0;
    x[(trial + 2) % 4] = 1.0;
    const auto& m = std::get<MomentAmbiguity>(p.ambiguity);
    std::vector<double> beta(m.gamma.size());
    for (double& b : beta) b = std::round(30.0 * u(rng));
    const double alpha = std::round(100.0 * u(rng));
    for (Target t : {Target::kOptimality, Target::kFeasibility}) {
      TargetEvaluator ev(p, x, t, {});
      const PricingResult pr = psp_solve(ev, m.psi, alpha, beta);
      double best = -kInf;
      for (const auto& s : enumerate_space(p.space, 1u << 16)) {
        const auto ps = m.psi.multiply(s.values);
        double rc = ev.value(s) - alpha;
        for (std::size_t r = 0; r < beta.size(); ++r) rc -= beta[r] * ps[r];
        best = std::max(best, rc);
      }
      EXPECT_NEAR(pr.reduced_cost, best, 1e-6 * (1.0 + std::abs(best))) << "trial " << trial;
      // The returned scenario is a vertex of the space.
      EXPECT_TRUE(space_contains(p.space, pr.scenario, 1e-9));
      if (const auto* box = std::get_if<BoxSpace>(&p.space)) {
        for (std::size_t k = 0; k < box->lower.size(); ++k) {
          const double v = pr.scenario.values[k];
          EXPECT_TRUE(std::abs(v - box->lower[k]) < 1e-9 || std::abs(v - box->upper[k]) < 1e-9);
        }
      }
      ++checked;
    }
  }
  EXPECT_EQ(checked, 80);
}

TEST(LinearMinimizer, BoxAndCardinality) {
  const Scenario a = linear_minimizer(BoxSpace{{0, 0}, {1, 2}}, std::vector<double>{1.0, -1.0});
  EXPECT_EQ(a.values, (std::vector<double>{0.0, 2.0}));
  const Scenario b = linear_minimizer(BinaryCardinalitySpace{4, 2}, std::vector<double>{-1.0, -3.0, 0.5, -2.0});
  EXPECT_EQ(b.values, (std::vector<double>{0.0, 1.0, 0.0, 1.0}));
}

TEST(TargetEvaluator, PenaltyCoversPlainRecourse) {
  const TwoStageProblem p = testing::two_client_problem({5.0, 5.0}, {3.0, 1.0}, Matrix::from_rows({{0.0, 2.0}, {2.0, 0.0}}));
  TargetEvaluator ev(p, testing::open_facilities(p, {0}), Target::kOptimality, {});
  EXPECT_GT(ev.penalty(), 0.0);
  const Scenario s{{3.0, 1.0}};
  EXPECT_NEAR(ev.value(s), 2.0, 1e-9);
  EXPECT_NEAR(ev.plain(s).value, 2.0, 1e-9);
}

}  // namespace
}  // namespace dro
