#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dro/io.hpp"
#include "fl_fixtures.hpp"
#include "toy_problems.hpp"

namespace dro {
namespace {

// Equality of the solver-visible data; exact because doubles print with 17 digits.
void expect_same_problem(const TwoStageProblem& a, const TwoStageProblem& b) {
  EXPECT_EQ(problem_to_json(a).dump(), problem_to_json(b).dump());
  EXPECT_EQ(a.first.cost, b.first.cost);
  EXPECT_EQ(a.first.binaries, b.first.binaries);
  EXPECT_EQ(a.recourse.rhs, b.recourse.rhs);
  EXPECT_EQ(a.space.index(), b.space.index());
  EXPECT_EQ(a.ambiguity.index(), b.ambiguity.index());
}

TEST(ProblemJson, RoundTripsEveryAmbiguityKind) {
  for (const char* g : {"fl:d,cap,moment,n=4", "fl:u,uncap,wass,n=4", "fl:d,uncap,wass_l2,n=3", "fl:u,cap,mip,n=4,k=1"}) {
    const TwoStageProblem p = testing::generated(g, 3);
    const Json j = Json::parse(problem_to_json(p).dump(2));
    const InstanceFile back = instance_from_json(j);
    EXPECT_FALSE(back.facility_location.has_value());
    expect_same_problem(p, back.problem);
  }
}

TEST(ProblemJson, UnboundedFirstStageUsesNull) {
  TwoStageProblem p = testing::linear_toy(BoxSpace{{0.0}, {1.0}}, testing::scalar_moment(0.3), {10.0});
  p.first.upper.assign(p.first.size(), kInf);
  const Json j = problem_to_json(p);
  EXPECT_TRUE(j["first_stage"]["upper"][0].is_null());
  EXPECT_EQ(instance_from_json(j).problem.first.upper[0], kInf);
}

TEST(FacilityJson, RoundTripReproducesTheEncoding) {
  FlSpec spec = parse_generator_spec("fl:u,cap,moment,n=5,k=1");
  spec.seed = 7;
  const FlInstance inst = generate_instance(spec);
  const InstanceFile back = instance_from_json(Json::parse(fl_to_json(inst).dump()));
  ASSERT_TRUE(back.facility_location.has_value());
  EXPECT_EQ(back.facility_location->spec.seed, 7u);
  EXPECT_EQ(back.facility_location->demand, inst.demand);
  expect_same_problem(encode(inst), back.problem);
}

TEST(InstanceJson, DiagnosticsNameTheField) {
  const FlInstance inst = generate_instance(parse_generator_spec("fl:d,uncap,moment,n=3"));
  Json j = fl_to_json(inst);
  j["demand"][2] = "many";
  try {
    instance_from_json(j);
    FAIL() << "accepted a string demand";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find("demand[2]"), std::string::npos) << e.what();
  }
  Json k = fl_to_json(inst);
  k["schema"] = 2;
  EXPECT_THROW(instance_from_json(k), Error);
  Json m = problem_to_json(encode(inst));
  m["ambiguity"]["type"] = "chebyshev";
  try {
    instance_from_json(m);
    FAIL() << "accepted an unknown ambiguity type";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ambiguity"), std::string::npos) << e.what();
  }
}

TEST(InstanceJson, MalformedTextReportsTheOffset) {
  try {
    parse_json_text("{\"schema\": 1,, }", "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(ResultJson, ReloadedSolutionReproducesTheUpperBound) {
  for (const char* g : {"fl:d,cap,moment,n=5", "fl:u,uncap,wass,n=5", "fl:u,cap,moment,n=5,k=1"}) {
    const TwoStageProblem p = testing::generated(g, 2, 1.1);
    const SolveResult r = solve_ccg_dro(p);
    ASSERT_EQ(r.status, SolveStatus::kOptimal) << g;
    const Json j = Json::parse(result_to_json(p, r, {"ccg-dro", "cg", g, 5e-3, false, 0.0}).dump(2));
    EXPECT_TRUE(j["wall_time_s"].is_null());
    EXPECT_EQ(j["status"], "optimal");
    const std::vector<double> x = j["x"].get<std::vector<double>>();
    const Tolerances tol;
    TargetEvaluator evf(p, x, Target::kFeasibility, tol);
    EXPECT_LE(compute_wcev(evf, {}, {}).value, detail::feasibility_threshold(p, tol)) << g;
    TargetEvaluator evo(p, x, Target::kOptimality, tol);
    const double ub = p.first_stage_cost(x) + compute_wcev(evo, {}, {}).value;
    const double reported = j["ub"].get<double>();
    EXPECT_LE(std::abs(ub - reported), 1e-6 * std::max(1.0, std::abs(reported))) << g << ": " << ub << " vs " << reported;
    std::vector<int> open;
    for (int b : p.first.binaries) {
      if (x[b] > 0.5) open.push_back(b);
    }
    EXPECT_EQ(j["open_facilities"].get<std::vector<int>>(), open);
  }
}

TEST(TraceCsv, ShapeAndOptionalTiming) {
  const SolveResult r = solve_ccg_dro(testing::generated("fl:d,uncap,moment,n=4", 1));
  const std::string plain = trace_csv(r.state.trace, false);
  const std::string timed = trace_csv(r.state.trace, true);
  EXPECT_EQ(plain.substr(0, plain.find('\n')), "t,lb,ub,gap,eta_f,eta_o,pool_o,pool_f,cuts");
  EXPECT_EQ(timed.substr(0, timed.find('\n')), "t,lb,ub,gap,eta_f,eta_o,pool_o,pool_f,cuts,wall_ms");
  EXPECT_EQ(static_cast<std::size_t>(std::count(plain.begin(), plain.end(), '\n')), r.state.trace.size() + 1);
}

TEST(FormatNumber, PrintsNonFiniteValuesAsWords) {
  EXPECT_EQ(format_number(kInf), "inf");
  EXPECT_EQ(format_number(-kInf), "-inf");
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
}

}  // namespace
}  // namespace dro
