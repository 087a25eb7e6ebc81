#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dro/flp.hpp"

namespace dro::testing {

// Hand-built capacitated demand instance: c2 = c (rho = 0), demand box [d, d].
inline TwoStageProblem two_client_problem(std::vector<double> capacity, std::vector<double> demand,
                                          Matrix cost) {
  FlInstance inst;
  inst.spec.n_sites = static_cast<int>(demand.size());
  inst.spec.facilities = 1;
  inst.spec.rho = 0.0;
  inst.spec.capacitated = true;
  inst.cost = std::move(cost);
  inst.demand = demand;
  inst.fixed_cost.assign(demand.size(), 1.0);
  inst.capacity = std::move(capacity);
  inst.demand_lower = demand;
  inst.demand_upper = demand;
  inst.moment_bound = demand;
  inst.x_coord.assign(demand.size(), 0.0);
  inst.y_coord.assign(demand.size(), 0.0);
  return encode(inst);
}

// First-stage vector with the given facilities open and no nominal allocation.
inline std::vector<double> open_facilities(const TwoStageProblem& prob, const std::vector<int>& open) {
  std::vector<double> x(prob.first.size(), 0.0);
  for (int j : open) x[j] = 1.0;
  return x;
}

// Generated instance with every capacity scaled by `factor`; factors below 1
// make some openings infeasible under some scenarios.
inline TwoStageProblem generated(const std::string& spec_text, std::uint64_t seed, double factor = 1.0) {
  FlSpec spec = parse_generator_spec(spec_text);
  spec.seed = seed;
  FlInstance inst = generate_instance(spec);
  for (double& f : inst.capacity) f *= factor;
  return encode(inst);
}

}  // namespace dro::testing
