#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "dro/milp.hpp"
#include "dro/model.hpp"

namespace dro {

// Which recourse the worst case is taken over: the cost Q or the shortfall Q̃_f.
enum class Target { kOptimality, kFeasibility };

inline const char* target_name(Target t) { return t == Target::kOptimality ? "optimality" : "feasibility"; }

struct PricingResult {
  bool found = false;  // false: the pricing problem has no candidate at all
  Scenario scenario;
  double reduced_cost = -kInf;
  double value = 0.0;  // target recourse value at the scenario
  std::vector<double> z;  // mixed-integer sets: selected z
  // Mixed-integer sets: lower-level shadow prices chosen together with (ξ, z).
  double alpha = 0.0;
  std::vector<double> beta;
  double gap = 0.0;
};

// Target recourse values at a fixed first-stage point, cached per scenario.
// For the optimality target the value is the penalized Q_M, which equals Q
// wherever Q is finite and an optimal recourse dual lies below the penalty.
// Thread-safe: evaluations are serialized.
class TargetEvaluator {
 public:
  TargetEvaluator(const TwoStageProblem& problem, std::vector<double> x, Target target, const Tolerances& tol)
      : problem_(&problem), x_(std::move(x)), target_(target), tol_(tol), ev_(problem, tol) {
    penalty_ = target == Target::kFeasibility ? 1.0
                                              : (tol.dual_bound > 0.0 ? tol.dual_bound : problem.default_dual_bound());
  }

  double value(const Scenario& s) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(s.values);
    if (it != cache_.end()) return it->second;
    const RecourseValue r = target_ == Target::kFeasibility
                                ? ev_.evaluate(x_, s, RecourseMode::kFeasibility)
                                : ev_.evaluate(x_, s, RecourseMode::kPenalized, penalty_);
    if (!r.feasible) throw Error(ErrorCode::kNumericalBreakdown, "penalized recourse reported infeasible");
    cache_.emplace(s.values, r.value);
    return r.value;
  }

  RecourseValue plain(const Scenario& s) {
    std::lock_guard<std::mutex> lock(mu_);
    return ev_.evaluate(x_, s, RecourseMode::kPlain);
  }

  // Dual bound of the pricing problems; raising it invalidates cached values.
  double penalty() const { return penalty_; }
  void set_penalty(double p) {
    std::lock_guard<std::mutex> lock(mu_);
    penalty_ = p;
    cache_.clear();
  }

  const TwoStageProblem& problem() const { return *problem_; }
  std::span<const double> x() const { return x_; }
  Target target() const { return target_; }
  const Tolerances& tolerances() const { return tol_; }

 private:
  const TwoStageProblem* problem_;
  std::vector<double> x_;
  Target target_;
  Tolerances tol_;
  double penalty_;
  RecourseEvaluator ev_;
  std::map<std::vector<double>, double> cache_;
  std::mutex mu_;
};

// Minimizer of a linear function c·ξ over the sample space (ties to the lower value).
inline Scenario linear_minimizer(const SampleSpace& space, std::span<const double> c) {
  Scenario s;
  s.kind = space_kind(space);
  if (const auto* box = std::get_if<BoxSpace>(&space)) {
    for (std::size_t k = 0; k < box->lower.size(); ++k) {
      s.values.push_back(c[k] < 0.0 ? box->upper[k] : box->lower[k]);
    }
    return s;
  }
  const auto& bc = std::get<BinaryCardinalitySpace>(space);
  s.values.assign(bc.dimension, 0.0);
  std::vector<int> order(bc.dimension);
  for (int k = 0; k < bc.dimension; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });
  for (int t = 0; t < bc.max_ones && c[order[t]] < 0.0; ++t) s.values[order[t]] = 1.0;
  return s;
}

namespace detail {

inline void check_reduced_cost(double claimed, double recomputed, const char* what) {
  if (std::abs(claimed - recomputed) > 1e-6 * (1.0 + std::abs(recomputed))) {
    throw Error(ErrorCode::kOracleFailure, std::string(what) + ": pricing value " + std::to_string(claimed) +
                                               " disagrees with recomputation " + std::to_string(recomputed));
  }
}

// Candidate values per coordinate. A box coordinate takes its bounds, plus the
// center's value when it lies strictly inside; binary coordinates take {0, 1}.
inline std::vector<std::vector<double>> coordinate_values(const SampleSpace& space, const Scenario* center) {
  std::vector<std::vector<double>> out;
  if (const auto* box = std::get_if<BoxSpace>(&space)) {
    for (std::size_t k = 0; k < box->lower.size(); ++k) {
      std::vector<double> v{box->lower[k]};
      if (center && center->values[k] > box->lower[k] + 1e-12 && center->values[k] < box->upper[k] - 1e-12) {
        v.push_back(center->values[k]);
      }
      if (box->upper[k] > box->lower[k]) v.push_back(box->upper[k]);
      out.push_back(std::move(v));
    }
    return out;
  }
  const auto& bc = std::get<BinaryCardinalitySpace>(space);
  out.assign(bc.dimension, {0.0, 1.0});
  return out;
}

// MILP over (ξ, π) whose objective carries scale · (b − A x − Hξ)ᵀπ, the dual form of the
// target recourse. ξ is one-hot encoded over candidate values; π·ξ products are
// disaggregated per candidate value, exact because exactly one value is active.
struct PspModel {
  LpBuilder b;
  std::vector<double> obj;
  std::vector<int> binaries;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<int>> t;
  std::vector<int> pi;
  double constant = 0.0;

  int var(double cost, double lo, double up, bool binary = false) {
    const int j = b.add_var(0.0, lo, up);
    obj.push_back(cost);
    if (binary) binaries.push_back(j);
    return j;
  }
  void add_xi_cost(std::size_t k, double coef) {
    for (std::size_t l = 0; l < values[k].size(); ++l) obj[t[k][l]] += coef * values[k][l];
  }
  MilpProblem finish() {
    for (int j = 0; j < b.num_vars(); ++j) b.set_cost(j, obj[j]);
    MilpProblem m;
    m.lp = b.build(ObjectiveSense::kMaximize);
    m.binaries = binaries;
    return m;
  }
  Scenario decode(const std::vector<double>& sol, ScenarioKind kind) const {
    Scenario s;
    s.kind = kind;
    for (std::size_t k = 0; k < t.size(); ++k) {
      std::size_t best = 0;
      for (std::size_t l = 1; l < t[k].size(); ++l) {
        if (sol[t[k][l]] > sol[t[k][best]]) best = l;
      }
      s.values.push_back(values[k][best]);
    }
    return s;
  }
};

inline PspModel build_recourse_part(TargetEvaluator& ev, double scale, const Scenario* center) {
  const TwoStageProblem& prob = ev.problem();
  const Recourse& rc = prob.recourse;
  const double bound = ev.penalty();
  const bool feas = ev.target() == Target::kFeasibility;
  PspModel m;
  m.values = coordinate_values(prob.space, center);
  const std::size_t dim = m.values.size();
  Scenario zero{std::vector<double>(dim, 0.0)};
  const auto r = prob.recourse_rhs(ev.x(), zero);

  for (std::size_t i = 0; i < rc.num_rows(); ++i) m.pi.push_back(m.var(scale * r[i], 0.0, bound));
  m.t.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t l = 0; l < m.values[k].size(); ++l) {
      const int j = m.var(0.0, 0.0, 1.0, true);
      m.t[k].push_back(j);
      row.push_back({j, 1.0});
    }
    m.b.add_row(std::move(row), RowSense::kEqual, 1.0);
  }
  if (const auto* bc = std::get_if<BinaryCardinalitySpace>(&prob.space)) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t k = 0; k < dim; ++k) row.push_back({m.t[k][1], 1.0});
    m.b.add_row(std::move(row), RowSense::kLessEqual, bc->max_ones);
  }
  for (std::size_t i = 0; i < rc.num_rows(); ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double h = rc.coupling_xi(i, k);
      if (h == 0.0) continue;
      std::vector<std::pair<int, double>> sum{{m.pi[i], -1.0}};
      for (std::size_t l = 0; l < m.values[k].size(); ++l) {
        const int w = m.var(-scale * h * m.values[k][l], 0.0, bound);
        m.b.add_row({{w, 1.0}, {m.t[k][l], -bound}}, RowSense::kLessEqual, 0.0);
        sum.push_back({w, 1.0});
      }
      m.b.add_row(std::move(sum), RowSense::kEqual, 0.0);
    }
  }
  for (std::size_t j = 0; j < rc.num_vars(); ++j) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t i = 0; i < rc.num_rows(); ++i) {
      if (rc.matrix(i, j) != 0.0) row.push_back({m.pi[i], rc.matrix(i, j)});
    }
    if (!row.empty()) m.b.add_row(std::move(row), RowSense::kLessEqual, feas ? 0.0 : rc.cost[j]);
  }
  return m;
}

// Re-solves `attempt` with a larger penalty while the plain recourse at the
// priced scenario exceeds its penalized value (the dual bound was binding).
template <typename Attempt>
PricingResult with_penalty_guard(TargetEvaluator& ev, Attempt attempt) {
  for (int round = 0;; ++round) {
    PricingResult res = attempt();
    if (ev.target() == Target::kFeasibility || !res.found) return res;
    const RecourseValue plain = ev.plain(res.scenario);
    if (!plain.feasible || plain.value <= res.value + 1e-7 * (1.0 + std::abs(plain.value))) return res;
    if (round >= 8) throw Error(ErrorCode::kBigMViolation, "recourse dual bound keeps binding");
    ev.set_penalty(ev.penalty() * 4.0);
  }
}

}  // namespace detail

// max over ξ of Q(ξ) − α − βᵀΨξ, with Q the target recourse at the evaluator's x.
inline PricingResult psp_solve(TargetEvaluator& ev, const Matrix& psi, double alpha, std::span<const double> beta) {
  for (double b : beta) {
    if (b < -1e-9) throw Error(ErrorCode::kInvalidInput, "moment shadow prices must be >= 0");
  }
  return detail::with_penalty_guard(ev, [&] {
    detail::PspModel m = detail::build_recourse_part(ev, 1.0, nullptr);
    for (std::size_t k = 0; k < m.values.size(); ++k) {
      double c = 0.0;
      for (std::size_t r = 0; r < beta.size(); ++r) c += psi(r, k) * std::max(beta[r], 0.0);
      m.add_xi_cost(k, -c);
    }
    const MilpSolution sol = solve_milp(m.finish(), ev.tolerances().milp());
    PricingResult res;
    if (!sol.has_incumbent()) return res;
    res.found = true;
    res.scenario = m.decode(sol.x, space_kind(ev.problem().space));
    res.value = ev.value(res.scenario);
    const auto psi_xi = psi.multiply(res.scenario.values);
    double lin = 0.0;
    for (std::size_t r = 0; r < beta.size(); ++r) lin += psi_xi[r] * std::max(beta[r], 0.0);
    res.reduced_cost = res.value - alpha - lin;
    res.gap = sol.gap;
    detail::check_reduced_cost(sol.objective - alpha, res.reduced_cost, "moment pricing");
    return res;
  });
}

// Per-sample Wasserstein pricing: max over ξ of pᵉ(Q(ξ) − β‖ξ − ξᵉ‖) − α.
// L1 is exact via the candidate grid {d⁻, ξᵉ, d⁺} per coordinate (the objective is
// convex on every cell of that grid); L2 enumerates box vertices and the samples.
inline PricingResult psp_wasserstein_solve(TargetEvaluator& ev, const WassersteinAmbiguity& w, std::size_t sample,
                                           double alpha, double beta) {
  if (beta < -1e-9) throw Error(ErrorCode::kInvalidInput, "radius shadow price must be >= 0");
  beta = std::max(beta, 0.0);
  const Scenario& center = w.samples[sample];
  const double pe = w.weights[sample];
  const TwoStageProblem& prob = ev.problem();

  if (w.norm == WassersteinNorm::kL2) {
    return detail::with_penalty_guard(ev, [&] {
      std::vector<Scenario> cands = enumerate_space(prob.space, std::size_t{1} << 20);
      if (std::holds_alternative<BoxSpace>(prob.space)) {
        for (const auto& s : w.samples) cands.push_back(s);
      }
      PricingResult res;
      for (const auto& c : cands) {
        const double rc = pe * (ev.value(c) - beta * norm_distance(c, center, w.norm)) - alpha;
        if (!res.found || rc > res.reduced_cost + 1e-12) {
          res.found = true;
          res.scenario = c;
          res.scenario.kind = space_kind(prob.space);
          res.reduced_cost = rc;
        }
      }
      res.value = ev.value(res.scenario);
      return res;
    });
  }

  return detail::with_penalty_guard(ev, [&] {
    detail::PspModel m = detail::build_recourse_part(ev, pe, &center);
    for (std::size_t k = 0; k < m.values.size(); ++k) {
      for (std::size_t l = 0; l < m.values[k].size(); ++l) {
        m.obj[m.t[k][l]] -= pe * beta * std::abs(m.values[k][l] - center.values[k]);
      }
    }
    const MilpSolution sol = solve_milp(m.finish(), ev.tolerances().milp());
    PricingResult res;
    if (!sol.has_incumbent()) return res;
    res.found = true;
    res.scenario = m.decode(sol.x, space_kind(prob.space));
    res.value = ev.value(res.scenario);
    res.reduced_cost = pe * (res.value - beta * norm_distance(res.scenario, center, w.norm)) - alpha;
    res.gap = sol.gap;
    detail::check_reduced_cost(sol.objective - alpha, res.reduced_cost, "wasserstein pricing");
    return res;
  });
}

// Pricing for the mixed-integer moment set. Chooses (ξ, z) jointly with an
// optimal primal-dual pair (p, α, β) of the pool LP for that z, encoded through
// big-M complementarity, and requires the pool value plus the reduced cost to
// reach eta_lower. `pool_values` are target values of the pool columns.
// Returns found = false when no (ξ, z) meets that requirement.
inline PricingResult psp_mixed_integer_solve(TargetEvaluator& ev, const MixedIntegerMomentAmbiguity& mi,
                                             const std::vector<Scenario>& pool,
                                             const std::vector<double>& pool_values, double eta_lower) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidInput, "mixed-integer pricing needs a nonempty pool");
  const AffineMomentRows rows = moment_rows(mi);
  const std::size_t nr = rows.rows();
  const std::size_t nz = mi.num_z();
  const std::size_t np = pool.size();
  std::vector<std::vector<double>> psi_pool;
  for (const auto& s : pool) psi_pool.push_back(rows.psi_of(s));

  double q_abs = 1.0, q_range = 0.0;
  for (double q : pool_values) q_abs = std::max(q_abs, std::abs(q));
  q_range = *std::max_element(pool_values.begin(), pool_values.end()) -
            *std::min_element(pool_values.begin(), pool_values.end());
  // Smallest nonzero spread of a moment row, over pool columns and box widths.
  double spread = kInf;
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t a = 0; a < np; ++a) {
      for (std::size_t b = a + 1; b < np; ++b) {
        const double d = std::abs(psi_pool[a][r] - psi_pool[b][r]);
        if (d > 1e-9) spread = std::min(spread, d);
      }
    }
    for (std::size_t k = 0; k < rows.psi.cols(); ++k) {
      if (std::abs(rows.psi(r, k)) > 1e-12) spread = std::min(spread, std::abs(rows.psi(r, k)));
    }
  }
  if (!std::isfinite(spread)) spread = 1.0;
  double beta_bound = 10.0 * (1.0 + q_range) / spread * static_cast<double>(std::max<std::size_t>(nr, 1));

  for (int attempt = 0;; ++attempt) {
    PricingResult res = detail::with_penalty_guard(ev, [&] {
      detail::PspModel m = detail::build_recourse_part(ev, 1.0, nullptr);
      double psi_abs = 0.0;
      for (const auto& v : psi_pool) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        psi_abs = std::max(psi_abs, s);
      }
      const double a_bound = q_abs + psi_abs * beta_bound + 1.0;
      const double slack_bound = 2.0 * a_bound + q_abs;

      std::vector<int> z(nz), p(np), u(np), beta(nr), v(nr);
      for (std::size_t q = 0; q < nz; ++q) z[q] = m.var(0.0, 0.0, 1.0, true);
      const int alpha = m.var(-1.0, -a_bound, a_bound);
      for (std::size_t j = 0; j < np; ++j) {
        p[j] = m.var(0.0, 0.0, 1.0);
        u[j] = m.var(0.0, 0.0, 1.0, true);
      }
      for (std::size_t r = 0; r < nr; ++r) {
        beta[r] = m.var(0.0, 0.0, beta_bound);
        v[r] = m.var(0.0, 0.0, 1.0, true);
      }
      // z ∈ Z.
      for (std::size_t r = 0; r < mi.z_rhs.size(); ++r) {
        std::vector<std::pair<int, double>> row;
        for (std::size_t q = 0; q < nz; ++q) row.push_back({z[q], mi.z_constraints(r, q)});
        m.b.add_row(std::move(row), mi.z_sense[r], mi.z_rhs[r]);
      }
      // Lower-level primal feasibility and complementarity on the moment rows.
      std::vector<std::pair<int, double>> simplex;
      for (std::size_t j = 0; j < np; ++j) simplex.push_back({p[j], 1.0});
      m.b.add_row(simplex, RowSense::kEqual, 1.0);
      for (std::size_t r = 0; r < nr; ++r) {
        double g_abs = std::abs(rows.gamma0[r]);
        std::vector<std::pair<int, double>> row;
        for (std::size_t j = 0; j < np; ++j) {
          row.push_back({p[j], psi_pool[j][r]});
          g_abs = std::max(g_abs, std::abs(rows.gamma0[r]) + std::abs(psi_pool[j][r]));
        }
        for (std::size_t q = 0; q < nz; ++q) {
          row.push_back({z[q], -rows.gamma_z(r, q)});
          g_abs += std::abs(rows.gamma_z(r, q));
        }
        m.b.add_row(row, RowSense::kLessEqual, rows.gamma0[r]);
        // γ_r(z) − Ψ_r p ≤ M (1 − v_r)
        std::vector<std::pair<int, double>> slack;
        for (const auto& [var, c] : row) slack.push_back({var, -c});
        slack.push_back({v[r], g_abs + 1.0});
        m.b.add_row(std::move(slack), RowSense::kLessEqual, g_abs + 1.0 - rows.gamma0[r]);
        m.b.add_row({{beta[r], 1.0}, {v[r], -beta_bound}}, RowSense::kLessEqual, 0.0);
      }
      // Lower-level dual feasibility and complementarity on the columns.
      for (std::size_t j = 0; j < np; ++j) {
        std::vector<std::pair<int, double>> row{{alpha, 1.0}};
        for (std::size_t r = 0; r < nr; ++r) {
          if (psi_pool[j][r] != 0.0) row.push_back({beta[r], psi_pool[j][r]});
        }
        m.b.add_row(row, RowSense::kGreaterEqual, pool_values[j]);
        row.push_back({u[j], slack_bound});
        m.b.add_row(std::move(row), RowSense::kLessEqual, pool_values[j] + slack_bound);
        m.b.add_row({{p[j], 1.0}, {u[j], -1.0}}, RowSense::kLessEqual, 0.0);
      }
      // −βᵀΨξ through products q_rkl = β_r t_kl.
      for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t k = 0; k < m.values.size(); ++k) {
          const double c = rows.psi(r, k);
          if (c == 0.0) continue;
          std::vector<std::pair<int, double>> sum{{beta[r], -1.0}};
          for (std::size_t l = 0; l < m.values[k].size(); ++l) {
            const int qv = m.var(-c * m.values[k][l], 0.0, beta_bound);
            m.b.add_row({{qv, 1.0}, {m.t[k][l], -beta_bound}}, RowSense::kLessEqual, 0.0);
            sum.push_back({qv, 1.0});
          }
          m.b.add_row(std::move(sum), RowSense::kEqual, 0.0);
        }
      }
      // Pool value plus reduced cost reaches the incumbent PMP value.
      std::vector<std::pair<int, double>> cut;
      for (int j = 0; j < m.b.num_vars(); ++j) {
        if (m.obj[j] != 0.0) cut.push_back({j, m.obj[j]});
      }
      for (std::size_t j = 0; j < np; ++j) cut.push_back({p[j], pool_values[j]});
      m.b.add_row(std::move(cut), RowSense::kGreaterEqual, eta_lower - 1e-9 * (1.0 + std::abs(eta_lower)));

      const MilpSolution sol = solve_milp(m.finish(), ev.tolerances().milp());
      PricingResult res;
      if (!sol.has_incumbent()) return res;
      res.found = true;
      res.scenario = m.decode(sol.x, space_kind(ev.problem().space));
      res.value = ev.value(res.scenario);
      for (std::size_t q = 0; q < nz; ++q) res.z.push_back(std::round(sol.x[z[q]]));
      res.alpha = sol.x[alpha];
      for (std::size_t r = 0; r < nr; ++r) res.beta.push_back(sol.x[beta[r]]);
      const auto psi_xi = rows.psi_of(res.scenario);
      double lin = 0.0;
      for (std::size_t r = 0; r < nr; ++r) lin += psi_xi[r] * res.beta[r];
      res.reduced_cost = res.value - res.alpha - lin;
      res.gap = sol.gap;
      detail::check_reduced_cost(sol.objective, res.reduced_cost, "mixed-integer pricing");
      return res;
    });
    bool binding = false;
    for (double b : res.beta) binding = binding || b >= 0.99 * beta_bound;
    if (!binding) return res;
    if (attempt >= 3) throw Error(ErrorCode::kBigMViolation, "moment shadow price bound keeps binding");
    beta_bound *= 10.0;
  }
}

}  // namespace dro
