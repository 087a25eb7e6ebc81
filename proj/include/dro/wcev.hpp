#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <set>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "dro/milp.hpp"
#include "dro/model.hpp"
#include "dro/pricing.hpp"

namespace dro {

struct WcevResult {
  double value = 0.0;   // η̲*: PMP optimum at termination
  double v_star = 0.0;  // final pricing value; the true WCEV lies in [value, value + max(v_star, 0)]
  DiscreteDistribution distribution;  // worst case after dropping p < 1e-9
  double alpha = 0.0;                 // moment sets: convexity dual
  std::vector<double> alphas;         // Wasserstein: per-sample convexity duals
  std::vector<double> beta;           // moment-row duals, or the single radius dual
  std::vector<Scenario> pool;         // every generated column, zero-probability ones included
  std::vector<std::vector<Scenario>> sample_pools;
  std::vector<int> sample_support;    // Wasserstein: positive-probability columns per sample
  std::vector<double> z;              // mixed-integer sets: maximizing z
  int iterations = 0;
  int z_switches = 0;
  std::vector<double> pmp_history;
  std::vector<double> pricing_history;
  bool duplicate_column = false;  // pricing returned a pooled scenario; stopped early
  double penalty = 0.0;

  double upper_bound() const { return value + std::max(v_star, 0.0); }
};

constexpr double kScreenTol = 1e-9;

// ----------------------------------------------------------------- PMP build

// max Σ Q_j p_j  s.t. Σ p_j = 1 (row 0), Σ ψ(ξ_j) p_j ≤ γ (rows 1..m), p ≥ 0.
inline LpProblem pmp_build(const std::vector<Scenario>& pool, const std::vector<double>& values, const Matrix& psi,
                           const std::vector<double>& gamma) {
  LpBuilder b;
  std::vector<std::vector<std::pair<int, double>>> rows(gamma.size() + 1);
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const int v = b.add_var(values[j]);
    rows[0].push_back({v, 1.0});
    const auto ps = psi.multiply(pool[j].values);
    for (std::size_t r = 0; r < gamma.size(); ++r) {
      if (ps[r] != 0.0) rows[r + 1].push_back({v, ps[r]});
    }
  }
  b.add_row(std::move(rows[0]), RowSense::kEqual, 1.0);
  for (std::size_t r = 0; r < gamma.size(); ++r) b.add_row(std::move(rows[r + 1]), RowSense::kLessEqual, gamma[r]);
  return b.build(ObjectiveSense::kMaximize);
}

inline LpProblem pmp_build(const std::vector<Scenario>& pool, const std::vector<double>& values,
                           const MomentAmbiguity& a) {
  return pmp_build(pool, values, a.psi, a.gamma);
}

// Conditional Wasserstein PMP: column (i, ξ) carries pᵉ_i Q(ξ); rows 0..N-1 are
// per-sample convexity rows, row N is Σ pᵉ_i ‖ξ − ξᵉ_i‖ q ≤ r.
inline LpProblem pmp_wasserstein_build(const std::vector<std::vector<Scenario>>& pools,
                                       const std::vector<std::vector<double>>& values,
                                       const WassersteinAmbiguity& w) {
  const std::size_t n = w.size();
  LpBuilder b;
  std::vector<std::vector<std::pair<int, double>>> rows(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < pools[i].size(); ++j) {
      const int v = b.add_var(w.weights[i] * values[i][j]);
      rows[i].push_back({v, 1.0});
      const double d = w.weights[i] * norm_distance(pools[i][j], w.samples[i], w.norm);
      if (d != 0.0) rows[n].push_back({v, d});
    }
  }
  for (std::size_t i = 0; i < n; ++i) b.add_row(std::move(rows[i]), RowSense::kEqual, 1.0);
  b.add_row(std::move(rows[n]), RowSense::kLessEqual, w.radius);
  return b.build(ObjectiveSense::kMaximize);
}

namespace detail {

inline DiscreteDistribution screened(const std::vector<Scenario>& cols, const std::vector<double>& probs,
                                     double dedup) {
  ScenarioPool merged(dedup);
  std::vector<double> mass;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (probs[j] < kScreenTol) continue;
    const auto [idx, inserted] = merged.add(cols[j]);
    if (inserted) mass.push_back(0.0);
    mass[idx] += probs[j];
  }
  double total = 0.0;
  for (double m : mass) total += m;
  DiscreteDistribution d;
  d.scenarios = merged.items();
  for (double m : mass) d.probabilities.push_back(m / total);
  return d;
}

inline double cg_eps(const Tolerances& tol, double eta) { return tol.cg_eps * (1.0 + std::abs(eta)); }

}  // namespace detail

// ------------------------------------------------------------------ Oracle-1

// Exact WCEV over a finite candidate list for a moment set: the best of the
// probability LPs over every support of size <= m + 1.
inline WcevResult oracle1_bruteforce(const std::vector<Scenario>& candidates, const std::vector<double>& values,
                                     const Matrix& psi, const std::vector<double>& gamma,
                                     std::size_t cap = std::size_t{1} << 16) {
  const std::size_t n = candidates.size();
  const std::size_t smax = std::min(n, gamma.size() + 1);
  double count = 0.0;
  for (std::size_t s = 1; s <= smax; ++s) {
    double c = 1.0;
    for (std::size_t t = 0; t < s; ++t) c = c * static_cast<double>(n - t) / static_cast<double>(t + 1);
    count += c;
  }
  if (count > static_cast<double>(cap)) {
    throw Error(ErrorCode::kEnumerationCapExceeded, "oracle-1 would enumerate " + std::to_string(count) + " supports");
  }
  WcevResult best;
  bool have = false;
  std::vector<std::size_t> idx;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t size) {
    if (idx.size() == size) {
      std::vector<Scenario> cols;
      std::vector<double> vals;
      for (std::size_t j : idx) {
        cols.push_back(candidates[j]);
        vals.push_back(values[j]);
      }
      const LpSolution s = solve_lp(pmp_build(cols, vals, psi, gamma));
      if (s.status != LpStatus::kOptimal) return;
      if (!have || s.objective > best.value + 1e-12) {
        have = true;
        best.value = s.objective;
        best.distribution = detail::screened(cols, s.x, 0.0);
        best.alpha = s.duals[0];
        best.beta.assign(s.duals.begin() + 1, s.duals.end());
      }
      return;
    }
    for (std::size_t j = start; j < n; ++j) {
      idx.push_back(j);
      rec(j + 1, size);
      idx.pop_back();
    }
  };
  for (std::size_t s = 1; s <= smax; ++s) rec(0, s);
  if (!have) throw Error(ErrorCode::kPmpInfeasible, "no distribution over the candidates meets the moment rows");
  best.pool = candidates;
  best.iterations = 1;
  if (best.distribution.size() > gamma.size() + 1) {
    throw Error(ErrorCode::kOracleFailure, "oracle-1 support exceeds m + 1");
  }
  return best;
}

inline WcevResult oracle1_bruteforce(const std::vector<Scenario>& candidates, const std::vector<double>& values,
                                     const MomentAmbiguity& a, std::size_t cap = std::size_t{1} << 16) {
  return oracle1_bruteforce(candidates, values, a.psi, a.gamma, cap);
}

// ---------------------------------------------------------- moment-set CG

struct MomentCgHooks {
  std::function<double(const Scenario&)> value;
  std::function<PricingResult(double alpha, std::span<const double> beta)> price;
  // Minimizer of c·ξ over the sample space; used to seed an infeasible pool.
  std::function<Scenario(std::span<const double> c)> linear_min;
};

// Adds columns until some distribution over the pool meets Ψ E[ξ] <= γ, by a
// phase-one column generation on the total row violation. Throws PmpInfeasible
// when no distribution over the sample space meets the rows.
inline void seed_moment_pool(ScenarioPool& pool, const Matrix& psi, const std::vector<double>& gamma,
                             const std::function<Scenario(std::span<const double>)>& linear_min) {
  const std::size_t dim = psi.cols();
  const std::size_t m = gamma.size();
  if (pool.empty()) pool.add(linear_min(std::vector<double>(dim, 0.0)));
  double scale = 1.0;
  for (double g : gamma) scale += std::abs(g);
  for (int round = 0; round < 10000; ++round) {
    LpBuilder b;
    std::vector<std::vector<std::pair<int, double>>> rows(m + 1);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const int v = b.add_var(0.0);
      rows[0].push_back({v, 1.0});
      const auto ps = psi.multiply(pool[j].values);
      for (std::size_t r = 0; r < m; ++r) rows[r + 1].push_back({v, ps[r]});
    }
    for (std::size_t r = 0; r < m; ++r) rows[r + 1].push_back({b.add_var(1.0), -1.0});
    b.add_row(std::move(rows[0]), RowSense::kEqual, 1.0);
    for (std::size_t r = 0; r < m; ++r) b.add_row(std::move(rows[r + 1]), RowSense::kLessEqual, gamma[r]);
    const LpSolution s = solve_lp(b.build(ObjectiveSense::kMinimize));
    if (s.status != LpStatus::kOptimal) throw Error(ErrorCode::kNumericalBreakdown, "phase-one PMP");
    if (s.objective <= 1e-9 * scale) return;
    std::vector<double> c(dim, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t k = 0; k < dim; ++k) c[k] -= s.duals[r + 1] * psi(r, k);
    }
    const Scenario xi = linear_min(c);
    const double rc = -s.duals[0] + dot(c, xi.values);
    if (rc >= -1e-9 * scale || pool.contains(xi)) {
      throw Error(ErrorCode::kPmpInfeasible, "ambiguity set has no distribution on the sample space");
    }
    pool.add(xi);
  }
  throw Error(ErrorCode::kIterationLimit, "phase-one seeding");
}

// Oracle-2 loop for a moment set: PMP, then pricing, until v* <= ε(1 + |η̲*|).
inline WcevResult moment_cg(const std::vector<Scenario>& pool_init, const Matrix& psi,
                            const std::vector<double>& gamma, const MomentCgHooks& hooks, const Tolerances& tol) {
  ScenarioPool pool(tol.dedup);
  pool.add_all(pool_init);
  seed_moment_pool(pool, psi, gamma, hooks.linear_min);
  WcevResult out;
  for (int it = 1;; ++it) {
    if (it > tol.cg_iteration_limit) throw Error(ErrorCode::kIterationLimit, "column generation");
    std::vector<double> values;
    for (const auto& s : pool.items()) values.push_back(hooks.value(s));
    const LpSolution s = solve_lp(pmp_build(pool.items(), values, psi, gamma), tol.lp());
    if (s.status != LpStatus::kOptimal) throw Error(ErrorCode::kPmpInfeasible, "pricing master problem");
    out.value = s.objective;
    out.alpha = s.duals[0];
    out.beta.assign(s.duals.begin() + 1, s.duals.end());
    for (double& b : out.beta) b = std::max(b, 0.0);
    out.iterations = it;
    out.pool = pool.items();
    out.distribution = detail::screened(pool.items(), s.x, tol.dedup);
    out.pmp_history.push_back(out.value);

    const PricingResult pr = hooks.price(out.alpha, out.beta);
    out.v_star = pr.found ? pr.reduced_cost : -kInf;
    out.pricing_history.push_back(out.v_star);
    if (!pr.found || pr.reduced_cost <= detail::cg_eps(tol, out.value)) break;
    if (!pool.add(pr.scenario).second) {
      out.duplicate_column = true;
      break;
    }
  }
  return out;
}

// Oracle-2 over a finite scenario table with given values (pricing by enumeration).
inline WcevResult oracle2_table(const std::vector<Scenario>& candidates, const std::vector<double>& values,
                                const MomentAmbiguity& a, const std::vector<Scenario>& pool_init,
                                const Tolerances& tol = {}) {
  ScenarioPool index(0.0);
  index.add_all(candidates);
  MomentCgHooks hooks;
  hooks.value = [&](const Scenario& s) {
    const auto i = index.find(s);
    if (!i) throw Error(ErrorCode::kInvalidInput, "scenario outside the table");
    return values[*i];
  };
  hooks.price = [&](double alpha, std::span<const double> beta) {
    PricingResult best;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const auto ps = a.psi.multiply(candidates[j].values);
      double rc = values[j] - alpha;
      for (std::size_t r = 0; r < beta.size(); ++r) rc -= ps[r] * beta[r];
      if (!best.found || rc > best.reduced_cost + 1e-12) {
        best.found = true;
        best.scenario = candidates[j];
        best.reduced_cost = rc;
        best.value = values[j];
      }
    }
    return best;
  };
  hooks.linear_min = [&](std::span<const double> c) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < candidates.size(); ++j) {
      if (dot(c, candidates[j].values) < dot(c, candidates[arg].values) - 1e-12) arg = j;
    }
    return candidates[arg];
  };
  return moment_cg(pool_init, a.psi, a.gamma, hooks, tol);
}

// ------------------------------------------------------- problem-level oracles

enum class OracleKind { kColumnGeneration, kBruteForce };

struct WcevOptions {
  Tolerances tol;
  OracleKind oracle = OracleKind::kColumnGeneration;
  bool parallel = false;  // concurrent per-sample Wasserstein pricing
  int threads = 0;        // 0: hardware concurrency
};

inline MomentCgHooks problem_hooks(TargetEvaluator& ev, const Matrix& psi) {
  MomentCgHooks hooks;
  hooks.value = [&ev](const Scenario& s) { return ev.value(s); };
  hooks.price = [&ev, &psi](double alpha, std::span<const double> beta) { return psp_solve(ev, psi, alpha, beta); };
  hooks.linear_min = [&ev](std::span<const double> c) { return linear_minimizer(ev.problem().space, c); };
  return hooks;
}

inline WcevResult wasserstein_cg(TargetEvaluator& ev, const WassersteinAmbiguity& w,
                                 const std::vector<Scenario>& pool_init, const WcevOptions& opt) {
  const Tolerances& tol = opt.tol;
  const std::size_t n = w.size();
  std::vector<ScenarioPool> pools(n, ScenarioPool(tol.dedup));
  for (std::size_t i = 0; i < n; ++i) {
    Scenario e = w.samples[i];
    e.kind = space_kind(ev.problem().space);
    pools[i].add(e);
    pools[i].add_all(pool_init);
  }
  WcevResult out;
  for (int it = 1;; ++it) {
    if (it > tol.cg_iteration_limit) throw Error(ErrorCode::kIterationLimit, "column generation");
    std::vector<std::vector<Scenario>> cols(n);
    std::vector<std::vector<double>> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      cols[i] = pools[i].items();
      for (const auto& s : cols[i]) values[i].push_back(ev.value(s));
    }
    const LpSolution s = solve_lp(pmp_wasserstein_build(cols, values, w), tol.lp());
    if (s.status != LpStatus::kOptimal) throw Error(ErrorCode::kPmpInfeasible, "wasserstein pricing master");
    out.value = s.objective;
    out.alphas.assign(s.duals.begin(), s.duals.begin() + static_cast<std::ptrdiff_t>(n));
    out.beta = {std::max(s.duals[n], 0.0)};
    out.iterations = it;
    out.pmp_history.push_back(out.value);
    {
      std::vector<Scenario> flat;
      std::vector<double> probs;
      out.sample_support.assign(n, 0);
      std::size_t c = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& sc : cols[i]) {
          flat.push_back(sc);
          probs.push_back(w.weights[i] * s.x[c]);
          if (s.x[c] >= kScreenTol) ++out.sample_support[i];
          ++c;
        }
      }
      out.distribution = detail::screened(flat, probs, tol.dedup);
      out.sample_pools = cols;
    }

    std::vector<PricingResult> priced(n);
    auto price_one = [&](std::size_t i) {
      return psp_wasserstein_solve(ev, w, i, out.alphas[i], out.beta[0]);
    };
    if (opt.parallel && n > 1) {
      const std::size_t width =
          opt.threads > 0 ? static_cast<std::size_t>(opt.threads) : std::max(1u, std::thread::hardware_concurrency());
      for (std::size_t start = 0; start < n; start += width) {
        std::vector<std::future<PricingResult>> jobs;
        for (std::size_t i = start; i < std::min(n, start + width); ++i) {
          jobs.push_back(std::async(std::launch::async, price_one, i));
        }
        for (std::size_t i = start; i < std::min(n, start + width); ++i) priced[i] = jobs[i - start].get();
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) priced[i] = price_one(i);
    }
    double total = 0.0;
    for (const auto& pr : priced) {
      if (pr.found) total += std::max(pr.reduced_cost, 0.0);
    }
    out.v_star = total;
    out.pricing_history.push_back(total);
    const double eps = detail::cg_eps(tol, out.value);
    if (total <= eps) break;
    bool added = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (priced[i].found && priced[i].reduced_cost > eps / static_cast<double>(n)) {
        added = pools[i].add(priced[i].scenario).second || added;
      }
    }
    if (!added) {
      out.duplicate_column = true;
      break;
    }
  }
  ScenarioPool all(tol.dedup);
  for (const auto& p : pools) all.add_all(p.items());
  out.pool = all.items();
  out.penalty = ev.penalty();
  return out;
}

namespace detail {

struct PmpMixedInteger {
  double value = 0.0;
  std::vector<double> z;
  std::vector<double> p;
};

// max over z ∈ Z and p of Σ Q p subject to the moment rows at z.
inline PmpMixedInteger solve_pmp_mixed_integer(const std::vector<Scenario>& pool, const std::vector<double>& values,
                                               const MixedIntegerMomentAmbiguity& mi, const AffineMomentRows& rows,
                                               const Tolerances& tol) {
  const std::size_t nz = mi.num_z();
  LpBuilder b;
  std::vector<int> z, p;
  for (std::size_t q = 0; q < nz; ++q) z.push_back(b.add_var(0.0, 0.0, 1.0));
  for (std::size_t j = 0; j < pool.size(); ++j) p.push_back(b.add_var(values[j]));
  std::vector<std::pair<int, double>> simplex;
  for (int v : p) simplex.push_back({v, 1.0});
  b.add_row(std::move(simplex), RowSense::kEqual, 1.0);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const double c = dot(rows.psi.row(r), pool[j].values);
      if (c != 0.0) row.push_back({p[j], c});
    }
    for (std::size_t q = 0; q < nz; ++q) {
      if (rows.gamma_z(r, q) != 0.0) row.push_back({z[q], -rows.gamma_z(r, q)});
    }
    b.add_row(std::move(row), RowSense::kLessEqual, rows.gamma0[r]);
  }
  for (std::size_t r = 0; r < mi.z_rhs.size(); ++r) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t q = 0; q < nz; ++q) row.push_back({z[q], mi.z_constraints(r, q)});
    b.add_row(std::move(row), mi.z_sense[r], mi.z_rhs[r]);
  }
  MilpProblem m;
  m.lp = b.build(ObjectiveSense::kMaximize);
  m.binaries = z;
  const MilpSolution s = solve_milp(m, tol.milp());
  if (!s.has_incumbent()) throw Error(ErrorCode::kPmpInfeasible, "mixed-integer pricing master");
  PmpMixedInteger out;
  out.value = s.objective;
  for (int v : z) out.z.push_back(std::round(s.x[v]));
  for (int v : p) out.p.push_back(s.x[v]);
  return out;
}

inline std::uint64_t z_mask(std::span<const double> z) {
  std::uint64_t m = 0;
  for (std::size_t q = 0; q < z.size(); ++q) {
    if (z[q] > 0.5) m |= 1ULL << q;
  }
  return m;
}

}  // namespace detail

// Alternates plain column generation on 𝒫(z) for a fixed z with the joint
// (ξ, z) pricing problem, until the joint pricing finds no improving pair.
inline WcevResult hybrid_cg_mixed_integer(TargetEvaluator& ev, const MixedIntegerMomentAmbiguity& mi,
                                          const std::vector<Scenario>& pool_init, const Tolerances& tol) {
  const AffineMomentRows rows = moment_rows(mi);
  const auto zs = enumerate_z(mi);
  ScenarioPool pool(tol.dedup);
  pool.add_all(pool_init);
  const auto lin = [&ev](std::span<const double> c) { return linear_minimizer(ev.problem().space, c); };
  // Make the pool feasible for every z whose set is nonempty.
  std::vector<std::vector<double>> live;
  for (const auto& z : zs) {
    try {
      seed_moment_pool(pool, rows.psi, rows.gamma(z), lin);
      live.push_back(z);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPmpInfeasible) throw;
    }
  }
  if (live.empty()) throw Error(ErrorCode::kPmpInfeasible, "every z yields an empty ambiguity set");

  WcevResult out;
  // Any starting z is valid; take the last in mask order.
  std::vector<double> z = live.back();
  std::set<std::pair<std::uint64_t, std::size_t>> converged;
  const MomentCgHooks hooks = problem_hooks(ev, rows.psi);
  for (int round = 0;; ++round) {
    if (round > tol.cg_iteration_limit) throw Error(ErrorCode::kIterationLimit, "hybrid column generation");
    const std::vector<double> gamma = rows.gamma(z);
    const WcevResult inner = moment_cg(pool.items(), rows.psi, gamma, hooks, tol);
    pool.add_all(inner.pool);
    out.iterations += inner.iterations;
    converged.insert({detail::z_mask(z), pool.size()});

    std::vector<double> values;
    for (const auto& s : pool.items()) values.push_back(ev.value(s));
    const auto master = detail::solve_pmp_mixed_integer(pool.items(), values, mi, rows, tol);
    out.value = master.value;
    out.z = master.z;
    out.distribution = detail::screened(pool.items(), master.p, tol.dedup);
    out.pmp_history.push_back(master.value);
    // The master may already prefer another z; CG continues there.
    const auto move_to = [&](const std::vector<double>& next) {
      if (detail::z_mask(next) != detail::z_mask(z)) ++out.z_switches;
      z = next;
    };
    move_to(master.z);

    const PricingResult pr = psp_mixed_integer_solve(ev, mi, pool.items(), values, master.value);
    out.v_star = pr.found ? pr.reduced_cost : -kInf;
    out.pricing_history.push_back(out.v_star);
    if (!pr.found || pr.reduced_cost <= detail::cg_eps(tol, master.value)) break;
    pool.add(pr.scenario);
    if (converged.count({detail::z_mask(pr.z), pool.size()})) {
      out.duplicate_column = true;
      break;
    }
    move_to(pr.z);
  }
  // Values may have been recomputed under a raised penalty inside the last pricing call.
  out.pool = pool.items();
  out.penalty = ev.penalty();
  return out;
}

// Candidate scenarios that contain an optimal support for every sample-space point
// the pricing problems can return.
inline std::vector<Scenario> enumeration_candidates(const TwoStageProblem& prob, const Scenario* center,
                                                    std::size_t cap) {
  if (!center || std::holds_alternative<BinaryCardinalitySpace>(prob.space)) {
    return enumerate_space(prob.space, cap);
  }
  const auto vals = detail::coordinate_values(prob.space, center);
  double count = 1.0;
  for (const auto& v : vals) count *= static_cast<double>(v.size());
  if (count > static_cast<double>(cap)) {
    throw Error(ErrorCode::kEnumerationCapExceeded, "candidate grid of " + std::to_string(count) + " points");
  }
  std::vector<Scenario> out{Scenario{{}, ScenarioKind::kContinuous}};
  for (const auto& v : vals) {
    std::vector<Scenario> next;
    for (const auto& s : out) {
      for (double x : v) {
        Scenario t = s;
        t.values.push_back(x);
        next.push_back(std::move(t));
      }
    }
    out = std::move(next);
  }
  return out;
}

// Exact WCEV by one PMP over every candidate scenario (no pricing).
inline WcevResult wcev_enumerated(TargetEvaluator& ev, const Tolerances& tol) {
  const TwoStageProblem& prob = ev.problem();
  const std::size_t cap = tol.enumeration_cap;
  WcevResult out;
  out.iterations = 1;
  if (const auto* w = std::get_if<WassersteinAmbiguity>(&prob.ambiguity)) {
    std::vector<std::vector<Scenario>> cols(w->size());
    std::vector<std::vector<double>> values(w->size());
    for (std::size_t i = 0; i < w->size(); ++i) {
      if (w->norm == WassersteinNorm::kL1) {
        cols[i] = enumeration_candidates(prob, &w->samples[i], cap);
      } else {
        cols[i] = enumerate_space(prob.space, cap);
        if (std::holds_alternative<BoxSpace>(prob.space)) {
          for (const auto& s : w->samples) cols[i].push_back(s);
        }
      }
      for (auto& s : cols[i]) {
        s.kind = space_kind(prob.space);
        values[i].push_back(ev.value(s));
      }
    }
    const LpSolution s = solve_lp(pmp_wasserstein_build(cols, values, *w), tol.lp());
    if (s.status != LpStatus::kOptimal) throw Error(ErrorCode::kPmpInfeasible, "wasserstein enumeration");
    out.value = s.objective;
    out.alphas.assign(s.duals.begin(), s.duals.begin() + static_cast<std::ptrdiff_t>(w->size()));
    out.beta = {std::max(s.duals[w->size()], 0.0)};
    std::vector<Scenario> flat;
    std::vector<double> probs;
    out.sample_support.assign(w->size(), 0);
    std::size_t c = 0;
    for (std::size_t i = 0; i < w->size(); ++i) {
      for (const auto& sc : cols[i]) {
        flat.push_back(sc);
        probs.push_back(w->weights[i] * s.x[c]);
        if (s.x[c] >= kScreenTol) ++out.sample_support[i];
        ++c;
      }
    }
    out.distribution = detail::screened(flat, probs, tol.dedup);
    out.pool = out.distribution.scenarios;
    out.penalty = ev.penalty();
    return out;
  }
  const auto cands = enumerate_space(prob.space, cap);
  std::vector<double> values;
  for (const auto& s : cands) values.push_back(ev.value(s));
  AffineMomentRows rows;
  std::vector<std::vector<double>> zs{{}};
  if (const auto* m = std::get_if<MomentAmbiguity>(&prob.ambiguity)) {
    rows = moment_rows(*m);
  } else {
    const auto& mi = std::get<MixedIntegerMomentAmbiguity>(prob.ambiguity);
    rows = moment_rows(mi);
    zs = enumerate_z(mi);
  }
  bool have = false;
  for (const auto& z : zs) {
    const LpSolution s = solve_lp(pmp_build(cands, values, rows.psi, rows.gamma(z)), tol.lp());
    if (s.status != LpStatus::kOptimal) continue;
    if (!have || s.objective > out.value + 1e-12) {
      have = true;
      out.value = s.objective;
      out.alpha = s.duals[0];
      out.beta.assign(s.duals.begin() + 1, s.duals.end());
      out.distribution = detail::screened(cands, s.x, tol.dedup);
      out.z = z;
    }
  }
  if (!have) throw Error(ErrorCode::kPmpInfeasible, "ambiguity set has no distribution on the sample space");
  out.pool = out.distribution.scenarios;
  out.penalty = ev.penalty();
  return out;
}

// Oracle-2 dispatch on the problem's ambiguity set.
inline WcevResult oracle2_cg(TargetEvaluator& ev, const std::vector<Scenario>& pool_init, const WcevOptions& opt) {
  const TwoStageProblem& prob = ev.problem();
  if (const auto* m = std::get_if<MomentAmbiguity>(&prob.ambiguity)) {
    WcevResult r = moment_cg(pool_init, m->psi, m->gamma, problem_hooks(ev, m->psi), opt.tol);
    r.penalty = ev.penalty();
    return r;
  }
  if (const auto* w = std::get_if<WassersteinAmbiguity>(&prob.ambiguity)) {
    return wasserstein_cg(ev, *w, pool_init, opt);
  }
  return hybrid_cg_mixed_integer(ev, std::get<MixedIntegerMomentAmbiguity>(prob.ambiguity), pool_init, opt.tol);
}

inline WcevResult compute_wcev(TargetEvaluator& ev, const std::vector<Scenario>& pool_init, const WcevOptions& opt) {
  if (opt.oracle == OracleKind::kBruteForce) return wcev_enumerated(ev, opt.tol);
  return oracle2_cg(ev, pool_init, opt);
}

}  // namespace dro
