#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "dro/master.hpp"
#include "dro/wcev.hpp"

namespace dro {

enum class SolveStatus { kOptimal, kDroInfeasible, kTimeLimit, kIterationLimit, kStalled };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kDroInfeasible: return "infeasible";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kIterationLimit: return "iteration_limit";
    case SolveStatus::kStalled: return "stalled";
  }
  return "unknown";
}

struct IterationRecord {
  int t = 0;
  double lb = -kInf;
  double ub = kInf;
  double eta_f = 0.0;
  double eta_o = kInf;  // +inf when the feasibility check failed
  std::size_t pool_o = 0;
  std::size_t pool_f = 0;
  std::size_t cuts = 0;
  double wall_ms = 0.0;

  double gap() const { return std::isfinite(ub) ? (ub - lb) / std::max(1.0, std::abs(ub)) : kInf; }
};

struct SolveState {
  double lb = -kInf;
  double ub = kInf;
  int t = 0;
  ScenarioPools pools;
  std::vector<double> incumbent;
  std::vector<IterationRecord> trace;
};

struct CcgOptions {
  WcevOptions wcev;
  MasterOptions master;
  bool warm_start = true;       // seed each oracle with the pools collected so far
  bool screen_zero = true;      // pool only positive-probability scenarios
  double time_limit = kInf;     // seconds
  int iteration_limit = 500;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kIterationLimit;
  std::vector<double> x;
  double objective = kInf;
  SolveState state;
  std::size_t cuts = 0;

  double gap() const { return state.trace.empty() ? kInf : state.trace.back().gap(); }
};

namespace detail {

inline bool converged(double lb, double ub, const Tolerances& tol) {
  return std::isfinite(ub) && ub - lb <= tol.outer_tol * std::max(1.0, std::abs(ub));
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Adds the support of `r` to `pool`; falls back to every generated column when
// the support is already pooled. Returns the number of new scenarios.
inline std::size_t augment(ScenarioPool& pool, const WcevResult& r, bool screen_zero) {
  std::size_t added = 0;
  const auto& first = screen_zero ? r.distribution.scenarios : r.pool;
  for (const auto& s : first) added += pool.add(s).second ? 1 : 0;
  if (added == 0 && screen_zero) {
    for (const auto& s : r.pool) added += pool.add(s).second ? 1 : 0;
  }
  return added;
}

// Masters only need to beat UB by the outer tolerance; anything else converges.
inline double master_cutoff(double ub, const Tolerances& tol) {
  // A tenth of a percent inside the tolerance: rounding in UB - LB must not push the closing gap above it.
  return std::isfinite(ub) ? ub - (1.0 - 1e-3) * tol.outer_tol * std::max(1.0, std::abs(ub)) : kInf;
}

// Closes a run whose master proved LB >= cutoff.
inline void close_at_cutoff(SolveState& st, double cutoff, double wall_ms) {
  st.lb = std::max(st.lb, cutoff);
  IterationRecord rec;
  rec.t = st.t;
  rec.lb = st.lb;
  rec.ub = st.ub;
  rec.eta_o = kInf;
  rec.pool_o = st.pools.optimality.size();
  rec.pool_f = st.pools.feasibility.size();
  rec.wall_ms = wall_ms;
  st.trace.push_back(rec);
}

inline double feasibility_threshold(const TwoStageProblem& p, const Tolerances& tol) {
  return tol.feas_eps * (1.0 + p.demand_scale());
}

// Any point of 𝒳 outside `visited`; stands in for the master when it is unbounded.
inline MasterSolution any_first_stage(const TwoStageProblem& p, const std::vector<std::vector<double>>& visited,
                                      const Tolerances& tol) {
  TwoStageProblem bare = p;
  std::fill(bare.first.cost.begin(), bare.first.cost.end(), 0.0);
  MasterOptions o;
  o.excluded = visited;
  MasterAssembler a(bare, o);
  return solve_master(a.finish(), tol);
}

}  // namespace detail

inline SolveResult solve_ccg_dro(const TwoStageProblem& p, const CcgOptions& opt = {}) {
  p.validate();
  const Tolerances& tol = opt.wcev.tol;
  tol.validate();
  const detail::Stopwatch clock;
  const bool mixed = std::holds_alternative<MixedIntegerMomentAmbiguity>(p.ambiguity);
  const double feas_threshold = detail::feasibility_threshold(p, tol);
  SolveResult res;
  res.state.pools = ScenarioPools(tol.dedup);
  SolveState& st = res.state;
  const MasterOptions& mopt = opt.master;
  std::vector<std::vector<double>> visited;

  for (st.t = 1;; ++st.t) {
    if (st.t > opt.iteration_limit) {
      res.status = SolveStatus::kIterationLimit;
      --st.t;
      break;
    }
    const double cutoff = detail::master_cutoff(st.ub, tol);
    MasterSolution m = solve_master(build_master(p, st.pools, mopt), tol, cutoff);
    if (m.status == MilpStatus::kCutoff) {
      detail::close_at_cutoff(st, cutoff, clock.seconds() * 1000.0);
      res.status = SolveStatus::kOptimal;
      break;
    }
    if (m.status == MilpStatus::kInfeasible) {
      res.status = SolveStatus::kDroInfeasible;
      break;
    }
    if (m.status == MilpStatus::kUnbounded) {
      m = detail::any_first_stage(p, visited, tol);
      if (!m.x.size()) {
        res.status = SolveStatus::kDroInfeasible;
        break;
      }
      visited.push_back(m.x);
    } else {
      st.lb = std::max(st.lb, m.lower_bound);
    }

    IterationRecord rec;
    rec.t = st.t;
    std::size_t added = 0;
    std::vector<Scenario> feas_support;
    if (!p.complete_recourse) {
      TargetEvaluator evf(p, m.x, Target::kFeasibility, tol);
      const std::vector<Scenario> init = opt.warm_start ? st.pools.feasibility.items() : std::vector<Scenario>{};
      const WcevResult f = compute_wcev(evf, init, opt.wcev);
      rec.eta_f = f.value;
      feas_support = f.distribution.scenarios;
      if (f.value > feas_threshold) {
        added += detail::augment(st.pools.feasibility, f, opt.screen_zero);
        if (mixed) added += ScenarioPools::add_z(st.pools.z_feasibility, f.z) ? 1 : 0;
      }
    }
    if (rec.eta_f <= feas_threshold) {
      TargetEvaluator evo(p, m.x, Target::kOptimality, tol);
      std::vector<Scenario> init;
      if (opt.warm_start) {
        init = st.pools.optimality.items();
        init.insert(init.end(), feas_support.begin(), feas_support.end());
      }
      const WcevResult o = compute_wcev(evo, init, opt.wcev);
      rec.eta_o = o.value;
      added += detail::augment(st.pools.optimality, o, opt.screen_zero);
      if (mixed) added += ScenarioPools::add_z(st.pools.z_optimality, o.z) ? 1 : 0;
      const double value = p.first_stage_cost(m.x) + o.value;
      if (value < st.ub - 1e-9) {
        st.ub = value;
        st.incumbent = m.x;
      }
    }
    rec.lb = st.lb;
    rec.ub = st.ub;
    rec.pool_o = st.pools.optimality.size();
    rec.pool_f = st.pools.feasibility.size();
    rec.wall_ms = clock.seconds() * 1000.0;
    st.trace.push_back(rec);

    if (detail::converged(st.lb, st.ub, tol)) {
      res.status = SolveStatus::kOptimal;
      break;
    }
    if (added == 0) {
      res.status = SolveStatus::kStalled;
      break;
    }
    if (clock.seconds() > opt.time_limit) {
      res.status = SolveStatus::kTimeLimit;
      break;
    }
  }
  res.x = st.incumbent;
  res.objective = st.ub;
  return res;
}

// Classical C&CG: one scenario per iteration, the maximizer of the reduced cost
// under the master's own dual prices. Upper bounds come from a full WCEV solve
// that does not feed the pool.
inline SolveResult solve_basic_ccg(const TwoStageProblem& p, const CcgOptions& opt = {}) {
  p.validate();
  if (!p.complete_recourse) {
    throw Error(ErrorCode::kRequiresFeasibleRecourse, "basic C&CG has no feasibility handling");
  }
  if (std::holds_alternative<MixedIntegerMomentAmbiguity>(p.ambiguity)) {
    throw Error(ErrorCode::kInvalidInput, "basic C&CG supports moment and Wasserstein sets");
  }
  const Tolerances& tol = opt.wcev.tol;
  tol.validate();
  const detail::Stopwatch clock;
  SolveResult res;
  res.state.pools = ScenarioPools(tol.dedup);
  SolveState& st = res.state;
  MasterOptions mopt = opt.master;
  mopt.pool_policy = PoolPolicy::kOptimalityOnly;

  for (st.t = 1;; ++st.t) {
    if (st.t > opt.iteration_limit) {
      res.status = SolveStatus::kIterationLimit;
      --st.t;
      break;
    }
    const double cutoff = detail::master_cutoff(st.ub, tol);
    const MasterSolution m = solve_master(build_master(p, st.pools, mopt), tol, cutoff);
    if (m.status == MilpStatus::kCutoff) {
      detail::close_at_cutoff(st, cutoff, clock.seconds() * 1000.0);
      res.status = SolveStatus::kOptimal;
      break;
    }
    if (m.status != MilpStatus::kOptimal && m.status != MilpStatus::kNodeLimit) {
      res.status = SolveStatus::kDroInfeasible;
      break;
    }
    st.lb = std::max(st.lb, m.lower_bound);
    TargetEvaluator ev(p, m.x, Target::kOptimality, tol);
    const DualBlock duals = m.optimality.empty() ? DualBlock{} : m.optimality.front();

    PricingResult worst;
    if (const auto* mom = std::get_if<MomentAmbiguity>(&p.ambiguity)) {
      const double alpha = duals.alpha.empty() ? 0.0 : duals.alpha[0];
      std::vector<double> beta = duals.beta;
      beta.resize(mom->gamma.size(), 0.0);
      for (double& b : beta) b = std::max(b, 0.0);
      worst = psp_solve(ev, mom->psi, alpha, beta);
    } else {
      const auto& w = std::get<WassersteinAmbiguity>(p.ambiguity);
      const double beta = duals.beta.empty() ? 0.0 : std::max(duals.beta[0], 0.0);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double alpha = duals.alpha.empty() ? 0.0 : duals.alpha[i];
        const PricingResult r = psp_wasserstein_solve(ev, w, i, alpha, beta);
        if (r.found && (!worst.found || r.reduced_cost > worst.reduced_cost + 1e-12)) worst = r;
      }
    }
    const std::size_t added = worst.found && st.pools.optimality.add(worst.scenario).second ? 1 : 0;

    const WcevResult o = compute_wcev(ev, {}, opt.wcev);
    const double value = p.first_stage_cost(m.x) + o.value;
    if (value < st.ub - 1e-9) {
      st.ub = value;
      st.incumbent = m.x;
    }
    IterationRecord rec;
    rec.t = st.t;
    rec.lb = st.lb;
    rec.ub = st.ub;
    rec.eta_o = o.value;
    rec.pool_o = st.pools.optimality.size();
    rec.wall_ms = clock.seconds() * 1000.0;
    st.trace.push_back(rec);

    if (detail::converged(st.lb, st.ub, tol)) {
      res.status = SolveStatus::kOptimal;
      break;
    }
    if (added == 0) {
      res.status = SolveStatus::kStalled;
      break;
    }
    if (clock.seconds() > opt.time_limit) {
      res.status = SolveStatus::kTimeLimit;
      break;
    }
  }
  res.x = st.incumbent;
  res.objective = st.ub;
  return res;
}

}  // namespace dro
