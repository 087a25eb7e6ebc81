#pragma once

#include <vector>

#include "dro/ccg.hpp"

namespace dro {

enum class BendersMode { kBasic, kDro };
enum class CutKind { kOptimality, kFeasibility };

// θ_ξ >= πᵀ(b₂ − A₂x − Hξ), valid for every x because π is dual feasible.
struct BendersCut {
  Scenario scenario;
  std::vector<double> pi;
  CutKind kind = CutKind::kOptimality;

  double value(const TwoStageProblem& p, std::span<const double> x) const {
    return dot(pi, p.recourse_rhs(x, scenario));
  }
};

// Bᵀπ <= c₂ (optimality) or <= 0 (feasibility, with π <= 1), π >= 0.
inline void check_cut(const TwoStageProblem& p, const BendersCut& cut, double tol = 1e-7) {
  const Recourse& rc = p.recourse;
  for (double v : cut.pi) {
    if (v < -tol) throw Error(ErrorCode::kOracleFailure, "negative recourse dual in a cut");
    if (cut.kind == CutKind::kFeasibility && v > 1.0 + tol) {
      throw Error(ErrorCode::kOracleFailure, "feasibility dual above 1");
    }
  }
  for (std::size_t k = 0; k < rc.num_vars(); ++k) {
    double col = 0.0;
    for (std::size_t i = 0; i < rc.num_rows(); ++i) col += rc.matrix(i, k) * cut.pi[i];
    const double bound = cut.kind == CutKind::kOptimality ? rc.cost[k] : 0.0;
    if (col > bound + tol * (1.0 + std::abs(bound))) throw Error(ErrorCode::kOracleFailure, "cut dual infeasible");
  }
}

struct BendersResult : SolveResult {
  std::vector<BendersCut> cut_list;
};

namespace detail {

// Cuts grouped by scenario with duplicate duals dropped.
class CutStore {
 public:
  explicit CutStore(double dedup) : scenarios_o_(dedup), scenarios_f_(dedup) {}

  bool add(BendersCut cut) {
    ScenarioPool& pool = cut.kind == CutKind::kOptimality ? scenarios_o_ : scenarios_f_;
    auto& lists = cut.kind == CutKind::kOptimality ? cuts_o_ : cuts_f_;
    const auto [idx, inserted] = pool.add(cut.scenario);
    if (inserted) lists.emplace_back();
    for (std::size_t c : lists[idx]) {
      if (linf(all_[c].pi, cut.pi) <= 1e-9) return false;
    }
    lists[idx].push_back(all_.size());
    all_.push_back(std::move(cut));
    return true;
  }

  const std::vector<BendersCut>& all() const { return all_; }
  const ScenarioPool& optimality_scenarios() const { return scenarios_o_; }
  const ScenarioPool& feasibility_scenarios() const { return scenarios_f_; }
  const std::vector<std::vector<std::size_t>>& optimality_cuts() const { return cuts_o_; }
  const std::vector<std::vector<std::size_t>>& feasibility_cuts() const { return cuts_f_; }

 private:
  static double linf(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  }

  ScenarioPool scenarios_o_;
  ScenarioPool scenarios_f_;
  std::vector<std::vector<std::size_t>> cuts_o_, cuts_f_;
  std::vector<BendersCut> all_;
};

// The dual-block master with each recourse replica replaced by a θ variable
// bounded below by the accumulated cuts.
inline MasterModel benders_master(const TwoStageProblem& p, const ScenarioPools& pools, const CutStore& store,
                                  const MasterOptions& opt) {
  MasterAssembler a(p, opt);
  LpBuilder& b = a.builder();
  const auto theta_for = [&](const Scenario& s, const ScenarioPool& scen, const std::vector<std::vector<std::size_t>>& ids) {
    const int theta = b.add_var(0.0);
    if (const auto idx = scen.find(s)) {
      for (std::size_t c : ids[*idx]) {
        const BendersCut& cut = store.all()[c];
        // θ + πᵀA₂x >= πᵀ(b₂ − Hξ)
        Terms row{{theta, 1.0}};
        const Recourse& rc = p.recourse;
        for (std::size_t j = 0; j < p.first.size(); ++j) {
          double coef = 0.0;
          for (std::size_t i = 0; i < rc.num_rows(); ++i) coef += cut.pi[i] * rc.coupling_x(i, j);
          if (coef != 0.0) row.push_back({static_cast<int>(j), coef});
        }
        const auto hx = rc.coupling_xi.multiply(cut.scenario.values);
        double rhs = 0.0;
        for (std::size_t i = 0; i < rc.num_rows(); ++i) rhs += cut.pi[i] * (rc.rhs[i] - hx[i]);
        b.add_row(std::move(row), RowSense::kGreaterEqual, rhs);
      }
    }
    return Terms{{theta, 1.0}};
  };
  ScenarioValues sv;
  sv.optimality = pools.optimality.items();
  for (const auto& s : sv.optimality) {
    sv.optimality_value.push_back(theta_for(s, store.optimality_scenarios(), store.optimality_cuts()));
  }
  if (!p.complete_recourse) {
    sv.feasibility = pools.feasibility.items();
    for (const auto& s : sv.feasibility) {
      sv.feasibility_value.push_back(theta_for(s, store.feasibility_scenarios(), store.feasibility_cuts()));
    }
  }
  return add_ambiguity_blocks(a, p, pools, sv);
}

}  // namespace detail

// Benders baselines. DRO mode cuts at every support scenario of the WCEV
// solutions; basic mode adds one optimality cut per iteration at the scenario
// of largest reduced cost under the master's dual prices.
inline BendersResult solve_benders(const TwoStageProblem& p, BendersMode mode, const CcgOptions& opt = {}) {
  p.validate();
  if (mode == BendersMode::kBasic && !p.complete_recourse) {
    throw Error(ErrorCode::kRequiresFeasibleRecourse, "basic Benders has no feasibility handling");
  }
  if (mode == BendersMode::kBasic && std::holds_alternative<MixedIntegerMomentAmbiguity>(p.ambiguity)) {
    throw Error(ErrorCode::kInvalidInput, "basic Benders supports moment and Wasserstein sets");
  }
  const Tolerances& tol = opt.wcev.tol;
  tol.validate();
  const detail::Stopwatch clock;
  const bool mixed = std::holds_alternative<MixedIntegerMomentAmbiguity>(p.ambiguity);
  const double feas_threshold = detail::feasibility_threshold(p, tol);
  BendersResult res;
  res.state.pools = ScenarioPools(tol.dedup);
  SolveState& st = res.state;
  detail::CutStore store(tol.dedup);

  const auto cut_at = [&](RecourseEvaluator& rev, std::span<const double> x, const Scenario& s, CutKind kind,
                          double penalty) {
    const RecourseValue v = kind == CutKind::kOptimality ? rev.evaluate(x, s, RecourseMode::kPenalized, penalty)
                                                         : rev.evaluate(x, s, RecourseMode::kFeasibility);
    BendersCut cut{s, v.duals, kind};
    check_cut(p, cut);
    return store.add(std::move(cut)) ? 1 : 0;
  };

  for (st.t = 1;; ++st.t) {
    if (st.t > opt.iteration_limit) {
      res.status = SolveStatus::kIterationLimit;
      --st.t;
      break;
    }
    const double cutoff = detail::master_cutoff(st.ub, tol);
    const MasterSolution m = solve_master(detail::benders_master(p, st.pools, store, opt.master), tol, cutoff);
    if (m.status == MilpStatus::kCutoff) {
      detail::close_at_cutoff(st, cutoff, clock.seconds() * 1000.0);
      st.trace.back().cuts = store.all().size();
      res.status = SolveStatus::kOptimal;
      break;
    }
    if (m.status != MilpStatus::kOptimal && m.status != MilpStatus::kNodeLimit) {
      res.status = SolveStatus::kDroInfeasible;
      break;
    }
    st.lb = std::max(st.lb, m.lower_bound);
    RecourseEvaluator rev(p, tol);
    IterationRecord rec;
    rec.t = st.t;
    std::size_t added = 0;
    std::vector<Scenario> feas_support;

    if (!p.complete_recourse) {
      TargetEvaluator evf(p, m.x, Target::kFeasibility, tol);
      const WcevResult f = compute_wcev(evf, opt.warm_start ? st.pools.feasibility.items() : std::vector<Scenario>{},
                                        opt.wcev);
      rec.eta_f = f.value;
      feas_support = f.distribution.scenarios;
      if (f.value > feas_threshold) {
        for (const auto& s : f.distribution.scenarios) {
          st.pools.feasibility.add(s);
          added += cut_at(rev, m.x, s, CutKind::kFeasibility, 0.0);
        }
        if (mixed) added += ScenarioPools::add_z(st.pools.z_feasibility, f.z) ? 1 : 0;
      }
    }
    if (rec.eta_f <= feas_threshold) {
      TargetEvaluator evo(p, m.x, Target::kOptimality, tol);
      std::vector<Scenario> init;
      if (opt.warm_start && mode == BendersMode::kDro) {
        init = st.pools.optimality.items();
        init.insert(init.end(), feas_support.begin(), feas_support.end());
      }
      const WcevResult o = compute_wcev(evo, init, opt.wcev);
      rec.eta_o = o.value;
      if (mode == BendersMode::kDro) {
        for (const auto& s : o.distribution.scenarios) {
          st.pools.optimality.add(s);
          added += cut_at(rev, m.x, s, CutKind::kOptimality, evo.penalty());
        }
        if (mixed) added += ScenarioPools::add_z(st.pools.z_optimality, o.z) ? 1 : 0;
      } else {
        const DualBlock duals = m.optimality.empty() ? DualBlock{} : m.optimality.front();
        PricingResult worst;
        if (const auto* mom = std::get_if<MomentAmbiguity>(&p.ambiguity)) {
          std::vector<double> beta = duals.beta;
          beta.resize(mom->gamma.size(), 0.0);
          for (double& v : beta) v = std::max(v, 0.0);
          worst = psp_solve(evo, mom->psi, duals.alpha.empty() ? 0.0 : duals.alpha[0], beta);
        } else {
          const auto& w = std::get<WassersteinAmbiguity>(p.ambiguity);
          const double beta = duals.beta.empty() ? 0.0 : std::max(duals.beta[0], 0.0);
          for (std::size_t i = 0; i < w.size(); ++i) {
            const PricingResult r = psp_wasserstein_solve(evo, w, i, duals.alpha.empty() ? 0.0 : duals.alpha[i], beta);
            if (r.found && (!worst.found || r.reduced_cost > worst.reduced_cost + 1e-12)) worst = r;
          }
        }
        if (worst.found) {
          st.pools.optimality.add(worst.scenario);
          added += cut_at(rev, m.x, worst.scenario, CutKind::kOptimality, evo.penalty());
        }
      }
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
    rec.cuts = store.all().size();
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
  res.cuts = store.all().size();
  res.cut_list = store.all();
  return res;
}

}  // namespace dro
