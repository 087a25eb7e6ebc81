#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dro/milp.hpp"
#include "dro/model.hpp"

namespace dro {

// Big-M keeps separate optimality and feasibility replicas and charges the
// optimality replica M per unit of shortfall; DualSingleLevel shares one
// replica per scenario and needs no penalty.
enum class MasterVariant { kBigM, kDualSingleLevel };

// Which scenarios index the optimality cutting plane. Feasibility rows always
// range over the merged pool.
enum class PoolPolicy { kOptimalityOnly, kMerged };

struct ScenarioPools {
  ScenarioPool optimality;
  ScenarioPool feasibility;
  std::vector<std::vector<double>> z_optimality;
  std::vector<std::vector<double>> z_feasibility;

  explicit ScenarioPools(double dedup = 1e-7) : optimality(dedup), feasibility(dedup) {}

  std::vector<Scenario> merged() const {
    ScenarioPool all(optimality.tolerance());
    all.add_all(feasibility.items());
    all.add_all(optimality.items());
    return all.items();
  }

  static bool add_z(std::vector<std::vector<double>>& set, const std::vector<double>& z) {
    for (const auto& w : set) {
      if (w == z) return false;
    }
    set.push_back(z);
    return true;
  }
};

struct MasterOptions {
  MasterVariant variant = MasterVariant::kDualSingleLevel;
  PoolPolicy pool_policy = PoolPolicy::kOptimalityOnly;
  double penalty = 0.0;  // big-M variant; 0 selects the problem's default dual bound
  // Binary first-stage points to exclude by no-good cuts.
  std::vector<std::vector<double>> excluded;
};

struct DualBlock {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> z;
};

struct MasterSolution {
  MilpStatus status = MilpStatus::kInfeasible;
  std::vector<double> x;
  double lower_bound = 0.0;  // f₁(x) + η at optimum
  double eta = 0.0;
  std::vector<DualBlock> optimality;
  std::vector<DualBlock> feasibility;
  long nodes = 0;
};

struct MasterModel {
  MilpProblem milp;
  std::size_t nx = 0;
  int eta = -1;
  struct BlockIndex {
    std::vector<int> alpha;
    std::vector<int> beta;
    std::vector<double> z;
  };
  std::vector<BlockIndex> optimality;
  std::vector<BlockIndex> feasibility;
};

namespace detail {

using Terms = std::vector<std::pair<int, double>>;

// One row α_sample + coefᵀβ >= weight · value of a dual block.
struct BlockRow {
  std::size_t sample = 0;
  std::vector<double> coef;
  double weight = 1.0;
  Terms value;
};

class MasterAssembler {
 public:
  struct Replica {
    std::vector<int> y;
    std::vector<int> slack;
  };

  MasterAssembler(const TwoStageProblem& p, const MasterOptions& opt) : p_(p) {
    const FirstStage& f = p.first;
    for (std::size_t j = 0; j < f.size(); ++j) b_.add_var(f.cost[j], f.lower[j], f.upper[j]);
    eta_ = b_.add_var(1.0, p.eta_lower_bound, kInf);
    for (std::size_t r = 0; r < f.rhs.size(); ++r) {
      Terms row;
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (f.constraints(r, j) != 0.0) row.push_back({static_cast<int>(j), f.constraints(r, j)});
      }
      b_.add_row(std::move(row), f.row_sense[r], f.rhs[r]);
    }
    for (const auto& point : opt.excluded) {
      Terms row;
      double rhs = 1.0;
      for (int j : f.binaries) {
        if (point[j] > 0.5) {
          row.push_back({j, -1.0});
          rhs -= 1.0;
        } else {
          row.push_back({j, 1.0});
        }
      }
      b_.add_row(std::move(row), RowSense::kGreaterEqual, rhs);
    }
  }

  LpBuilder& builder() { return b_; }
  int eta() const { return eta_; }

  // (y, ỹ) with B y + ỹ >= b₂ − A₂x − Hξ.
  Replica add_replica(const Scenario& xi, bool slack) {
    const Recourse& rc = p_.recourse;
    Replica r;
    for (std::size_t k = 0; k < rc.num_vars(); ++k) r.y.push_back(b_.add_var(0.0));
    if (slack) {
      for (std::size_t i = 0; i < rc.num_rows(); ++i) r.slack.push_back(b_.add_var(0.0));
    }
    const auto hx = rc.coupling_xi.multiply(xi.values);
    for (std::size_t i = 0; i < rc.num_rows(); ++i) {
      Terms row;
      for (std::size_t k = 0; k < rc.num_vars(); ++k) {
        if (rc.matrix(i, k) != 0.0) row.push_back({r.y[k], rc.matrix(i, k)});
      }
      if (slack) row.push_back({r.slack[i], 1.0});
      for (std::size_t j = 0; j < p_.first.size(); ++j) {
        if (rc.coupling_x(i, j) != 0.0) row.push_back({static_cast<int>(j), rc.coupling_x(i, j)});
      }
      b_.add_row(std::move(row), RowSense::kGreaterEqual, rc.rhs[i] - hx[i]);
    }
    return r;
  }

  Terms cost_terms(const Replica& r, double penalty) const {
    Terms t;
    for (std::size_t k = 0; k < r.y.size(); ++k) {
      if (p_.recourse.cost[k] != 0.0) t.push_back({r.y[k], p_.recourse.cost[k]});
    }
    for (int s : r.slack) t.push_back({s, penalty});
    return t;
  }

  static Terms shortfall_terms(const Replica& r) {
    Terms t;
    for (int s : r.slack) t.push_back({s, 1.0});
    return t;
  }

  // Optimality: η >= Σα + γᵀβ. Feasibility: 0 >= Σα + γᵀβ. Each row:
  // α_i + coefᵀβ >= weight · value.
  MasterModel::BlockIndex add_block(bool optimality, const std::vector<double>& gamma, std::size_t samples,
                                    const std::vector<BlockRow>& rows) {
    MasterModel::BlockIndex idx;
    for (std::size_t i = 0; i < samples; ++i) idx.alpha.push_back(b_.add_var(0.0, -kInf, kInf));
    for (std::size_t r = 0; r < gamma.size(); ++r) idx.beta.push_back(b_.add_var(0.0));
    Terms head;
    for (int a : idx.alpha) head.push_back({a, 1.0});
    for (std::size_t r = 0; r < gamma.size(); ++r) {
      if (gamma[r] != 0.0) head.push_back({idx.beta[r], gamma[r]});
    }
    if (optimality) {
      head.push_back({eta_, -1.0});
    }
    b_.add_row(std::move(head), RowSense::kLessEqual, 0.0);
    for (const BlockRow& row : rows) {
      Terms t{{idx.alpha[row.sample], 1.0}};
      for (std::size_t r = 0; r < row.coef.size(); ++r) {
        if (row.coef[r] != 0.0) t.push_back({idx.beta[r], row.coef[r]});
      }
      for (const auto& [v, c] : row.value) t.push_back({v, -row.weight * c});
      b_.add_row(std::move(t), RowSense::kGreaterEqual, 0.0);
    }
    return idx;
  }

  MasterModel finish() {
    MasterModel m;
    m.milp.lp = b_.build(ObjectiveSense::kMinimize);
    m.milp.binaries = p_.first.binaries;
    m.nx = p_.first.size();
    m.eta = eta_;
    return m;
  }

 private:
  const TwoStageProblem& p_;
  LpBuilder b_;
  int eta_ = -1;
};

// Replica values per scenario for the optimality and feasibility blocks.
struct ScenarioValues {
  std::vector<Scenario> optimality;
  std::vector<Terms> optimality_value;
  std::vector<Scenario> feasibility;
  std::vector<Terms> feasibility_value;
};

inline ScenarioValues build_replicas(MasterAssembler& a, const TwoStageProblem& p, const ScenarioPools& pools,
                                     const MasterOptions& opt) {
  ScenarioValues out;
  const bool slack = !p.complete_recourse;
  out.optimality = opt.pool_policy == PoolPolicy::kMerged ? pools.merged() : pools.optimality.items();
  if (slack) out.feasibility = pools.merged();
  if (opt.variant == MasterVariant::kBigM) {
    const double penalty = opt.penalty > 0.0 ? opt.penalty : p.default_dual_bound();
    for (const auto& s : out.optimality) out.optimality_value.push_back(a.cost_terms(a.add_replica(s, slack), penalty));
    for (const auto& s : out.feasibility) out.feasibility_value.push_back(a.shortfall_terms(a.add_replica(s, true)));
    return out;
  }
  // Shared replicas: feasibility scenarios are a superset of optimality ones.
  ScenarioPool index(pools.optimality.tolerance());
  std::vector<MasterAssembler::Replica> reps;
  const auto& all = slack ? out.feasibility : out.optimality;
  for (const auto& s : all) {
    index.add(s);
    reps.push_back(a.add_replica(s, slack));
  }
  for (const auto& s : out.optimality) out.optimality_value.push_back(a.cost_terms(reps[*index.find(s)], 0.0));
  for (std::size_t j = 0; j < out.feasibility.size(); ++j) {
    out.feasibility_value.push_back(MasterAssembler::shortfall_terms(reps[j]));
  }
  return out;
}

inline std::vector<BlockRow> moment_block_rows(const Matrix& psi, const std::vector<Scenario>& scenarios,
                                               const std::vector<Terms>& values) {
  std::vector<BlockRow> rows;
  for (std::size_t j = 0; j < scenarios.size(); ++j) rows.push_back({0, psi.multiply(scenarios[j].values), 1.0, values[j]});
  return rows;
}

// Optimality and feasibility dual blocks for the problem's ambiguity set.
// Wasserstein rows pair every pooled scenario with every empirical sample.
inline MasterModel add_ambiguity_blocks(MasterAssembler& a, const TwoStageProblem& p, const ScenarioPools& pools,
                                        const ScenarioValues& sv) {
  std::vector<MasterModel::BlockIndex> opt_blocks, feas_blocks;
  const bool has_o = !sv.optimality.empty();
  const bool has_f = !sv.feasibility.empty();
  if (const auto* m = std::get_if<MomentAmbiguity>(&p.ambiguity)) {
    if (has_o) opt_blocks.push_back(a.add_block(true, m->gamma, 1, moment_block_rows(m->psi, sv.optimality, sv.optimality_value)));
    if (has_f) feas_blocks.push_back(a.add_block(false, m->gamma, 1, moment_block_rows(m->psi, sv.feasibility, sv.feasibility_value)));
  } else if (const auto* w = std::get_if<WassersteinAmbiguity>(&p.ambiguity)) {
    const auto rows_for = [&](const std::vector<Scenario>& scen, const std::vector<Terms>& vals) {
      std::vector<BlockRow> rows;
      for (std::size_t i = 0; i < w->size(); ++i) {
        for (std::size_t j = 0; j < scen.size(); ++j) {
          const double d = w->weights[i] * norm_distance(scen[j], w->samples[i], w->norm);
          rows.push_back({i, {d}, w->weights[i], vals[j]});
        }
      }
      return rows;
    };
    if (has_o) opt_blocks.push_back(a.add_block(true, {w->radius}, w->size(), rows_for(sv.optimality, sv.optimality_value)));
    if (has_f) feas_blocks.push_back(a.add_block(false, {w->radius}, w->size(), rows_for(sv.feasibility, sv.feasibility_value)));
  } else {
    const auto& mi = std::get<MixedIntegerMomentAmbiguity>(p.ambiguity);
    const AffineMomentRows rows = moment_rows(mi);
    if (has_o) {
      const auto br = moment_block_rows(rows.psi, sv.optimality, sv.optimality_value);
      for (const auto& z : pools.z_optimality) {
        opt_blocks.push_back(a.add_block(true, rows.gamma(z), 1, br));
        opt_blocks.back().z = z;
      }
    }
    if (has_f) {
      const auto br = moment_block_rows(rows.psi, sv.feasibility, sv.feasibility_value);
      // Shared replicas need feasibility rows for every pooled z, not only Ẑᶠ.
      auto zs = pools.z_feasibility;
      for (const auto& z : pools.z_optimality) ScenarioPools::add_z(zs, z);
      for (const auto& z : zs) {
        feas_blocks.push_back(a.add_block(false, rows.gamma(z), 1, br));
        feas_blocks.back().z = z;
      }
    }
  }
  MasterModel model = a.finish();
  model.optimality = std::move(opt_blocks);
  model.feasibility = std::move(feas_blocks);
  return model;
}

inline MasterModel assemble_master(const TwoStageProblem& p, const ScenarioPools& pools, const MasterOptions& opt) {
  MasterAssembler a(p, opt);
  const ScenarioValues sv = build_replicas(a, p, pools, opt);
  return add_ambiguity_blocks(a, p, pools, sv);
}

}  // namespace detail

// Moment-set master over the current pools.
inline MasterModel mmp_build(const TwoStageProblem& p, const ScenarioPools& pools, const MasterOptions& opt = {}) {
  if (!std::holds_alternative<MomentAmbiguity>(p.ambiguity)) throw Error(ErrorCode::kInvalidInput, "moment master");
  return detail::assemble_master(p, pools, opt);
}

// Wasserstein master: one α per empirical sample and a single radius dual.
inline MasterModel mmp_wasserstein_build(const TwoStageProblem& p, const ScenarioPools& pools,
                                         const MasterOptions& opt = {}) {
  if (!std::holds_alternative<WassersteinAmbiguity>(p.ambiguity)) {
    throw Error(ErrorCode::kInvalidInput, "wasserstein master");
  }
  return detail::assemble_master(p, pools, opt);
}

// Mixed-integer master: one dual block per pooled z, sharing the replicas.
inline MasterModel mmp_mixed_integer_build(const TwoStageProblem& p, const ScenarioPools& pools,
                                           const MasterOptions& opt = {}) {
  if (!std::holds_alternative<MixedIntegerMomentAmbiguity>(p.ambiguity)) {
    throw Error(ErrorCode::kInvalidInput, "mixed-integer master");
  }
  return detail::assemble_master(p, pools, opt);
}

inline MasterModel build_master(const TwoStageProblem& p, const ScenarioPools& pools, const MasterOptions& opt = {}) {
  return detail::assemble_master(p, pools, opt);
}

// `cutoff` skips first-stage points that cannot beat it; kCutoff then proves
// the master bound is at least `cutoff`.
inline MasterSolution solve_master(const MasterModel& model, const Tolerances& tol, double cutoff = kInf) {
  MilpOptions mo = tol.milp();
  mo.cutoff = cutoff;
  const MilpSolution s = solve_milp(model.milp, mo);
  MasterSolution out;
  out.status = s.status;
  out.nodes = s.nodes;
  if (!s.has_incumbent()) return out;
  out.x.assign(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(model.nx));
  // Snap binaries so that downstream evaluations see exact 0/1.
  for (int j : model.milp.binaries) out.x[j] = std::round(out.x[j]);
  out.lower_bound = s.objective;
  out.eta = s.x[model.eta];
  const auto decode = [&](const std::vector<MasterModel::BlockIndex>& blocks) {
    std::vector<DualBlock> res;
    for (const auto& b : blocks) {
      DualBlock d;
      for (int v : b.alpha) d.alpha.push_back(s.x[v]);
      for (int v : b.beta) d.beta.push_back(s.x[v]);
      d.z = b.z;
      res.push_back(std::move(d));
    }
    return res;
  };
  out.optimality = decode(model.optimality);
  out.feasibility = decode(model.feasibility);
  return out;
}

}  // namespace dro
