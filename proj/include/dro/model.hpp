#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dro/lp.hpp"
#include "dro/milp.hpp"

namespace dro {

// ---------------------------------------------------------------- scenarios

enum class ScenarioKind { kContinuous, kBinary };

struct Scenario {
  std::vector<double> values;
  ScenarioKind kind = ScenarioKind::kContinuous;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline double linf_distance(const Scenario& a, const Scenario& b) {
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "scenario length mismatch");
  }
  double d = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    d = std::max(d, std::abs(a.values[k] - b.values[k]));
  }
  return d;
}

// Deduplicated scenario list; identity is L-infinity distance <= tol.
class ScenarioPool {
 public:
  explicit ScenarioPool(double tol = 1e-7) : tol_(tol) {}

  std::optional<std::size_t> find(const Scenario& s) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (linf_distance(items_[i], s) <= tol_) return i;
    }
    return std::nullopt;
  }

  bool contains(const Scenario& s) const { return find(s).has_value(); }

  // Returns the index of s and whether it was newly inserted.
  std::pair<std::size_t, bool> add(const Scenario& s) {
    if (auto i = find(s)) return {*i, false};
    items_.push_back(s);
    return {items_.size() - 1, true};
  }

  void add_all(std::span<const Scenario> list) {
    for (const auto& s : list) add(s);
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Scenario& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<Scenario>& items() const { return items_; }
  double tolerance() const { return tol_; }

 private:
  double tol_;
  std::vector<Scenario> items_;
};

// ------------------------------------------------------------- sample space

struct BoxSpace {
  std::vector<double> lower;
  std::vector<double> upper;
};

// {u in {0,1}^dimension : sum u <= max_ones}
struct BinaryCardinalitySpace {
  int dimension = 0;
  int max_ones = 0;
};

using SampleSpace = std::variant<BoxSpace, BinaryCardinalitySpace>;

inline std::size_t space_dimension(const SampleSpace& space) {
  if (const auto* box = std::get_if<BoxSpace>(&space)) return box->lower.size();
  return static_cast<std::size_t>(std::get<BinaryCardinalitySpace>(space).dimension);
}

inline ScenarioKind space_kind(const SampleSpace& space) {
  return std::holds_alternative<BoxSpace>(space) ? ScenarioKind::kContinuous : ScenarioKind::kBinary;
}

inline void validate_space(const SampleSpace& space) {
  if (const auto* box = std::get_if<BoxSpace>(&space)) {
    if (box->lower.size() != box->upper.size() || box->lower.empty()) {
      throw Error(ErrorCode::kDimensionMismatch, "box bounds");
    }
    for (std::size_t k = 0; k < box->lower.size(); ++k) {
      if (!(box->lower[k] <= box->upper[k]) || !std::isfinite(box->lower[k]) ||
          !std::isfinite(box->upper[k])) {
        throw Error(ErrorCode::kInvalidBounds, "box coordinate " + std::to_string(k));
      }
    }
    return;
  }
  const auto& bc = std::get<BinaryCardinalitySpace>(space);
  if (bc.dimension <= 0 || bc.max_ones < 0 || bc.max_ones > bc.dimension) {
    throw Error(ErrorCode::kInvalidBounds, "binary cardinality space");
  }
}

inline bool space_contains(const SampleSpace& space, const Scenario& s, double tol = 1e-7) {
  if (s.values.size() != space_dimension(space)) return false;
  if (const auto* box = std::get_if<BoxSpace>(&space)) {
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      if (s.values[k] < box->lower[k] - tol || s.values[k] > box->upper[k] + tol) return false;
    }
    return true;
  }
  const auto& bc = std::get<BinaryCardinalitySpace>(space);
  double ones = 0.0;
  for (double v : s.values) {
    if (std::abs(v) > tol && std::abs(v - 1.0) > tol) return false;
    ones += v;
  }
  return ones <= bc.max_ones + tol;
}

// Box vertices, or every point of a binary cardinality space, in mask order.
inline std::vector<Scenario> enumerate_space(const SampleSpace& space, std::size_t cap) {
  const std::size_t n = space_dimension(space);
  if (n >= 63 || (1ULL << n) > cap) {
    throw Error(ErrorCode::kEnumerationCapExceeded,
                "sample space with " + std::to_string(n) + " coordinates");
  }
  std::vector<Scenario> out;
  const ScenarioKind kind = space_kind(space);
  const auto* box = std::get_if<BoxSpace>(&space);
  const auto* bc = std::get_if<BinaryCardinalitySpace>(&space);
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    if (bc && std::popcount(mask) > bc->max_ones) continue;
    Scenario s;
    s.kind = kind;
    s.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const bool hi = (mask >> k) & 1ULL;
      s.values[k] = box ? (hi ? box->upper[k] : box->lower[k]) : (hi ? 1.0 : 0.0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ------------------------------------------------------------ distributions

struct DiscreteDistribution {
  std::vector<Scenario> scenarios;
  std::vector<double> probabilities;

  std::size_t size() const { return scenarios.size(); }

  void validate(double dedup_tol = 1e-7) const {
    if (scenarios.size() != probabilities.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "distribution sizes");
    }
    double total = 0.0;
    for (double p : probabilities) {
      if (p < 0.0) throw Error(ErrorCode::kModelValidation, "negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::kModelValidation, "probabilities do not sum to one");
    }
    for (std::size_t a = 0; a < scenarios.size(); ++a) {
      for (std::size_t b = a + 1; b < scenarios.size(); ++b) {
        if (linf_distance(scenarios[a], scenarios[b]) <= dedup_tol) {
          throw Error(ErrorCode::kModelValidation, "duplicate scenario in distribution");
        }
      }
    }
  }
};

// -------------------------------------------------------------- ambiguity

// E[Psi xi] <= gamma, row-wise.
struct MomentAmbiguity {
  Matrix psi;
  std::vector<double> gamma;

  std::size_t rows() const { return gamma.size(); }
};

enum class WassersteinNorm { kL1, kL2 };

// Conditional (per-sample) form: each empirical sample i moves its weight to a
// conditional distribution; the weighted mean transport distance is <= radius.
struct WassersteinAmbiguity {
  std::vector<Scenario> samples;
  std::vector<double> weights;
  double radius = 0.0;
  WassersteinNorm norm = WassersteinNorm::kL1;

  std::size_t size() const { return samples.size(); }
};

// lower_i - theta_i z_i <= E[Psi_i xi] <= upper_i - theta_i z_i for a binary z
// drawn from the set {z : z_constraints z (sense) z_rhs}. Infinite lower or
// upper entries drop the corresponding side.
struct MixedIntegerMomentAmbiguity {
  Matrix psi;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> theta;
  Matrix z_constraints;
  std::vector<RowSense> z_sense;
  std::vector<double> z_rhs;

  std::size_t num_z() const { return theta.size(); }
};

using AmbiguitySpec = std::variant<MomentAmbiguity, WassersteinAmbiguity, MixedIntegerMomentAmbiguity>;

inline double norm_distance(const Scenario& a, const Scenario& b, WassersteinNorm norm) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double d = a.values[k] - b.values[k];
    s += norm == WassersteinNorm::kL1 ? std::abs(d) : d * d;
  }
  return norm == WassersteinNorm::kL1 ? s : std::sqrt(s);
}

// Affine moment rows Psi xi <= gamma0 + Gamma z; the moment set is the q = 0 case.
struct AffineMomentRows {
  Matrix psi;
  std::vector<double> gamma0;
  Matrix gamma_z;  // rows x q

  std::size_t rows() const { return gamma0.size(); }

  std::vector<double> gamma(std::span<const double> z) const {
    std::vector<double> g = gamma0;
    for (std::size_t r = 0; r < g.size(); ++r) {
      for (std::size_t q = 0; q < z.size(); ++q) g[r] += gamma_z(r, q) * z[q];
    }
    return g;
  }

  std::vector<double> psi_of(const Scenario& s) const { return psi.multiply(s.values); }
};

inline AffineMomentRows moment_rows(const MomentAmbiguity& a) {
  return {a.psi, a.gamma, Matrix(a.gamma.size(), 0)};
}

inline AffineMomentRows moment_rows(const MixedIntegerMomentAmbiguity& a) {
  AffineMomentRows rows;
  const std::size_t m = a.psi.rows();
  const std::size_t q = a.num_z();
  std::vector<std::vector<double>> gz;
  for (std::size_t i = 0; i < m; ++i) {
    const auto psi_row = a.psi.row(i);
    if (std::isfinite(a.upper[i])) {
      rows.psi.append_row(psi_row);
      rows.gamma0.push_back(a.upper[i]);
      std::vector<double> g(q, 0.0);
      g[i] = -a.theta[i];
      gz.push_back(g);
    }
    if (std::isfinite(a.lower[i])) {
      std::vector<double> neg(psi_row.begin(), psi_row.end());
      for (double& v : neg) v = -v;
      rows.psi.append_row(neg);
      rows.gamma0.push_back(-a.lower[i]);
      std::vector<double> g(q, 0.0);
      g[i] = a.theta[i];
      gz.push_back(g);
    }
  }
  rows.gamma_z = Matrix(gz.size(), q);
  for (std::size_t r = 0; r < gz.size(); ++r) {
    for (std::size_t c = 0; c < q; ++c) rows.gamma_z(r, c) = gz[r][c];
  }
  return rows;
}

inline bool z_feasible(const MixedIntegerMomentAmbiguity& a, std::span<const double> z) {
  for (std::size_t r = 0; r < a.z_rhs.size(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) s += a.z_constraints(r, c) * z[c];
    const double rhs = a.z_rhs[r];
    switch (a.z_sense[r]) {
      case RowSense::kLessEqual: if (s > rhs + 1e-9) return false; break;
      case RowSense::kGreaterEqual: if (s < rhs - 1e-9) return false; break;
      case RowSense::kEqual: if (std::abs(s - rhs) > 1e-9) return false; break;
    }
  }
  return true;
}

// All z in Z, in mask order.
inline std::vector<std::vector<double>> enumerate_z(const MixedIntegerMomentAmbiguity& a,
                                                    std::size_t cap = 1u << 20) {
  const std::size_t q = a.num_z();
  if (q >= 63 || (1ULL << q) > cap) {
    throw Error(ErrorCode::kEnumerationCapExceeded, "z dimension " + std::to_string(q));
  }
  std::vector<std::vector<double>> out;
  for (std::uint64_t mask = 0; mask < (1ULL << q); ++mask) {
    std::vector<double> z(q);
    for (std::size_t c = 0; c < q; ++c) z[c] = (mask >> c) & 1ULL ? 1.0 : 0.0;
    if (z_feasible(a, z)) out.push_back(std::move(z));
  }
  return out;
}

inline void validate_ambiguity(const AmbiguitySpec& spec, std::size_t dim) {
  if (const auto* m = std::get_if<MomentAmbiguity>(&spec)) {
    if (m->gamma.empty()) throw Error(ErrorCode::kModelValidation, "moment set needs m >= 1");
    if (m->psi.rows() != m->gamma.size() || m->psi.cols() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "moment psi shape");
    }
    return;
  }
  if (const auto* w = std::get_if<WassersteinAmbiguity>(&spec)) {
    if (w->samples.empty() || w->samples.size() != w->weights.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "wasserstein samples/weights");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < w->samples.size(); ++i) {
      if (w->samples[i].values.size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "wasserstein sample length");
      }
      if (!(w->weights[i] > 0.0)) throw Error(ErrorCode::kModelValidation, "sample weight must be > 0");
      total += w->weights[i];
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::kModelValidation, "sample weights sum");
    if (!(w->radius >= 0.0)) throw Error(ErrorCode::kModelValidation, "radius must be >= 0");
    return;
  }
  const auto& mi = std::get<MixedIntegerMomentAmbiguity>(spec);
  const std::size_t m = mi.psi.rows();
  if (m == 0 || mi.psi.cols() != dim || mi.lower.size() != m || mi.upper.size() != m ||
      mi.theta.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "mixed-integer moment shape");
  }
  if (mi.z_rhs.size() != mi.z_sense.size() ||
      (!mi.z_rhs.empty() && (mi.z_constraints.rows() != mi.z_rhs.size() ||
                             mi.z_constraints.cols() != mi.num_z()))) {
    throw Error(ErrorCode::kDimensionMismatch, "z constraint shape");
  }
  if (enumerate_z(mi).empty()) throw Error(ErrorCode::kModelValidation, "z set is empty");
}

// ----------------------------------------------------------- two-stage model

// min cost x s.t. constraints x (sense) rhs, bounds, x_b binary for b in binaries.
struct FirstStage {
  std::vector<double> cost;
  Matrix constraints;
  std::vector<RowSense> row_sense;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> binaries;
  std::vector<std::string> names;

  std::size_t size() const { return cost.size(); }
};

// Q(x, xi) = min c y s.t. B y >= b - A x - H xi, y >= 0.
struct Recourse {
  std::vector<double> cost;
  Matrix matrix;
  std::vector<double> rhs;
  Matrix coupling_x;
  Matrix coupling_xi;

  std::size_t num_vars() const { return cost.size(); }
  std::size_t num_rows() const { return rhs.size(); }
};

struct TwoStageProblem {
  FirstStage first;
  Recourse recourse;
  SampleSpace space;
  AmbiguitySpec ambiguity;
  // Declares 𝒴(x, ξ) nonempty for every x and ξ; skips feasibility machinery.
  bool complete_recourse = false;
  // Lower bound on the worst-case expected recourse cost.
  double eta_lower_bound = 0.0;

  void validate() const {
    const std::size_t nx = first.size();
    if (first.lower.size() != nx || first.upper.size() != nx || first.rhs.size() != first.row_sense.size() ||
        (!first.rhs.empty() && (first.constraints.rows() != first.rhs.size() || first.constraints.cols() != nx))) {
      throw Error(ErrorCode::kDimensionMismatch, "first-stage shape");
    }
    if (!first.names.empty() && first.names.size() != nx) {
      throw Error(ErrorCode::kDimensionMismatch, "first-stage names");
    }
    for (int b : first.binaries) {
      if (b < 0 || static_cast<std::size_t>(b) >= nx) {
        throw Error(ErrorCode::kDimensionMismatch, "binary index out of range");
      }
    }
    validate_space(space);
    const std::size_t dim = space_dimension(space);
    const std::size_t ny = recourse.num_vars();
    const std::size_t mr = recourse.num_rows();
    if (ny == 0 || recourse.matrix.rows() != mr || recourse.matrix.cols() != ny ||
        recourse.coupling_x.rows() != mr || recourse.coupling_x.cols() != nx ||
        recourse.coupling_xi.rows() != mr || recourse.coupling_xi.cols() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "recourse shape");
    }
    for (double c : recourse.cost) {
      if (c < 0.0) {
        throw Error(ErrorCode::kModelValidation,
                    "recourse costs must be nonnegative so that Q(x, xi) > -inf");
      }
    }
    validate_ambiguity(ambiguity, dim);
  }

  double first_stage_cost(std::span<const double> x) const { return dot(first.cost, x); }

  // b - A x - H xi
  std::vector<double> recourse_rhs(std::span<const double> x, const Scenario& xi) const {
    std::vector<double> r = recourse.rhs;
    const auto ax = recourse.coupling_x.multiply(x);
    const auto hx = recourse.coupling_xi.multiply(xi.values);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ax[i] + hx[i];
    return r;
  }

  // Default bound on recourse duals; doubles as the shortfall penalty that
  // makes Q finite everywhere without changing it where it is finite.
  double default_dual_bound() const {
    double c = 0.0;
    for (double v : recourse.cost) c = std::max(c, std::abs(v));
    return std::max(2.0 * c, 1.0);
  }

  // Magnitude of the uncertain right-hand side; scales the feasibility test.
  double demand_scale() const {
    const std::size_t dim = space_dimension(space);
    double total = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      double mag = 1.0;
      if (const auto* box = std::get_if<BoxSpace>(&space)) {
        mag = std::max(std::abs(box->lower[k]), std::abs(box->upper[k]));
      }
      double h = 0.0;
      for (std::size_t i = 0; i < recourse.num_rows(); ++i) h = std::max(h, std::abs(recourse.coupling_xi(i, k)));
      total += mag * h;
    }
    return total;
  }
};

// --------------------------------------------------------------- tolerances

struct Tolerances {
  double cg_eps = 1e-6;        // relative: stop pricing when v* <= cg_eps (1 + |eta|)
  double outer_tol = 5e-3;     // relative: stop when UB - LB <= outer_tol max(1, |UB|)
  double feas_eps = 1e-6;      // scaled by 1 + demand scale
  double big_m = 1e4;          // shortfall penalty of the big-M master
  double dual_bound = 0.0;     // recourse dual bound; 0 selects the problem default
  double feas = 1e-7;
  double opt = 1e-7;
  double int_tol = 1e-6;
  double pivot = 1e-10;
  double dedup = 1e-7;
  double milp_gap = 1e-9;
  long node_limit = 500000;
  int cg_iteration_limit = 5000;
  std::size_t enumeration_cap = 1u << 16;

  LpTolerances lp() const { return {feas, opt, pivot}; }

  MilpOptions milp() const {
    MilpOptions o;
    o.gap = milp_gap;
    o.abs_gap = milp_gap;
    o.node_limit = node_limit;
    o.int_tol = int_tol;
    o.lp = lp();
    return o;
  }

  void validate() const {
    for (double v : {cg_eps, outer_tol, feas_eps, big_m, feas, opt, int_tol, pivot, dedup, milp_gap}) {
      if (!(v > 0.0)) throw Error(ErrorCode::kModelValidation, "tolerances must be positive");
    }
    if (dual_bound < 0.0) throw Error(ErrorCode::kModelValidation, "dual bound must be >= 0");
  }
};

// ------------------------------------------------------ recourse evaluation

struct RecourseValue {
  bool feasible = false;  // false encodes Q = +inf
  double value = 0.0;
  std::vector<double> duals;  // pi >= 0, one per recourse row
  std::vector<double> y;
};

enum class RecourseMode { kPlain, kPenalized, kFeasibility };

// Solves recourse LPs for one problem, reusing the previous basis between
// calls. Not thread-safe; give each thread its own evaluator.
class RecourseEvaluator {
 public:
  RecourseEvaluator(const TwoStageProblem& problem, const Tolerances& tol = {})
      : problem_(&problem), tol_(tol) {}

  RecourseValue evaluate(std::span<const double> x, const Scenario& xi, RecourseMode mode,
                         double penalty = 0.0) {
    Slot& slot = slot_for(mode, penalty);
    const auto rhs = problem_->recourse_rhs(x, xi);
    slot.engine->set_rhs(rhs);
    LpSolution s = slot.engine->solve(slot.lower, slot.upper, slot.basis.status.empty() ? nullptr : &slot.basis);
    RecourseValue out;
    if (s.status == LpStatus::kUnbounded) {
      throw Error(ErrorCode::kModelValidation, "recourse LP unbounded");
    }
    if (s.status == LpStatus::kInfeasible) {
      slot.basis = {};
      return out;
    }
    slot.basis = s.basis;
    out.feasible = true;
    out.value = s.objective;
    out.duals = std::move(s.duals);
    for (double& d : out.duals) d = std::max(d, 0.0);
    out.y.assign(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(problem_->recourse.num_vars()));
    return out;
  }

  const TwoStageProblem& problem() const { return *problem_; }

 private:
  struct Slot {
    double penalty = -1.0;
    std::unique_ptr<detail::SimplexEngine> engine;
    std::vector<double> lower, upper;
    Basis basis;
  };

  Slot& slot_for(RecourseMode mode, double penalty) {
    Slot& slot = slots_[static_cast<int>(mode)];
    if (slot.engine && (mode != RecourseMode::kPenalized || slot.penalty == penalty)) return slot;
    const Recourse& rc = problem_->recourse;
    const std::size_t ny = rc.num_vars();
    const std::size_t mr = rc.num_rows();
    const bool slacks = mode != RecourseMode::kPlain;
    LpProblem lp;
    lp.sense = ObjectiveSense::kMinimize;
    const std::size_t nv = ny + (slacks ? mr : 0);
    lp.cost.assign(nv, 0.0);
    if (mode != RecourseMode::kFeasibility) {
      for (std::size_t j = 0; j < ny; ++j) lp.cost[j] = rc.cost[j];
    }
    if (slacks) {
      const double w = mode == RecourseMode::kPenalized ? penalty : 1.0;
      for (std::size_t i = 0; i < mr; ++i) lp.cost[ny + i] = w;
    }
    lp.constraints = Matrix(mr, nv);
    for (std::size_t i = 0; i < mr; ++i) {
      for (std::size_t j = 0; j < ny; ++j) lp.constraints(i, j) = rc.matrix(i, j);
      if (slacks) lp.constraints(i, ny + i) = 1.0;
    }
    lp.row_sense.assign(mr, RowSense::kGreaterEqual);
    lp.rhs.assign(mr, 0.0);
    lp.lower.assign(nv, 0.0);
    lp.upper.assign(nv, kInf);
    slot.engine = std::make_unique<detail::SimplexEngine>(lp, tol_.lp());
    slot.lower = lp.lower;
    slot.upper = lp.upper;
    slot.penalty = penalty;
    slot.basis = {};
    return slot;
  }

  const TwoStageProblem* problem_;
  Tolerances tol_;
  Slot slots_[3];
};

inline RecourseValue evaluate_recourse(const TwoStageProblem& problem, std::span<const double> x,
                                       const Scenario& xi) {
  RecourseEvaluator ev(problem);
  return ev.evaluate(x, xi, RecourseMode::kPlain);
}

// Q̃_f: minimal L1 norm of the artificial slack that restores feasibility.
inline RecourseValue evaluate_feasibility_recourse(const TwoStageProblem& problem,
                                                   std::span<const double> x, const Scenario& xi) {
  RecourseEvaluator ev(problem);
  return ev.evaluate(x, xi, RecourseMode::kFeasibility);
}

// min c y + penalty * 1'ỹ: equals Q wherever some optimal recourse dual lies
// below the penalty, and stays finite where Q = +inf.
inline RecourseValue evaluate_penalized_recourse(const TwoStageProblem& problem,
                                                 std::span<const double> x, const Scenario& xi,
                                                 double penalty) {
  RecourseEvaluator ev(problem);
  return ev.evaluate(x, xi, RecourseMode::kPenalized, penalty);
}

}  // namespace dro
