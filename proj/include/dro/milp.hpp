#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dro/lp.hpp"

namespace dro {

struct MilpProblem {
  LpProblem lp;
  std::vector<int> binaries;

  void validate() const {
    lp.validate();
    for (int b : binaries) {
      if (b < 0 || static_cast<std::size_t>(b) >= lp.num_vars()) {
        throw Error(ErrorCode::kDimensionMismatch, "binary index out of range");
      }
      if (lp.lower[b] < 0.0 || lp.upper[b] > 1.0) {
        throw Error(ErrorCode::kInvalidBounds, "binary variable bounds outside [0,1]");
      }
    }
  }
};

struct MilpOptions {
  double gap = 1e-9;
  double abs_gap = 1e-9;
  long node_limit = 500000;
  double int_tol = 1e-6;
  // Only solutions strictly better than this value (problem sense) are of interest.
  double cutoff = kInf;
  LpTolerances lp;
};

// kCutoff: feasible or not, nothing beats MilpOptions::cutoff.
enum class MilpStatus { kOptimal, kInfeasible, kUnbounded, kNodeLimit, kCutoff };

struct MilpSolution {
  MilpStatus status = MilpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  double best_bound = 0.0;
  long nodes = 0;
  double gap = 0.0;
  // Duals of the LP with binaries fixed at the incumbent.
  std::vector<double> duals;
  // Global bound after each processed node, in the problem's own sense.
  std::vector<double> bound_history;

  bool has_incumbent() const {
    return status == MilpStatus::kOptimal || (status == MilpStatus::kNodeLimit && !x.empty());
  }
};

namespace detail {

struct BranchNode {
  std::vector<signed char> fix;  // per binary: -1 free, 0, 1
  double bound;                  // parent LP value, minimization form
  Basis basis;
  int depth = 0;
};

}  // namespace detail

// Depth-first branch and bound on the most fractional binary, with a
// best-bound pick every 64 nodes. Works internally in minimization form.
inline MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& opt = {}) {
  problem.validate();
  const LpProblem& lp = problem.lp;
  const double sign = lp.sense == ObjectiveSense::kMinimize ? 1.0 : -1.0;
  const std::size_t nb = problem.binaries.size();
  detail::SimplexEngine engine(lp, opt.lp);

  std::vector<double> lower = lp.lower;
  std::vector<double> upper = lp.upper;
  auto apply = [&](const std::vector<signed char>& fix) {
    lower = lp.lower;
    upper = lp.upper;
    for (std::size_t k = 0; k < nb; ++k) {
      const int b = problem.binaries[k];
      upper[b] = std::min(upper[b], 1.0);
      if (fix[k] >= 0) lower[b] = upper[b] = fix[k];
    }
  };

  MilpSolution out;
  double incumbent = kInf;
  std::vector<double> incumbent_x;
  const double cutoff = std::isfinite(opt.cutoff) ? sign * opt.cutoff : kInf;
  auto prune_level = [&]() {
    if (incumbent == kInf) return cutoff;
    return std::min(cutoff, incumbent - std::max(opt.abs_gap, opt.gap * std::max(1.0, std::abs(incumbent))));
  };
  auto try_incumbent = [&](const LpSolution& s) {
    const double v = sign * s.objective;
    if (v < incumbent - 1e-12) {
      incumbent = v;
      incumbent_x = s.x;
      for (int b : problem.binaries) incumbent_x[b] = std::round(incumbent_x[b]);
    }
  };

  std::vector<detail::BranchNode> open;
  open.push_back({std::vector<signed char>(nb, -1), -kInf, Basis{}, 0});
  long nodes = 0;
  bool root = true;
  bool pruned = false;
  double last_bound = -kInf;

  auto open_bound = [&]() {
    double b = kInf;
    for (const auto& nd : open) b = std::min(b, nd.bound);
    return b;
  };

  while (!open.empty()) {
    if (nodes >= opt.node_limit) break;
    std::size_t pick = open.size() - 1;
    if (nodes > 0 && nodes % 64 == 0) {
      for (std::size_t t = 0; t < open.size(); ++t) {
        if (open[t].bound < open[pick].bound) pick = t;
      }
    }
    detail::BranchNode node = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
    ++nodes;
    if (node.bound >= prune_level()) {
      pruned = true;
      continue;
    }

    apply(node.fix);
    LpSolution s = engine.solve(lower, upper, node.basis.status.empty() ? nullptr : &node.basis);
    if (s.status == LpStatus::kUnbounded) {
      out.status = MilpStatus::kUnbounded;
      out.nodes = nodes;
      return out;
    }
    if (s.status == LpStatus::kInfeasible) {
      if (root) {
        out.status = MilpStatus::kInfeasible;
        out.nodes = nodes;
        return out;
      }
      continue;
    }
    const double value = sign * s.objective;

    if (root) {
      root = false;
      // LP rounding at the root.
      std::vector<signed char> rounded(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        rounded[k] = static_cast<signed char>(s.x[problem.binaries[k]] >= 0.5 ? 1 : 0);
      }
      apply(rounded);
      LpSolution r = engine.solve(lower, upper, &s.basis);
      if (r.status == LpStatus::kOptimal) try_incumbent(r);
    }

    if (value >= prune_level()) pruned = true;
    if (value < prune_level()) {
      int branch = -1;
      double best_frac = opt.int_tol;
      for (std::size_t k = 0; k < nb; ++k) {
        const double v = s.x[problem.binaries[k]];
        const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
        if (frac > best_frac + 1e-12) {
          best_frac = frac;
          branch = static_cast<int>(k);
        }
      }
      if (branch < 0) {
        try_incumbent(s);
      } else {
        const double v = s.x[problem.binaries[branch]];
        detail::BranchNode down{node.fix, value, s.basis, node.depth + 1};
        detail::BranchNode up{node.fix, value, s.basis, node.depth + 1};
        down.fix[branch] = 0;
        up.fix[branch] = 1;
        // The child nearer the LP value is explored first (pushed last).
        if (v >= 0.5) {
          open.push_back(std::move(down));
          open.push_back(std::move(up));
        } else {
          open.push_back(std::move(up));
          open.push_back(std::move(down));
        }
      }
    }
    const double global = std::min(incumbent, open_bound());
    last_bound = std::max(last_bound, std::min(global, incumbent));
    if (open.empty()) last_bound = incumbent;
    out.bound_history.push_back(sign * last_bound);
  }

  out.nodes = nodes;
  if (incumbent == kInf || incumbent >= cutoff) {
    // Without an incumbent below the cutoff every prune was a cutoff prune.
    const bool cut = incumbent < kInf || pruned;
    out.status = !open.empty() ? MilpStatus::kNodeLimit : cut ? MilpStatus::kCutoff : MilpStatus::kInfeasible;
    out.best_bound = sign * open_bound();
    return out;
  }
  const double bound = open.empty() ? incumbent : std::min(incumbent, open_bound());
  out.status = open.empty() ? MilpStatus::kOptimal : MilpStatus::kNodeLimit;
  out.best_bound = sign * bound;

  // Re-solve with binaries fixed at the incumbent for a consistent point and duals.
  std::vector<signed char> fixed(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    fixed[k] = static_cast<signed char>(incumbent_x[problem.binaries[k]] > 0.5 ? 1 : 0);
  }
  apply(fixed);
  LpSolution final_lp = engine.solve(lower, upper, nullptr);
  if (final_lp.status == LpStatus::kOptimal) {
    out.x = final_lp.x;
    for (int b : problem.binaries) out.x[b] = std::round(out.x[b]);
    out.objective = final_lp.objective;
    out.duals = final_lp.duals;
  } else {
    out.x = incumbent_x;
    out.objective = sign * incumbent;
  }
  out.gap = std::abs(out.objective - out.best_bound) / std::max(1.0, std::abs(out.objective));
  return out;
}

}  // namespace dro
