#pragma once

// Independent brute-force references used only by the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "dro/lp.hpp"

namespace dro::testing {

// Solves the square system M z = r by Gaussian elimination; nullopt if singular.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> m,
                                                       std::vector<double> r) {
  const std::size_t n = r.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < n; ++i) {
      if (std::abs(m[i][c]) > std::abs(m[piv][c])) piv = i;
    }
    if (std::abs(m[piv][c]) < 1e-11) return std::nullopt;
    std::swap(m[piv], m[c]);
    std::swap(r[piv], r[c]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c) continue;
      const double f = m[i][c] / m[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) m[i][k] -= f * m[c][k];
      r[i] -= f * r[c];
    }
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / m[i][i];
  return z;
}

// Optimal value of a bounded LP (all variable bounds finite) by enumerating
// every vertex: pick n active constraints among rows and bounds, solve, keep
// feasible points. nullopt when infeasible.
inline std::optional<double> lp_by_vertex_enumeration(const LpProblem& p) {
  const std::size_t n = p.num_vars();
  struct Half {
    std::vector<double> a;
    double b;
    bool equality;
  };
  std::vector<Half> cons;
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    std::vector<double> a(p.constraints.row(i).begin(), p.constraints.row(i).end());
    if (p.row_sense[i] == RowSense::kGreaterEqual) {
      for (double& v : a) v = -v;
      cons.push_back({a, -p.rhs[i], false});
    } else {
      cons.push_back({a, p.rhs[i], p.row_sense[i] == RowSense::kEqual});
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> a(n, 0.0);
    a[j] = 1.0;
    cons.push_back({a, p.upper[j], false});
    a[j] = -1.0;
    cons.push_back({a, -p.lower[j], false});
  }
  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& h : cons) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += h.a[j] * x[j];
      if (s > h.b + 1e-9) return false;
      if (h.equality && s < h.b - 1e-9) return false;
    }
    return true;
  };
  // Equalities also enter only as candidate active sets; a zero or dependent
  // equality row must not block the enumeration.
  std::vector<std::size_t> ineq;
  for (std::size_t k = 0; k < cons.size(); ++k) ineq.push_back(k);
  const std::size_t need = n;
  std::optional<double> best;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (pick.size() == need) {
      std::vector<std::vector<double>> m;
      std::vector<double> r;
      for (auto k : pick) { m.push_back(cons[k].a); r.push_back(cons[k].b); }
      auto z = solve_square(m, r);
      if (!z || !feasible(*z)) return;
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += p.cost[j] * (*z)[j];
      if (!best || (p.sense == ObjectiveSense::kMaximize ? obj > *best : obj < *best)) best = obj;
      return;
    }
    for (std::size_t t = start; t < ineq.size(); ++t) {
      pick.push_back(ineq[t]);
      rec(t + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

// Random LP with finite boxes, mixed row senses and a feasible interior point
// for most draws.
inline LpProblem random_lp(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_int_distribution<int> sense_pick(0, 5);
  LpProblem p;
  p.sense = (rng() & 1) ? ObjectiveSense::kMaximize : ObjectiveSense::kMinimize;
  p.cost.resize(n);
  p.lower.resize(n);
  p.upper.resize(n);
  std::vector<double> x0(n);
  for (std::size_t j = 0; j < n; ++j) {
    p.cost[j] = std::round(u(rng) * 4) / 4;
    p.lower[j] = std::round(u(rng)) - 5.0;
    p.upper[j] = p.lower[j] + 1.0 + std::round(std::abs(u(rng)) * 2);
    x0[j] = 0.5 * (p.lower[j] + p.upper[j]);
  }
  p.constraints = Matrix(m, n);
  p.rhs.resize(m);
  p.row_sense.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = (rng() % 3 == 0) ? 0.0 : std::round(u(rng));
      p.constraints(i, j) = a;
      s += a * x0[j];
    }
    const int k = sense_pick(rng);
    if (k == 0) {
      p.row_sense[i] = RowSense::kEqual;
      p.rhs[i] = s;
    } else if (k <= 2) {
      p.row_sense[i] = RowSense::kGreaterEqual;
      p.rhs[i] = s - std::abs(u(rng)) + (rng() % 7 == 0 ? 20.0 : 0.0);
    } else {
      p.row_sense[i] = RowSense::kLessEqual;
      p.rhs[i] = s + std::abs(u(rng));
    }
  }
  return p;
}

}  // namespace dro::testing
