#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dro/error.hpp"
#include "dro/matrix.hpp"

namespace dro {

enum class ObjectiveSense { kMinimize, kMaximize };
enum class RowSense { kLessEqual, kEqual, kGreaterEqual };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpTolerances {
  double feasibility = 1e-7;
  double optimality = 1e-7;
  double pivot = 1e-10;
};

struct LpProblem {
  ObjectiveSense sense = ObjectiveSense::kMinimize;
  std::vector<double> cost;
  Matrix constraints;
  std::vector<RowSense> row_sense;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_vars() const { return cost.size(); }
  std::size_t num_rows() const { return rhs.size(); }

  void validate() const {
    const std::size_t n = cost.size();
    const std::size_t m = rhs.size();
    if (lower.size() != n || upper.size() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "bound vectors must match cost length");
    }
    if (row_sense.size() != m) {
      throw Error(ErrorCode::kDimensionMismatch, "row senses must match rhs length");
    }
    if (m > 0 && (constraints.rows() != m || constraints.cols() != n)) {
      throw Error(ErrorCode::kDimensionMismatch, "constraint matrix shape mismatch");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
          lower[j] == kInf || upper[j] == -kInf) {
        throw Error(ErrorCode::kInvalidBounds, "variable " + std::to_string(j));
      }
    }
  }
};

enum class VarStatus : unsigned char { kBasic, kAtLower, kAtUpper, kAtZero };

// Status per variable: structural columns first, then one logical per row.
struct Basis {
  std::vector<VarStatus> status;
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  // d(objective)/d(rhs) per row, in the problem's own sense.
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  Basis basis;
  // Infeasible: row multipliers of the phase-one problem (a Farkas-type certificate).
  std::vector<double> farkas;
  // Unbounded: improving feasible direction over structural variables.
  std::vector<double> ray;
  long iterations = 0;
};

// Incremental sparse construction of an LpProblem.
class LpBuilder {
 public:
  int add_var(double cost, double lower = 0.0, double upper = kInf) {
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return static_cast<int>(cost_.size()) - 1;
  }

  int add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs) {
    rows_.push_back(std::move(terms));
    sense_.push_back(sense);
    rhs_.push_back(rhs);
    return static_cast<int>(rhs_.size()) - 1;
  }

  void set_cost(int var, double cost) { cost_[var] = cost; }
  void set_bounds(int var, double lower, double upper) {
    lower_[var] = lower;
    upper_[var] = upper;
  }

  int num_vars() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(rhs_.size()); }

  LpProblem build(ObjectiveSense sense) const {
    LpProblem p;
    p.sense = sense;
    p.cost = cost_;
    p.lower = lower_;
    p.upper = upper_;
    p.rhs = rhs_;
    p.row_sense = sense_;
    p.constraints = Matrix(rhs_.size(), cost_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (const auto& [var, coef] : rows_[r]) p.constraints(r, var) += coef;
    }
    return p;
  }

 private:
  std::vector<double> cost_, lower_, upper_, rhs_;
  std::vector<RowSense> sense_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

namespace detail {

// Bounded-variable primal simplex over [A | I] with an explicit dense basis
// inverse. Row i reads a_i x + s_i = b_i, the logical s_i carrying the row
// sense as bounds. Phase one minimizes the sum of bound violations of the
// basic variables, so any starting basis is admissible.
class SimplexEngine {
 public:
  SimplexEngine(const LpProblem& problem, const LpTolerances& tol)
      : n_(static_cast<int>(problem.num_vars())),
        m_(static_cast<int>(problem.num_rows())),
        tol_(tol) {
    problem.validate();
    sign_ = problem.sense == ObjectiveSense::kMinimize ? 1.0 : -1.0;
    col_idx_.resize(n_);
    col_val_.resize(n_);
    col_scale_.assign(n_, 0.0);
    row_idx_.resize(m_);
    row_val_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double v = problem.constraints(i, j);
        if (v != 0.0) {
          col_idx_[j].push_back(i);
          col_val_[j].push_back(v);
          row_idx_[i].push_back(j);
          row_val_[i].push_back(v);
          col_scale_[j] = std::max(col_scale_[j], std::abs(v));
        }
      }
    }
    cost_.assign(n_ + m_, 0.0);
    for (int j = 0; j < n_; ++j) cost_[j] = sign_ * problem.cost[j];
    orig_cost_ = problem.cost;
    rhs_ = problem.rhs;
    slack_lo_.resize(m_);
    slack_up_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      switch (problem.row_sense[i]) {
        case RowSense::kLessEqual: slack_lo_[i] = 0.0; slack_up_[i] = kInf; break;
        case RowSense::kGreaterEqual: slack_lo_[i] = -kInf; slack_up_[i] = 0.0; break;
        case RowSense::kEqual: slack_lo_[i] = 0.0; slack_up_[i] = 0.0; break;
      }
    }
  }

  int num_vars() const { return n_; }
  int num_rows() const { return m_; }

  // Same matrix, new right-hand side; the next solve may reuse a basis.
  void set_rhs(std::span<const double> rhs) {
    if (static_cast<int>(rhs.size()) != m_) {
      throw Error(ErrorCode::kDimensionMismatch, "rhs override length");
    }
    rhs_.assign(rhs.begin(), rhs.end());
  }

  LpSolution solve(std::span<const double> lower, std::span<const double> upper,
                   const Basis* warm) {
    if (static_cast<int>(lower.size()) != n_ || static_cast<int>(upper.size()) != n_) {
      throw Error(ErrorCode::kDimensionMismatch, "bound override length");
    }
    const int total = n_ + m_;
    lo_.resize(total);
    up_.resize(total);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lower[j];
      up_[j] = upper[j];
      if (lo_[j] > up_[j]) {
        LpSolution s;
        s.status = LpStatus::kInfeasible;
        return s;
      }
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = slack_lo_[i];
      up_[n_ + i] = slack_up_[i];
    }
    init_basis(warm);
    if (warm != nullptr && dual_feasible()) dual_run();
    return run();
  }

 private:
  static constexpr int kRefactorInterval = 64;

  void set_nonbasic(int j, VarStatus hint) {
    const bool lo_fin = lo_[j] > -kInf;
    const bool up_fin = up_[j] < kInf;
    if (lo_fin && up_fin) {
      status_[j] = (hint == VarStatus::kAtUpper && lo_[j] != up_[j]) ? VarStatus::kAtUpper
                                                                      : VarStatus::kAtLower;
    } else if (lo_fin) {
      status_[j] = VarStatus::kAtLower;
    } else if (up_fin) {
      status_[j] = VarStatus::kAtUpper;
    } else {
      status_[j] = VarStatus::kAtZero;
    }
    x_[j] = status_[j] == VarStatus::kAtLower   ? lo_[j]
            : status_[j] == VarStatus::kAtUpper ? up_[j]
                                                : 0.0;
  }

  void init_basis(const Basis* warm) {
    const int total = n_ + m_;
    bool use_warm = false;
    if (warm != nullptr && static_cast<int>(warm->status.size()) == total) {
      const auto basics = std::count(warm->status.begin(), warm->status.end(), VarStatus::kBasic);
      use_warm = basics == m_;
    }
    // The basis left by the previous solve is the usual warm start in branch
    // and bound; its factorization is still valid.
    if (use_warm && static_cast<int>(status_.size()) == total && factored_) {
      bool same = true;
      for (int j = 0; j < total && same; ++j) {
        same = (status_[j] == VarStatus::kBasic) == (warm->status[j] == VarStatus::kBasic);
      }
      if (same) {
        for (int j = 0; j < total; ++j) {
          if (status_[j] != VarStatus::kBasic) set_nonbasic(j, warm->status[j]);
        }
        compute_basic_values();
        return;
      }
    }
    status_.assign(total, VarStatus::kAtLower);
    x_.assign(total, 0.0);
    head_.clear();
    pos_.assign(total, -1);
    if (use_warm) {
      for (int j = 0; j < total; ++j) {
        if (warm->status[j] == VarStatus::kBasic) {
          status_[j] = VarStatus::kBasic;
          pos_[j] = static_cast<int>(head_.size());
          head_.push_back(j);
        } else {
          set_nonbasic(j, warm->status[j]);
        }
      }
    } else {
      for (int j = 0; j < n_; ++j) set_nonbasic(j, VarStatus::kAtLower);
      for (int i = 0; i < m_; ++i) {
        status_[n_ + i] = VarStatus::kBasic;
        pos_[n_ + i] = i;
        head_.push_back(n_ + i);
      }
    }
    invert();
    compute_basic_values();
  }

  // The basis is kept as its kernel: K = A[R, S], where S are the basic
  // structurals and R the rows whose logical is nonbasic (|R| = |S|). With
  // the basic logicals eliminated, B^-1 follows from K^-1 and A, so every
  // operation costs O(k^2 + nnz) instead of O(m^2). kinv_ is K^-1 stored
  // row-major, rows indexed like kcols_ and columns like krows_.

  // Rebuilds K^-1. Structural columns that turn out linearly dependent are
  // swapped for logicals of uncovered rows.
  void invert() {
    for (int attempt = 0; attempt < 3; ++attempt) {
      std::vector<char> covered(m_, 0);
      std::vector<int> cols;
      std::vector<int> cols_pos;
      for (int p = 0; p < m_; ++p) {
        const int j = head_[p];
        if (j >= n_) {
          covered[j - n_] = 1;
        } else {
          cols.push_back(j);
          cols_pos.push_back(p);
        }
      }
      std::vector<int> rows;
      std::vector<int> ridx(m_, -1);
      for (int i = 0; i < m_; ++i) {
        if (!covered[i]) {
          ridx[i] = static_cast<int>(rows.size());
          rows.push_back(i);
        }
      }
      const int k = static_cast<int>(cols.size());
      std::vector<double> c(static_cast<std::size_t>(k) * k, 0.0);
      std::vector<double> w(static_cast<std::size_t>(k) * k, 0.0);
      for (int b = 0; b < k; ++b) {
        const int j = cols[b];
        for (std::size_t t = 0; t < col_idx_[j].size(); ++t) {
          const int a = ridx[col_idx_[j][t]];
          if (a >= 0) c[static_cast<std::size_t>(a) * k + b] = col_val_[j][t];
        }
      }
      for (int a = 0; a < k; ++a) w[static_cast<std::size_t>(a) * k + a] = 1.0;

      std::vector<int> pivot_row_of_col(k, -1);
      std::vector<char> row_used(k, 0);
      std::vector<int> dropped;
      for (int b = 0; b < k; ++b) {
        int best = -1;
        double best_abs = 0.0;
        for (int a = 0; a < k; ++a) {
          if (row_used[a]) continue;
          const double v = std::abs(c[static_cast<std::size_t>(a) * k + b]);
          if (v > best_abs) {
            best_abs = v;
            best = a;
          }
        }
        const double threshold = std::max(tol_.pivot, 1e-9 * std::max(1.0, col_scale_[cols[b]]));
        if (best < 0 || best_abs < threshold) {
          dropped.push_back(b);
          continue;
        }
        row_used[best] = 1;
        pivot_row_of_col[b] = best;
        double* crow = &c[static_cast<std::size_t>(best) * k];
        double* wrow = &w[static_cast<std::size_t>(best) * k];
        const double inv = 1.0 / crow[b];
        for (int t = 0; t < k; ++t) {
          crow[t] *= inv;
          wrow[t] *= inv;
        }
        for (int a = 0; a < k; ++a) {
          if (a == best) continue;
          double* ca = &c[static_cast<std::size_t>(a) * k];
          const double f = ca[b];
          if (f == 0.0) continue;
          double* wa = &w[static_cast<std::size_t>(a) * k];
          for (int t = 0; t < k; ++t) {
            ca[t] -= f * crow[t];
            wa[t] -= f * wrow[t];
          }
        }
      }

      if (!dropped.empty()) {
        std::vector<int> free_rows;
        for (int a = 0; a < k; ++a) {
          if (!row_used[a]) free_rows.push_back(rows[a]);
        }
        for (std::size_t d = 0; d < dropped.size(); ++d) {
          const int r = cols_pos[dropped[d]];
          const int j = head_[r];
          pos_[j] = -1;
          set_nonbasic(j, VarStatus::kAtLower);
          const int s = n_ + free_rows[d];
          set_nonbasic(s, VarStatus::kAtLower);
          head_[r] = s;
          pos_[s] = r;
          status_[s] = VarStatus::kBasic;
        }
        continue;
      }

      kinv_.assign(static_cast<std::size_t>(k) * k, 0.0);
      for (int b = 0; b < k; ++b) {
        std::copy_n(&w[static_cast<std::size_t>(pivot_row_of_col[b]) * k], k, &kinv_[static_cast<std::size_t>(b) * k]);
      }
      kcols_ = std::move(cols);
      krows_ = std::move(rows);
      var_kpos_.assign(n_, -1);
      for (int b = 0; b < k; ++b) var_kpos_[kcols_[b]] = b;
      row_kpos_ = std::move(ridx);
      factored_ = true;
      updates_since_invert_ = 0;
      return;
    }
    throw Error(ErrorCode::kNumericalBreakdown, "basis repair failed");
  }

  int kernel_size() const { return static_cast<int>(kcols_.size()); }
  double& kinv(int c, int a) { return kinv_[static_cast<std::size_t>(c) * kcols_.size() + a]; }
  double kinv(int c, int a) const { return kinv_[static_cast<std::size_t>(c) * kcols_.size() + a]; }

  void compute_basic_values() {
    std::vector<double> r(rhs_);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::kBasic || x_[j] == 0.0) continue;
      for (std::size_t t = 0; t < col_idx_[j].size(); ++t) r[col_idx_[j][t]] -= col_val_[j][t] * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      if (status_[n_ + i] != VarStatus::kBasic) r[i] -= x_[n_ + i];
    }
    const int k = kernel_size();
    for (int c = 0; c < k; ++c) {
      double s = 0.0;
      for (int a = 0; a < k; ++a) s += kinv(c, a) * r[krows_[a]];
      x_[kcols_[c]] = s;
    }
    for (int c = 0; c < k; ++c) {
      const int j = kcols_[c];
      for (std::size_t t = 0; t < col_idx_[j].size(); ++t) {
        const int i = col_idx_[j][t];
        if (row_kpos_[i] < 0) r[i] -= col_val_[j][t] * x_[j];
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (row_kpos_[i] < 0) x_[n_ + i] = r[i];
    }
  }

  // y with y B = c_B, for basic costs given per basis position.
  std::vector<double> duals_for(const std::vector<double>& basic_cost) const {
    std::vector<double> y(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      if (row_kpos_[i] < 0) y[i] = basic_cost[pos_[n_ + i]];
    }
    const int k = kernel_size();
    std::vector<double> t(k);
    for (int c = 0; c < k; ++c) {
      const int j = kcols_[c];
      double v = basic_cost[pos_[j]];
      for (std::size_t q = 0; q < col_idx_[j].size(); ++q) {
        const int i = col_idx_[j][q];
        if (row_kpos_[i] < 0) v -= y[i] * col_val_[j][q];
      }
      t[c] = v;
    }
    for (int c = 0; c < k; ++c) {
      const double tc = t[c];
      if (tc == 0.0) continue;
      const double* krow = &kinv_[static_cast<std::size_t>(c) * k];
      for (int a = 0; a < k; ++a) y[krows_[a]] += tc * krow[a];
    }
    return y;
  }

  // Row `p` of B^-1.
  void inverse_row(int p, std::vector<double>& rho) const {
    rho.assign(m_, 0.0);
    const int k = kernel_size();
    const int j = head_[p];
    if (j < n_) {
      const double* krow = &kinv_[static_cast<std::size_t>(var_kpos_[j]) * k];
      for (int a = 0; a < k; ++a) rho[krows_[a]] = krow[a];
      return;
    }
    const int i = j - n_;
    rho[i] = 1.0;
    for (std::size_t q = 0; q < row_idx_[i].size(); ++q) {
      const int c = var_kpos_[row_idx_[i][q]];
      if (c < 0) continue;
      const double f = -row_val_[i][q];
      const double* krow = &kinv_[static_cast<std::size_t>(c) * k];
      for (int a = 0; a < k; ++a) rho[krows_[a]] += f * krow[a];
    }
  }

  double column_dot(int j, const std::vector<double>& y) const {
    if (j >= n_) return y[j - n_];
    double s = 0.0;
    for (std::size_t t = 0; t < col_idx_[j].size(); ++t) s += y[col_idx_[j][t]] * col_val_[j][t];
    return s;
  }

  // alpha = B^-1 a_j, indexed by basis position.
  void ftran(int j, std::vector<double>& alpha) const {
    alpha.assign(m_, 0.0);
    const int k = kernel_size();
    std::vector<double> u(k, 0.0);
    auto add_kernel_column = [&](int a, double v) {
      for (int c = 0; c < k; ++c) u[c] += kinv(c, a) * v;
    };
    if (j >= n_) {
      const int i = j - n_;
      if (row_kpos_[i] < 0) {
        alpha[pos_[j]] = 1.0;
        return;
      }
      add_kernel_column(row_kpos_[i], 1.0);
    } else {
      for (std::size_t t = 0; t < col_idx_[j].size(); ++t) {
        const int i = col_idx_[j][t];
        if (row_kpos_[i] >= 0) {
          add_kernel_column(row_kpos_[i], col_val_[j][t]);
        } else {
          alpha[pos_[n_ + i]] = col_val_[j][t];
        }
      }
    }
    for (int c = 0; c < k; ++c) {
      const double uc = u[c];
      const int jc = kcols_[c];
      alpha[pos_[jc]] = uc;
      if (uc == 0.0) continue;
      for (std::size_t t = 0; t < col_idx_[jc].size(); ++t) {
        const int i = col_idx_[jc][t];
        if (row_kpos_[i] < 0) alpha[pos_[n_ + i]] -= col_val_[jc][t] * uc;
      }
    }
  }

  // A[i, S] in kernel column order.
  std::vector<double> kernel_row(int i) const {
    std::vector<double> d(kernel_size(), 0.0);
    for (std::size_t q = 0; q < row_idx_[i].size(); ++q) {
      const int c = var_kpos_[row_idx_[i][q]];
      if (c >= 0) d[c] = row_val_[i][q];
    }
    return d;
  }

  // Updates K^-1 for `enter` replacing the basic at position r. Entering and
  // leaving structurals change the columns of K, entering and leaving logicals
  // its rows, so K may grow or shrink by one.
  void pivot(int r, const std::vector<double>& alpha, int enter) {
    const int out = head_[r];
    const int k = kernel_size();
    std::vector<double> u(k);
    for (int c = 0; c < k; ++c) u[c] = alpha[pos_[kcols_[c]]];
    if (enter < n_ && out < n_) {
      const int c0 = var_kpos_[out];
      double* prow = &kinv_[static_cast<std::size_t>(c0) * k];
      const double inv = 1.0 / u[c0];
      for (int a = 0; a < k; ++a) prow[a] *= inv;
      for (int c = 0; c < k; ++c) {
        if (c == c0 || u[c] == 0.0) continue;
        const double f = u[c];
        double* row = &kinv_[static_cast<std::size_t>(c) * k];
        for (int a = 0; a < k; ++a) row[a] -= f * prow[a];
      }
      kcols_[c0] = enter;
      var_kpos_[out] = -1;
      var_kpos_[enter] = c0;
    } else if (enter < n_) {
      // Border with row i and the entering column; the Schur complement is the pivot.
      const int i = out - n_;
      const double s = alpha[r];
      const std::vector<double> d = kernel_row(i);
      std::vector<double> w(k, 0.0);
      for (int c = 0; c < k; ++c) {
        if (d[c] == 0.0) continue;
        for (int a = 0; a < k; ++a) w[a] += d[c] * kinv(c, a);
      }
      const int k1 = k + 1;
      std::vector<double> next(static_cast<std::size_t>(k1) * k1);
      for (int c = 0; c < k; ++c) {
        for (int a = 0; a < k; ++a) next[static_cast<std::size_t>(c) * k1 + a] = kinv(c, a) + u[c] * w[a] / s;
        next[static_cast<std::size_t>(c) * k1 + k] = -u[c] / s;
      }
      for (int a = 0; a < k; ++a) next[static_cast<std::size_t>(k) * k1 + a] = -w[a] / s;
      next[static_cast<std::size_t>(k) * k1 + k] = 1.0 / s;
      kinv_ = std::move(next);
      kcols_.push_back(enter);
      krows_.push_back(i);
      var_kpos_[enter] = k;
      row_kpos_[i] = k;
    } else if (out < n_) {
      // Drop row i and the leaving column; the last index fills the gaps.
      const int i = enter - n_;
      const int c0 = var_kpos_[out];
      const int r0 = row_kpos_[i];
      const double piv = kinv(c0, r0);
      const int k1 = k - 1;
      std::vector<double> next(static_cast<std::size_t>(k1) * k1);
      auto slot = [k1](int idx, int gap) { return idx == k1 ? gap : idx; };
      for (int c = 0; c < k; ++c) {
        if (c == c0) continue;
        const double f = kinv(c, r0) / piv;
        for (int a = 0; a < k; ++a) {
          if (a == r0) continue;
          next[static_cast<std::size_t>(slot(c, c0)) * k1 + slot(a, r0)] = kinv(c, a) - f * kinv(c0, a);
        }
      }
      kinv_ = std::move(next);
      var_kpos_[out] = -1;
      row_kpos_[i] = -1;
      if (c0 != k1) {
        kcols_[c0] = kcols_[k1];
        var_kpos_[kcols_[c0]] = c0;
      }
      if (r0 != k1) {
        krows_[r0] = krows_[k1];
        row_kpos_[krows_[r0]] = r0;
      }
      kcols_.pop_back();
      krows_.pop_back();
    } else {
      // Row i of K is replaced by row l: a rank-one change.
      const int i = enter - n_;
      const int l = out - n_;
      const int r0 = row_kpos_[i];
      std::vector<double> delta = kernel_row(l);
      const std::vector<double> di = kernel_row(i);
      double denom = 1.0;
      for (int c = 0; c < k; ++c) {
        delta[c] -= di[c];
        denom += delta[c] * u[c];
      }
      std::vector<double> z(k, 0.0);
      for (int c = 0; c < k; ++c) {
        if (delta[c] == 0.0) continue;
        for (int a = 0; a < k; ++a) z[a] += delta[c] * kinv(c, a);
      }
      for (int c = 0; c < k; ++c) {
        const double f = u[c] / denom;
        if (f == 0.0) continue;
        for (int a = 0; a < k; ++a) kinv(c, a) -= f * z[a];
      }
      krows_[r0] = l;
      row_kpos_[l] = r0;
      row_kpos_[i] = -1;
    }
    ++updates_since_invert_;
  }

  bool dual_feasible() const {
    std::vector<double> basic_cost(m_);
    for (int p = 0; p < m_; ++p) basic_cost[p] = cost_[head_[p]];
    const std::vector<double> y = duals_for(basic_cost);
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::kBasic || lo_[j] == up_[j]) continue;
      const double d = cost_[j] - column_dot(j, y);
      if (status_[j] == VarStatus::kAtLower && d < -tol_.optimality) return false;
      if (status_[j] == VarStatus::kAtUpper && d > tol_.optimality) return false;
      if (status_[j] == VarStatus::kAtZero && std::abs(d) > tol_.optimality) return false;
    }
    return true;
  }

  // Dual simplex from a dual feasible basis until the basics are within
  // bounds. Leaves the basis for the primal pass to certify, which also
  // produces the infeasibility certificate when no entering column exists.
  void dual_run() {
    const double ftol = tol_.feasibility;
    const long limit = 50L + 5L * (n_ + m_);
    const int total = n_ + m_;
    std::vector<double> rho(m_);
    std::vector<double> row(total, 0.0);
    std::vector<double> d(total, 0.0);
    std::vector<double> alpha;
    // Reduced costs are carried along the pivots and refreshed with the inverse.
    auto refresh = [&] {
      std::vector<double> basic_cost(m_);
      for (int p = 0; p < m_; ++p) basic_cost[p] = cost_[head_[p]];
      const std::vector<double> y = duals_for(basic_cost);
      for (int j = 0; j < total; ++j) d[j] = status_[j] == VarStatus::kBasic ? 0.0 : cost_[j] - column_dot(j, y);
    };
    refresh();
    for (long it = 0; it < limit; ++it) {
      if (updates_since_invert_ >= kRefactorInterval) {
        invert();
        compute_basic_values();
        refresh();
      }
      int leave = -1;
      double worst = ftol;
      for (int p = 0; p < m_; ++p) {
        const int j = head_[p];
        const double v = std::max(lo_[j] - x_[j], x_[j] - up_[j]);
        if (v > worst) {
          worst = v;
          leave = p;
        }
      }
      if (leave < 0) return;
      const int out_var = head_[leave];
      const bool below = x_[out_var] < lo_[out_var];
      const double target = below ? lo_[out_var] : up_[out_var];
      inverse_row(leave, rho);

      // x_B[leave] moves by -alpha_j dx_j; it must rise when below.
      int enter = -1;
      double best_ratio = kInf;
      double best_piv = 0.0;
      for (int j = 0; j < total; ++j) {
        const VarStatus st = status_[j];
        if (st == VarStatus::kBasic) continue;
        const double a = column_dot(j, rho);
        row[j] = a;
        if (lo_[j] == up_[j] || std::abs(a) <= 1e-9) continue;
        const double dir = below ? (a < 0 ? 1.0 : -1.0) : (a > 0 ? 1.0 : -1.0);
        if (st == VarStatus::kAtLower && dir < 0) continue;
        if (st == VarStatus::kAtUpper && dir > 0) continue;
        const double ratio = std::max(0.0, dir * d[j]) / std::abs(a);
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && std::abs(a) > best_piv)) {
          best_ratio = ratio;
          best_piv = std::abs(a);
          enter = j;
        }
      }
      if (enter < 0) return;

      ftran(enter, alpha);
      if (std::abs(alpha[leave]) < tol_.pivot) return;
      const double step = (x_[out_var] - target) / alpha[leave];
      x_[enter] += step;
      for (int p = 0; p < m_; ++p) {
        if (alpha[p] != 0.0) x_[head_[p]] -= alpha[p] * step;
      }
      x_[out_var] = target;
      const double theta_d = d[enter] / row[enter];
      for (int j = 0; j < total; ++j) {
        if (status_[j] != VarStatus::kBasic && row[j] != 0.0) d[j] -= theta_d * row[j];
      }
      d[enter] = 0.0;
      d[out_var] = -theta_d;
      status_[out_var] = below ? VarStatus::kAtLower : VarStatus::kAtUpper;
      pivot(leave, alpha, enter);
      pos_[out_var] = -1;
      head_[leave] = enter;
      pos_[enter] = leave;
      status_[enter] = VarStatus::kBasic;
    }
  }

  double infeasibility(double ftol) const {
    double s = 0.0;
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (x_[j] < lo_[j] - ftol) s += lo_[j] - x_[j];
      else if (x_[j] > up_[j] + ftol) s += x_[j] - up_[j];
    }
    return s;
  }

  double objective() const {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += cost_[j] * x_[j];
    return s;
  }

  LpSolution run() {
    const int total = n_ + m_;
    const double ftol = tol_.feasibility;
    const double otol = tol_.optimality;
    const long iteration_limit = std::max<long>(20000, 200L * total);
    long iterations = 0;
    long degenerate_streak = 0;
    const long bland_after = 50 + total / 10;
    bool bland = false;
    bool best_phase_one = false;
    double best_merit = kInf;
    int stalls = 0;
    std::vector<double> basic_cost(m_);
    std::vector<double> alpha;
    LpSolution out;

    for (;;) {
      if (++iterations > iteration_limit) {
        throw Error(ErrorCode::kNumericalBreakdown, "simplex iteration limit");
      }
      if (updates_since_invert_ >= kRefactorInterval) {
        invert();
        compute_basic_values();
      }
      bool phase_one = false;
      for (int p = 0; p < m_; ++p) {
        const int j = head_[p];
        if (x_[j] < lo_[j] - ftol) {
          basic_cost[p] = -1.0;
          phase_one = true;
        } else if (x_[j] > up_[j] + ftol) {
          basic_cost[p] = 1.0;
          phase_one = true;
        } else {
          basic_cost[p] = 0.0;
        }
      }
      if (!phase_one) {
        for (int p = 0; p < m_; ++p) basic_cost[p] = cost_[head_[p]];
      }
      // Progress is judged on the merit value itself: tiny positive steps from
      // the Harris pass cycle as easily as zero steps.
      const double merit = phase_one ? infeasibility(ftol) : objective();
      if (phase_one != best_phase_one || merit < best_merit - 1e-9 * (1.0 + std::abs(best_merit))) {
        best_phase_one = phase_one;
        best_merit = merit;
        degenerate_streak = 0;
        bland = false;
      } else if (++degenerate_streak >= bland_after) {
        bland = true;
      }
      const std::vector<double> y = duals_for(basic_cost);

      int enter = -1;
      double enter_dir = 0.0;
      double best_score = 0.0;
      for (int j = 0; j < total; ++j) {
        const VarStatus st = status_[j];
        if (st == VarStatus::kBasic || lo_[j] == up_[j]) continue;
        const double cj = phase_one ? 0.0 : cost_[j];
        const double d = cj - column_dot(j, y);
        double dir = 0.0;
        if (st == VarStatus::kAtLower && d < -otol) dir = 1.0;
        else if (st == VarStatus::kAtUpper && d > otol) dir = -1.0;
        else if (st == VarStatus::kAtZero && std::abs(d) > otol) dir = d < 0 ? 1.0 : -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(d) > best_score) {
          best_score = std::abs(d);
          enter = j;
          enter_dir = dir;
        }
      }

      if (enter < 0) {
        if (updates_since_invert_ > 0) {
          invert();
          compute_basic_values();
          continue;
        }
        if (phase_one) {
          out.status = LpStatus::kInfeasible;
          out.farkas = y;
        } else {
          out.status = LpStatus::kOptimal;
          out.duals.resize(m_);
          for (int i = 0; i < m_; ++i) out.duals[i] = sign_ * y[i];
          out.reduced_costs.resize(n_);
          for (int j = 0; j < n_; ++j) out.reduced_costs[j] = sign_ * (cost_[j] - column_dot(j, y));
        }
        break;
      }

      ftran(enter, alpha);

      // Harris two-pass ratio test. Infeasible basics (phase one) block at
      // the bound they violate, so the violation sum never increases.
      auto target_of = [&](int p, double g, double& target) -> bool {
        const int j = head_[p];
        const double xv = x_[j];
        if (g < 0) {
          if (xv > up_[j] + ftol) target = up_[j];
          else if (xv >= lo_[j] - ftol) target = lo_[j];
          else return false;
          return target > -kInf;
        }
        if (xv < lo_[j] - ftol) target = lo_[j];
        else if (xv <= up_[j] + ftol) target = up_[j];
        else return false;
        return target < kInf;
      };

      double theta_max = kInf;
      for (int p = 0; p < m_; ++p) {
        const double g = -enter_dir * alpha[p];
        if (std::abs(g) <= tol_.pivot) continue;
        double target;
        if (!target_of(p, g, target)) continue;
        const double relaxed = g < 0 ? (x_[head_[p]] - (target - ftol)) / -g
                                     : ((target + ftol) - x_[head_[p]]) / g;
        theta_max = std::min(theta_max, std::max(relaxed, 0.0));
      }
      const double flip = (lo_[enter] > -kInf && up_[enter] < kInf) ? up_[enter] - lo_[enter] : kInf;

      int leave = -1;
      double leave_target = 0.0;
      double theta = kInf;
      if (bland) {
        for (int p = 0; p < m_; ++p) {
          const double g = -enter_dir * alpha[p];
          if (std::abs(g) <= tol_.pivot) continue;
          double target;
          if (!target_of(p, g, target)) continue;
          const double ratio = std::max(0.0, (target - x_[head_[p]]) / g);
          if (ratio < theta - 1e-12 ||
              (ratio <= theta + 1e-12 && leave >= 0 && head_[p] < head_[leave])) {
            theta = ratio;
            leave = p;
            leave_target = target;
          }
        }
      } else if (theta_max < kInf) {
        double best_piv = 0.0;
        for (int p = 0; p < m_; ++p) {
          const double g = -enter_dir * alpha[p];
          if (std::abs(g) <= tol_.pivot) continue;
          double target;
          if (!target_of(p, g, target)) continue;
          const double ratio = std::max(0.0, (target - x_[head_[p]]) / g);
          if (ratio <= theta_max && std::abs(g) > best_piv) {
            best_piv = std::abs(g);
            leave = p;
            leave_target = target;
            theta = ratio;
          }
        }
      }

      const bool do_flip = flip < kInf && flip <= theta;
      if (leave < 0 && !do_flip) {
        if (phase_one) {
          if (++stalls > 3) throw Error(ErrorCode::kNumericalBreakdown, "phase one ray");
          invert();
          compute_basic_values();
          continue;
        }
        out.status = LpStatus::kUnbounded;
        out.ray.assign(n_, 0.0);
        if (enter < n_) out.ray[enter] = enter_dir;
        for (int p = 0; p < m_; ++p) {
          if (head_[p] < n_) out.ray[head_[p]] = -enter_dir * alpha[p];
        }
        break;
      }
      if (do_flip) theta = flip;

      x_[enter] += enter_dir * theta;
      for (int p = 0; p < m_; ++p) {
        if (alpha[p] != 0.0) x_[head_[p]] -= enter_dir * alpha[p] * theta;
      }
      if (do_flip) {
        status_[enter] = enter_dir > 0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x_[enter] = enter_dir > 0 ? up_[enter] : lo_[enter];
        continue;
      }
      if (std::abs(alpha[leave]) < tol_.pivot) {
        throw Error(ErrorCode::kNumericalBreakdown, "pivot below tolerance");
      }
      const int out_var = head_[leave];
      x_[out_var] = leave_target;
      status_[out_var] = (leave_target == lo_[out_var]) ? VarStatus::kAtLower : VarStatus::kAtUpper;
      pivot(leave, alpha, enter);
      pos_[out_var] = -1;
      head_[leave] = enter;
      pos_[enter] = leave;
      status_[enter] = VarStatus::kBasic;
    }

    out.iterations = iterations;
    out.x.assign(x_.begin(), x_.begin() + n_);
    out.basis.status = status_;
    if (out.status == LpStatus::kOptimal) {
      double obj = 0.0;
      for (int j = 0; j < n_; ++j) obj += orig_cost_[j] * out.x[j];
      out.objective = obj;
    }
    return out;
  }

  int n_;
  int m_;
  LpTolerances tol_;
  double sign_ = 1.0;
  std::vector<std::vector<int>> col_idx_;
  std::vector<std::vector<double>> col_val_;
  std::vector<double> col_scale_;
  std::vector<double> cost_;
  std::vector<double> orig_cost_;
  std::vector<double> rhs_;
  std::vector<double> slack_lo_, slack_up_;

  std::vector<double> lo_, up_, x_;
  std::vector<VarStatus> status_;
  std::vector<int> head_, pos_;
  std::vector<std::vector<int>> row_idx_;
  std::vector<std::vector<double>> row_val_;
  std::vector<double> kinv_;
  std::vector<int> kcols_, krows_;
  std::vector<int> var_kpos_, row_kpos_;
  bool factored_ = false;
  int updates_since_invert_ = 0;
};

}  // namespace detail

inline LpSolution solve_lp(const LpProblem& problem, const LpTolerances& tol = {},
                           const Basis* warm = nullptr) {
  detail::SimplexEngine engine(problem, tol);
  return engine.solve(problem.lower, problem.upper, warm);
}

}  // namespace dro
