#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dro/model.hpp"

namespace dro {

enum class FlUncertainty { kDemand, kDisruption };
enum class FlAmbiguityKind { kMoment, kWasserstein, kWassersteinL2, kMixedInteger };

// Generator parameters. Zero or negative "auto" fields pick defaults that
// depend on the instance size.
struct FlSpec {
  int n_sites = 5;
  std::uint64_t seed = 1;
  FlUncertainty uncertainty = FlUncertainty::kDemand;
  bool capacitated = false;
  FlAmbiguityKind ambiguity = FlAmbiguityKind::kMoment;
  int facilities = 0;        // p; auto = ceil(n/2)
  int disruptions = -1;      // k; auto = min(2, p - 1)
  double spread = 0.45;      // moment-set spread factor r
  double rho = 0.5;          // weight of the nominal service cost
  int samples = 5;           // empirical set size N
  double radius = -1.0;      // auto = 2 (demand) or 0.5 (disruption)
  double box_low = 0.5;      // demand box as multiples of nominal demand
  double box_high = 1.5;
  double k_lower = 0.4;      // mixed-integer set parameters
  double k_upper = 0.8;
  double theta = 0.4;
  int z_min = 2;

  int p() const { return facilities > 0 ? facilities : (n_sites + 1) / 2; }
  int k() const { return disruptions >= 0 ? disruptions : std::min(2, p() - 1); }
  double r() const {
    if (radius >= 0.0) return radius;
    return uncertainty == FlUncertainty::kDemand ? 2.0 : 0.5;
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidSpec, what); };
    if (n_sites < 2) fail("n must be >= 2");
    if (p() < 1 || p() > n_sites) fail("p must lie in [1, n]");
    if (uncertainty == FlUncertainty::kDisruption && (k() < 0 || k() > p() - 1)) fail("k must lie in [0, p-1]");
    if (!(rho >= 0.0 && rho <= 1.0)) fail("rho must lie in [0, 1]");
    if (!(box_low > 0.0 && box_low <= box_high)) fail("demand box multipliers");
    if (samples < 1) fail("samples must be >= 1");
    if (!(spread >= 0.0)) fail("spread must be >= 0");
    if (uncertainty == FlUncertainty::kDemand && spread > 2.0 * (1.0 - box_low) + 1e-12) {
      fail("spread too large: moment bound would fall below the demand box");
    }
    if (ambiguity == FlAmbiguityKind::kMixedInteger && uncertainty != FlUncertainty::kDisruption) {
      fail("mixed-integer ambiguity is defined for the disruption space only");
    }
    if (ambiguity == FlAmbiguityKind::kMixedInteger && n_sites > 16) fail("mixed-integer set limited to n <= 16");
  }
};

struct FlInstance {
  FlSpec spec;
  std::vector<double> x_coord, y_coord;
  Matrix cost;  // c_ij, clients by facilities
  std::vector<double> demand;
  std::vector<double> fixed_cost;
  std::vector<double> capacity;  // finite even when uncapacitated: exceeds any total demand
  std::vector<double> demand_lower, demand_upper;
  // Moment bound (d̃ or k̃), empirical samples, or nothing, depending on the set.
  std::vector<double> moment_bound;
  std::vector<Scenario> samples;

  int n() const { return static_cast<int>(demand.size()); }
};

namespace detail {

// Portable uniform draws: libstdc++/libc++ distributions differ, raw engine output does not.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

inline FlInstance generate_instance(const FlSpec& spec) {
  spec.validate();
  detail::PortableRng rng(spec.seed * 0x9E3779B97F4A7C15ULL + 17);
  const int n = spec.n_sites;
  FlInstance inst;
  inst.spec = spec;
  for (int i = 0; i < n; ++i) {
    inst.x_coord.push_back(rng.uniform(0.0, 100.0));
    inst.y_coord.push_back(rng.uniform(0.0, 100.0));
  }
  inst.cost = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dx = inst.x_coord[i] - inst.x_coord[j];
      const double dy = inst.y_coord[i] - inst.y_coord[j];
      inst.cost(i, j) = i == j ? 0.0 : std::round(std::sqrt(dx * dx + dy * dy) * 100.0) / 100.0;
    }
  }
  for (int i = 0; i < n; ++i) inst.demand.push_back(std::round(rng.uniform(10.0, 100.0)));
  for (int j = 0; j < n; ++j) inst.fixed_cost.push_back(std::round(rng.uniform(500.0, 1500.0)));
  for (int i = 0; i < n; ++i) {
    inst.demand_lower.push_back(spec.box_low * inst.demand[i]);
    inst.demand_upper.push_back(spec.box_high * inst.demand[i]);
  }

  // Capacity of j: total nominal demand of j and its t nearest sites.
  const int t_max = std::max(2, (n + 2) / 3);
  double total_upper = 0.0;
  for (int i = 0; i < n; ++i) total_upper += inst.demand_upper[i];
  for (int j = 0; j < n; ++j) {
    const int t = rng.integer(2, t_max);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return inst.cost(a, j) < inst.cost(b, j); });
    double cap = 0.0;
    for (int s = 0; s <= std::min(t, n - 1); ++s) cap += inst.demand[order[s]];
    inst.capacity.push_back(spec.capacitated ? cap : std::ceil(total_upper) + 1.0);
  }

  const bool demand = spec.uncertainty == FlUncertainty::kDemand;
  switch (spec.ambiguity) {
    case FlAmbiguityKind::kMoment:
      for (int i = 0; i < n; ++i) {
        if (demand) {
          inst.moment_bound.push_back(inst.demand[i] * (1.0 + spec.spread * rng.uniform(-0.5, 0.5)));
        } else {
          inst.moment_bound.push_back(spec.spread * rng.uniform(0.0, 1.0));
        }
      }
      break;
    case FlAmbiguityKind::kWasserstein:
    case FlAmbiguityKind::kWassersteinL2: {
      std::vector<Scenario> space_points;
      if (!demand) {
        space_points = enumerate_space(BinaryCardinalitySpace{n, spec.k()}, 1u << 20);
      }
      for (int s = 0; s < spec.samples; ++s) {
        Scenario sc;
        if (demand) {
          for (int i = 0; i < n; ++i) {
            sc.values.push_back(std::round(rng.uniform(inst.demand_lower[i], inst.demand_upper[i]) * 100.0) / 100.0);
          }
        } else {
          sc = space_points[rng.integer(0, static_cast<int>(space_points.size()) - 1)];
        }
        inst.samples.push_back(std::move(sc));
      }
      break;
    }
    case FlAmbiguityKind::kMixedInteger:
      break;
  }
  return inst;
}

// Encodes min f y + rho c x + (1 - rho) WCEV. The weight (1 - rho) is folded
// into the recourse cost, so the recourse value already carries it.
inline TwoStageProblem encode(const FlInstance& inst) {
  const FlSpec& spec = inst.spec;
  const int n = inst.n();
  const int p = spec.p();
  const bool demand = spec.uncertainty == FlUncertainty::kDemand;
  TwoStageProblem prob;

  // First stage: y_j (binary) then nominal allocations x_ij.
  FirstStage& fs = prob.first;
  const int nx = n + n * n;
  auto xvar = [n](int i, int j) { return n + i * n + j; };
  fs.cost.assign(nx, 0.0);
  fs.lower.assign(nx, 0.0);
  fs.upper.assign(nx, kInf);
  for (int j = 0; j < n; ++j) {
    fs.cost[j] = inst.fixed_cost[j];
    fs.upper[j] = 1.0;
    fs.binaries.push_back(j);
    fs.names.push_back("y[" + std::to_string(j) + "]");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      fs.cost[xvar(i, j)] = spec.rho * inst.cost(i, j);
      fs.names.push_back("x[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  fs.constraints = Matrix(2 * n + 1, nx);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) fs.constraints(i, xvar(i, j)) = 1.0;
    fs.row_sense.push_back(RowSense::kGreaterEqual);
    fs.rhs.push_back(inst.demand[i]);
  }
  for (int j = 0; j < n; ++j) fs.constraints(n, j) = 1.0;
  fs.row_sense.push_back(RowSense::kEqual);
  fs.rhs.push_back(p);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) fs.constraints(n + 1 + j, xvar(i, j)) = 1.0;
    fs.constraints(n + 1 + j, j) = -inst.capacity[j];
    fs.row_sense.push_back(RowSense::kLessEqual);
    fs.rhs.push_back(0.0);
  }

  // Recourse: w_ij with demand rows, capacity rows, and (disruption) outage rows.
  Recourse& rc = prob.recourse;
  const int ny = n * n;
  const int rows = demand ? 2 * n : 3 * n;
  rc.cost.assign(ny, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) rc.cost[i * n + j] = (1.0 - spec.rho) * inst.cost(i, j);
  }
  rc.matrix = Matrix(rows, ny);
  rc.rhs.assign(rows, 0.0);
  rc.coupling_x = Matrix(rows, nx);
  rc.coupling_xi = Matrix(rows, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) rc.matrix(i, i * n + j) = 1.0;
    if (demand) {
      rc.coupling_xi(i, i) = -1.0;
    } else {
      rc.rhs[i] = inst.demand[i];
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) rc.matrix(n + j, i * n + j) = -1.0;
    rc.coupling_x(n + j, j) = inst.capacity[j];
  }
  if (!demand) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) rc.matrix(2 * n + j, i * n + j) = -1.0;
      rc.rhs[2 * n + j] = -inst.capacity[j];
      rc.coupling_xi(2 * n + j, j) = -inst.capacity[j];
    }
  }

  if (demand) {
    prob.space = BoxSpace{inst.demand_lower, inst.demand_upper};
  } else {
    prob.space = BinaryCardinalitySpace{n, spec.k()};
  }
  prob.complete_recourse = !spec.capacitated;

  switch (spec.ambiguity) {
    case FlAmbiguityKind::kMoment:
      prob.ambiguity = MomentAmbiguity{Matrix::identity(n), inst.moment_bound};
      break;
    case FlAmbiguityKind::kWasserstein:
    case FlAmbiguityKind::kWassersteinL2: {
      WassersteinAmbiguity w;
      w.samples = inst.samples;
      for (auto& s : w.samples) s.kind = demand ? ScenarioKind::kContinuous : ScenarioKind::kBinary;
      w.weights.assign(w.samples.size(), 1.0 / static_cast<double>(w.samples.size()));
      w.radius = spec.r();
      w.norm = spec.ambiguity == FlAmbiguityKind::kWasserstein ? WassersteinNorm::kL1 : WassersteinNorm::kL2;
      prob.ambiguity = std::move(w);
      break;
    }
    case FlAmbiguityKind::kMixedInteger: {
      MixedIntegerMomentAmbiguity mi;
      mi.psi = Matrix::identity(n);
      mi.lower.assign(n, spec.k_lower);
      mi.upper.assign(n, spec.k_upper);
      mi.theta.assign(n, spec.theta);
      mi.z_constraints = Matrix(1, n, 1.0);
      mi.z_sense = {RowSense::kGreaterEqual};
      mi.z_rhs = {static_cast<double>(spec.z_min)};
      prob.ambiguity = std::move(mi);
      break;
    }
  }
  prob.validate();
  return prob;
}

// Parses "fl:d,uncap,moment,n=5,seed=1[,p=3,k=1,r=0.45,N=5,radius=2,rho=0.5]".
inline FlSpec parse_generator_spec(const std::string& text) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kInvalidSpec, "generator spec '" + text + "': " + why);
  };
  if (text.rfind("fl:", 0) != 0) fail("must start with 'fl:'");
  FlSpec spec;
  std::stringstream ss(text.substr(3));
  std::string tok;
  auto number = [&](const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) fail("bad value for " + key);
    return out;
  };
  while (std::getline(ss, tok, ',')) {
    if (tok == "d") spec.uncertainty = FlUncertainty::kDemand;
    else if (tok == "u") spec.uncertainty = FlUncertainty::kDisruption;
    else if (tok == "cap") spec.capacitated = true;
    else if (tok == "uncap") spec.capacitated = false;
    else if (tok == "moment") spec.ambiguity = FlAmbiguityKind::kMoment;
    else if (tok == "wass") spec.ambiguity = FlAmbiguityKind::kWasserstein;
    else if (tok == "wass_l2") spec.ambiguity = FlAmbiguityKind::kWassersteinL2;
    else if (tok == "mip") spec.ambiguity = FlAmbiguityKind::kMixedInteger;
    else {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) fail("unknown token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const double v = number(key, tok.substr(eq + 1));
      if (key == "n") spec.n_sites = static_cast<int>(v);
      else if (key == "seed") spec.seed = static_cast<std::uint64_t>(v);
      else if (key == "p") spec.facilities = static_cast<int>(v);
      else if (key == "k") spec.disruptions = static_cast<int>(v);
      else if (key == "r") spec.spread = v;
      else if (key == "N") spec.samples = static_cast<int>(v);
      else if (key == "radius") spec.radius = v;
      else if (key == "rho") spec.rho = v;
      else fail("unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

}  // namespace dro
