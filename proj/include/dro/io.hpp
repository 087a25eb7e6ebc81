#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dro/benders.hpp"
#include "dro/ccg.hpp"
#include "dro/flp.hpp"

namespace dro {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// A loaded instance. Facility-location files keep the instance so that
// results can name open sites; generic files carry only the problem.
struct InstanceFile {
  TwoStageProblem problem;
  std::optional<FlInstance> facility_location;
};

namespace io_detail {

[[noreturn]] inline void bad(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::kInvalidInput, "field '" + path + "': " + why);
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string join(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

inline const Json& member(const Json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) bad(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) bad(join(path, key), "missing");
  return *it;
}

inline const Json* optional_member(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

// null stands for an infinite value; `null_value` says which one.
inline double number(const Json& v, const std::string& path, double null_value = std::nan("")) {
  if (v.is_null() && !std::isnan(null_value)) return null_value;
  if (!v.is_number()) bad(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(path, "expected a finite number");
  return d;
}

inline long integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) bad(path, "expected an integer");
  return v.get<long>();
}

inline bool boolean(const Json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "expected true or false");
  return v.get<bool>();
}

inline std::string text(const Json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> vector(const Json& v, const std::string& path, double null_value = std::nan("")) {
  if (!v.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], join(path, i), null_value));
  return out;
}

inline std::vector<int> indices(const Json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(integer(v[i], join(path, i))));
  return out;
}

// Rows of equal length; an empty array gives a 0 x `cols` matrix.
inline Matrix matrix(const Json& v, const std::string& path, std::size_t cols) {
  if (!v.is_array()) bad(path, "expected an array of rows");
  Matrix m(0, cols);
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::vector<double> row = vector(v[r], join(path, r));
    if (row.size() != cols) {
      bad(join(path, r), "expected " + std::to_string(cols) + " entries, got " + std::to_string(row.size()));
    }
    m.append_row(row);
  }
  return m;
}

inline void expect_size(std::size_t got, std::size_t want, const std::string& path) {
  if (got != want) bad(path, "expected " + std::to_string(want) + " entries, got " + std::to_string(got));
}

inline RowSense sense(const Json& v, const std::string& path) {
  const std::string s = text(v, path);
  if (s == "<=") return RowSense::kLessEqual;
  if (s == ">=") return RowSense::kGreaterEqual;
  if (s == "=") return RowSense::kEqual;
  bad(path, "expected one of \"<=\", \">=\", \"=\"");
}

inline std::vector<RowSense> senses(const Json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "expected an array of row senses");
  std::vector<RowSense> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(sense(v[i], join(path, i)));
  return out;
}

inline const char* sense_text(RowSense s) {
  switch (s) {
    case RowSense::kLessEqual: return "<=";
    case RowSense::kGreaterEqual: return ">=";
    case RowSense::kEqual: return "=";
  }
  return "?";
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json vector_json(const std::vector<double>& v) {
  Json out = Json::array();
  for (double d : v) out.push_back(finite_or_null(d));
  return out;
}

inline Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

inline Json scenarios_json(const std::vector<Scenario>& s) {
  Json out = Json::array();
  for (const auto& sc : s) out.push_back(sc.values);
  return out;
}

inline std::vector<Scenario> scenarios(const Json& v, const std::string& path, std::size_t dim, ScenarioKind kind) {
  if (!v.is_array()) bad(path, "expected an array of scenarios");
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Scenario s{vector(v[i], join(path, i)), kind};
    expect_size(s.values.size(), dim, join(path, i));
    out.push_back(std::move(s));
  }
  return out;
}

inline void check(const std::string& path, const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidInput) throw;
    bad(path, e.what());
  }
}

}  // namespace io_detail

// ------------------------------------------------------------ generic problem

inline Json problem_to_json(const TwoStageProblem& p) {
  using namespace io_detail;
  Json first;
  first["cost"] = p.first.cost;
  first["constraints"] = matrix_json(p.first.constraints);
  Json sense = Json::array();
  for (RowSense s : p.first.row_sense) sense.push_back(sense_text(s));
  first["row_sense"] = sense;
  first["rhs"] = p.first.rhs;
  first["lower"] = vector_json(p.first.lower);
  first["upper"] = vector_json(p.first.upper);
  first["binaries"] = p.first.binaries;
  first["names"] = p.first.names;

  Json rec;
  rec["cost"] = p.recourse.cost;
  rec["matrix"] = matrix_json(p.recourse.matrix);
  rec["rhs"] = p.recourse.rhs;
  rec["coupling_x"] = matrix_json(p.recourse.coupling_x);
  rec["coupling_xi"] = matrix_json(p.recourse.coupling_xi);

  Json space;
  if (const auto* box = std::get_if<BoxSpace>(&p.space)) {
    space["type"] = "box";
    space["lower"] = box->lower;
    space["upper"] = box->upper;
  } else {
    const auto& bc = std::get<BinaryCardinalitySpace>(p.space);
    space["type"] = "binary_cardinality";
    space["dimension"] = bc.dimension;
    space["max_ones"] = bc.max_ones;
  }

  Json amb;
  if (const auto* m = std::get_if<MomentAmbiguity>(&p.ambiguity)) {
    amb["type"] = "moment";
    amb["psi"] = matrix_json(m->psi);
    amb["gamma"] = m->gamma;
  } else if (const auto* w = std::get_if<WassersteinAmbiguity>(&p.ambiguity)) {
    amb["type"] = "wasserstein";
    amb["samples"] = scenarios_json(w->samples);
    amb["weights"] = w->weights;
    amb["radius"] = w->radius;
    amb["norm"] = w->norm == WassersteinNorm::kL1 ? "l1" : "l2";
  } else {
    const auto& mi = std::get<MixedIntegerMomentAmbiguity>(p.ambiguity);
    amb["type"] = "mixed_integer";
    amb["psi"] = matrix_json(mi.psi);
    amb["lower"] = vector_json(mi.lower);
    amb["upper"] = vector_json(mi.upper);
    amb["theta"] = mi.theta;
    amb["z_constraints"] = matrix_json(mi.z_constraints);
    Json zs = Json::array();
    for (RowSense s : mi.z_sense) zs.push_back(sense_text(s));
    amb["z_sense"] = zs;
    amb["z_rhs"] = mi.z_rhs;
  }

  Json out;
  out["schema"] = kSchemaVersion;
  out["kind"] = "two_stage";
  out["first_stage"] = first;
  out["recourse"] = rec;
  out["space"] = space;
  out["ambiguity"] = amb;
  out["complete_recourse"] = p.complete_recourse;
  out["eta_lower_bound"] = p.eta_lower_bound;
  return out;
}

inline TwoStageProblem problem_from_json(const Json& j) {
  using namespace io_detail;
  TwoStageProblem p;
  const Json& first = member(j, "", "first_stage");
  p.first.cost = vector(member(first, "first_stage", "cost"), "first_stage.cost");
  const std::size_t nx = p.first.cost.size();
  p.first.constraints = matrix(member(first, "first_stage", "constraints"), "first_stage.constraints", nx);
  p.first.row_sense = senses(member(first, "first_stage", "row_sense"), "first_stage.row_sense");
  p.first.rhs = vector(member(first, "first_stage", "rhs"), "first_stage.rhs");
  expect_size(p.first.row_sense.size(), p.first.constraints.rows(), "first_stage.row_sense");
  expect_size(p.first.rhs.size(), p.first.constraints.rows(), "first_stage.rhs");
  p.first.lower = vector(member(first, "first_stage", "lower"), "first_stage.lower", -kInf);
  p.first.upper = vector(member(first, "first_stage", "upper"), "first_stage.upper", kInf);
  expect_size(p.first.lower.size(), nx, "first_stage.lower");
  expect_size(p.first.upper.size(), nx, "first_stage.upper");
  p.first.binaries = indices(member(first, "first_stage", "binaries"), "first_stage.binaries");
  for (std::size_t k = 0; k < p.first.binaries.size(); ++k) {
    const int b = p.first.binaries[k];
    if (b < 0 || static_cast<std::size_t>(b) >= nx) bad(join("first_stage.binaries", k), "index out of range");
  }
  if (const Json* names = optional_member(first, "names")) {
    if (!names->is_array()) bad("first_stage.names", "expected an array of strings");
    for (std::size_t k = 0; k < names->size(); ++k) p.first.names.push_back(text((*names)[k], join("first_stage.names", k)));
    if (!p.first.names.empty()) expect_size(p.first.names.size(), nx, "first_stage.names");
  }

  const Json& space = member(j, "", "space");
  const std::string type = text(member(space, "space", "type"), "space.type");
  if (type == "box") {
    BoxSpace box{vector(member(space, "space", "lower"), "space.lower"),
                 vector(member(space, "space", "upper"), "space.upper")};
    expect_size(box.upper.size(), box.lower.size(), "space.upper");
    p.space = box;
  } else if (type == "binary_cardinality") {
    p.space = BinaryCardinalitySpace{static_cast<int>(integer(member(space, "space", "dimension"), "space.dimension")),
                                     static_cast<int>(integer(member(space, "space", "max_ones"), "space.max_ones"))};
  } else {
    bad("space.type", "expected \"box\" or \"binary_cardinality\"");
  }
  check("space", [&] { validate_space(p.space); });
  const std::size_t dim = space_dimension(p.space);
  const ScenarioKind kind = space_kind(p.space);

  const Json& rec = member(j, "", "recourse");
  p.recourse.cost = vector(member(rec, "recourse", "cost"), "recourse.cost");
  p.recourse.matrix = matrix(member(rec, "recourse", "matrix"), "recourse.matrix", p.recourse.cost.size());
  const std::size_t mr = p.recourse.matrix.rows();
  p.recourse.rhs = vector(member(rec, "recourse", "rhs"), "recourse.rhs");
  expect_size(p.recourse.rhs.size(), mr, "recourse.rhs");
  p.recourse.coupling_x = matrix(member(rec, "recourse", "coupling_x"), "recourse.coupling_x", nx);
  expect_size(p.recourse.coupling_x.rows(), mr, "recourse.coupling_x");
  p.recourse.coupling_xi = matrix(member(rec, "recourse", "coupling_xi"), "recourse.coupling_xi", dim);
  expect_size(p.recourse.coupling_xi.rows(), mr, "recourse.coupling_xi");

  const Json& amb = member(j, "", "ambiguity");
  const std::string atype = text(member(amb, "ambiguity", "type"), "ambiguity.type");
  if (atype == "moment") {
    MomentAmbiguity m;
    m.gamma = vector(member(amb, "ambiguity", "gamma"), "ambiguity.gamma");
    m.psi = matrix(member(amb, "ambiguity", "psi"), "ambiguity.psi", dim);
    expect_size(m.psi.rows(), m.gamma.size(), "ambiguity.psi");
    p.ambiguity = m;
  } else if (atype == "wasserstein") {
    WassersteinAmbiguity w;
    w.samples = scenarios(member(amb, "ambiguity", "samples"), "ambiguity.samples", dim, kind);
    w.weights = vector(member(amb, "ambiguity", "weights"), "ambiguity.weights");
    expect_size(w.weights.size(), w.samples.size(), "ambiguity.weights");
    w.radius = number(member(amb, "ambiguity", "radius"), "ambiguity.radius");
    const std::string norm = text(member(amb, "ambiguity", "norm"), "ambiguity.norm");
    if (norm == "l1") w.norm = WassersteinNorm::kL1;
    else if (norm == "l2") w.norm = WassersteinNorm::kL2;
    else bad("ambiguity.norm", "expected \"l1\" or \"l2\"");
    p.ambiguity = w;
  } else if (atype == "mixed_integer") {
    MixedIntegerMomentAmbiguity mi;
    mi.psi = matrix(member(amb, "ambiguity", "psi"), "ambiguity.psi", dim);
    mi.lower = vector(member(amb, "ambiguity", "lower"), "ambiguity.lower", -kInf);
    mi.upper = vector(member(amb, "ambiguity", "upper"), "ambiguity.upper", kInf);
    mi.theta = vector(member(amb, "ambiguity", "theta"), "ambiguity.theta");
    for (const char* key : {"lower", "upper", "theta"}) {
      const std::size_t got = key[0] == 'l' ? mi.lower.size() : key[0] == 'u' ? mi.upper.size() : mi.theta.size();
      expect_size(got, mi.psi.rows(), join("ambiguity", key));
    }
    mi.z_constraints = matrix(member(amb, "ambiguity", "z_constraints"), "ambiguity.z_constraints", mi.num_z());
    mi.z_sense = senses(member(amb, "ambiguity", "z_sense"), "ambiguity.z_sense");
    mi.z_rhs = vector(member(amb, "ambiguity", "z_rhs"), "ambiguity.z_rhs");
    expect_size(mi.z_sense.size(), mi.z_constraints.rows(), "ambiguity.z_sense");
    expect_size(mi.z_rhs.size(), mi.z_constraints.rows(), "ambiguity.z_rhs");
    p.ambiguity = mi;
  } else {
    bad("ambiguity.type", "expected \"moment\", \"wasserstein\" or \"mixed_integer\"");
  }
  check("ambiguity", [&] { validate_ambiguity(p.ambiguity, dim); });

  if (const Json* cr = optional_member(j, "complete_recourse")) p.complete_recourse = boolean(*cr, "complete_recourse");
  if (const Json* eb = optional_member(j, "eta_lower_bound")) p.eta_lower_bound = number(*eb, "eta_lower_bound");
  check("first_stage", [&] { p.validate(); });
  return p;
}

// ---------------------------------------------------------- facility location

inline const char* uncertainty_text(FlUncertainty u) { return u == FlUncertainty::kDemand ? "demand" : "disruption"; }

inline const char* ambiguity_text(FlAmbiguityKind a) {
  switch (a) {
    case FlAmbiguityKind::kMoment: return "moment";
    case FlAmbiguityKind::kWasserstein: return "wasserstein";
    case FlAmbiguityKind::kWassersteinL2: return "wasserstein_l2";
    case FlAmbiguityKind::kMixedInteger: return "mixed_integer";
  }
  return "?";
}

inline Json fl_to_json(const FlInstance& inst) {
  using namespace io_detail;
  const FlSpec& s = inst.spec;
  Json spec;
  spec["n_sites"] = s.n_sites;
  spec["seed"] = s.seed;
  spec["uncertainty"] = uncertainty_text(s.uncertainty);
  spec["capacitated"] = s.capacitated;
  spec["ambiguity"] = ambiguity_text(s.ambiguity);
  spec["facilities"] = s.p();
  spec["disruptions"] = s.k();
  spec["spread"] = s.spread;
  spec["rho"] = s.rho;
  spec["samples"] = s.samples;
  spec["radius"] = s.r();
  spec["box_low"] = s.box_low;
  spec["box_high"] = s.box_high;
  spec["k_lower"] = s.k_lower;
  spec["k_upper"] = s.k_upper;
  spec["theta"] = s.theta;
  spec["z_min"] = s.z_min;

  Json out;
  out["schema"] = kSchemaVersion;
  out["kind"] = "facility_location";
  out["spec"] = spec;
  out["x_coord"] = inst.x_coord;
  out["y_coord"] = inst.y_coord;
  out["cost"] = matrix_json(inst.cost);
  out["demand"] = inst.demand;
  out["fixed_cost"] = inst.fixed_cost;
  out["capacity"] = inst.capacity;
  out["demand_lower"] = inst.demand_lower;
  out["demand_upper"] = inst.demand_upper;
  out["moment_bound"] = inst.moment_bound;
  out["samples"] = scenarios_json(inst.samples);
  return out;
}

inline FlInstance fl_from_json(const Json& j) {
  using namespace io_detail;
  FlInstance inst;
  const Json& spec = member(j, "", "spec");
  FlSpec& s = inst.spec;
  auto int_field = [&](const char* key) {
    return static_cast<int>(integer(member(spec, "spec", key), join("spec", key)));
  };
  auto num_field = [&](const char* key) { return number(member(spec, "spec", key), join("spec", key)); };
  s.n_sites = int_field("n_sites");
  const long seed = integer(member(spec, "spec", "seed"), "spec.seed");
  if (seed < 0) bad("spec.seed", "expected a nonnegative integer");
  s.seed = static_cast<std::uint64_t>(seed);
  const std::string u = text(member(spec, "spec", "uncertainty"), "spec.uncertainty");
  if (u == "demand") s.uncertainty = FlUncertainty::kDemand;
  else if (u == "disruption") s.uncertainty = FlUncertainty::kDisruption;
  else bad("spec.uncertainty", "expected \"demand\" or \"disruption\"");
  s.capacitated = boolean(member(spec, "spec", "capacitated"), "spec.capacitated");
  const std::string a = text(member(spec, "spec", "ambiguity"), "spec.ambiguity");
  if (a == "moment") s.ambiguity = FlAmbiguityKind::kMoment;
  else if (a == "wasserstein") s.ambiguity = FlAmbiguityKind::kWasserstein;
  else if (a == "wasserstein_l2") s.ambiguity = FlAmbiguityKind::kWassersteinL2;
  else if (a == "mixed_integer") s.ambiguity = FlAmbiguityKind::kMixedInteger;
  else bad("spec.ambiguity", "expected \"moment\", \"wasserstein\", \"wasserstein_l2\" or \"mixed_integer\"");
  s.facilities = int_field("facilities");
  s.disruptions = int_field("disruptions");
  s.spread = num_field("spread");
  s.rho = num_field("rho");
  s.samples = int_field("samples");
  s.radius = num_field("radius");
  s.box_low = num_field("box_low");
  s.box_high = num_field("box_high");
  s.k_lower = num_field("k_lower");
  s.k_upper = num_field("k_upper");
  s.theta = num_field("theta");
  s.z_min = int_field("z_min");
  check("spec", [&] { s.validate(); });

  const std::size_t n = static_cast<std::size_t>(s.n_sites);
  auto sized = [&](const char* key, std::size_t want) {
    std::vector<double> v = vector(member(j, "", key), key);
    expect_size(v.size(), want, key);
    return v;
  };
  inst.x_coord = sized("x_coord", n);
  inst.y_coord = sized("y_coord", n);
  inst.cost = matrix(member(j, "", "cost"), "cost", n);
  expect_size(inst.cost.rows(), n, "cost");
  inst.demand = sized("demand", n);
  inst.fixed_cost = sized("fixed_cost", n);
  inst.capacity = sized("capacity", n);
  inst.demand_lower = sized("demand_lower", n);
  inst.demand_upper = sized("demand_upper", n);
  const bool moment = s.ambiguity == FlAmbiguityKind::kMoment;
  const bool wass = s.ambiguity == FlAmbiguityKind::kWasserstein || s.ambiguity == FlAmbiguityKind::kWassersteinL2;
  inst.moment_bound = sized("moment_bound", moment ? n : 0);
  const ScenarioKind kind = s.uncertainty == FlUncertainty::kDemand ? ScenarioKind::kContinuous : ScenarioKind::kBinary;
  inst.samples = scenarios(member(j, "", "samples"), "samples", n, kind);
  if (wass) {
    expect_size(inst.samples.size(), static_cast<std::size_t>(s.samples), "samples");
  } else {
    expect_size(inst.samples.size(), 0, "samples");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inst.demand_lower[i] <= inst.demand_upper[i])) bad(join("demand_upper", i), "below demand_lower");
    if (!(inst.capacity[i] > 0.0)) bad(join("capacity", i), "expected a positive capacity");
  }
  return inst;
}

// ------------------------------------------------------------ instance files

inline Json parse_json_text(const std::string& content, const std::string& source) {
  try {
    return Json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidInput, source + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

inline InstanceFile instance_from_json(const Json& j) {
  using namespace io_detail;
  const Json& schema = member(j, "", "schema");
  if (integer(schema, "schema") != kSchemaVersion) bad("schema", "unsupported version, expected 1");
  const std::string kind = text(member(j, "", "kind"), "kind");
  InstanceFile out;
  if (kind == "facility_location") {
    out.facility_location = fl_from_json(j);
    check("spec", [&] { out.problem = encode(*out.facility_location); });
  } else if (kind == "two_stage") {
    out.problem = problem_from_json(j);
  } else {
    bad("kind", "expected \"facility_location\" or \"two_stage\"");
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::kInvalidInput, "write failed: " + path);
}

inline InstanceFile load_instance(const std::string& path) {
  return instance_from_json(parse_json_text(read_file(path), path));
}

// ------------------------------------------------------------------- results

struct ResultMeta {
  std::string algorithm;
  std::string oracle;
  std::string instance;
  double tolerance = 0.0;
  bool emit_timing = false;
  double wall_seconds = 0.0;
};

// Indices of the binaries at one; for facility-location instances these are the open sites.
inline std::vector<int> open_binaries(const TwoStageProblem& p, const std::vector<double>& x) {
  std::vector<int> out;
  if (x.empty()) return out;
  for (int b : p.first.binaries) {
    if (x[b] > 0.5) out.push_back(b);
  }
  return out;
}

inline Json result_to_json(const TwoStageProblem& p, const SolveResult& r, const ResultMeta& meta) {
  using namespace io_detail;
  Json out;
  out["schema"] = kSchemaVersion;
  out["instance"] = meta.instance;
  out["algorithm"] = meta.algorithm;
  out["oracle"] = meta.oracle;
  out["tolerance"] = meta.tolerance;
  out["status"] = status_name(r.status);
  out["objective"] = finite_or_null(r.objective);
  out["lb"] = finite_or_null(r.state.lb);
  out["ub"] = finite_or_null(r.state.ub);
  out["gap"] = finite_or_null(r.gap());
  out["iterations"] = r.state.t;
  out["pool_optimality"] = r.state.pools.optimality.size();
  out["pool_feasibility"] = r.state.pools.feasibility.size();
  out["cuts"] = r.cuts;
  // Timing breaks byte-identical reruns, so it is opt-in.
  out["wall_time_s"] = meta.emit_timing ? Json(meta.wall_seconds) : Json(nullptr);
  out["open_facilities"] = open_binaries(p, r.x);
  out["x"] = r.x;
  return out;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv(const std::vector<IterationRecord>& trace, bool emit_timing) {
  std::ostringstream out;
  out << "t,lb,ub,gap,eta_f,eta_o,pool_o,pool_f,cuts";
  if (emit_timing) out << ",wall_ms";
  out << '\n';
  for (const auto& r : trace) {
    out << r.t << ',' << format_number(r.lb) << ',' << format_number(r.ub) << ',' << format_number(r.gap()) << ','
        << format_number(r.eta_f) << ',' << format_number(r.eta_o) << ',' << r.pool_o << ',' << r.pool_f << ','
        << r.cuts;
    if (emit_timing) out << ',' << format_number(r.wall_ms);
    out << '\n';
  }
  return out.str();
}

}  // namespace dro
