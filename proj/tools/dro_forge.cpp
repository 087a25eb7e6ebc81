// Batch front end: solve one instance, or run a seeded benchmark suite and
// report per-block averages.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dro/io.hpp"

namespace {

using dro::Json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitLimit = 3;

const std::vector<std::string> kAlgorithms = {"ccg-dro", "basic-ccg", "benders-dro", "basic-benders"};

struct SolverConfig {
  std::string algorithm = "ccg-dro";
  std::string oracle = "cg";
  double tol = 5e-3;
  double cg_eps = 1e-6;
  double time_limit = 7200.0;
  int iteration_limit = 500;
  bool merged_pools = false;
  bool parallel = false;
};

// Thread cap: hardware concurrency, lowered by DRO_FORGE_THREADS when set.
unsigned thread_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DRO_FORGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cap = std::min<unsigned>(cap, static_cast<unsigned>(v));
  }
  return cap;
}

dro::CcgOptions solver_options(const SolverConfig& c) {
  dro::CcgOptions o;
  o.wcev.tol.outer_tol = c.tol;
  o.wcev.tol.cg_eps = c.cg_eps;
  o.wcev.oracle = c.oracle == "bruteforce" ? dro::OracleKind::kBruteForce : dro::OracleKind::kColumnGeneration;
  o.wcev.parallel = c.parallel;
  o.wcev.threads = static_cast<int>(thread_cap());
  o.time_limit = c.time_limit;
  o.iteration_limit = c.iteration_limit;
  if (c.merged_pools) o.master.pool_policy = dro::PoolPolicy::kMerged;
  return o;
}

dro::SolveResult run_algorithm(const dro::TwoStageProblem& p, const SolverConfig& c) {
  const dro::CcgOptions o = solver_options(c);
  if (c.algorithm == "ccg-dro") return dro::solve_ccg_dro(p, o);
  if (c.algorithm == "basic-ccg") return dro::solve_basic_ccg(p, o);
  if (c.algorithm == "benders-dro") return dro::solve_benders(p, dro::BendersMode::kDro, o);
  return dro::solve_benders(p, dro::BendersMode::kBasic, o);
}

bool limit_status(dro::SolveStatus s) {
  return s == dro::SolveStatus::kTimeLimit || s == dro::SolveStatus::kIterationLimit ||
         s == dro::SolveStatus::kStalled;
}

void add_solver_options(CLI::App& app, SolverConfig& c) {
  app.add_option("--algorithm", c.algorithm, "Outer algorithm")->check(CLI::IsMember(kAlgorithms));
  app.add_option("--oracle", c.oracle, "WCEV oracle")->check(CLI::IsMember({"cg", "bruteforce"}));
  app.add_option("--tol", c.tol, "Relative optimality tolerance")->check(CLI::PositiveNumber);
  app.add_option("--cg-eps", c.cg_eps, "Relative pricing tolerance")->check(CLI::PositiveNumber);
  app.add_option("--time-limit", c.time_limit, "Wall-clock limit in seconds")->check(CLI::PositiveNumber);
  app.add_option("--iteration-limit", c.iteration_limit, "Outer iteration limit")->check(CLI::PositiveNumber);
  app.add_flag("--merged-pools", c.merged_pools, "Drive the optimality block by both scenario pools");
  app.add_flag("--parallel", c.parallel, "Concurrent per-sample pricing and suite rows");
}

// ------------------------------------------------------------------- solve

struct SolveArgs {
  std::string instance;
  std::string gen;
  std::optional<long> seed;
  std::string output;
  std::string trace;
  std::string write_instance;
  bool emit_timing = false;
  SolverConfig solver;
};

int run_solve(const SolveArgs& a) {
  dro::InstanceFile file;
  std::string source;
  if (!a.gen.empty()) {
    dro::FlSpec spec = dro::parse_generator_spec(a.gen);
    if (a.seed) spec.seed = static_cast<std::uint64_t>(*a.seed);
    file.facility_location = dro::generate_instance(spec);
    file.problem = dro::encode(*file.facility_location);
    source = a.gen;
    if (a.seed) source += " seed=" + std::to_string(*a.seed);
  } else {
    file = dro::load_instance(a.instance);
    source = std::filesystem::path(a.instance).filename().string();
  }
  if (!a.write_instance.empty()) {
    const Json j = file.facility_location ? dro::fl_to_json(*file.facility_location) : dro::problem_to_json(file.problem);
    dro::write_file(a.write_instance, j.dump(2) + "\n");
  }

  const auto start = std::chrono::steady_clock::now();
  const dro::SolveResult r = run_algorithm(file.problem, a.solver);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  dro::ResultMeta meta{a.solver.algorithm, a.solver.oracle, source, a.solver.tol, a.emit_timing, seconds};
  const std::string result = dro::result_to_json(file.problem, r, meta).dump(2) + "\n";
  if (a.output.empty() || a.output == "-") {
    std::cout << result;
  } else {
    dro::write_file(a.output, result);
  }
  if (!a.trace.empty()) dro::write_file(a.trace, dro::trace_csv(r.state.trace, a.emit_timing));

  if (limit_status(r.status)) {
    std::cerr << "dro_forge: stopped at " << dro::status_name(r.status) << ", gap " << dro::format_number(r.gap())
              << "\n";
    return kExitLimit;
  }
  return kExitOk;
}

// ------------------------------------------------------------------- bench

// "fl:d|u,uncap,moment|wass,n=8|10" expands to the cartesian product of the
// alternatives, in lexicographic order of the token positions.
std::vector<std::string> expand_suite(const std::string& suite) {
  const std::string prefix = "fl:";
  if (suite.rfind(prefix, 0) != 0) throw dro::Error(dro::ErrorCode::kInvalidSpec, "suite must start with 'fl:'");
  std::vector<std::vector<std::string>> choices;
  std::stringstream ss(suite.substr(prefix.size()));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::vector<std::string> alts;
    std::stringstream ts(tok);
    std::string alt;
    while (std::getline(ts, alt, '|')) alts.push_back(alt);
    if (alts.empty()) alts.push_back("");
    choices.push_back(alts);
  }
  std::vector<std::string> out{prefix};
  for (std::size_t k = 0; k < choices.size(); ++k) {
    std::vector<std::string> next;
    for (const auto& head : out) {
      for (const auto& alt : choices[k]) next.push_back(k == 0 ? head + alt : head + "," + alt);
    }
    out = std::move(next);
  }
  return out;
}

std::vector<long> parse_seeds(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string tok;
  auto num = [&](const std::string& s) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || v < 0) throw dro::Error(dro::ErrorCode::kInvalidInput, "bad seed list '" + text + "'");
    return v;
  };
  while (std::getline(ss, tok, ',')) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos) {
      out.push_back(num(tok));
    } else {
      const long lo = num(tok.substr(0, dash));
      const long hi = num(tok.substr(dash + 1));
      if (hi < lo) throw dro::Error(dro::ErrorCode::kInvalidInput, "bad seed range '" + tok + "'");
      for (long s = lo; s <= hi; ++s) out.push_back(s);
    }
  }
  if (out.empty()) throw dro::Error(dro::ErrorCode::kInvalidInput, "empty seed list");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

struct BenchArgs {
  std::string suite;
  std::string seeds = "1-3";
  std::string algorithms = "ccg-dro,basic-ccg";
  std::string oracles = "cg";
  std::string csv;
  std::string summary_csv;
  std::string trace_dir;
  SolverConfig solver;
};

struct BenchRow {
  std::string block;
  long seed = 0;
  std::string algorithm;
  std::string oracle;
  bool ok = false;
  std::string status;
  double objective = dro::kInf;
  double lb = -dro::kInf;
  double ub = dro::kInf;
  double gap = dro::kInf;
  int iterations = 0;
  std::size_t pool_o = 0;
  std::size_t pool_f = 0;
  std::size_t cuts = 0;
  double seconds = 0.0;
  std::vector<dro::IterationRecord> trace;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string trace_name(const BenchRow& r) {
  std::string name = r.block + "_s" + std::to_string(r.seed) + "_" + r.algorithm + "_" + r.oracle + ".csv";
  for (char& c : name) {
    if (c == ':' || c == ',' || c == '=' || c == '|') c = '_';
  }
  return name;
}

void solve_row(BenchRow& row, const SolverConfig& base) {
  SolverConfig c = base;
  c.algorithm = row.algorithm;
  c.oracle = row.oracle;
  const auto start = std::chrono::steady_clock::now();
  try {
    dro::FlSpec spec = dro::parse_generator_spec(row.block);
    spec.seed = static_cast<std::uint64_t>(row.seed);
    const dro::TwoStageProblem p = dro::encode(dro::generate_instance(spec));
    const dro::SolveResult r = run_algorithm(p, c);
    row.ok = true;
    row.status = dro::status_name(r.status);
    row.objective = r.objective;
    row.lb = r.state.lb;
    row.ub = r.state.ub;
    row.gap = r.gap();
    row.iterations = r.state.t;
    row.pool_o = r.state.pools.optimality.size();
    row.pool_f = r.state.pools.feasibility.size();
    row.cuts = r.cuts;
    row.trace = r.state.trace;
  } catch (const std::exception& e) {
    row.ok = false;
    row.status = std::string("error: ") + e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct BlockStats {
  int rows = 0;
  int failed = 0;
  double iterations = 0, seconds = 0, gap = 0, pool_o = 0, pool_f = 0;
  int gap_rows = 0;       // rows with a finite gap; infeasible ones have none
  double max_dobj = 0.0;  // against the first oracle, same seed
  bool has_dobj = false;

  double mean(double total) const { return rows > failed ? total / (rows - failed) : std::nan(""); }
  double mean_gap() const { return gap_rows > 0 ? gap / gap_rows : std::nan(""); }
};

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

int run_bench(const BenchArgs& a) {
  const std::vector<std::string> blocks = expand_suite(a.suite);
  for (const auto& b : blocks) dro::parse_generator_spec(b);
  const std::vector<long> seeds = parse_seeds(a.seeds);
  const std::vector<std::string> algorithms = split_list(a.algorithms);
  const std::vector<std::string> oracles = split_list(a.oracles);
  for (const auto& alg : algorithms) {
    if (std::find(kAlgorithms.begin(), kAlgorithms.end(), alg) == kAlgorithms.end()) {
      throw dro::Error(dro::ErrorCode::kInvalidInput, "unknown algorithm '" + alg + "'");
    }
  }
  for (const auto& o : oracles) {
    if (o != "cg" && o != "bruteforce") throw dro::Error(dro::ErrorCode::kInvalidInput, "unknown oracle '" + o + "'");
  }
  if (algorithms.empty() || oracles.empty()) throw dro::Error(dro::ErrorCode::kInvalidInput, "empty algorithm or oracle list");

  std::vector<BenchRow> rows;
  for (const auto& b : blocks) {
    for (long s : seeds) {
      for (const auto& alg : algorithms) {
        for (const auto& o : oracles) {
          BenchRow row;
          row.block = b;
          row.seed = s;
          row.algorithm = alg;
          row.oracle = o;
          rows.push_back(std::move(row));
        }
      }
    }
  }

  // Rows are independent; each writes only its own slot.
  SolverConfig row_config = a.solver;
  const unsigned workers = a.solver.parallel ? std::min<unsigned>(thread_cap(), rows.size()) : 1;
  if (workers > 1) row_config.parallel = false;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) solve_row(rows[k], row_config);
  };
  if (workers > 1) {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  } else {
    work();
  }

  if (!a.trace_dir.empty()) {
    std::filesystem::create_directories(a.trace_dir);
    for (const auto& r : rows) {
      if (r.ok) dro::write_file((std::filesystem::path(a.trace_dir) / trace_name(r)).string(), dro::trace_csv(r.trace, true));
    }
  }

  if (!a.csv.empty()) {
    std::ostringstream out;
    out << "block,seed,algorithm,oracle,status,objective,lb,ub,gap,iterations,pool_o,pool_f,cuts,time_s\n";
    for (const auto& r : rows) {
      out << csv_field(r.block) << ',' << r.seed << ',' << r.algorithm << ',' << r.oracle << ',' << csv_field(r.status)
          << ',' << dro::format_number(r.objective) << ',' << dro::format_number(r.lb) << ','
          << dro::format_number(r.ub) << ',' << dro::format_number(r.gap) << ',' << r.iterations << ',' << r.pool_o
          << ',' << r.pool_f << ',' << r.cuts << ',' << dro::format_number(r.seconds) << '\n';
    }
    dro::write_file(a.csv, out.str());
  }

  // Per-block averages over successful rows.
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;  // block, algorithm, oracle
  std::map<Key, BlockStats> stats;
  std::map<std::tuple<std::string, long, std::string>, double> first_oracle;
  for (const auto& r : rows) {
    if (r.ok && r.oracle == oracles.front()) first_oracle[{r.block, r.seed, r.algorithm}] = r.objective;
  }
  auto index_of = [](const std::vector<std::string>& v, const std::string& s) {
    return static_cast<std::size_t>(std::find(v.begin(), v.end(), s) - v.begin());
  };
  for (const auto& r : rows) {
    BlockStats& s = stats[{index_of(blocks, r.block), index_of(algorithms, r.algorithm), index_of(oracles, r.oracle)}];
    ++s.rows;
    if (!r.ok) {
      ++s.failed;
      continue;
    }
    s.iterations += r.iterations;
    s.seconds += r.seconds;
    if (std::isfinite(r.gap)) {
      s.gap += r.gap;
      ++s.gap_rows;
    }
    s.pool_o += static_cast<double>(r.pool_o);
    s.pool_f += static_cast<double>(r.pool_f);
    const auto it = first_oracle.find({r.block, r.seed, r.algorithm});
    if (oracles.size() > 1 && it != first_oracle.end()) {
      const double d = std::isfinite(it->second) && std::isfinite(r.objective)
                           ? std::abs(it->second - r.objective)
                           : (std::isfinite(it->second) == std::isfinite(r.objective) ? 0.0 : dro::kInf);
      s.max_dobj = std::max(s.max_dobj, d);
      s.has_dobj = true;
    }
  }

  std::ostringstream summary;
  summary << "block,algorithm,oracle,rows,failed,mean_iterations,mean_time_s,mean_gap,mean_pool_o,mean_pool_f";
  if (oracles.size() > 1) summary << ",max_abs_dobjective";
  summary << '\n';
  std::ostringstream table;
  table << "Average per block\n";
  for (const auto& [key, s] : stats) {
    const auto& [b, alg, o] = key;
    summary << csv_field(blocks[b]) << ',' << algorithms[alg] << ',' << oracles[o] << ',' << s.rows << ',' << s.failed
            << ',' << dro::format_number(s.mean(s.iterations)) << ',' << dro::format_number(s.mean(s.seconds)) << ','
            << dro::format_number(s.mean_gap()) << ',' << dro::format_number(s.mean(s.pool_o)) << ','
            << dro::format_number(s.mean(s.pool_f));
    if (oracles.size() > 1) summary << ',' << (s.has_dobj ? dro::format_number(s.max_dobj) : "");
    summary << '\n';
    table << "  " << blocks[b] << "  " << algorithms[alg] << "/" << oracles[o] << ": iter " << fixed(s.mean(s.iterations), 1)
          << ", time " << fixed(s.mean(s.seconds), 2) << "s, gap " << fixed(100.0 * s.mean_gap(), 3) << "%, |xi_o| "
          << fixed(s.mean(s.pool_o), 1) << ", |xi_f| " << fixed(s.mean(s.pool_f), 1);
    if (s.has_dobj && o > 0) table << ", max |dobj| " << dro::format_number(s.max_dobj);
    if (s.failed > 0) table << ", failed " << s.failed << "/" << s.rows;
    table << '\n';
  }

  // Iteration ratios of each baseline against its DRO counterpart, paired by seed.
  auto reference_of = [](const std::string& alg) -> std::string {
    if (alg == "basic-ccg") return "ccg-dro";
    if (alg == "basic-benders") return "benders-dro";
    return "";
  };
  std::map<std::tuple<std::string, long, std::string, std::string>, const BenchRow*> by_key;
  for (const auto& r : rows) by_key[{r.block, r.seed, r.algorithm, r.oracle}] = &r;
  table << "Iteration ratio (baseline / DRO)\n";
  for (const auto& block : blocks) {
    for (const auto& alg : algorithms) {
      const std::string ref = reference_of(alg);
      if (ref.empty() || std::find(algorithms.begin(), algorithms.end(), ref) == algorithms.end()) continue;
      int pairs = 0, dominated = 0;
      double sum_ref = 0, sum_base = 0;
      for (long s : seeds) {
        const BenchRow* x = by_key[{block, s, ref, oracles.front()}];
        const BenchRow* y = by_key[{block, s, alg, oracles.front()}];
        if (x == nullptr || y == nullptr || !x->ok || !y->ok) continue;
        ++pairs;
        sum_ref += x->iterations;
        sum_base += y->iterations;
        dominated += x->iterations <= y->iterations ? 1 : 0;
      }
      table << "  " << block << "  " << alg << " / " << ref << ": ";
      if (pairs == 0) {
        table << "no paired rows\n";
        continue;
      }
      table << fixed(sum_base / pairs, 1) << " / " << fixed(sum_ref / pairs, 1) << " = "
            << fixed(sum_ref > 0 ? sum_base / sum_ref : std::nan(""), 2) << ", DRO <= baseline on " << dominated << "/"
            << pairs << "\n";
    }
  }

  if (!a.summary_csv.empty()) dro::write_file(a.summary_csv, summary.str());
  std::cout << table.str();
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const BenchRow& r) { return !r.ok; });
  if (failed > 0) std::cerr << "dro_forge: " << failed << " of " << rows.size() << " rows failed\n";
  return kExitOk;
}

// ---------------------------------------------------------------- generate

int run_generate(const std::string& gen, std::optional<long> seed, const std::string& output) {
  dro::FlSpec spec = dro::parse_generator_spec(gen);
  if (seed) spec.seed = static_cast<std::uint64_t>(*seed);
  const std::string text = dro::fl_to_json(dro::generate_instance(spec)).dump(2) + "\n";
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    dro::write_file(output, text);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage distributionally robust facility location solver"};
  app.require_subcommand(1);

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one instance");
  auto* inst_opt = solve_cmd->add_option("--instance", solve.instance, "Instance JSON file");
  auto* gen_opt = solve_cmd->add_option("--gen", solve.gen, "Generator spec, e.g. fl:d,uncap,moment,n=5,seed=1");
  inst_opt->excludes(gen_opt);
  gen_opt->excludes(inst_opt);
  solve_cmd->add_option("--seed", solve.seed, "Generator seed (overrides seed= in --gen)")->needs(gen_opt)->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--output", solve.output, "Result JSON path (default stdout)");
  solve_cmd->add_option("--trace", solve.trace, "Iteration trace CSV path");
  solve_cmd->add_option("--write-instance", solve.write_instance, "Also write the instance as JSON");
  solve_cmd->add_flag("--emit-timing", solve.emit_timing, "Report wall time (breaks byte-identical reruns)");
  add_solver_options(*solve_cmd, solve.solver);

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a seeded suite and report block averages");
  bench_cmd->add_option("--suite", bench.suite, "Generator spec with '|' alternatives, e.g. fl:d|u,uncap,moment,n=8|10")
      ->required();
  bench_cmd->add_option("--seeds", bench.seeds, "Seeds, e.g. 1-3 or 1,4,9");
  bench_cmd->add_option("--algorithms", bench.algorithms, "Comma-separated algorithms");
  bench_cmd->add_option("--oracles", bench.oracles, "Comma-separated oracles (cg, bruteforce)");
  bench_cmd->add_option("--csv", bench.csv, "Per-row CSV path");
  bench_cmd->add_option("--summary-csv", bench.summary_csv, "Per-block summary CSV path");
  bench_cmd->add_option("--trace-dir", bench.trace_dir, "Directory for per-row trace CSVs");
  add_solver_options(*bench_cmd, bench.solver);
  bench_cmd->remove_option(bench_cmd->get_option("--algorithm"));
  bench_cmd->remove_option(bench_cmd->get_option("--oracle"));

  std::string gen_spec, gen_out;
  std::optional<long> gen_seed;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Write a generated facility-location instance as JSON");
  gen_cmd->add_option("--gen", gen_spec, "Generator spec")->required();
  gen_cmd->add_option("--seed", gen_seed, "Generator seed (overrides seed= in --gen)")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--output", gen_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*solve_cmd) {
      if (solve.instance.empty() && solve.gen.empty()) {
        std::cerr << "dro_forge: exactly one of --instance or --gen is required\n";
        return kExitInvalid;
      }
      return run_solve(solve);
    }
    if (*bench_cmd) return run_bench(bench);
    return run_generate(gen_spec, gen_seed, gen_out);
  } catch (const dro::Error& e) {
    std::cerr << "dro_forge: " << e.what() << "\n";
    const bool invalid = e.code() == dro::ErrorCode::kInvalidInput || e.code() == dro::ErrorCode::kInvalidSpec ||
                         e.code() == dro::ErrorCode::kModelValidation ||
                         e.code() == dro::ErrorCode::kDimensionMismatch ||
                         e.code() == dro::ErrorCode::kRequiresFeasibleRecourse;
    return invalid ? kExitInvalid : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "dro_forge: " << e.what() << "\n";
    return kExitFailure;
  }
}
