// Command-line front end: generate synthetic instances, run the solvers,
// and reproduce convergence tables.
//
// Exit codes: 0 success, 1 usage/input error, 2 numerical failure.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ufw/instance_io.hpp"
#include "ufw/prng.hpp"
#include "ufw/nucnorm.hpp"
#include "ufw/solver.hpp"
#include "ufw/synth.hpp"
#include "ufw/trace_io.hpp"
#include "ufw/trendfilter.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ufw;

namespace {

double parse_snr(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "infinity")
    return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(text, &pos);
  if (pos != text.size()) throw std::invalid_argument("bad snr value: " + text);
  return v;
}

struct Problem {
  std::unique_ptr<SmoothObjective> objective;
  std::unique_ptr<DecomposedRegion> region;
  Vector x0;
  std::string kind;
  std::uint64_t seed = 0;
};

Problem make_problem(const Instance& inst) {
  Problem p;
  if (const auto* t = std::get_if<TrendInstance>(&inst)) {
    p.objective = std::make_unique<LeastSquaresObjective>(t->A, t->b);
    auto region = std::make_unique<TrendFilterRegion>(t->spec.n, t->spec.r, t->delta);
    p.x0 = region->default_start();
    p.region = std::move(region);
    p.kind = "trend";
    p.seed = t->spec.seed;
  } else {
    const auto& m = std::get<MatrixInstance>(inst);
    p.objective = std::make_unique<MaskedFrobeniusObjective>(m.spec.m, m.spec.n, m.omega,
                                                             m.b_omega);
    auto region = GenNucNormRegion::with_side_information(m.P1, m.spec.n, m.delta);
    p.x0 = region.default_start();
    p.region = std::make_unique<GenNucNormRegion>(std::move(region));
    p.kind = "matrix";
    p.seed = m.spec.seed;
  }
  return p;
}

SolveResult run_solver(const std::string& solver, const Problem& p, const UfwConfig& cfg) {
  if (solver == "ufw-simple") {
    UfwConfig c = cfg;
    c.step_rule = StepRule::Simple;
    return ufw_solve(*p.objective, *p.region, p.x0, c);
  }
  if (solver == "ufw-linesearch") {
    UfwConfig c = cfg;
    c.step_rule = StepRule::LineSearch;
    return ufw_solve(*p.objective, *p.region, p.x0, c);
  }
  if (solver == "uafw") return uafw_solve(*p.objective, *p.region, p.x0, cfg);
  throw std::invalid_argument("unknown solver: " + solver);
}

// ---------------------------------------------------------------- gen ----

struct GenOpts {
  TrendGenSpec trend;
  MatrixGenSpec matrix;
  std::string snr_text = "1";
  std::string out;
  bool is_trend = false;
};

int cmd_gen(GenOpts& opts) {
  Instance inst;
  if (opts.is_trend) {
    opts.trend.snr = parse_snr(opts.snr_text);
    inst = gen_trend_instance(opts.trend);
  } else {
    opts.matrix.snr = parse_snr(opts.snr_text);
    inst = gen_matrix_instance(opts.matrix);
  }
  save_instance(opts.out, inst);
  std::cout << "wrote " << opts.out << " (hash " << instance_content_hash(inst) << ")\n";
  return 0;
}

// -------------------------------------------------------------- solve ----

struct SolveOpts {
  std::string instance;
  std::string solver = "ufw-simple";
  double tol_G = -1.0;
  double tol_H2 = -1.0;
  long max_iters = 100000;
  double eta = 0.0;
  std::string out = "trace.csv";
  std::string format = "csv";
};

json config_echo(const SolveOpts& opts, double eta) {
  return json{{"solver", opts.solver},   {"eta", eta},
              {"tol_G", opts.tol_G},     {"tol_H2", opts.tol_H2},
              {"max_iters", opts.max_iters}, {"instance", opts.instance},
              {"trace_format", opts.format}};
}

void write_trace_file(const SolveOpts& opts, const std::vector<IterationRecord>& rows,
                      const json& meta) {
  std::ofstream out(opts.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + opts.out);
  if (opts.format == "json")
    write_trace_json(out, rows, meta);
  else
    write_trace_csv(out, rows, meta);
}

int cmd_solve(SolveOpts& opts) {
  Instance inst = load_instance(opts.instance);
  Problem p = make_problem(inst);

  if (opts.solver == "uafw" && p.kind == "matrix") {
    std::cerr << "uafw cannot run on matrix-completion instances: the bounded set of the "
                 "generalized nuclear-norm region is not a polyhedron, so there is no "
                 "discrete vertex set to maintain. Use ufw-simple or ufw-linesearch.\n";
    return 1;
  }
  if (opts.tol_G < 0.0) opts.tol_G = p.kind == "trend" ? 1e-4 : 3e-3;
  if (opts.tol_H2 < 0.0) opts.tol_H2 = p.kind == "trend" ? 1e-4 : 3e-3;

  UfwConfig cfg;
  cfg.eta = opts.eta > 0.0 ? opts.eta : estimate_step_eta(*p.objective);
  cfg.tol_G = opts.tol_G;
  cfg.tol_H2 = opts.tol_H2;
  cfg.max_iters = opts.max_iters;
  cfg.record_trace = true;

  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  try {
    res = run_solver(opts.solver, p, cfg);
  } catch (const NumericalFailure& e) {
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    if (e.has_partial) {
      json meta{{"config", config_echo(opts, cfg.eta)},
                {"instance_hash", instance_content_hash(inst)},
                {"seed", p.seed},
                {"termination_reason", "NumericalFailure"},
                {"error", e.what()},
                {"wall_ms", wall}};
      write_trace_file(opts, e.partial.trace, meta);
    }
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  const double wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();

  json meta{{"config", config_echo(opts, cfg.eta)},
            {"instance_hash", instance_content_hash(inst)},
            {"seed", p.seed},
            {"termination_reason", to_string(res.termination_reason)},
            {"wall_ms", wall}};
  write_trace_file(opts, res.trace, meta);

  const auto& last = res.trace.back();
  std::cout << opts.solver << " " << res.iterations << " " << format_double(res.best_f)
            << " " << format_double(last.G) << " " << format_double(last.H) << " "
            << to_string(res.termination_reason) << "\n";
  return 0;
}

// -------------------------------------------------------------- bench ----

struct BenchCell {
  json raw;
  std::string problem;  // trend | matrix
  std::string solver;
  double tol_G, tol_H2;
  long max_iters;
  long ref_max_iters;
  double eta = 0.0;
};

BenchCell parse_cell(const json& j) {
  BenchCell cell;
  cell.raw = j;
  cell.problem = j.at("problem").get<std::string>();
  if (cell.problem != "trend" && cell.problem != "matrix")
    throw std::invalid_argument("cell: problem must be trend or matrix");
  cell.solver = j.value("solver", std::string("ufw-simple"));
  const bool trend = cell.problem == "trend";
  cell.tol_G = j.value("tol_g", trend ? 1e-4 : 3e-3);
  cell.tol_H2 = j.value("tol_h2", trend ? 1e-4 : 3e-3);
  cell.max_iters = j.value("max_iters", 100000L);
  cell.ref_max_iters = j.value("ref_max_iters", trend ? 1000000L : 200000L);
  cell.eta = j.value("eta", 0.0);
  return cell;
}

// "k=v,k=v" with numbers parsed when possible.
json parse_cell_flag(const std::string& text) {
  json out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto pos = item.find('=');
    if (pos == std::string::npos) throw std::invalid_argument("cell: expected key=value");
    const std::string key = item.substr(0, pos);
    const std::string val = item.substr(pos + 1);
    try {
      std::size_t used = 0;
      if (val.find('.') != std::string::npos || val == "inf") {
        out[key] = parse_snr(val);
      } else {
        const long long v = std::stoll(val, &used);
        if (used != val.size()) throw std::invalid_argument("");
        out[key] = v;
      }
    } catch (...) {
      out[key] = val;
    }
  }
  return out;
}

Instance cell_instance(const BenchCell& cell) {
  const json& j = cell.raw;
  if (cell.problem == "trend") {
    TrendGenSpec spec;
    spec.N = j.at("N").get<int>();
    spec.n = j.at("n").get<int>();
    spec.r = j.value("r", 1);
    spec.snr = j.contains("snr") && j["snr"].is_string() ? parse_snr(j["snr"])
                                                         : j.value("snr", 1.0);
    spec.pieces = j.value("pieces", 5);
    spec.seed = j.value("seed", 0ULL);
    return gen_trend_instance(spec);
  }
  MatrixGenSpec spec;
  spec.m = j.at("m").get<int>();
  spec.n = j.at("n").get<int>();
  spec.r = j.value("r", 5);
  spec.r1 = j.value("r1", 5);
  spec.snr = j.contains("snr") && j["snr"].is_string() ? parse_snr(j["snr"])
                                                       : j.value("snr", 5.0);
  spec.nnzr = j.value("nnzr", 0.3);
  spec.delta_rel = j.value("delta_rel", 0.5);
  spec.seed = j.value("seed", 0ULL);
  return gen_matrix_instance(spec);
}

std::string cell_sizes(const BenchCell& cell) {
  const json& j = cell.raw;
  std::ostringstream ss;
  if (cell.problem == "trend") {
    ss << "N=" << j.at("N").get<long>() << ";n=" << j.at("n").get<long>()
       << ";r=" << j.value("r", 1);
  } else {
    ss << "m=" << j.at("m").get<long>() << ";n=" << j.at("n").get<long>()
       << ";r=" << j.value("r", 5) << ";r1=" << j.value("r1", 5);
  }
  return ss.str();
}

struct BenchOpts {
  std::vector<std::string> cell_flags;
  std::string cells_file;
  std::string out = "bench.csv";
  std::string cache_dir;
};

struct CellOutcome {
  bool ok = false;
  std::string error;
  std::string problem, sizes, solver;
  long iters = -1;
  double best_f = std::nan("");
  double rel_gap = std::nan("");
  double wall_ms = 0.0;
};

// Reference objective value for an instance: the away-step solver run to
// (tol 0, capped iterations) on polyhedral problems, the plain solver at
// tol 1e-10 otherwise. Cached on disk by instance content hash.
double reference_value(const Instance& inst, const BenchCell& cell,
                       const std::string& cache_dir) {
  const std::string key = instance_content_hash(inst) + "-" +
                          std::to_string(cell.ref_max_iters);
  fs::path cache_file;
  if (!cache_dir.empty()) {
    fs::create_directories(cache_dir);
    cache_file = fs::path(cache_dir) / (key + ".ref.json");
    if (fs::exists(cache_file)) {
      std::ifstream in(cache_file);
      json doc = json::parse(in);
      return doc.at("f_star").get<double>();
    }
  }

  Problem p = make_problem(inst);
  UfwConfig cfg;
  cfg.eta = cell.eta > 0.0 ? cell.eta : estimate_step_eta(*p.objective);
  cfg.record_trace = false;
  double f_star;
  if (cell.problem == "trend") {
    cfg.tol_G = 0.0;
    cfg.tol_H2 = 0.0;
    cfg.max_iters = cell.ref_max_iters;
    f_star = uafw_solve(*p.objective, *p.region, p.x0, cfg).best_f;
  } else {
    cfg.tol_G = 1e-10;
    cfg.tol_H2 = 1e-10;
    cfg.max_iters = cell.ref_max_iters;
    cfg.step_rule = StepRule::LineSearch;
    f_star = ufw_solve(*p.objective, *p.region, p.x0, cfg).best_f;
  }

  if (!cache_file.empty()) {
    std::ofstream out(cache_file);
    out << json{{"f_star", f_star}}.dump() << "\n";
  }
  return f_star;
}

CellOutcome run_cell(const BenchCell& cell, const std::string& cache_dir) {
  CellOutcome out;
  out.problem = cell.problem;
  out.solver = cell.solver;
  try {
    out.sizes = cell_sizes(cell);
    Instance inst = cell_instance(cell);
    const double f_star = reference_value(inst, cell, cache_dir);

    Problem p = make_problem(inst);
    if (cell.solver == "uafw" && cell.problem == "matrix")
      throw std::invalid_argument("uafw needs a polyhedral bounded set");
    UfwConfig cfg;
    cfg.eta = cell.eta > 0.0 ? cell.eta : estimate_step_eta(*p.objective);
    cfg.tol_G = cell.tol_G;
    cfg.tol_H2 = cell.tol_H2;
    cfg.max_iters = cell.max_iters;
    cfg.record_trace = false;

    const auto t0 = std::chrono::steady_clock::now();
    SolveResult res = run_solver(cell.solver, p, cfg);
    out.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    out.iters = res.iterations;
    out.best_f = res.best_f;
    out.rel_gap = (res.best_f - f_star) / std::max(1.0, std::abs(f_star));
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

int cmd_bench(BenchOpts& opts) {
  std::vector<BenchCell> cells;
  for (const auto& flag : opts.cell_flags) cells.push_back(parse_cell(parse_cell_flag(flag)));
  if (!opts.cells_file.empty()) {
    std::ifstream in(opts.cells_file);
    if (!in) throw std::runtime_error("cannot open cells file: " + opts.cells_file);
    json doc = json::parse(in);
    for (const auto& j : doc) cells.push_back(parse_cell(j));
  }
  if (cells.empty()) throw std::invalid_argument("bench: no cells given");

  unsigned threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  if (const char* env = std::getenv("UFW_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) threads = std::min<unsigned>(threads, static_cast<unsigned>(cap));
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));

  std::vector<CellOutcome> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      results[i] = run_cell(cells[i], opts.cache_dir);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream out(opts.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + opts.out);
  out << "problem,sizes,solver,iters,best_f,rel_gap_vs_reference,wall_ms\n";
  for (const auto& r : results) {
    out << r.problem << "," << r.sizes << "," << r.solver << "," << r.iters << ","
        << format_double(r.best_f) << "," << format_double(r.rel_gap) << ","
        << format_double(r.wall_ms) << "\n";
  }
  bool any_failed = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok) {
      out << "# cell " << i << " failed: " << results[i].error << "\n";
      any_failed = true;
    }
  }
  std::cout << "wrote " << opts.out << " (" << results.size() << " cells"
            << (any_failed ? ", with failures" : "") << ")\n";
  return 0;
}

// ----------------------------------------------------------- selftest ----

int cmd_selftest() {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "ok" : "FAILED") << ": " << name << "\n";
    if (!ok) ++failures;
  };

  bool ident = true;
  for (int n = 2; n <= 50; ++n)
    for (int i = 1; i <= std::min(4, n - 1); ++i)
      ident = ident && verify_diff_cumsum_identity(n, i);
  report("difference/cumulative-sum identity (n <= 50, i <= 4)", ident);

  {
    bool ok = true;
    SplitMix64 rng(1);
    for (int r : {1, 2, 3}) {
      TrendFilterRegion region(30, r, 1.0);
      auto verts = region.enumerate_vertices();
      for (int t = 0; t < 5; ++t) {
        Vector c(30);
        for (int i = 0; i < 30; ++i) c[i] = rng.normal();
        auto h = region.lmo(c);
        double best = c.dot(verts[0].point);
        for (const auto& v : verts) best = std::min(best, c.dot(v.point));
        ok = ok && c.dot(h.point) <= best + 1e-9 * (1.0 + c.norm());
        ok = ok && region.project_subspace(h.point).norm() <= 1e-10;
        Vector x(30);
        for (int i = 0; i < 30; ++i) x[i] = rng.normal();
        Vector pt = region.project_subspace(x);
        ok = ok && (region.project_subspace(pt) - pt).norm() <= 1e-10 * (1.0 + x.norm());
      }
    }
    report("trend-filter oracle vs vertex enumeration", ok);
  }

  {
    SplitMix64 rng(2);
    Matrix M(6, 4);
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 6; ++i) M(i, j) = rng.normal();
    Matrix Mp = pseudo_inverse(M);
    const double scale = 1.0 + M.norm();
    bool ok = (M * Mp * M - M).norm() <= 1e-8 * scale &&
              ((M * Mp).transpose() - M * Mp).norm() <= 1e-8 * scale;
    auto pair = leading_singular_pair(M);
    ok = ok && (M * pair.v1 - pair.sigma1 * pair.u1).norm() <= 1e-6 * (1.0 + pair.sigma1);
    report("pseudoinverse and leading singular pair", ok);
  }

  {
    SplitMix64 rng(3);
    GenNucNormRegion region(Matrix::Identity(6, 6), Matrix::Identity(5, 5), 1.5);
    Matrix C(6, 5);
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 6; ++i) C(i, j) = rng.normal();
    Matrix X = region.lmo_matrix(C);
    auto pair = leading_singular_pair(C);
    const double attained = (C.array() * X.array()).sum();
    report("nuclear-norm oracle duality",
           std::abs(attained + 1.5 * pair.sigma1) <= 1e-6 * (1.0 + pair.sigma1));
  }

  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frank-Wolfe solvers for feasible regions that split into a linear "
               "subspace plus a bounded set"};
  app.require_subcommand(1);

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic instance file");
  gen_cmd->require_subcommand(1);
  auto* gen_trend = gen_cmd->add_subcommand("trend", "least-squares trend filtering");
  gen_trend->add_option("--N", gen.trend.N, "rows of the design matrix")->required();
  gen_trend->add_option("--n", gen.trend.n, "signal length")->required();
  gen_trend->add_option("--r", gen.trend.r, "difference order (1 or 2)")->required();
  gen_trend->add_option("--snr", gen.snr_text, "signal-to-noise ratio (or 'inf')")->required();
  gen_trend->add_option("--pieces", gen.trend.pieces, "signal pieces (default 5)");
  gen_trend->add_option("--seed", gen.trend.seed, "generator seed")->required();
  gen_trend->add_option("-o,--out", gen.out, "output file")->required();

  auto* gen_matrix = gen_cmd->add_subcommand("matrix", "masked matrix completion");
  gen_matrix->add_option("--m", gen.matrix.m)->required();
  gen_matrix->add_option("--n", gen.matrix.n)->required();
  gen_matrix->add_option("--r", gen.matrix.r, "hidden low-rank part rank")->required();
  gen_matrix->add_option("--r1", gen.matrix.r1, "side-information rank")->required();
  gen_matrix->add_option("--snr", gen.snr_text, "signal-to-noise ratio (or 'inf')")->required();
  gen_matrix->add_option("--nnzr", gen.matrix.nnzr, "observed fraction in (0,1]")->required();
  gen_matrix->add_option("--delta-rel", gen.matrix.delta_rel, "relative bound radius")
      ->required();
  gen_matrix->add_option("--seed", gen.matrix.seed, "generator seed")->required();
  gen_matrix->add_option("-o,--out", gen.out, "output file")->required();

  SolveOpts solve;
  auto* solve_cmd = app.add_subcommand("solve", "run a solver on an instance file");
  solve_cmd->add_option("--instance", solve.instance, "instance file")->required();
  solve_cmd->add_option("--solver", solve.solver, "ufw-simple | ufw-linesearch | uafw")
      ->check(CLI::IsMember({"ufw-simple", "ufw-linesearch", "uafw"}));
  solve_cmd->add_option("--tol-g", solve.tol_G, "relative gap tolerance on G");
  solve_cmd->add_option("--tol-h2", solve.tol_H2, "relative gap tolerance on H^2");
  solve_cmd->add_option("--max-iters", solve.max_iters, "iteration cap");
  solve_cmd->add_option("--eta", solve.eta, "gradient step size override");
  solve_cmd->add_option("--out", solve.out, "trace file (default trace.csv)");
  solve_cmd->add_option("--format", solve.format, "trace format")
      ->check(CLI::IsMember({"csv", "json"}));

  BenchOpts bench;
  auto* bench_cmd = app.add_subcommand("bench", "run a grid of cells into a CSV table");
  bench_cmd->add_option("--cell", bench.cell_flags,
                        "cell as key=value[,key=value...]; repeatable");
  bench_cmd->add_option("--cells", bench.cells_file, "JSON file with an array of cells");
  bench_cmd->add_option("--out", bench.out, "output table (default bench.csv)");
  bench_cmd->add_option("--cache-dir", bench.cache_dir,
                        "directory for cached reference solutions");

  auto* selftest_cmd = app.add_subcommand("selftest", "run built-in consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen_trend->parsed() || gen_matrix->parsed()) {
      gen.is_trend = gen_trend->parsed();
      return cmd_gen(gen);
    }
    if (solve_cmd->parsed()) return cmd_solve(solve);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (selftest_cmd->parsed()) return cmd_selftest();
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
