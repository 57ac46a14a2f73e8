// Drives the built binary end to end through a shell. Each case works inside
// its own scratch directory under the build tree.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "ufw/instance_io.hpp"
#include "ufw/trace_io.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run_cli(const std::string& args, const fs::path& dir,
                  const std::string& env = "") {
  const fs::path out_file = dir / "cmd.out";
  const std::string cmd = std::string("cd ") + dir.string() + " && " + env +
                          (env.empty() ? "" : " ") + UFW_CLI_PATH + " " + args +
                          " > cmd.out 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  int code = -1;
  if (WIFEXITED(status)) code = WEXITSTATUS(status);
  return {code, ss.str()};
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("ufw_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: gen is deterministic and files round-trip") {
  auto dir = scratch_dir("gen");
  auto r1 = run_cli("gen trend --N 30 --n 20 --r 1 --snr 1 --seed 7 -o a.json", dir);
  REQUIRE(r1.exit_code == 0);
  auto r2 = run_cli("gen trend --N 30 --n 20 --r 1 --snr 1 --seed 7 -o b.json", dir);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  auto inst = ufw::load_instance((dir / "a.json").string());
  CHECK(std::get<ufw::TrendInstance>(inst).spec.n == 20);

  auto rm = run_cli(
      "gen matrix --m 12 --n 10 --r 2 --r1 2 --snr 5 --nnzr 0.3 --delta-rel 0.5 --seed 3 "
      "-o m.json",
      dir);
  REQUIRE(rm.exit_code == 0);
  auto minst = ufw::load_instance((dir / "m.json").string());
  CHECK(std::get<ufw::MatrixInstance>(minst).spec.m == 12);
}

TEST_CASE("cli: malformed flags exit 1") {
  auto dir = scratch_dir("usage");
  CHECK(run_cli("gen trend --N 30", dir).exit_code == 1);
  CHECK(run_cli("frobnicate", dir).exit_code == 1);
  CHECK(run_cli("solve --instance missing.json", dir).exit_code == 1);
  CHECK(run_cli("solve --instance missing.json --solver bogus", dir).exit_code == 1);
}

TEST_CASE("cli: solve writes a parseable trace and a summary line") {
  auto dir = scratch_dir("solve");
  REQUIRE(run_cli("gen trend --N 60 --n 30 --r 1 --snr 1 --seed 5 -o t.json", dir)
              .exit_code == 0);
  auto r = run_cli("solve --instance t.json --solver ufw-simple --out t.csv", dir);
  REQUIRE(r.exit_code == 0);

  std::istringstream summary(r.out);
  std::string solver, reason;
  long iters;
  double best_f, G, H;
  summary >> solver >> iters >> best_f >> G >> H >> reason;
  CHECK(solver == "ufw-simple");
  CHECK(reason == "GapTolerance");
  CHECK(iters >= 1);

  std::ifstream tf(dir / "t.csv");
  auto trace = ufw::read_trace_csv(tf);
  CHECK(!trace.rows.empty());
  CHECK(trace.meta.at("termination_reason") == "GapTolerance");
  CHECK(trace.meta.at("config").at("solver") == "ufw-simple");
  CHECK(trace.meta.contains("wall_ms"));

  // Best-f column: the running minimum of f is non-increasing and matches
  // the summary value at the end.
  double running = std::numeric_limits<double>::infinity();
  for (const auto& row : trace.rows) running = std::min(running, row.f_val);
  CHECK(running == doctest::Approx(best_f).epsilon(1e-12));

  // JSON trace flavor.
  auto rj = run_cli("solve --instance t.json --solver uafw --out t2.json --format json", dir);
  REQUIRE(rj.exit_code == 0);
  auto doc = nlohmann::json::parse(slurp(dir / "t2.json"));
  CHECK(doc.contains("rows"));
  CHECK(doc.at("meta").at("config").at("solver") == "uafw");
}

TEST_CASE("cli: zero iteration budget reports MaxIters with the k=0 row") {
  auto dir = scratch_dir("maxiters");
  REQUIRE(run_cli("gen trend --N 30 --n 20 --r 1 --snr 1 --seed 9 -o t.json", dir)
              .exit_code == 0);
  auto r = run_cli("solve --instance t.json --solver ufw-linesearch --max-iters 0 "
                   "--out t.csv",
                   dir);
  REQUIRE(r.exit_code == 0);
  std::ifstream tf(dir / "t.csv");
  auto trace = ufw::read_trace_csv(tf);
  REQUIRE(trace.rows.size() == 1);
  CHECK(trace.rows[0].k == 0);
  CHECK(trace.meta.at("termination_reason") == "MaxIters");
}

TEST_CASE("cli: away-step solver is rejected on matrix instances") {
  auto dir = scratch_dir("uafw_matrix");
  REQUIRE(run_cli("gen matrix --m 10 --n 10 --r 2 --r1 2 --snr 5 --nnzr 0.4 "
                  "--delta-rel 0.5 --seed 2 -o m.json",
                  dir)
              .exit_code == 0);
  auto r = run_cli("solve --instance m.json --solver uafw --out m.csv", dir);
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("polyhedron") != std::string::npos);
}

TEST_CASE("cli: numerical failure exits 2 and leaves a partial trace") {
  auto dir = scratch_dir("numfail");
  REQUIRE(run_cli("gen trend --N 30 --n 20 --r 1 --snr 1 --seed 4 -o t.json", dir)
              .exit_code == 0);
  auto r = run_cli("solve --instance t.json --solver ufw-simple --eta 1e300 --out t.csv",
                   dir);
  CHECK(r.exit_code == 2);
  std::ifstream tf(dir / "t.csv");
  auto trace = ufw::read_trace_csv(tf);
  CHECK(trace.meta.at("termination_reason") == "NumericalFailure");
}

TEST_CASE("cli: single-cell bench emits the table, reference cell gap is zero") {
  auto dir = scratch_dir("bench");
  auto r = run_cli(
      "bench --cell "
      "problem=trend,solver=uafw,N=40,n=20,r=1,snr=1.0,seed=6,tol_g=0.0,tol_h2=0.0,"
      "max_iters=3000,ref_max_iters=3000 --out table.csv --cache-dir cache",
      dir);
  REQUIRE(r.exit_code == 0);

  std::ifstream table(dir / "table.csv");
  std::string header, row;
  REQUIRE(std::getline(table, header));
  CHECK(header == "problem,sizes,solver,iters,best_f,rel_gap_vs_reference,wall_ms");
  REQUIRE(std::getline(table, row));
  CHECK(row.find("trend,N=40;n=20;r=1,uafw,") == 0);
  // The cell repeats the reference configuration, so the gap is exactly 0.
  std::stringstream rowss(row);
  std::string cell;
  std::vector<std::string> cells;
  while (std::getline(rowss, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 7);
  CHECK(cells[5] == "0");

  // The reference cache was populated and a rerun still succeeds.
  CHECK(!fs::is_empty(dir / "cache"));
  CHECK(run_cli("bench --cell "
                "problem=trend,solver=uafw,N=40,n=20,r=1,snr=1.0,seed=6,tol_g=0.0,"
                "tol_h2=0.0,max_iters=3000,ref_max_iters=3000 --out table2.csv "
                "--cache-dir cache",
                dir)
            .exit_code == 0);
  CHECK(run_cli("bench --out empty.csv", dir).exit_code == 1);
}

TEST_CASE("cli: bench grid over two cells") {
  auto dir = scratch_dir("bench_grid");
  // Two cells sharing everything but the difference order, run under a
  // capped worker pool.
  auto r = run_cli(
      "bench "
      "--cell problem=trend,solver=ufw-simple,N=120,n=60,r=1,snr=1.0,seed=8,"
      "tol_g=0.003,tol_h2=0.003,max_iters=60000,ref_max_iters=20000 "
      "--cell problem=trend,solver=ufw-simple,N=120,n=60,r=2,snr=1.0,seed=8,"
      "tol_g=0.003,tol_h2=0.003,max_iters=60000,ref_max_iters=20000 "
      "--out grid.csv",
      dir, "UFW_THREADS=2");
  REQUIRE(r.exit_code == 0);

  std::ifstream table(dir / "grid.csv");
  std::string header;
  REQUIRE(std::getline(table, header));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(table, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][1] == "N=120;n=60;r=1");
  CHECK(rows[1][1] == "N=120;n=60;r=2");
  CHECK(std::stol(rows[0][3]) >= 1);
  CHECK(std::stol(rows[1][3]) >= 1);
  CHECK(std::stod(rows[0][5]) < 0.01);  // both cells land near their references
  CHECK(std::stod(rows[1][5]) < 0.01);
}

TEST_CASE("cli: selftest passes") {
  auto dir = scratch_dir("selftest");
  auto r = run_cli("selftest", dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("selftest passed") != std::string::npos);
}
