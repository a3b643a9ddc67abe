// Command-line front end: witness, solve, table, verify and trace-test.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trifocal/trifocal.h"

namespace {

struct LogSink {
  std::ofstream file;
  bool to_stderr = false;
};

void log_line(const char* line, void* user) {
  auto* sink = static_cast<LogSink*>(user);
  if (sink->to_stderr)
    std::cerr << line << '\n';
  else if (sink->file)
    sink->file << line << '\n';
}

struct Common {
  trf_options opts;
  std::string log_path;
  LogSink sink;
  double relative_singular_value = 0.0;
  std::string run_config;

  Common() { trf_default_options(&opts); }

  void add(CLI::App* app) {
    app->add_option("--threads", opts.threads, "Worker threads (0: hardware width)");
    app->add_option("--tol-newton", opts.newton_tol, "Corrector tolerance (relative)");
    app->add_option("--tol-refine", opts.refine_tol, "Endpoint refinement tolerance (relative)");
    app->add_option("--max-step", opts.max_step, "Largest step in the path parameter");
    app->add_option("--endgame-radius", opts.endgame_radius, "Radius of the singular endpoint endgame (0: off)");
    app->add_option("--tol-trace", opts.trace_tol, "Trace test tolerance (relative)");
    app->add_option("--max-edges", opts.max_edges, "Largest number of monodromy edges");
    app->add_option("--tol-membership", opts.membership_tol, "Special slice membership tolerance");
    app->add_option("--tol-physical", opts.physical_tol, "Cutoff for |sum q^2| / |q|^2");
    app->add_option("--tol-rank-ratio", opts.rank_ratio, "Consecutive singular value gap for rank drops");
    app->add_option("--tol-singular", relative_singular_value,
                    "Rank drop iff sigma_min <= value * sigma_max (overrides the gap rule)");
    app->add_option("--tol-epipole", opts.epipole_tol, "Epipole avoidance distance");
    app->add_option("--tol-dedup", opts.solution_dedup_tol, "Distinct-solution distance");
    app->add_option("--tol-calibration", opts.calibration_tol, "Calibration test for stored camera matrices");
    app->add_option("--failure-budget", opts.failure_budget, "Largest admissible fraction of failed paths");
    app->add_option("--log", log_path, "Write progress and per-path lines to this file ('-' for stderr)");
  }

  const trf_options* finish() {
    opts.run_config = run_config.c_str();
    if (relative_singular_value > 0.0) opts.relative_singular_value = relative_singular_value;
    if (!log_path.empty()) {
      if (log_path == "-") {
        sink.to_stderr = true;
      } else {
        sink.file.open(log_path);
        if (!sink.file) throw std::runtime_error("cannot open log file " + log_path);
      }
      opts.log = log_line;
      opts.log_user = &sink;
    }
    return &opts;
  }
};

int fail(trf_status s, const std::string& what) {
  std::cerr << "error: " << what << ": " << trf_status_string(s);
  const std::string detail = trf_last_error();
  if (!detail.empty()) std::cerr << " (" << detail << ")";
  std::cerr << '\n';
  return s == TRF_ERR_INVALID_ARGUMENT || s == TRF_ERR_PARSE ? 2 : 1;
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Witness = Handle<trf_witness, trf_witness_free>;
using InstanceH = Handle<trf_instance, trf_instance_free>;
using Solutions = Handle<trf_solution_set, trf_solution_free>;

int load_witness(const std::string& path, Witness& w) {
  if (path.empty()) {
    std::cerr << "error: a witness file is required (--witness)\n";
    return 2;
  }
  if (trf_status s = trf_witness_load(path.c_str(), w.out())) return fail(s, "loading " + path);
  if (!trf_witness_certified(w.get())) {
    std::cerr << "error: witness set in " << path << " is not trace-certified\n";
    return 1;
  }
  return 0;
}

void print_stages(const trf_solution_set* s) {
  size_t counts[TRF_STAGE_COUNT];
  trf_solution_stage_counts(s, counts);
  std::cout << "stages:";
  for (int i = 0; i < TRF_STAGE_COUNT; ++i) std::cout << ' ' << trf_stage_name(i) << '=' << counts[i];
  std::cout << '\n';
}

int cmd_witness(const std::string& locus, uint64_t seed, std::string out, Common& c) {
  const trf_options* opts = c.finish();
  if (out.empty()) out = "witness-" + locus + ".json";
  if (std::filesystem::exists(out)) {
    Witness cached;
    if (trf_witness_load(out.c_str(), cached.out()) == TRF_OK && trf_witness_certified(cached.get()) &&
        trf_witness_seed(cached.get()) == seed && locus == trf_witness_locus(cached.get())) {
      std::cout << "locus " << locus << " (cached " << out << ", hash " << trf_witness_content_hash(cached.get())
                << ")\n";
      std::cout << "degree " << trf_witness_point_count(cached.get()) << '\n';
      return 0;
    }
  }
  Witness w;
  if (trf_status s = trf_witness_build(locus.c_str(), seed, opts, w.out())) return fail(s, "building witness set");
  if (trf_status s = trf_witness_save(w.get(), opts, out.c_str())) return fail(s, "saving " + out);
  std::cout << "locus " << locus << " (hash " << trf_witness_content_hash(w.get()) << ")\n";
  std::cout << "points " << trf_witness_point_count(w.get()) << '\n';
  std::cout << "trace deviation " << trf_witness_trace_deviation(w.get()) << '\n';
  size_t degree = 0;
  if (trf_status s = trf_witness_degree(w.get(), &degree)) {
    fail(s, "witness set saved to " + out + " for inspection");
    return 1;
  }
  std::cout << "degree " << degree << '\n';
  return 0;
}

int cmd_solve(const std::string& witness_path, const std::string& problem, const std::string& instance_path,
              uint64_t seed, const std::string& out, Common& c) {
  if (problem.empty() == instance_path.empty()) {
    std::cerr << "error: give exactly one of --problem and --instance\n";
    return 2;
  }
  int weights[5];
  if (!problem.empty())
    if (trf_status s = trf_parse_problem(problem.c_str(), weights)) return fail(s, "--problem " + problem);
  const trf_options* opts = c.finish();
  Witness w;
  if (int rc = load_witness(witness_path, w)) return rc;
  Solutions sols;
  int expected = -1;
  if (!problem.empty()) {
    for (int i = 0; i < trf_problem_count(); ++i) {
      int wi[5], deg = 0;
      trf_problem_weights(i, wi, &deg);
      if (std::equal(wi, wi + 5, weights)) expected = deg;
    }
    if (trf_status s = trf_solve_problem(w.get(), weights, seed, opts, sols.out())) return fail(s, "solving");
  } else {
    InstanceH inst;
    if (trf_status s = trf_instance_load(instance_path.c_str(), inst.out())) return fail(s, "loading " + instance_path);
    if (trf_status s = trf_solve(w.get(), inst.get(), seed, opts, sols.out())) return fail(s, "solving");
  }
  if (!out.empty())
    if (trf_status s = trf_solution_save(sols.get(), out.c_str())) return fail(s, "saving " + out);
  const size_t degree = trf_solution_count(sols.get());
  std::cout << "degree " << degree << '\n';
  std::cout << "real " << trf_solution_real_count(sols.get()) << '\n';
  std::cout << "failed paths " << trf_solution_failed_paths(sols.get()) << '\n';
  print_stages(sols.get());
  if (!problem.empty()) {
    char row[512];
    if (trf_solution_table_row(sols.get(), row, sizeof row) == TRF_OK) std::cout << trf_table_header() << '\n' << row << '\n';
    if (expected >= 0 && static_cast<size_t>(expected) != degree) {
      std::cerr << "error: degree " << degree << " differs from the expected " << expected << '\n';
      return 3;
    }
  }
  return 0;
}

int cmd_table(const std::string& witness_path, int rows, int seeds, uint64_t seed, const std::string& out,
              Common& c) {
  if (witness_path.empty()) {
    std::cerr << "error: a witness file is required (--witness)\n";
    return 2;
  }
  const trf_options* opts = c.finish();
  Witness w;
  if (int rc = load_witness(witness_path, w)) return rc;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) {
      std::cerr << "error: cannot write " << out << '\n';
      return 1;
    }
  }
  auto emit = [&](const std::string& line) {
    std::cout << line << '\n' << std::flush;
    if (file) file << line << '\n' << std::flush;
  };
  emit(trf_table_header());
  const int n = rows > 0 ? std::min(rows, trf_problem_count()) : trf_problem_count();
  bool all_match = true;
  for (int i = 0; i < n; ++i) {
    int weights[5], expected = 0;
    trf_problem_weights(i, weights, &expected);
    for (int k = 0; k < seeds; ++k) {
      Solutions sols;
      const uint64_t row_seed = seed + 1000003ULL * static_cast<uint64_t>(i) + static_cast<uint64_t>(k);
      if (trf_status s = trf_solve_problem(w.get(), weights, row_seed, opts, sols.out())) {
        fail(s, "row " + std::to_string(i + 1));
        all_match = false;
        continue;
      }
      char row[512];
      trf_solution_table_row(sols.get(), row, sizeof row);
      emit(row);
      const size_t degree = trf_solution_count(sols.get());
      if (degree != static_cast<size_t>(expected) || degree % 8 != 0) all_match = false;
    }
  }
  return all_match ? 0 : 3;
}

int cmd_verify(const std::string& solutions_path, const std::string& instance_path, Common& c) {
  const trf_options* opts = c.finish();
  Solutions sols;
  if (trf_status s = trf_solution_load(solutions_path.c_str(), sols.out())) return fail(s, "loading " + solutions_path);
  InstanceH inst;
  if (!instance_path.empty())
    if (trf_status s = trf_instance_load(instance_path.c_str(), inst.out())) return fail(s, "loading " + instance_path);
  const size_t n = trf_solution_count(sols.get());
  size_t passed = 0;
  for (size_t i = 0; i < n; ++i) {
    int ok = 0;
    char check[64] = "";
    if (trf_status s = trf_verify_solution(sols.get(), i, inst.get(), opts, &ok, check, sizeof check))
      return fail(s, "verifying solution " + std::to_string(i));
    std::cout << "solution " << i << ": " << (ok ? "pass" : std::string("fail (") + check + ")") << '\n';
    passed += ok ? 1 : 0;
  }
  std::cout << "passed " << passed << " of " << n << '\n';
  return passed == n ? 0 : 1;
}

int cmd_trace(const std::string& witness_path, bool update, Common& c) {
  const trf_options* opts = c.finish();
  Witness w;
  if (trf_status s = trf_witness_load(witness_path.c_str(), w.out())) return fail(s, "loading " + witness_path);
  int passed = 0;
  double deviation = 0.0;
  const trf_status s = trf_witness_trace_test(w.get(), opts, &passed, &deviation);
  std::cout << "points " << trf_witness_point_count(w.get()) << '\n';
  std::cout << "trace deviation " << deviation << '\n';
  std::cout << (passed ? "pass" : "fail") << '\n';
  if (s != TRF_OK) return fail(s, "trace test");
  if (update)
    if (trf_status u = trf_witness_save(w.get(), opts, witness_path.c_str())) return fail(u, "saving " + witness_path);
  return passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated trifocal minimal problems by homotopy continuation"};
  app.require_subcommand(1);

  Common c_witness, c_solve, c_table, c_verify, c_trace;

  std::string locus = "cal", witness_out;
  uint64_t witness_seed = 1;
  auto* witness = app.add_subcommand("witness", "Build and certify a pseudo-witness set");
  witness->add_option("--locus", locus, "Variety: cal, 01, 10 or 00")
      ->check(CLI::IsMember({"cal", "01", "10", "00"}));
  witness->add_option("--seed", witness_seed, "Random seed");
  witness->add_option("--out", witness_out, "Output file (default witness-<locus>.json)");
  c_witness.add(witness);

  std::string solve_witness, problem, instance, solve_out;
  uint64_t solve_seed = 1;
  auto* solve = app.add_subcommand("solve", "Solve one instance of a minimal problem");
  solve->add_option("--witness", solve_witness, "Certified witness file of the calibrated variety")->required();
  solve->add_option("--problem", problem, "Counts w1,w2,w3,w4,w5 of PPP,PPL,PLP,LLL,PLL");
  solve->add_option("--instance", instance, "Instance file instead of a random instance");
  solve->add_option("--seed", solve_seed, "Random seed");
  solve->add_option("--out", solve_out, "Solution file");
  c_solve.add(solve);

  std::string table_witness, table_out;
  int table_rows = 0, table_seeds = 1;
  uint64_t table_seed = 1;
  auto* table = app.add_subcommand("table", "Recompute the degree table");
  table->add_option("--witness", table_witness, "Certified witness file of the calibrated variety");
  table->add_option("--rows", table_rows, "Only the first N rows (0: all 66)");
  table->add_option("--seeds", table_seeds, "Instances per row")->check(CLI::PositiveNumber);
  table->add_option("--seed", table_seed, "Base seed");
  table->add_option("--out", table_out, "TSV output file");
  c_table.add(table);

  std::string verify_solutions, verify_instance;
  auto* verify = app.add_subcommand("verify", "Re-check stored solutions against an instance");
  verify->add_option("--solutions", verify_solutions, "Solution file")->required();
  verify->add_option("--instance", verify_instance, "Instance file (default: the one stored with the solutions)");
  c_verify.add(verify);

  std::string trace_witness;
  bool trace_update = false;
  auto* trace = app.add_subcommand("trace-test", "Re-run the trace test on a stored witness set");
  trace->add_option("--witness", trace_witness, "Witness file")->required();
  trace->add_flag("--update", trace_update, "Write the new certificate back to the file");
  c_trace.add(trace);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; every other parse problem exits 2.
    return app.exit(e) == 0 ? 0 : 2;
  }

  for (const auto& [sub, common] : {std::pair{witness, &c_witness}, std::pair{solve, &c_solve}, std::pair{table, &c_table},
                              std::pair{verify, &c_verify}, std::pair{trace, &c_trace}})
    if (*sub) common->run_config = "command = " + sub->get_name() + "\n" + sub->config_to_str(true, false);

  try {
    if (*witness) return cmd_witness(locus, witness_seed, witness_out, c_witness);
    if (*solve) return cmd_solve(solve_witness, problem, instance, solve_seed, solve_out, c_solve);
    if (*table) return cmd_table(table_witness, table_rows, table_seeds, table_seed, table_out, c_table);
    if (*verify) return cmd_verify(verify_solutions, verify_instance, c_verify);
    if (*trace) return cmd_trace(trace_witness, trace_update, c_trace);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
