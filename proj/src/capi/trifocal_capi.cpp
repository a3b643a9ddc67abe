#include "trifocal/trifocal.h"

#include <cstring>
#include <string>

#include "core/pipeline.hpp"
#include "core/serialize.hpp"
#include "core/slices.hpp"
#include "core/witness.hpp"

using namespace trifocal;

struct trf_witness {
  PseudoWitnessSet pws;
  std::string locus;
  std::string hash;
};

struct trf_instance {
  InstanceFile file;
};

struct trf_solution_set {
  SolutionFile file;
  std::optional<ProblemRun> run;
};

namespace {

thread_local std::string g_last_error;

trf_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return TRF_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDegenerate: return TRF_ERR_DEGENERATE;
    case ErrorCode::kNumerical: return TRF_ERR_NUMERICAL;
    case ErrorCode::kIo: return TRF_ERR_IO;
    case ErrorCode::kParse: return TRF_ERR_PARSE;
    case ErrorCode::kUncertified: return TRF_ERR_UNCERTIFIED;
    case ErrorCode::kUnreliable: return TRF_ERR_UNRELIABLE;
  }
  return TRF_ERR_INTERNAL;
}

template <typename F>
trf_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return TRF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TRF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TRF_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::kInvalidArgument, what);
}

trf_options defaults() {
  trf_options o;
  const TrackerConfig t;
  const WitnessOptions w;
  const FilterTolerances f;
  o.initial_step = t.initial_step;
  o.min_step = t.min_step;
  o.max_step = t.max_step;
  o.newton_tol = t.newton_tol;
  o.refine_tol = t.refine_tol;
  o.divergence_radius = t.divergence_radius;
  o.endgame_radius = t.endgame_radius;
  o.endgame_tol = t.endgame_tol;
  o.max_newton_iterations = t.max_newton_iterations;
  o.max_steps = t.max_steps;
  o.trace_tol = w.trace_tol;
  o.dedup_tol = w.dedup_tol;
  o.initial_edges = w.initial_edges;
  o.max_edges = w.max_edges;
  o.membership_tol = f.membership;
  o.physical_tol = f.physical;
  o.rank_ratio = f.rank_ratio;
  o.relative_singular_value = 0.0;
  o.epipole_tol = f.epipole;
  o.solution_dedup_tol = f.dedup;
  o.calibration_tol = f.calibration;
  o.failure_budget = f.failure_budget;
  o.threads = 0;
  o.log = nullptr;
  o.log_user = nullptr;
  o.run_config = nullptr;
  return o;
}

WitnessOptions witness_options(const trf_options* in) {
  const trf_options o = in ? *in : defaults();
  WitnessOptions w;
  w.tracker.initial_step = o.initial_step;
  w.tracker.min_step = o.min_step;
  w.tracker.max_step = o.max_step;
  w.tracker.newton_tol = o.newton_tol;
  w.tracker.refine_tol = o.refine_tol;
  w.tracker.divergence_radius = o.divergence_radius;
  w.tracker.endgame_radius = o.endgame_radius;
  w.tracker.endgame_tol = o.endgame_tol;
  w.tracker.max_newton_iterations = o.max_newton_iterations;
  w.tracker.max_steps = o.max_steps;
  w.tracker.validate();
  w.threads = o.threads;
  w.trace_tol = o.trace_tol;
  w.dedup_tol = o.dedup_tol;
  w.initial_edges = o.initial_edges;
  w.max_edges = o.max_edges;
  if (o.log) {
    trf_log_fn fn = o.log;
    void* user = o.log_user;
    w.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
  }
  return w;
}

SolveOptions solve_options(const trf_options* in) {
  const trf_options o = in ? *in : defaults();
  SolveOptions s;
  s.witness = witness_options(in);
  s.tol.membership = o.membership_tol;
  s.tol.physical = o.physical_tol;
  s.tol.rank_ratio = o.rank_ratio;
  if (o.relative_singular_value > 0.0) s.tol.relative_singular_value = o.relative_singular_value;
  s.tol.epipole = o.epipole_tol;
  s.tol.dedup = o.solution_dedup_tol;
  s.tol.calibration = o.calibration_tol;
  s.tol.failure_budget = o.failure_budget;
  require(s.tol.rank_ratio > 1.0, "rank ratio must exceed 1");
  return s;
}

Json options_json(const trf_options* in) {
  const trf_options o = in ? *in : defaults();
  Json j = {{"initial_step", o.initial_step},
            {"min_step", o.min_step},
            {"max_step", o.max_step},
            {"newton_tol", o.newton_tol},
            {"refine_tol", o.refine_tol},
            {"divergence_radius", o.divergence_radius},
            {"endgame_radius", o.endgame_radius},
            {"endgame_tol", o.endgame_tol},
            {"max_newton_iterations", o.max_newton_iterations},
            {"max_steps", o.max_steps},
            {"trace_tol", o.trace_tol},
            {"dedup_tol", o.dedup_tol},
            {"initial_edges", o.initial_edges},
            {"max_edges", o.max_edges},
            {"membership_tol", o.membership_tol},
            {"physical_tol", o.physical_tol},
            {"rank_ratio", o.rank_ratio},
            {"relative_singular_value", o.relative_singular_value},
            {"epipole_tol", o.epipole_tol},
            {"solution_dedup_tol", o.solution_dedup_tol},
            {"calibration_tol", o.calibration_tol},
            {"failure_budget", o.failure_budget},
            {"threads", o.threads}};
  if (o.run_config) j["run_config"] = o.run_config;
  return j;
}

ProblemWeights weights_from(const int w[5]) {
  require(w != nullptr, "weights must not be NULL");
  ProblemWeights p;
  for (int i = 0; i < 5; ++i) p.w[i] = w[i];
  if (!p.is_minimal()) throw Error(ErrorCode::kInvalidArgument, "not a minimal problem: " + p.label());
  return p;
}

trf_solution_set* make_solution_set(const InstanceFile& inst, const SolveResult& r, const Json& meta) {
  auto* s = new trf_solution_set;
  s->file.instance = inst;
  s->file.stage_counts = r.report.counts;
  s->file.paths = r.report.paths;
  s->file.failed_paths = r.report.failed_paths;
  for (const auto& rec : r.solutions) s->file.solutions.push_back(stored_from_record(rec));
  s->file.meta = meta;
  return s;
}

}  // namespace

extern "C" {

void trf_default_options(trf_options* opts) {
  if (opts) *opts = defaults();
}

const char* trf_last_error(void) { return g_last_error.c_str(); }

const char* trf_status_string(trf_status status) {
  switch (status) {
    case TRF_OK: return "ok";
    case TRF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TRF_ERR_DEGENERATE: return "degenerate input";
    case TRF_ERR_NUMERICAL: return "numerical failure";
    case TRF_ERR_IO: return "i/o error";
    case TRF_ERR_PARSE: return "parse error";
    case TRF_ERR_UNCERTIFIED: return "uncertified witness set";
    case TRF_ERR_UNRELIABLE: return "unreliable run";
    case TRF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* trf_stage_name(int stage) {
  if (stage < 0 || stage > kStageCount) return "?";
  static thread_local std::string name;
  name = std::string(stage_name(static_cast<Stage>(stage)));
  return name.c_str();
}

int trf_problem_count(void) { return static_cast<int>(degree_table().size()); }

trf_status trf_problem_weights(int index, int weights[5], int* expected_degree) {
  return guarded([&] {
    require(index >= 0 && index < trf_problem_count(), "problem index out of range");
    require(weights != nullptr, "weights must not be NULL");
    const auto& row = degree_table()[static_cast<size_t>(index)];
    for (int i = 0; i < 5; ++i) weights[i] = row.weights.w[i];
    if (expected_degree) *expected_degree = row.degree;
  });
}

trf_status trf_parse_problem(const char* text, int weights[5]) {
  return guarded([&] {
    require(text != nullptr && weights != nullptr, "arguments must not be NULL");
    const ProblemWeights p = ProblemWeights::parse(text);
    if (!p.is_minimal())
      throw Error(ErrorCode::kInvalidArgument,
                  "not a minimal problem: " + p.label() + " (need 3w1+2w2+2w3+2w4+w5 = 11 and w2 >= w3)");
    for (int i = 0; i < 5; ++i) weights[i] = p.w[i];
  });
}

trf_status trf_witness_build(const char* locus, uint64_t seed, const trf_options* opts, trf_witness** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    *out = nullptr;
    const Locus l = locus_from_name(locus ? locus : "cal");
    Rng rng(child_seed(seed, 7));
    auto param = std::make_shared<TrifocalParametrization>(random_patches(rng), l);
    auto* w = new trf_witness;
    try {
      w->pws = build_witness_set(param, seed, witness_options(opts));
      w->hash = witness_content_hash(w->pws);
    } catch (...) {
      delete w;
      throw;
    }
    w->locus = std::string(locus_name(l));
    *out = w;
  });
}

trf_status trf_witness_load(const char* path, trf_witness** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "arguments must not be NULL");
    *out = nullptr;
    auto* w = new trf_witness;
    try {
      w->pws = witness_from_json(read_json_file(path));
      w->hash = witness_content_hash(w->pws);
    } catch (...) {
      delete w;
      throw;
    }
    w->locus = std::string(locus_name(dynamic_cast<const TrifocalParametrization&>(*w->pws.param).locus()));
    *out = w;
  });
}

trf_status trf_witness_save(const trf_witness* w, const trf_options* opts, const char* path) {
  return guarded([&] {
    require(w != nullptr && path != nullptr, "arguments must not be NULL");
    write_json_file(path, witness_to_json(w->pws, options_json(opts)));
  });
}

trf_status trf_witness_degree(const trf_witness* w, size_t* deg) {
  return guarded([&] {
    require(w != nullptr && deg != nullptr, "arguments must not be NULL");
    *deg = degree(w->pws);
  });
}

size_t trf_witness_point_count(const trf_witness* w) { return w ? w->pws.points.size() : 0; }
int trf_witness_certified(const trf_witness* w) { return w && w->pws.certified ? 1 : 0; }
double trf_witness_trace_deviation(const trf_witness* w) { return w ? w->pws.trace_deviation : -1.0; }
const char* trf_witness_locus(const trf_witness* w) { return w ? w->locus.c_str() : ""; }
uint64_t trf_witness_seed(const trf_witness* w) { return w ? w->pws.seed : 0; }

const char* trf_witness_content_hash(const trf_witness* w) { return w ? w->hash.c_str() : ""; }

trf_status trf_witness_trace_test(trf_witness* w, const trf_options* opts, int* passed, double* deviation) {
  return guarded([&] {
    require(w != nullptr, "witness must not be NULL");
    const TraceResult r = trace_test(w->pws, witness_options(opts));
    w->pws.certified = r.passed;
    w->pws.trace_deviation = r.deviation;
    if (passed) *passed = r.passed ? 1 : 0;
    if (deviation) *deviation = r.deviation;
    if (r.inconclusive) throw Error(ErrorCode::kNumerical, "trace test inconclusive: a trace path failed");
  });
}

void trf_witness_free(trf_witness* w) { delete w; }

trf_status trf_instance_random(const int weights[5], uint64_t seed, int complex_data, trf_instance** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    auto* inst = new trf_instance;
    inst->file.problem = weights_from(weights);
    inst->file.seed = seed;
    inst->file.correspondences = random_instance(inst->file.problem, seed, complex_data != 0);
    *out = inst;
  });
}

trf_status trf_instance_load(const char* path, trf_instance** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "arguments must not be NULL");
    *out = nullptr;
    auto file = instance_from_json(read_json_file(path));
    *out = new trf_instance{std::move(file)};
  });
}

trf_status trf_instance_save(const trf_instance* inst, const char* path) {
  return guarded([&] {
    require(inst != nullptr && path != nullptr, "arguments must not be NULL");
    write_json_file(path, instance_to_json(inst->file));
  });
}

void trf_instance_free(trf_instance* inst) { delete inst; }

trf_status trf_solve(const trf_witness* w, const trf_instance* inst, uint64_t seed, const trf_options* opts,
                     trf_solution_set** out) {
  return guarded([&] {
    require(w != nullptr && inst != nullptr && out != nullptr, "arguments must not be NULL");
    *out = nullptr;
    const SolveResult r = solve_instance(w->pws, inst->file.correspondences, seed, solve_options(opts));
    Json meta = {{"seed", seed}, {"witness_hash", witness_content_hash(w->pws)}, {"options", options_json(opts)}};
    *out = make_solution_set(inst->file, r, meta);
  });
}

trf_status trf_solve_problem(const trf_witness* w, const int weights[5], uint64_t seed, const trf_options* opts,
                             trf_solution_set** out) {
  return guarded([&] {
    require(w != nullptr && out != nullptr, "arguments must not be NULL");
    *out = nullptr;
    const ProblemWeights p = weights_from(weights);
    ProblemRun run = solve_problem(w->pws, p, seed, solve_options(opts));
    InstanceFile inst{p, seed, run.instance};
    Json meta = {{"seed", seed},
                 {"witness_hash", witness_content_hash(w->pws)},
                 {"degree", run.degree},
                 {"expected_degree", run.expected ? Json(*run.expected) : Json()},
                 {"options", options_json(opts)}};
    trf_solution_set* s = make_solution_set(inst, run.result, meta);
    s->run = std::move(run);
    *out = s;
  });
}

trf_status trf_solution_stage_counts(const trf_solution_set* s, size_t counts[TRF_STAGE_COUNT]) {
  return guarded([&] {
    require(s != nullptr && counts != nullptr, "arguments must not be NULL");
    for (int i = 0; i < kStageCount; ++i) counts[i] = s->file.stage_counts[i];
  });
}

size_t trf_solution_count(const trf_solution_set* s) { return s ? s->file.solutions.size() : 0; }

size_t trf_solution_real_count(const trf_solution_set* s) {
  if (!s) return 0;
  size_t n = 0;
  for (const auto& x : s->file.solutions) n += x.is_real ? 1 : 0;
  return n;
}

size_t trf_solution_failed_paths(const trf_solution_set* s) { return s ? s->file.failed_paths : 0; }

const char* trf_table_header(void) {
  static const std::string header = table_header();
  return header.c_str();
}

trf_status trf_solution_table_row(const trf_solution_set* s, char* buffer, size_t size) {
  return guarded([&] {
    require(s != nullptr && buffer != nullptr && size > 0, "arguments must not be NULL");
    require(s->run.has_value(), "table rows need a set produced by trf_solve_problem");
    const std::string row = table_row(*s->run);
    require(row.size() < size, "buffer too small for the table row");
    std::memcpy(buffer, row.c_str(), row.size() + 1);
  });
}

trf_status trf_solution_save(const trf_solution_set* s, const char* path) {
  return guarded([&] {
    require(s != nullptr && path != nullptr, "arguments must not be NULL");
    write_json_file(path, solutions_to_json(s->file));
  });
}

trf_status trf_solution_load(const char* path, trf_solution_set** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "arguments must not be NULL");
    *out = nullptr;
    auto file = solutions_from_json(read_json_file(path));
    auto* s = new trf_solution_set;
    s->file = std::move(file);
    *out = s;
  });
}

void trf_solution_free(trf_solution_set* s) { delete s; }

trf_status trf_verify_solution(const trf_solution_set* s, size_t index, const trf_instance* inst,
                               const trf_options* opts, int* passed, char* failed_check, size_t size) {
  return guarded([&] {
    require(s != nullptr && passed != nullptr, "arguments must not be NULL");
    require(index < s->file.solutions.size(), "solution index out of range");
    const Instance& data = inst ? inst->file.correspondences : s->file.instance.correspondences;
    const StoredSolution& sol = s->file.solutions[index];
    const SolveOptions so = solve_options(opts);
    const Verification v =
        sol.params ? verify_solution(make_record(*sol.params), data, so.tol) : verify_cameras(sol.cameras, data, so.tol);
    *passed = v.passed() ? 1 : 0;
    if (failed_check && size > 0) {
      const std::string name = v.failed_check();
      const size_t n = std::min(name.size(), size - 1);
      std::memcpy(failed_check, name.c_str(), n);
      failed_check[n] = '\0';
    }
  });
}

}  // extern "C"
