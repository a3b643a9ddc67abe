#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include <trifocal/trifocal.h>

namespace {

std::string fixture(const std::string& name) { return std::string(TRIFOCAL_FIXTURES) + "/" + name; }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("trifocal_capi_" + name)).string();
}

trf_options single_thread() {
  trf_options o;
  trf_default_options(&o);
  o.threads = 1;
  return o;
}

struct Witness {
  trf_witness* w = nullptr;
  Witness() { REQUIRE(trf_witness_load(fixture("witness_cal.json").c_str(), &w) == TRF_OK); }
  ~Witness() { trf_witness_free(w); }
};

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("defaults, names and the problem catalogue") {
  trf_options o;
  trf_default_options(&o);
  CHECK(o.newton_tol > 0.0);
  CHECK(o.endgame_radius > 0.0);
  CHECK(o.run_config == nullptr);
  CHECK(std::string(trf_status_string(TRF_ERR_UNCERTIFIED)).size() > 0);
  CHECK(std::string(trf_stage_name(0)) == "finite");
  CHECK(std::string(trf_stage_name(TRF_STAGE_COUNT - 1)) == "distinct");
  CHECK(trf_problem_count() == 66);
  int w[5], degree = 0;
  REQUIRE(trf_problem_weights(0, w, &degree) == TRF_OK);
  CHECK(w[0] == 3);
  CHECK(w[1] == 1);
  CHECK(degree == 272);
  REQUIRE(trf_problem_weights(65, w, &degree) == TRF_OK);
  CHECK(w[4] == 11);
  CHECK(degree == 4912);
  CHECK(trf_problem_weights(66, w, &degree) == TRF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("parsing problems") {
  int w[5];
  REQUIRE(trf_parse_problem("1,4,0,0,0", w) == TRF_OK);
  CHECK(w[1] == 4);
  CHECK(trf_parse_problem("1,4,0,0", w) == TRF_ERR_PARSE);
  CHECK(std::strlen(trf_last_error()) > 0);
  CHECK(trf_parse_problem("1,4,0,0,1", w) == TRF_ERR_INVALID_ARGUMENT);
  CHECK(trf_parse_problem(nullptr, w) == TRF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("null handles are rejected") {
  trf_witness* w = nullptr;
  CHECK(trf_witness_load(nullptr, &w) == TRF_ERR_INVALID_ARGUMENT);
  CHECK(trf_witness_load("/nonexistent/witness.json", &w) == TRF_ERR_IO);
  CHECK(w == nullptr);
  size_t degree = 0;
  CHECK(trf_witness_degree(nullptr, &degree) == TRF_ERR_INVALID_ARGUMENT);
  CHECK(trf_witness_build("11", 1, nullptr, &w) == TRF_ERR_PARSE);
  trf_witness_free(nullptr);
  trf_instance_free(nullptr);
  trf_solution_free(nullptr);
}

TEST_CASE("a small locus-free witness build goes through the handle") {
  trf_options o = single_thread();
  o.max_edges = 1;
  o.initial_edges = 1;
  trf_witness* w = nullptr;
  // One edge on the 00 locus is far too few to certify; the set comes back
  // uncertified and its degree is refused.
  REQUIRE(trf_witness_build("00", 2, &o, &w) == TRF_OK);
  if (!trf_witness_certified(w)) {
    size_t degree = 0;
    CHECK(trf_witness_degree(w, &degree) == TRF_ERR_UNCERTIFIED);
  }
  CHECK(std::string(trf_witness_locus(w)) == "00");
  CHECK(trf_witness_seed(w) == 2);
  trf_witness_free(w);
}

TEST_CASE("witness files round-trip through save and load") {
  Witness fx;
  size_t degree = 0;
  REQUIRE(trf_witness_degree(fx.w, &degree) == TRF_OK);
  CHECK(degree == 4912);
  CHECK(trf_witness_certified(fx.w) == 1);
  CHECK(trf_witness_trace_deviation(fx.w) <= 1e-6);
  const std::string hash = trf_witness_content_hash(fx.w);
  trf_options o = single_thread();
  o.run_config = "command = test";
  const std::string path = temp_path("witness.json");
  REQUIRE(trf_witness_save(fx.w, &o, path.c_str()) == TRF_OK);
  trf_witness* back = nullptr;
  REQUIRE(trf_witness_load(path.c_str(), &back) == TRF_OK);
  CHECK(std::string(trf_witness_content_hash(back)) == hash);
  CHECK(trf_witness_point_count(back) == 4912);
  trf_witness_free(back);
  std::remove(path.c_str());
}

TEST_CASE("instances round-trip through save and load") {
  const int w[5] = {1, 4, 0, 0, 0};
  trf_instance* inst = nullptr;
  REQUIRE(trf_instance_random(w, 3, 0, &inst) == TRF_OK);
  const std::string path = temp_path("instance.json");
  REQUIRE(trf_instance_save(inst, path.c_str()) == TRF_OK);
  trf_instance* back = nullptr;
  CHECK(trf_instance_load(path.c_str(), &back) == TRF_OK);
  trf_instance_free(back);
  trf_instance_free(inst);
  std::remove(path.c_str());
  const int bad[5] = {1, 4, 0, 0, 1};
  CHECK(trf_instance_random(bad, 3, 0, &inst) == TRF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("solving the stored example instance") {
  Witness fx;
  trf_instance* inst = nullptr;
  REQUIRE(trf_instance_load(fixture("example_instance.json").c_str(), &inst) == TRF_OK);
  const trf_options o = single_thread();
  trf_solution_set* s = nullptr;
  REQUIRE(trf_solve(fx.w, inst, 1, &o, &s) == TRF_OK);
  CHECK(trf_solution_count(s) == 160);
  CHECK(trf_solution_failed_paths(s) == 0);
  size_t counts[TRF_STAGE_COUNT];
  REQUIRE(trf_solution_stage_counts(s, counts) == TRF_OK);
  CHECK(counts[0] == 4912);
  CHECK(counts[TRF_STAGE_COUNT - 1] == 160);
  // Table rows belong to sets solved from a problem and a seed.
  char row[512];
  CHECK(trf_solution_table_row(s, row, sizeof row) == TRF_ERR_INVALID_ARGUMENT);

  int passed = 0;
  char failed[32] = "";
  REQUIRE(trf_verify_solution(s, 0, nullptr, &o, &passed, failed, sizeof failed) == TRF_OK);
  CHECK(passed == 1);
  CHECK(trf_verify_solution(s, 160, nullptr, &o, &passed, failed, sizeof failed) == TRF_ERR_INVALID_ARGUMENT);

  const std::string path = temp_path("solutions.json");
  REQUIRE(trf_solution_save(s, path.c_str()) == TRF_OK);
  trf_solution_set* back = nullptr;
  REQUIRE(trf_solution_load(path.c_str(), &back) == TRF_OK);
  CHECK(trf_solution_count(back) == 160);
  CHECK(trf_solution_real_count(back) == trf_solution_real_count(s));
  REQUIRE(trf_verify_solution(back, 5, nullptr, &o, &passed, failed, sizeof failed) == TRF_OK);
  CHECK(passed == 1);
  trf_solution_free(back);
  std::remove(path.c_str());
  trf_solution_free(s);
  trf_instance_free(inst);
}

TEST_CASE("printed cameras verify only with loosened tolerances") {
  trf_solution_set* s = nullptr;
  REQUIRE(trf_solution_load(fixture("example_solution.json").c_str(), &s) == TRF_OK);
  trf_options o = single_thread();
  int passed = 0;
  char failed[32] = "";
  REQUIRE(trf_verify_solution(s, 0, nullptr, &o, &passed, failed, sizeof failed) == TRF_OK);
  CHECK(passed == 0);
  CHECK(std::string(failed) == "physical");
  o.relative_singular_value = 5e-2;
  o.calibration_tol = 5e-2;
  REQUIRE(trf_verify_solution(s, 0, nullptr, &o, &passed, failed, sizeof failed) == TRF_OK);
  CHECK(passed == 1);
  trf_solution_free(s);
}

}
