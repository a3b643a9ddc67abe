#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/serialize.hpp"
#include "test_util.hpp"

using namespace trifocal;
using namespace trifocal::testing;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("trifocal_test_" + name)).string();
}

PseudoWitnessSet small_witness(Rng& rng) {
  PseudoWitnessSet pws;
  pws.param = std::make_shared<TrifocalParametrization>(random_patches(rng), Locus::k01);
  pws.slice = rng.gaussian_matrix(pws.param->slice_rows(), 27);
  pws.chart = std::vector<cplx>(27);
  for (auto& z : pws.chart) z = rng.gaussian();
  pws.direction.resize(pws.param->slice_rows());
  for (auto& z : pws.direction) z = rng.gaussian();
  for (int i = 0; i < 3; ++i) pws.points.push_back(pws.param->random_point(rng));
  pws.certified = true;
  pws.trace_deviation = 1e-12;
  pws.seed = 99;
  return pws;
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("complex numbers round-trip exactly") {
  Rng rng(81);
  for (int i = 0; i < 100; ++i) {
    const cplx z = rng.gaussian() * std::pow(10.0, rng.normal() * 10);
    const Json j = Json::parse(complex_to_json(z).dump());
    CHECK(complex_from_json(j) == z);
  }
  CHECK(complex_from_json(Json(2.5)) == cplx(2.5, 0.0));
  CHECK_THROWS_AS(complex_from_json(Json("x")), Error);
  CHECK_THROWS_AS(complex_from_json(Json::array({1.0})), Error);
}

TEST_CASE("instances round-trip") {
  InstanceFile f;
  f.problem = ProblemWeights{{1, 4, 0, 0, 0}};
  f.seed = 17;
  f.correspondences = random_instance(f.problem, 17, true);
  const InstanceFile g = instance_from_json(Json::parse(instance_to_json(f).dump()));
  CHECK(g.problem == f.problem);
  CHECK(g.seed == 17);
  REQUIRE(g.correspondences.size() == f.correspondences.size());
  for (size_t i = 0; i < g.correspondences.size(); ++i) {
    CHECK(g.correspondences[i].kind == f.correspondences[i].kind);
    // Loading normalizes again, which may move the last bit.
    for (int v = 0; v < 3; ++v) CHECK(projective_distance(g.correspondences[i].v[v], f.correspondences[i].v[v]) <= 1e-15);
  }
}

TEST_CASE("the stored example instance parses") {
  const InstanceFile f = instance_from_json(read_json_file(fixture("example_instance.json")));
  CHECK(f.problem == ProblemWeights{{1, 4, 0, 0, 0}});
  CHECK(instance_weights(f.correspondences) == f.problem);
}

TEST_CASE("witness sets round-trip and keep their hash") {
  Rng rng(82);
  const PseudoWitnessSet pws = small_witness(rng);
  const Json j = Json::parse(witness_to_json(pws).dump());
  const PseudoWitnessSet back = witness_from_json(j);
  CHECK(back.points == pws.points);
  CHECK(back.slice.data() == pws.slice.data());
  CHECK(back.certified);
  CHECK(back.seed == 99);
  CHECK(witness_content_hash(back) == witness_content_hash(pws));
  const auto* tp = dynamic_cast<const TrifocalParametrization*>(back.param.get());
  REQUIRE(tp);
  CHECK(tp->locus() == Locus::k01);
}

TEST_CASE("an edited witness slice fails the hash check") {
  Rng rng(83);
  Json j = witness_to_json(small_witness(rng));
  j["slice_rows"][0][0] = complex_to_json(cplx(0.5, 0.25));
  try {
    witness_from_json(j);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
}

TEST_CASE("missing fields and wrong shapes are parse errors") {
  Rng rng(84);
  Json j = witness_to_json(small_witness(rng));
  Json no_points = j;
  no_points.erase("points");
  CHECK_THROWS_AS(witness_from_json(no_points), Error);
  Json short_point = j;
  short_point["points"][1].erase(0);
  try {
    witness_from_json(short_point);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("points[1]") != std::string::npos);
  }
}

TEST_CASE("malformed files report the path") {
  const std::string path = temp_path("bad.json");
  {
    std::ofstream out(path);
    out << "{\"locus\": \"cal\",\n \"points\": [1, 2,\n";
  }
  try {
    read_json_file(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }
  std::remove(path.c_str());
  try {
    read_json_file(temp_path("missing.json"));
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("solution files round-trip") {
  Rng rng(85);
  SolutionFile f;
  f.instance.problem = ProblemWeights{{1, 4, 0, 0, 0}};
  f.instance.correspondences = random_instance(f.instance.problem, 5);
  f.paths = 4912;
  f.stage_counts = {4912, 2552, 1664, 1664, 160, 160, 160};
  CalibratedConfiguration cfg = random_configuration(rng);
  f.solutions.push_back(stored_from_record(make_record(cfg.params())));
  const SolutionFile g = solutions_from_json(Json::parse(solutions_to_json(f).dump()));
  CHECK(g.paths == 4912);
  CHECK(g.stage_counts == f.stage_counts);
  REQUIRE(g.solutions.size() == 1);
  REQUIRE(g.solutions[0].params.has_value());
  CHECK(*g.solutions[0].params == cfg.params());
  for (int c = 0; c < 3; ++c) CHECK(g.solutions[0].cameras[c].matrix().data() == f.solutions[0].cameras[c].matrix().data());
}

TEST_CASE("table rows carry counts, degrees and the match flag") {
  const std::string header = table_header();
  CHECK(header.find("#configurations\texpected\tmatch") != std::string::npos);
  ProblemRun run;
  run.weights = ProblemWeights{{1, 4, 0, 0, 0}};
  run.degree = 160;
  run.expected = 160;
  const std::string row = table_row(run);
  CHECK(row.rfind("1\t4\t0\t0\t0\t160\t160", 0) == 0);
  const auto columns = [](const std::string& s) { return std::count(s.begin(), s.end(), '\t'); };
  CHECK(columns(row) == columns(header));
}

}
