#include <doctest.h>

#include "core/pipeline.hpp"
#include "core/serialize.hpp"
#include "test_util.hpp"

using namespace trifocal;
using namespace trifocal::testing;

namespace {

const PseudoWitnessSet& stored_witness() {
  static const PseudoWitnessSet pws = witness_from_json(read_json_file(fixture("witness_cal.json")));
  return pws;
}

CalibratedConfiguration real_configuration(Rng& rng) {
  CalibratedConfiguration cfg;
  for (auto& z : cfg.q2) z = rng.normal();
  for (auto& z : cfg.q3) z = rng.normal();
  cfg.t21 = rng.normal();
  cfg.t22 = rng.normal();
  cfg.t3 = real_vec3(rng);
  return cfg;
}

struct Planted {
  CalibratedConfiguration cfg;
  Instance instance;
  SolveResult result;
};

// One solve shared by the cases below.
const Planted& planted() {
  static const Planted p = [] {
    Planted out;
    Rng rng(71);
    out.cfg = real_configuration(rng);
    out.instance = synthetic_consistent_instance(out.cfg, ProblemWeights{{1, 4, 0, 0, 0}}, 72);
    SolveOptions opts;
    opts.witness.threads = 1;
    out.result = solve_instance(stored_witness(), out.instance, 73, opts);
    return out;
  }();
  return p;
}

double coordinate_distance(const std::array<cplx, 13>& a, const std::array<cplx, 13>& b) {
  double d = 0.0;
  for (int i = 0; i < 13; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("the planted configuration is among the solutions") {
  const Planted& p = planted();
  CHECK(p.result.report.failed_paths == 0);
  CHECK(p.result.solutions.size() == 160);
  const auto truth = make_record(p.cfg.params()).normalized.coordinates();
  double best = std::numeric_limits<double>::infinity();
  const SolutionRecord* match = nullptr;
  for (const auto& s : p.result.solutions) {
    const double d = coordinate_distance(s.normalized.coordinates(), truth);
    if (d < best) {
      best = d;
      match = &s;
    }
  }
  CHECK(best <= 1e-6);
  REQUIRE(match);
  CHECK(match->is_real);
  CHECK(verify_solution(*match, p.instance).passed());
}

TEST_CASE("stage counts are monotone and every solution verifies") {
  const Planted& p = planted();
  const auto& c = p.result.report.counts;
  CHECK(c[0] == stored_witness().points.size());
  for (int s = 1; s < kStageCount; ++s) CHECK(c[s] <= c[s - 1]);
  CHECK(c[kStageCount - 1] == p.result.solutions.size());
  for (const auto& s : p.result.solutions) {
    CHECK(s.membership_residual <= 1e-7);
    CHECK(verify_solution(s, p.instance).passed());
  }
}

TEST_CASE("a perturbed instance rejects the planted solution") {
  const Planted& p = planted();
  const SolutionRecord truth = make_record(p.cfg.params());
  CHECK(verify_solution(truth, p.instance).passed());
  Instance moved = p.instance;
  auto v = moved[2].v;
  v[1][0] += 1e-3;
  moved[2] = Correspondence(moved[2].kind, v[0], v[1], v[2]);
  const Verification bad = verify_solution(truth, moved);
  CHECK_FALSE(bad.passed());
  CHECK(bad.failed_check() == "multiview");
}

TEST_CASE("an uncertified witness set is refused") {
  PseudoWitnessSet pws = stored_witness();
  pws.certified = false;
  try {
    solve_instance(pws, random_instance(ProblemWeights{{1, 4, 0, 0, 0}}, 1), 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUncertified);
  }
}

TEST_CASE("a non-minimal problem is refused") {
  CHECK_THROWS_AS(solve_problem(stored_witness(), ProblemWeights{{1, 4, 0, 0, 1}}, 1), Error);
}

TEST_CASE("non-physical quaternions are classified as such") {
  CalibratedConfiguration cfg;
  cfg.q2 = {1.0, cplx(0.0, 1.0), 0.3, 0.0};
  cfg.q3 = {1.0, 0.2, 0.1, 0.4};
  cfg.t21 = 0.3;
  cfg.t22 = -0.2;
  cfg.t3 = {0.1, 0.5, 1.0};
  const SolutionRecord rec = make_record(cfg.params());
  CHECK_FALSE(rec.is_real);
  Rng rng(74);
  CHECK(make_record(real_configuration(rng).params()).is_real);
}

}
