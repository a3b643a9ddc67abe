#include <doctest.h>

#include "core/serialize.hpp"
#include "core/witness.hpp"
#include "test_util.hpp"

using namespace trifocal;
using namespace trifocal::testing;

namespace {

WitnessOptions quiet() {
  WitnessOptions o;
  o.threads = 1;
  return o;
}

// Every point lies on the slice and the points are pairwise distinct.
void check_witness_points(const PseudoWitnessSet& pws) {
  const int n = pws.param->ambient();
  std::vector<cplx> y(n);
  for (const auto& p : pws.points) {
    pws.param->image(p, y, {});
    const auto v = pws.slice.apply(y);
    CHECK(norm2(v) <= 1e-9 * norm2(y) * pws.slice.frobenius_norm());
  }
  for (size_t a = 0; a < pws.points.size(); ++a)
    for (size_t b = a + 1; b < pws.points.size(); ++b) CHECK(point_distance(pws.points[a], pws.points[b]) > 1e-6);
}

}  // namespace

TEST_SUITE("witness") {

TEST_CASE("rational curves have their known degrees") {
  struct Case {
    std::shared_ptr<const Parametrization> param;
    size_t degree;
  };
  for (const auto& c : {Case{twisted_cubic(), 3}, Case{rational_circle(), 2}, Case{projective_line(), 1}}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto pws = build_witness_set(c.param, seed, quiet());
      CHECK_MESSAGE(pws.certified, c.param->name());
      CHECK(degree(pws) == c.degree);
      CHECK(pws.trace_deviation <= 1e-6);
      check_witness_points(pws);
    }
  }
}

TEST_CASE("proper subsets of a witness set fail the trace test") {
  const auto pws = build_witness_set(twisted_cubic(), 4, quiet());
  REQUIRE(pws.points.size() == 3);
  const TraceData data = trace_data(pws, TrackerConfig{}, 1);
  CHECK(trace_deviation(data, {0, 1, 2}) <= 1e-8);
  for (const std::vector<size_t>& subset :
       std::vector<std::vector<size_t>>{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}})
    CHECK(trace_deviation(data, subset) > 1e-2);
}

TEST_CASE("monodromy recovers the full set from one point") {
  auto pws = build_witness_set(twisted_cubic(), 5, quiet());
  REQUIRE(pws.certified);
  pws.points.resize(1);
  pws.certified = false;
  monodromy_populate(pws, 6, quiet());
  CHECK(pws.certified);
  CHECK(pws.points.size() == 3);
}

TEST_CASE("the degree of an uncertified set is refused") {
  auto pws = build_witness_set(projective_line(), 7, quiet());
  pws.certified = false;
  CHECK_THROWS_AS(degree(pws), Error);
}

TEST_CASE("loci and their equation counts") {
  Rng rng(61);
  const PatchPair patches = random_patches(rng);
  const std::array<int, 4> extras = {2, 3, 3, 4};
  for (Locus l : {Locus::kCal, Locus::k01, Locus::k10, Locus::k00}) {
    CHECK(locus_from_name(locus_name(l)) == l);
    const TrifocalParametrization param(patches, l);
    CHECK(param.extra_equations() == extras[static_cast<int>(l)]);
    const auto p = param.random_point(rng);
    std::vector<cplx> values(param.extra_equations());
    param.extras(p, values, {});
    CHECK(norm2(values) <= 1e-12);
    // The image is the tensor of the configuration.
    std::vector<cplx> y(27);
    param.image(p, y, {});
    const auto t = phi(CalibratedConfiguration::from_params(p));
    for (int e = 0; e < 27; ++e) CHECK(std::abs(y[e] - t.entries()[e]) <= 1e-13 * t.norm());
  }
  CHECK_THROWS_AS(locus_from_name("11"), Error);
}

TEST_CASE("the stored calibrated witness set is certified with regular points") {
  const auto pws = witness_from_json(read_json_file(fixture("witness_cal.json")));
  REQUIRE(pws.certified);
  CHECK(degree(pws) == 4912);
  const SquareSystem sys = sliced_system(pws.param, pws.slice);
  std::vector<cplx> f(13), jac(13 * 13);
  size_t bad_residual = 0;
  for (size_t i = 0; i < pws.points.size(); ++i) {
    sys.evaluate(pws.points[i], f, i % 97 == 0 ? std::span<cplx>(jac) : std::span<cplx>());
    if (norm2(f) > 1e-9 * (1.0 + norm2(pws.points[i]))) ++bad_residual;
    if (i % 97 == 0) CHECK(numerical_rank(CMatrix(13, 13, jac)) == 13);
  }
  CHECK(bad_residual == 0);
}

}
