#pragma once

// Linear conditions on tensor space imposed by image correspondences, special
// slices for minimal problems, and the catalogue of the 66 minimal problems.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/correspondence.hpp"
#include "core/geometry.hpp"
#include "core/numlin.hpp"
#include "core/rng.hpp"

namespace trifocal {

/// Counts of PPP, PPL, PLP, LLL, PLL correspondences.
struct ProblemWeights {
  std::array<int, 5> w{};

  int count(Kind k) const { return w[static_cast<int>(k)]; }
  /// 3 w1 + 2 w2 + 2 w3 + 2 w4 + w5 = 11, w2 >= w3, all nonnegative.
  bool is_minimal() const;
  /// Expected codimension of the special slice: 11 + w1.
  int codimension() const { return 11 + w[0]; }
  int correspondence_count() const { return w[0] + w[1] + w[2] + w[3] + w[4]; }
  std::string label() const;  // "w1,w2,w3,w4,w5"
  static ProblemWeights parse(const std::string& text);

  friend bool operator==(const ProblemWeights&, const ProblemWeights&) = default;
};

struct DegreeTableRow {
  ProblemWeights weights;
  int degree;
};

/// The 66 rows of the degree table of calibrated minimal problems.
const std::vector<DegreeTableRow>& degree_table();
std::optional<int> expected_degree(const ProblemWeights& w);

/// All minimal weight vectors, ordered like the degree table (lexicographically
/// decreasing).
std::vector<ProblemWeights> enumerate_problems();

/// Linear forms on C^27 (tensor entry 9 i + 3 j + k) vanishing on the tensors
/// of configurations consistent with `c`: 1 row for PLL, 3 rows of rank 2 for
/// LLL, PLP, PPL and 9 rows of rank 4 for PPP.
CMatrix constraint_rows(const Correspondence& c);

struct LinearSlice {
  CMatrix rows;  // k x 27
  /// For each correspondence, the rows it contributed.
  std::vector<std::vector<int>> provenance;
  int rank = 0;
};

using Instance = std::vector<Correspondence>;

/// Weights of an instance, whose kinds must appear in table order.
ProblemWeights instance_weights(const Instance& instance);

/// Stacks constraint rows; throws kDegenerate unless the numerical
/// codimension equals 11 + w1.
LinearSlice assemble_special_slice(const Instance& instance);

/// 11 random combinations of the slice rows. Throws kInvalidArgument when
/// the slice has codimension below 11.
LinearSlice randomize_slice(const LinearSlice& s, Rng& rng);

/// Random correspondences in table order; real entries uniform on [0, 1] or
/// complex Gaussian entries.
Instance random_instance(const ProblemWeights& w, std::uint64_t seed, bool complex_data = false);

/// Correspondences obtained by projecting random incident world points and
/// lines with the cameras of `cfg`. Throws kDegenerate when the centers are
/// not pairwise distinct or no admissible sample is found within 100 draws.
Instance synthetic_consistent_instance(const CalibratedConfiguration& cfg, const ProblemWeights& w,
                                       std::uint64_t seed);

Vec3 cross(const Vec3& a, const Vec3& b);

}  // namespace trifocal
