#pragma once

// Solving minimal problems: special slice, randomization, parameter homotopy
// from a pseudo-witness set of the calibrated trifocal variety, and the
// staged filter that keeps exactly the consistent calibrated configurations.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/geometry.hpp"
#include "core/slices.hpp"
#include "core/witness.hpp"

namespace trifocal {

struct FilterTolerances {
  /// Constraint rows at the normalized tensor, relative to unit rows.
  double membership = 1e-7;
  /// |sum q^2| / ||q||^2 below this is non-physical.
  double physical = 1e-6;
  double rank_ratio = kDefaultRankRatio;
  /// Loosened rank test sigma_min <= tol * sigma_max for truncated data.
  std::optional<double> relative_singular_value;
  double scalar = 1e-7;
  double epipole = 1e-6;
  double dedup = 1e-6;
  /// Calibration test for externally supplied cameras.
  double calibration = 1e-8;
  /// Largest admissible fraction of failed paths.
  double failure_budget = 0.01;

  ConsistencyTolerances consistency() const;
};

/// Filter stages in order; an endpoint's verdict is the first stage it fails.
enum class Stage { kFinite = 0, kMembership, kPhysical, kCenters, kMultiview, kEpipoles, kDistinct, kAccepted };
inline constexpr int kStageCount = 7;
std::string_view stage_name(Stage s);

struct FilterReport {
  /// Number of endpoints surviving each stage: finite, in the special slice,
  /// physical, independent centers, multi-view, epipole-avoiding, distinct.
  std::array<size_t, kStageCount> counts{};
  std::vector<Stage> verdicts;
  size_t paths = 0;
  size_t failed_paths = 0;
  int attempts = 1;
};

struct SolutionRecord {
  std::array<cplx, 13> params{};
  NormalizedConfiguration normalized;
  TrifocalTensor tensor;
  std::array<Camera, 3> cameras;
  double membership_residual = 0.0;
  double worst_multiview = 0.0;
  bool is_real = false;
};

/// Builds the record of a parameter point: cameras, tensor, normalized form
/// (when physical) and the realness flag.
SolutionRecord make_record(std::span<const cplx> params);

struct SolveOptions {
  FilterTolerances tol;
  WitnessOptions witness;
  /// Fresh randomizations tried before declaring the run unreliable.
  int max_attempts = 3;
};

struct SolveResult {
  std::vector<SolutionRecord> solutions;
  FilterReport report;
  ProblemWeights weights;
};

/// Throws kUncertified for an uncertified witness set, kDegenerate when the
/// special slice has the wrong codimension and kUnreliable when every attempt
/// loses more than the failure budget of paths.
SolveResult solve_instance(const PseudoWitnessSet& pws, const Instance& instance, std::uint64_t seed,
                           const SolveOptions& opts = {});

struct ProblemRun {
  ProblemWeights weights;
  std::uint64_t seed = 0;
  Instance instance;
  SolveResult result;
  int degree = 0;
  std::optional<int> expected;
};

/// Solves a random real instance of `w` drawn from `seed`.
ProblemRun solve_problem(const PseudoWitnessSet& pws, const ProblemWeights& w, std::uint64_t seed,
                         const SolveOptions& opts = {});

/// Imaginary parts of the normalized coordinates all at most `tol`.
bool classify_real(const SolutionRecord& rec, double tol = 1e-6);

struct Verification {
  bool physical = false;
  bool centers = false;
  bool multiview = false;
  bool epipoles = false;
  double worst_multiview = 0.0;
  bool passed() const { return physical && centers && multiview && epipoles; }
  /// Name of the first failing check, empty when all pass.
  std::string failed_check() const;
};

/// Physicality, independent centers, multi-view rank drops and epipole
/// avoidance for a parameter-space record.
Verification verify_solution(const SolutionRecord& rec, const Instance& instance, const FilterTolerances& tol = {});

/// Same checks for three external cameras; physicality means every camera is
/// calibrated within `tol.calibration`.
Verification verify_cameras(const std::array<Camera, 3>& cams, const Instance& instance,
                            const FilterTolerances& tol = {});

}  // namespace trifocal
