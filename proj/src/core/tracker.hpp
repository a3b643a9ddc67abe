#pragma once

// Predictor-corrector path tracking for square polynomial systems.
// Homotopies run from s = 1 (start system) to s = 0 (target system); the
// predictor is classical Runge-Kutta of order four on dz/ds = -H_z^{-1} H_s
// and the corrector is Newton's method at the new value of s. Paths that end
// at a singular solution are finished by a Cauchy endgame: loops around
// s = 0 in the complex plane whose mean is the endpoint.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/numlin.hpp"

namespace trifocal {

/// n polynomial equations in n unknowns. `evaluate` writes f(z) into `f`
/// and, when `jac` is non-empty, the row-major n x n Jacobian into `jac`.
struct SquareSystem {
  int n = 0;
  std::function<void(std::span<const cplx> z, std::span<cplx> f, std::span<cplx> jac)> evaluate;
  std::string description;
};

/// H(z, s) together with its partial derivatives.
class Homotopy {
public:
  virtual ~Homotopy() = default;
  virtual int dimension() const = 0;
  /// `hz` (n x n, row-major) and `hs` may be empty when not needed.
  virtual void evaluate(std::span<const cplx> z, cplx s, std::span<cplx> h, std::span<cplx> hz,
                        std::span<cplx> hs) const = 0;
};

/// gamma * s * start(z) + (1 - s) * target(z)
class StraightLineHomotopy final : public Homotopy {
public:
  StraightLineHomotopy(const SquareSystem& start, const SquareSystem& target, cplx gamma);
  int dimension() const override { return start_.n; }
  void evaluate(std::span<const cplx> z, cplx s, std::span<cplx> h, std::span<cplx> hz,
                std::span<cplx> hs) const override;

private:
  const SquareSystem& start_;
  const SquareSystem& target_;
  cplx gamma_;
};

struct TrackerConfig {
  double initial_step = 0.05;
  double min_step = 1e-13;
  double max_step = 0.2;
  /// Corrector convergence: ||dz|| <= newton_tol * (1 + ||z||).
  double newton_tol = 1e-7;
  int max_newton_iterations = 3;
  int max_steps = 20000;
  double divergence_radius = 1e16;
  /// Endpoint acceptance: final relative Newton correction at s = 0.
  double refine_tol = 1e-10;
  int refine_iterations = 8;
  /// Radius of the endgame loops around s = 0 (0 disables the endgame).
  double endgame_radius = 1e-5;
  /// Polygon vertices per loop; the endpoint is the mean over the vertices.
  int loop_samples = 32;
  int max_winding = 16;
  /// Agreement of the estimates at the endgame radius and a quarter of it.
  double endgame_tol = 1e-8;
  cplx gamma{1.0, 0.0};

  void validate() const;
};

/// kSingularEndpoint: the path reached s = 0 at a singular solution located
/// by the endgame; the point is accurate to `residual` but Newton's method
/// does not converge quadratically there.
enum class PathStatus { kSuccess = 0, kDiverged, kStepLimit, kSingular, kSingularEndpoint };
std::string_view status_name(PathStatus s);

struct TrackedEndpoint {
  std::vector<cplx> point;
  PathStatus status = PathStatus::kStepLimit;
  /// Last relative Newton correction at s = 0, or the relative disagreement
  /// of the two endgame estimates.
  double residual = 0.0;
  /// ||H(z, 0)|| at the returned point.
  double function_norm = 0.0;
  /// Ratio of the last two Newton corrections during refinement.
  double contraction = 0.0;
  int steps = 0;
  /// Value of s where tracking stopped (0 on success).
  double s_final = 1.0;
  /// Loops around s = 0 before the path closed up (0 without endgame).
  int winding = 0;

  bool ok() const { return status == PathStatus::kSuccess; }
  /// A finite endpoint at s = 0, regular or singular.
  bool reached() const { return ok() || status == PathStatus::kSingularEndpoint; }
};

TrackedEndpoint track_path(const Homotopy& h, std::span<const cplx> start_point, const TrackerConfig& cfg);

/// Tracks gamma * s * start + (1 - s) * target with gamma taken from cfg.
TrackedEndpoint track_path(const SquareSystem& start, const SquareSystem& target, std::span<const cplx> start_point,
                           const TrackerConfig& cfg);

struct NewtonResult {
  std::vector<cplx> point;
  bool converged = false;
  /// Last relative correction ||dz|| / (1 + ||z||).
  double residual = 0.0;
  double function_norm = 0.0;
  /// ||dz_k|| / ||dz_{k-1}|| at the last iteration with a nonzero previous step.
  double contraction = 0.0;
  /// False when the corrections shrank only linearly (a multiple root).
  bool quadratic = true;
  int iterations = 0;
};

NewtonResult newton_refine(const SquareSystem& sys, std::span<const cplx> point, double tol, int max_iters);

/// Tracks prod(degrees) paths from the roots of z_i^{d_i} - 1. The returned
/// endpoints are in start-root order.
std::vector<TrackedEndpoint> total_degree_solve(const SquareSystem& sys, const std::vector<int>& degrees,
                                                const TrackerConfig& cfg, std::uint64_t seed, int threads = 0);

/// Runs fn(0..count-1) on `threads` workers (0 picks the hardware width).
/// Results are expected to be written by index, so the outcome does not
/// depend on the width.
void parallel_for(size_t count, int threads, const std::function<void(size_t)>& fn);

/// Tracks many start points through one homotopy; paths that do not reach
/// s = 0 are retried once with a tenfold smaller maximal step.
std::vector<TrackedEndpoint> track_all(const Homotopy& h, const std::vector<std::vector<cplx>>& starts,
                                       const TrackerConfig& cfg, int threads = 0);

}  // namespace trifocal
