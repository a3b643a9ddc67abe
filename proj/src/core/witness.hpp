#pragma once

// Pseudo-witness sets for images of parametrizations: points of the
// parameter space whose images lie on a generic linear slice, populated by
// monodromy and certified by the linear trace test.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "core/geometry.hpp"
#include "core/numlin.hpp"
#include "core/rng.hpp"
#include "core/tracker.hpp"

namespace trifocal {

/// A polynomial map from C^n to C^N whose image is a cone, plus extra
/// polynomial equations cutting the parameter space (affine patches,
/// restriction loci). The image has dimension n - extras, so a witness slice
/// has that many rows.
class Parametrization {
public:
  virtual ~Parametrization() = default;
  virtual std::string name() const = 0;
  virtual int parameters() const = 0;
  virtual int ambient() const = 0;
  virtual int extra_equations() const = 0;
  int slice_rows() const { return parameters() - extra_equations(); }

  /// y = map(p); `jac` (N x n, row-major) is filled when non-empty.
  virtual void image(std::span<const cplx> p, std::span<cplx> y, std::span<cplx> jac) const = 0;
  /// Extra equations and their e x n Jacobian (when non-empty).
  virtual void extras(std::span<const cplx> p, std::span<cplx> values, std::span<cplx> jac) const = 0;
  /// Random point satisfying the extra equations.
  virtual std::vector<cplx> random_point(Rng& rng) const = 0;
};

/// t -> (sum_d c[i][d] t^d)_i, a rational curve in an affine chart.
class RationalCurve final : public Parametrization {
public:
  RationalCurve(std::string name, std::vector<std::vector<double>> coefficients);
  std::string name() const override { return name_; }
  int parameters() const override { return 1; }
  int ambient() const override { return static_cast<int>(coeffs_.size()); }
  int extra_equations() const override { return 0; }
  void image(std::span<const cplx> p, std::span<cplx> y, std::span<cplx> jac) const override;
  void extras(std::span<const cplx>, std::span<cplx>, std::span<cplx>) const override {}
  std::vector<cplx> random_point(Rng& rng) const override { return {rng.gaussian()}; }

private:
  std::string name_;
  std::vector<std::vector<double>> coeffs_;
};

/// (1, t, t^2, t^3): degree 3.
std::shared_ptr<const Parametrization> twisted_cubic();
/// (1 + t^2, 1 - t^2, 2 t): a conic, degree 2.
std::shared_ptr<const Parametrization> rational_circle();
/// (1, t): the projective line, degree 1.
std::shared_ptr<const Parametrization> projective_line();

/// Calibrated trifocal variety and its non-physical subloci: "01" restricts
/// to a^2+b^2+c^2+d^2 = 0, "10" to e^2+f^2+g^2+h^2 = 0 and "00" to both.
enum class Locus { kCal = 0, k01, k10, k00 };
std::string_view locus_name(Locus l);
Locus locus_from_name(std::string_view name);

class TrifocalParametrization final : public Parametrization {
public:
  TrifocalParametrization(PatchPair patches, Locus locus);
  std::string name() const override;
  int parameters() const override { return 13; }
  int ambient() const override { return 27; }
  int extra_equations() const override;
  void image(std::span<const cplx> p, std::span<cplx> y, std::span<cplx> jac) const override;
  void extras(std::span<const cplx> p, std::span<cplx> values, std::span<cplx> jac) const override;
  std::vector<cplx> random_point(Rng& rng) const override;

  const PatchPair& patches() const { return patches_; }
  Locus locus() const { return locus_; }

private:
  PatchPair patches_;
  Locus locus_;
};

PatchPair random_patches(Rng& rng);

/// (gamma s M0 + (1 - s) M1) y(p) = 0 together with the extra equations.
class SliceHomotopy final : public Homotopy {
public:
  SliceHomotopy(const Parametrization& param, const CMatrix& start_slice, const CMatrix& target_slice, cplx gamma);
  int dimension() const override { return param_.parameters(); }
  void evaluate(std::span<const cplx> z, cplx s, std::span<cplx> h, std::span<cplx> hz,
                std::span<cplx> hs) const override;

private:
  const Parametrization& param_;
  CMatrix target_;
  CMatrix delta_;  // gamma M0 - M1
};

/// The square system M y(p) = 0, extras(p) = 0.
SquareSystem sliced_system(std::shared_ptr<const Parametrization> param, const CMatrix& slice);

struct PseudoWitnessSet {
  std::shared_ptr<const Parametrization> param;
  CMatrix slice;  // k x N
  std::vector<std::vector<cplx>> points;
  /// Affine chart functional on C^N and translation offsets (k) for the
  /// trace test.
  std::vector<cplx> chart;
  std::vector<cplx> direction;
  bool certified = false;
  double trace_deviation = -1.0;
  std::uint64_t seed = 0;
  size_t paths_tracked = 0;
};

struct WitnessOptions {
  TrackerConfig tracker;
  int threads = 0;
  /// Monodromy edges between the two slice nodes at the start; one more is
  /// added whenever the work queue empties without certification.
  int initial_edges = 2;
  int max_edges = 10;
  size_t max_paths = 5'000'000;
  double trace_tol = 1e-6;
  double dedup_tol = 1e-8;
  std::function<void(const std::string&)> log;
};

/// Slice through the image of a random point, then monodromy and the trace
/// test. Returns an uncertified set when the budget runs out.
PseudoWitnessSet build_witness_set(std::shared_ptr<const Parametrization> param, std::uint64_t seed,
                                   const WitnessOptions& opts = {});

/// Monodromy population of `pws` starting from its current points (at least
/// one). Updates points, certified, trace_deviation and paths_tracked.
void monodromy_populate(PseudoWitnessSet& pws, std::uint64_t seed, const WitnessOptions& opts = {});

/// Chart coordinates of each witness point's image at slice offsets 0, +1, -1.
struct TraceData {
  std::vector<std::vector<cplx>> at_zero, at_plus, at_minus;
  std::vector<bool> ok;
};

TraceData trace_data(const PseudoWitnessSet& pws, const TrackerConfig& tracker, int threads = 0);

/// ||S(+1) - 2 S(0) + S(-1)|| / sum ||z(0)|| over the chosen points; infinity
/// when any chosen point failed to track.
double trace_deviation(const TraceData& data, const std::vector<size_t>& subset);

struct TraceResult {
  bool passed = false;
  bool inconclusive = false;
  double deviation = 0.0;
};

TraceResult trace_test(const PseudoWitnessSet& pws, const WitnessOptions& opts = {});

/// Tracks every witness point to the target slice (k rows). Endpoints in
/// witness order.
std::vector<TrackedEndpoint> move_to_slice(const PseudoWitnessSet& pws, const CMatrix& target,
                                           std::uint64_t seed, const WitnessOptions& opts = {});

/// Number of witness points; throws kUncertified unless certified.
size_t degree(const PseudoWitnessSet& pws);

/// Relative distance ||p - q|| / max(1, ||p||).
double point_distance(std::span<const cplx> p, std::span<const cplx> q);

}  // namespace trifocal
