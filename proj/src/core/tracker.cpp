#include "core/tracker.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "core/rng.hpp"

namespace trifocal {

StraightLineHomotopy::StraightLineHomotopy(const SquareSystem& start, const SquareSystem& target, cplx gamma)
    : start_(start), target_(target), gamma_(gamma) {
  if (start.n != target.n) throw Error(ErrorCode::kInvalidArgument, "start and target systems differ in size");
}

void StraightLineHomotopy::evaluate(std::span<const cplx> z, cplx s, std::span<cplx> h, std::span<cplx> hz,
                                    std::span<cplx> hs) const {
  const size_t n = static_cast<size_t>(start_.n);
  std::vector<cplx> f0(n), f1(n), j0(hz.empty() ? 0 : n * n), j1(hz.empty() ? 0 : n * n);
  start_.evaluate(z, f0, j0);
  target_.evaluate(z, f1, j1);
  const cplx a = gamma_ * s;
  const cplx b = 1.0 - s;
  for (size_t i = 0; i < n; ++i) h[i] = a * f0[i] + b * f1[i];
  if (!hz.empty())
    for (size_t i = 0; i < n * n; ++i) hz[i] = a * j0[i] + b * j1[i];
  if (!hs.empty())
    for (size_t i = 0; i < n; ++i) hs[i] = gamma_ * f0[i] - f1[i];
}

void TrackerConfig::validate() const {
  if (!(min_step > 0.0 && min_step <= initial_step && initial_step <= max_step && max_step <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "tracker steps must satisfy 0 < min <= initial <= max <= 1");
  if (!(newton_tol > 0.0 && refine_tol > 0.0 && divergence_radius > 0.0 && endgame_tol > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "tracker tolerances must be positive");
  if (max_newton_iterations < 1 || max_steps < 1 || refine_iterations < 1)
    throw Error(ErrorCode::kInvalidArgument, "tracker iteration budgets must be positive");
  if (!(endgame_radius >= 0.0 && endgame_radius < 1.0) || loop_samples < 3 || max_winding < 1)
    throw Error(ErrorCode::kInvalidArgument, "endgame needs 0 <= radius < 1, >= 3 samples and winding >= 1");
  if (std::abs(std::abs(gamma) - 1.0) > 1e-12) throw Error(ErrorCode::kInvalidArgument, "gamma must have modulus 1");
}

std::string_view status_name(PathStatus s) {
  switch (s) {
    case PathStatus::kSuccess: return "success";
    case PathStatus::kDiverged: return "diverged";
    case PathStatus::kStepLimit: return "step-limit";
    case PathStatus::kSingular: return "singular";
    case PathStatus::kSingularEndpoint: return "singular-endpoint";
  }
  return "?";
}

namespace {

class Workspace {
public:
  explicit Workspace(int n)
      : n_(n), h(n), hz(static_cast<size_t>(n) * n), hs(n), rhs(n), k1(n), k2(n), k3(n), k4(n), tmp(n), trial(n) {}

  // dz/ds at (z, s); false when H_z is numerically singular.
  bool tangent(const Homotopy& hom, std::span<const cplx> z, cplx s, std::span<cplx> out) {
    hom.evaluate(z, s, h, hz, hs);
    for (int i = 0; i < n_; ++i) out[i] = -hs[i];
    return lu_solve_inplace(hz, n_, out);
  }

  // Newton step at (z, s): writes dz, returns false on a singular Jacobian.
  bool newton_step(const Homotopy& hom, std::span<const cplx> z, cplx s, std::span<cplx> dz) {
    hom.evaluate(z, s, h, hz, {});
    for (int i = 0; i < n_; ++i) dz[i] = -h[i];
    return lu_solve_inplace(hz, n_, dz);
  }

  int n_;
  std::vector<cplx> h, hz, hs, rhs, k1, k2, k3, k4, tmp, trial;
};

bool all_finite(std::span<const cplx> v) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

double relative_distance(std::span<const cplx> a, std::span<const cplx> b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += std::norm(a[i] - b[i]);
  return std::sqrt(d) / (1.0 + norm2(b));
}

enum class Correction { kConverged, kNotConverged, kSingular };

Correction correct(const Homotopy& hom, Workspace& ws, std::vector<cplx>& z, cplx s, const TrackerConfig& cfg,
                   int& iterations) {
  std::vector<cplx>& dz = ws.rhs;
  double prev = 0.0;
  for (iterations = 1; iterations <= cfg.max_newton_iterations; ++iterations) {
    if (!ws.newton_step(hom, z, s, dz) || !all_finite(dz)) return Correction::kSingular;
    const double d = norm2(dz);
    for (size_t i = 0; i < z.size(); ++i) z[i] += dz[i];
    if (d <= cfg.newton_tol * (1.0 + norm2(z))) return Correction::kConverged;
    if (iterations > 1 && d > 0.5 * prev) return Correction::kSingular;
    prev = d;
  }
  iterations = cfg.max_newton_iterations;
  return Correction::kNotConverged;
}

enum class Leg { kDone, kDiverged, kStepLimit, kSingular };

constexpr double kSmallestEndgameRadius = 1e-10;
constexpr double kLargestFinalMove = 1e-2;

struct LegState {
  double step = 0.0;
  int steps = 0;
  cplx s_reached{};
};

// Tracks z along the segment from s = a to s = b. The step is a length in
// the s-plane and carries over between legs.
Leg track_leg(const Homotopy& hom, Workspace& ws, std::vector<cplx>& z, cplx a, cplx b, const TrackerConfig& cfg,
              LegState& st) {
  const int n = static_cast<int>(z.size());
  const double len = std::abs(b - a);
  double t = 0.0;
  int easy_streak = 0;
  bool last_failure_singular = false;
  st.s_reached = a;
  while (t < 1.0) {
    if (st.steps >= cfg.max_steps) return Leg::kStepLimit;
    const cplx s = a + t * (b - a);
    // Approaching the origin, steps shrink with |s| so that paths growing
    // like a negative power of s are not carried onto another branch.
    double h = st.step;
    if (b != 0.0 && std::abs(b) < std::abs(s)) h = std::min(h, 0.5 * std::abs(s));
    const double dt = std::min(h / len, 1.0 - t);
    const double t_new = (dt >= 1.0 - t) ? 1.0 : t + dt;
    const cplx s_new = t_new == 1.0 ? b : a + t_new * (b - a);
    const cplx ds = s_new - s;

    // Runge-Kutta 4 predictor.
    bool ok = ws.tangent(hom, z, s, ws.k1);
    if (ok) {
      for (int i = 0; i < n; ++i) ws.tmp[i] = z[i] + 0.5 * ds * ws.k1[i];
      ok = ws.tangent(hom, ws.tmp, s + 0.5 * ds, ws.k2);
    }
    if (ok) {
      for (int i = 0; i < n; ++i) ws.tmp[i] = z[i] + 0.5 * ds * ws.k2[i];
      ok = ws.tangent(hom, ws.tmp, s + 0.5 * ds, ws.k3);
    }
    if (ok) {
      for (int i = 0; i < n; ++i) ws.tmp[i] = z[i] + ds * ws.k3[i];
      ok = ws.tangent(hom, ws.tmp, s_new, ws.k4);
    }
    Correction result = Correction::kSingular;
    int iterations = 0;
    if (ok) {
      for (int i = 0; i < n; ++i)
        ws.trial[i] = z[i] + ds / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
      if (all_finite(ws.trial)) result = correct(hom, ws, ws.trial, s_new, cfg, iterations);
    }

    if (result == Correction::kConverged) {
      z.swap(ws.trial);
      t = t_new;
      st.s_reached = s_new;
      ++st.steps;
      last_failure_singular = false;
      if (norm2(z) > cfg.divergence_radius) return Leg::kDiverged;
      if (iterations <= 2) {
        if (++easy_streak >= 2) {
          st.step = std::min(2.0 * st.step, cfg.max_step);
          easy_streak = 0;
        }
      } else {
        easy_streak = 0;
      }
    } else {
      last_failure_singular = result == Correction::kSingular;
      easy_streak = 0;
      st.step = 0.5 * h;
      if (st.step < cfg.min_step) return last_failure_singular ? Leg::kSingular : Leg::kStepLimit;
    }
  }
  return Leg::kDone;
}

PathStatus leg_status(Leg leg) {
  switch (leg) {
    case Leg::kDiverged: return PathStatus::kDiverged;
    case Leg::kSingular: return PathStatus::kSingular;
    default: return PathStatus::kStepLimit;
  }
}

// Newton's method on H(., 0); true on convergence to refine_tol.
bool refine_at_zero(const Homotopy& hom, Workspace& ws, std::vector<cplx>& z, const TrackerConfig& cfg,
                    TrackedEndpoint& out) {
  double prev = 0.0;
  bool converged = false;
  std::vector<cplx>& dz = ws.rhs;
  for (int it = 0; it < cfg.refine_iterations; ++it) {
    if (!ws.newton_step(hom, z, 0.0, dz) || !all_finite(dz)) break;
    const double d = norm2(dz);
    for (size_t i = 0; i < z.size(); ++i) z[i] += dz[i];
    out.residual = d / (1.0 + norm2(z));
    if (prev > 0.0) out.contraction = d / prev;
    prev = d;
    if (out.residual <= cfg.refine_tol) {
      converged = true;
      // One more step when cheap convergence is still improving.
      if (out.residual > 1e-3 * cfg.refine_tol && it + 1 < cfg.refine_iterations) continue;
      break;
    }
  }
  return converged && all_finite(z);
}

// ||H(z, 0)|| / (||H_z(z, 0)|| (1 + ||z||))
double scaled_residual(const Homotopy& hom, Workspace& ws, std::span<const cplx> z) {
  hom.evaluate(z, 0.0, ws.h, ws.hz, {});
  const double scale = norm2(ws.hz) * (1.0 + norm2(z));
  return scale > 0.0 ? norm2(ws.h) / scale : std::numeric_limits<double>::infinity();
}

// Mean of z over polygon loops of the given radius around s = 0, starting
// at s = radius. Returns false when a leg fails or the path does not close.
bool cauchy_estimate(const Homotopy& hom, Workspace& ws, std::vector<cplx> z, double radius, const TrackerConfig& cfg,
                     LegState& st, std::vector<cplx>& mean, int& winding) {
  const std::vector<cplx> start = z;
  std::vector<cplx> sum(z.size());
  const int m = cfg.loop_samples;
  const double close_tol = 100.0 * cfg.newton_tol;
  double largest = 0.0;
  st.step = std::min(cfg.max_step, 2.0 * radius * std::sin(M_PI / m));
  for (int c = 1; c <= cfg.max_winding; ++c) {
    for (int k = 0; k < m; ++k) {
      for (size_t i = 0; i < z.size(); ++i) sum[i] += z[i];
      largest = std::max(largest, norm2(z));
      const cplx a = std::polar(radius, 2.0 * M_PI * k / m);
      const cplx b = k + 1 == m ? cplx(radius) : std::polar(radius, 2.0 * M_PI * (k + 1) / m);
      if (track_leg(hom, ws, z, a, b, cfg, st) != Leg::kDone) return false;
    }
    if (relative_distance(z, start) <= close_tol) {
      mean.resize(z.size());
      for (size_t i = 0; i < z.size(); ++i) mean[i] = sum[i] / static_cast<double>(c * m);
      winding = c;
      // The mean of a path going to infinity is a Laurent coefficient, not
      // an endpoint.
      return largest <= 10.0 * (1.0 + norm2(mean));
    }
  }
  return false;
}

TrackedEndpoint endgame(const Homotopy& hom, Workspace& ws, const std::vector<cplx>& checkpoint,
                        const TrackerConfig& cfg, LegState& st, TrackedEndpoint out) {
  // Estimates at radii r, r/4, r/16, ... until two consecutive ones agree
  // with the same winding number.
  std::vector<cplx> z = checkpoint, previous, current;
  int w_previous = 0, w_current = 0;
  bool have_previous = false;
  double disagreement = std::numeric_limits<double>::infinity();
  bool agreed = false;
  for (double r = cfg.endgame_radius; r >= kSmallestEndgameRadius; r *= 0.25) {
    if (cauchy_estimate(hom, ws, z, r, cfg, st, current, w_current)) {
      if (have_previous && w_current == w_previous) {
        disagreement = relative_distance(previous, current);
        // A loop that also encloses a nearby branch point averages two
        // endpoints; such a mean does not solve the target system.
        if (disagreement <= cfg.endgame_tol && scaled_residual(hom, ws, current) <= cfg.endgame_tol) {
          agreed = true;
          break;
        }
      }
      previous.swap(current);
      w_previous = w_current;
      have_previous = true;
    } else {
      have_previous = false;
    }
    st.step = std::min(cfg.max_step, 0.75 * r);
    if (track_leg(hom, ws, z, r, 0.25 * r, cfg, st) != Leg::kDone) break;
  }
  out.steps = st.steps;
  if (!agreed) return out;
  std::vector<cplx>& inner = current;
  out.winding = w_current;

  // A path that was merely hard near s = 0 ends at a regular solution.
  std::vector<cplx> refined = inner;
  TrackedEndpoint reg = out;
  if (refine_at_zero(hom, ws, refined, cfg, reg) && reg.contraction < 0.2) {
    reg.status = PathStatus::kSuccess;
    reg.point = std::move(refined);
    reg.s_final = 0.0;
    hom.evaluate(reg.point, 0.0, ws.h, {}, {});
    reg.function_norm = norm2(ws.h);
    return reg;
  }
  out.status = PathStatus::kSingularEndpoint;
  out.point = std::move(inner);
  out.residual = disagreement;
  out.contraction = 0.0;
  out.s_final = 0.0;
  hom.evaluate(out.point, 0.0, ws.h, {}, {});
  out.function_norm = norm2(ws.h);
  return out;
}

}  // namespace

TrackedEndpoint track_path(const Homotopy& hom, std::span<const cplx> start_point, const TrackerConfig& cfg) {
  cfg.validate();
  const int n = hom.dimension();
  if (static_cast<int>(start_point.size()) != n)
    throw Error(ErrorCode::kInvalidArgument, "start point has the wrong dimension");
  Workspace ws(n);
  TrackedEndpoint out;
  std::vector<cplx> z(start_point.begin(), start_point.end());
  LegState st;
  st.step = cfg.initial_step;
  auto stop = [&](Leg leg) {
    out.status = leg_status(leg);
    out.point = z;
    out.steps = st.steps;
    out.s_final = std::abs(st.s_reached);
    return out;
  };

  const bool use_endgame = cfg.endgame_radius > 0.0;
  const double mid = use_endgame ? cfg.endgame_radius : 0.0;
  if (Leg leg = track_leg(hom, ws, z, 1.0, mid, cfg, st); leg != Leg::kDone) return stop(leg);
  const std::vector<cplx> checkpoint = z;
  Leg last = Leg::kDone;
  if (use_endgame) {
    last = track_leg(hom, ws, z, mid, 0.0, cfg, st);
    // A regular path barely moves over the last leg; a large jump means the
    // corrector landed on another branch.
    if (last == Leg::kDone && relative_distance(z, checkpoint) > kLargestFinalMove) {
      out.status = PathStatus::kSingular;
      out.point = checkpoint;
      out.steps = st.steps;
      out.s_final = mid;
      return endgame(hom, ws, checkpoint, cfg, st, out);
    }
  }

  if (last == Leg::kDone) {
    out.s_final = 0.0;
    const bool converged = refine_at_zero(hom, ws, z, cfg, out);
    hom.evaluate(z, 0.0, ws.h, {}, {});
    out.function_norm = norm2(ws.h);
    out.point = z;
    out.steps = st.steps;
    if (converged) {
      out.status = PathStatus::kSuccess;
      return out;
    }
    out.status = norm2(z) > cfg.divergence_radius ? PathStatus::kDiverged : PathStatus::kSingular;
  } else {
    stop(last);
  }
  if (!use_endgame || out.status == PathStatus::kDiverged) return out;
  return endgame(hom, ws, checkpoint, cfg, st, out);
}

TrackedEndpoint track_path(const SquareSystem& start, const SquareSystem& target, std::span<const cplx> start_point,
                           const TrackerConfig& cfg) {
  StraightLineHomotopy h(start, target, cfg.gamma);
  return track_path(h, start_point, cfg);
}

NewtonResult newton_refine(const SquareSystem& sys, std::span<const cplx> point, double tol, int max_iters) {
  const int n = sys.n;
  NewtonResult res;
  res.point.assign(point.begin(), point.end());
  std::vector<cplx> f(n), jac(static_cast<size_t>(n) * n);
  double prev = 0.0;
  std::vector<double> corrections;
  for (int it = 0; it < max_iters; ++it) {
    sys.evaluate(res.point, f, jac);
    res.function_norm = norm2(f);
    if (res.function_norm == 0.0) {
      res.residual = 0.0;
      res.converged = true;
      break;
    }
    for (int i = 0; i < n; ++i) f[i] = -f[i];
    if (!lu_solve_inplace(jac, n, f) || !all_finite(f)) {
      res.converged = false;
      res.quadratic = false;
      return res;
    }
    const double d = norm2(f);
    for (int i = 0; i < n; ++i) res.point[i] += f[i];
    res.iterations = it + 1;
    res.residual = d / (1.0 + norm2(res.point));
    if (prev > 0.0) res.contraction = d / prev;
    corrections.push_back(d);
    prev = d;
    if (res.residual <= tol) {
      res.converged = true;
      break;
    }
  }
  sys.evaluate(res.point, f, {});
  res.function_norm = norm2(f);
  // Quadratic convergence squeezes successive ratios to zero; at a multiple
  // root they settle near a constant (1/2 for a double root).
  if (corrections.size() >= 3) {
    const size_t m = corrections.size();
    const double r1 = corrections[m - 2] / corrections[m - 3];
    const double r2 = corrections[m - 1] / corrections[m - 2];
    res.quadratic = !(r1 > 0.2 && r2 > 0.2);
  }
  return res;
}

void parallel_for(size_t count, int threads, const std::function<void(size_t)>& fn) {
  int width = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  width = static_cast<int>(std::min<size_t>(static_cast<size_t>(width), std::max<size_t>(count, 1)));
  if (width <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < width; ++t)
    pool.emplace_back([&] {
      for (size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<TrackedEndpoint> track_all(const Homotopy& h, const std::vector<std::vector<cplx>>& starts,
                                       const TrackerConfig& cfg, int threads) {
  std::vector<TrackedEndpoint> out(starts.size());
  TrackerConfig careful = cfg;
  careful.max_step = std::max(cfg.min_step, cfg.max_step / 10.0);
  careful.initial_step = std::clamp(cfg.initial_step / 10.0, careful.min_step, careful.max_step);
  parallel_for(starts.size(), threads, [&](size_t i) {
    out[i] = track_path(h, starts[i], cfg);
    if (!out[i].reached()) {
      TrackedEndpoint retry = track_path(h, starts[i], careful);
      retry.steps += out[i].steps;
      if (retry.reached()) out[i] = std::move(retry);
    }
  });
  return out;
}

std::vector<TrackedEndpoint> total_degree_solve(const SquareSystem& sys, const std::vector<int>& degrees,
                                                const TrackerConfig& cfg, std::uint64_t seed, int threads) {
  const int n = sys.n;
  if (static_cast<int>(degrees.size()) != n) throw Error(ErrorCode::kInvalidArgument, "one degree per equation");
  size_t paths = 1;
  for (int d : degrees) {
    if (d < 1) throw Error(ErrorCode::kInvalidArgument, "degrees must be positive");
    paths *= static_cast<size_t>(d);
  }
  SquareSystem start;
  start.n = n;
  start.description = "total degree start system";
  start.evaluate = [degrees, n](std::span<const cplx> z, std::span<cplx> f, std::span<cplx> jac) {
    if (!jac.empty()) std::fill(jac.begin(), jac.end(), cplx{});
    for (int i = 0; i < n; ++i) {
      const cplx p = std::pow(z[i], degrees[i] - 1);
      f[i] = p * z[i] - 1.0;
      if (!jac.empty()) jac[static_cast<size_t>(i) * n + i] = static_cast<double>(degrees[i]) * p;
    }
  };
  std::vector<std::vector<cplx>> starts(paths, std::vector<cplx>(n));
  for (size_t p = 0; p < paths; ++p) {
    size_t rest = p;
    for (int i = 0; i < n; ++i) {
      const int d = degrees[i];
      const size_t k = rest % static_cast<size_t>(d);
      rest /= static_cast<size_t>(d);
      starts[p][i] = std::polar(1.0, 2.0 * M_PI * static_cast<double>(k) / d);
    }
  }
  TrackerConfig c = cfg;
  Rng rng(seed);
  c.gamma = rng.unit_phase();
  StraightLineHomotopy h(start, sys, c.gamma);
  return track_all(h, starts, c, threads);
}

}  // namespace trifocal
