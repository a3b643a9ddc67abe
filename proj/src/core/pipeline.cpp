#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace trifocal {

ConsistencyTolerances FilterTolerances::consistency() const {
  ConsistencyTolerances c;
  c.rank_ratio = rank_ratio;
  c.relative_singular_value = relative_singular_value;
  c.scalar = scalar;
  c.epipole = epipole;
  return c;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kFinite: return "finite";
    case Stage::kMembership: return "membership";
    case Stage::kPhysical: return "physical";
    case Stage::kCenters: return "centers";
    case Stage::kMultiview: return "multiview";
    case Stage::kEpipoles: return "epipoles";
    case Stage::kDistinct: return "distinct";
    case Stage::kAccepted: return "accepted";
  }
  return "?";
}

namespace {

double quaternion_physicality(const Vec4& q) {
  cplx s{};
  double n = 0.0;
  for (const auto& z : q) {
    s += z * z;
    n += std::norm(z);
  }
  return n > 0.0 ? std::abs(s) / n : 0.0;
}

double membership_residual(const LinearSlice& special, const TrifocalTensor& t) {
  const double tn = t.norm();
  if (!(tn > 0.0)) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (int r = 0; r < special.rows.rows(); ++r) {
    const auto row = special.rows.row(r);
    const double rn = norm2(row);
    if (rn == 0.0) continue;
    worst = std::max(worst, std::abs(dot(row, t.span())) / (rn * tn));
  }
  return worst;
}

bool independent_centers(const std::array<Camera, 3>& cams, const FilterTolerances& tol) {
  CMatrix centers(4, 3);
  for (int c = 0; c < 3; ++c) {
    Vec4 x;
    try {
      x = camera_center(cams[c]);
    } catch (const Error&) {
      return false;
    }
    for (int r = 0; r < 4; ++r) centers(r, c) = x[r];
  }
  return numerical_rank(centers, tol.rank_ratio) == 3;
}

bool multiview_ok(const std::array<Camera, 3>& cams, const Instance& instance, const FilterTolerances& tol,
                  double& worst) {
  bool ok = true;
  worst = 0.0;
  for (const auto& c : instance) {
    const auto res = multiview_residual(cams[0], cams[1], cams[2], c, tol.consistency());
    worst = std::max(worst, res.worst_relative);
    ok = ok && res.rank_drop;
  }
  return ok;
}

bool epipoles_ok(const std::array<Camera, 3>& cams, const Instance& instance, const FilterTolerances& tol) {
  try {
    for (const auto& c : instance)
      if (!avoids_epipoles(cams[0], cams[1], cams[2], c, tol.epipole)) return false;
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace

SolutionRecord make_record(std::span<const cplx> params) {
  SolutionRecord rec;
  std::copy(params.begin(), params.end(), rec.params.begin());
  const auto cfg = CalibratedConfiguration::from_params(params);
  rec.cameras = {cfg.camera_a(), cfg.camera_b(), cfg.camera_c()};
  rec.tensor = phi(cfg);
  try {
    rec.normalized = normalize_configuration(cfg);
    rec.is_real = classify_real(rec);
  } catch (const Error&) {
    rec.is_real = false;
  }
  return rec;
}

bool classify_real(const SolutionRecord& rec, double tol) {
  for (const auto& z : rec.normalized.coordinates())
    if (std::abs(z.imag()) > tol) return false;
  return true;
}

SolveResult solve_instance(const PseudoWitnessSet& pws, const Instance& instance, std::uint64_t seed,
                           const SolveOptions& opts) {
  if (!pws.certified) throw Error(ErrorCode::kUncertified, "witness set is not trace-certified");
  if (pws.param->ambient() != 27 || pws.param->slice_rows() != 11)
    throw Error(ErrorCode::kInvalidArgument, "solving needs a witness set of the calibrated trifocal variety");
  const LinearSlice special = assemble_special_slice(instance);
  const FilterTolerances& tol = opts.tol;

  std::vector<TrackedEndpoint> endpoints;
  size_t failed = 0;
  int attempt = 0;
  for (;; ++attempt) {
    if (attempt >= std::max(1, opts.max_attempts))
      throw Error(ErrorCode::kUnreliable, std::to_string(failed) + " of " + std::to_string(endpoints.size()) +
                                              " paths failed after " + std::to_string(attempt) + " attempts");
    Rng rng(child_seed(seed, 2 * static_cast<std::uint64_t>(attempt)));
    const LinearSlice target = randomize_slice(special, rng);
    endpoints = move_to_slice(pws, target.rows, child_seed(seed, 2 * static_cast<std::uint64_t>(attempt) + 1),
                              opts.witness);
    failed = static_cast<size_t>(std::count_if(endpoints.begin(), endpoints.end(),
                                               [](const TrackedEndpoint& e) { return !e.reached(); }));
    if (opts.witness.log)
      for (size_t i = 0; i < endpoints.size(); ++i) {
        const TrackedEndpoint& e = endpoints[i];
        char line[160];
        std::snprintf(line, sizeof line, "path\t%d\t%zu\t%s\t%d\t%.3e\t%.3e", attempt, i,
                      std::string(status_name(e.status)).c_str(), e.steps, e.s_final, e.residual);
        opts.witness.log(line);
      }
    if (static_cast<double>(failed) <= tol.failure_budget * static_cast<double>(endpoints.size())) break;
  }

  SolveResult out;
  out.weights = instance_weights(instance);
  FilterReport& rep = out.report;
  rep.paths = endpoints.size();
  rep.failed_paths = failed;
  rep.attempts = attempt + 1;
  rep.verdicts.assign(endpoints.size(), Stage::kFinite);

  std::vector<SolutionRecord> candidates(endpoints.size());
  parallel_for(endpoints.size(), opts.witness.threads, [&](size_t i) {
    const TrackedEndpoint& e = endpoints[i];
    if (!e.reached()) return;
    SolutionRecord rec = make_record(e.point);
    rec.membership_residual = membership_residual(special, rec.tensor);
    Stage verdict = Stage::kMembership;
    if (rec.membership_residual <= tol.membership) {
      verdict = Stage::kPhysical;
      const auto cfg = CalibratedConfiguration::from_params(e.point);
      if (quaternion_physicality(cfg.q2) >= tol.physical && quaternion_physicality(cfg.q3) >= tol.physical) {
        verdict = Stage::kCenters;
        if (independent_centers(rec.cameras, tol)) {
          verdict = Stage::kMultiview;
          if (multiview_ok(rec.cameras, instance, tol, rec.worst_multiview)) {
            verdict = Stage::kEpipoles;
            if (epipoles_ok(rec.cameras, instance, tol)) verdict = Stage::kDistinct;
          }
        }
      }
    }
    rep.verdicts[i] = verdict;
    candidates[i] = std::move(rec);
  });

  for (size_t i = 0; i < endpoints.size(); ++i) {
    if (rep.verdicts[i] != Stage::kDistinct) continue;
    bool duplicate = false;
    for (const auto& s : out.solutions)
      if (point_distance(s.params, candidates[i].params) <= tol.dedup) {
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    rep.verdicts[i] = Stage::kAccepted;
    out.solutions.push_back(std::move(candidates[i]));
  }
  for (Stage v : rep.verdicts)
    for (int s = 0; s < kStageCount; ++s)
      if (static_cast<int>(v) > s) ++rep.counts[s];
  return out;
}

ProblemRun solve_problem(const PseudoWitnessSet& pws, const ProblemWeights& w, std::uint64_t seed,
                         const SolveOptions& opts) {
  if (!w.is_minimal()) throw Error(ErrorCode::kInvalidArgument, "not a minimal problem: " + w.label());
  ProblemRun run;
  run.weights = w;
  run.seed = seed;
  run.expected = expected_degree(w);
  // Resample the data when a draw happens to be degenerate.
  for (std::uint64_t draw = 0;; ++draw) {
    run.instance = random_instance(w, child_seed(seed, 100 + draw));
    try {
      assemble_special_slice(run.instance);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate || draw >= 99) throw;
    }
  }
  run.result = solve_instance(pws, run.instance, child_seed(seed, 1), opts);
  run.degree = static_cast<int>(run.result.solutions.size());
  return run;
}

std::string Verification::failed_check() const {
  if (!physical) return "physical";
  if (!centers) return "centers";
  if (!multiview) return "multiview";
  if (!epipoles) return "epipoles";
  return "";
}

Verification verify_solution(const SolutionRecord& rec, const Instance& instance, const FilterTolerances& tol) {
  const auto cfg = CalibratedConfiguration::from_params(rec.params);
  const std::array<Camera, 3> cams = {cfg.camera_a(), cfg.camera_b(), cfg.camera_c()};
  Verification v;
  v.physical = quaternion_physicality(cfg.q2) >= tol.physical && quaternion_physicality(cfg.q3) >= tol.physical;
  v.centers = independent_centers(cams, tol);
  v.multiview = multiview_ok(cams, instance, tol, v.worst_multiview);
  v.epipoles = epipoles_ok(cams, instance, tol);
  return v;
}

Verification verify_cameras(const std::array<Camera, 3>& cams, const Instance& instance,
                            const FilterTolerances& tol) {
  Verification v;
  v.physical = std::all_of(cams.begin(), cams.end(), [&](const Camera& c) { return c.is_calibrated(tol.calibration); });
  v.centers = independent_centers(cams, tol);
  v.multiview = multiview_ok(cams, instance, tol, v.worst_multiview);
  v.epipoles = epipoles_ok(cams, instance, tol);
  return v;
}

}  // namespace trifocal
