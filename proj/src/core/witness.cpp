#include "core/witness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

namespace trifocal {

// ---------------------------------------------------------------------------
// Parametrizations

RationalCurve::RationalCurve(std::string name, std::vector<std::vector<double>> coefficients)
    : name_(std::move(name)), coeffs_(std::move(coefficients)) {
  if (coeffs_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "a curve needs at least two coordinates");
}

void RationalCurve::image(std::span<const cplx> p, std::span<cplx> y, std::span<cplx> jac) const {
  const cplx t = p[0];
  for (size_t i = 0; i < coeffs_.size(); ++i) {
    cplx v{}, dv{};
    for (size_t d = coeffs_[i].size(); d-- > 0;) {
      dv = dv * t + v;
      v = v * t + coeffs_[i][d];
    }
    y[i] = v;
    if (!jac.empty()) jac[i] = dv;
  }
}

std::shared_ptr<const Parametrization> twisted_cubic() {
  return std::make_shared<RationalCurve>("twisted-cubic",
                                         std::vector<std::vector<double>>{{1}, {0, 1}, {0, 0, 1}, {0, 0, 0, 1}});
}

std::shared_ptr<const Parametrization> rational_circle() {
  return std::make_shared<RationalCurve>("circle", std::vector<std::vector<double>>{{1, 0, 1}, {1, 0, -1}, {0, 2}});
}

std::shared_ptr<const Parametrization> projective_line() {
  return std::make_shared<RationalCurve>("line", std::vector<std::vector<double>>{{1}, {0, 1}});
}

std::string_view locus_name(Locus l) {
  switch (l) {
    case Locus::kCal: return "cal";
    case Locus::k01: return "01";
    case Locus::k10: return "10";
    case Locus::k00: return "00";
  }
  return "?";
}

Locus locus_from_name(std::string_view name) {
  for (Locus l : {Locus::kCal, Locus::k01, Locus::k10, Locus::k00})
    if (locus_name(l) == name) return l;
  throw Error(ErrorCode::kParse, "unknown locus '" + std::string(name) + "' (expected cal, 01, 10 or 00)");
}

namespace {

bool isotropic_first(Locus l) { return l == Locus::k01 || l == Locus::k00; }
bool isotropic_second(Locus l) { return l == Locus::k10 || l == Locus::k00; }

}  // namespace

TrifocalParametrization::TrifocalParametrization(PatchPair patches, Locus locus)
    : patches_(patches), locus_(locus) {}

std::string TrifocalParametrization::name() const { return "trifocal-" + std::string(locus_name(locus_)); }

int TrifocalParametrization::extra_equations() const {
  return 2 + (isotropic_first(locus_) ? 1 : 0) + (isotropic_second(locus_) ? 1 : 0);
}

void TrifocalParametrization::image(std::span<const cplx> p, std::span<cplx> y, std::span<cplx> jac) const {
  if (jac.empty())
    phi_eval(p, y);
  else
    phi_eval_jacobian(p, y, jac);
}

void TrifocalParametrization::extras(std::span<const cplx> p, std::span<cplx> values, std::span<cplx> jac) const {
  if (!jac.empty()) std::fill(jac.begin(), jac.end(), cplx{});
  int row = 0;
  auto linear = [&](const Vec4& coeff, int offset) {
    cplx v = -1.0;
    for (int i = 0; i < 4; ++i) {
      v += coeff[i] * p[offset + i];
      if (!jac.empty()) jac[static_cast<size_t>(row) * 13 + offset + i] = coeff[i];
    }
    values[row++] = v;
  };
  auto quadric = [&](int offset) {
    cplx v{};
    for (int i = 0; i < 4; ++i) {
      v += p[offset + i] * p[offset + i];
      if (!jac.empty()) jac[static_cast<size_t>(row) * 13 + offset + i] = 2.0 * p[offset + i];
    }
    values[row++] = v;
  };
  linear(patches_.alpha, 0);
  linear(patches_.beta, 4);
  if (isotropic_first(locus_)) quadric(0);
  if (isotropic_second(locus_)) quadric(4);
}

std::vector<cplx> TrifocalParametrization::random_point(Rng& rng) const {
  auto quaternion = [&](bool isotropic, const Vec4& patch) {
    Vec4 q = rng.gaussian_array<4>();
    if (isotropic) q[3] = cplx(0.0, 1.0) * std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    cplx s{};
    for (int i = 0; i < 4; ++i) s += patch[i] * q[i];
    for (auto& z : q) z /= s;
    return q;
  };
  const Vec4 q2 = quaternion(isotropic_first(locus_), patches_.alpha);
  const Vec4 q3 = quaternion(isotropic_second(locus_), patches_.beta);
  std::vector<cplx> p(q2.begin(), q2.end());
  p.insert(p.end(), q3.begin(), q3.end());
  for (int i = 0; i < 5; ++i) p.push_back(rng.gaussian());
  return p;
}

PatchPair random_patches(Rng& rng) {
  PatchPair pp;
  pp.alpha = rng.gaussian_array<4>();
  pp.beta = rng.gaussian_array<4>();
  return pp;
}

// ---------------------------------------------------------------------------
// Homotopies

SliceHomotopy::SliceHomotopy(const Parametrization& param, const CMatrix& start_slice, const CMatrix& target_slice,
                             cplx gamma)
    : param_(param), target_(target_slice), delta_(start_slice * gamma - target_slice) {
  const int k = param.slice_rows();
  if (start_slice.rows() != k || target_slice.rows() != k || start_slice.cols() != param.ambient() ||
      target_slice.cols() != param.ambient())
    throw Error(ErrorCode::kInvalidArgument, "slice shape does not match the parametrization");
}

void SliceHomotopy::evaluate(std::span<const cplx> z, cplx s, std::span<cplx> h, std::span<cplx> hz,
                             std::span<cplx> hs) const {
  const int n = param_.parameters();
  const int big_n = param_.ambient();
  const int k = param_.slice_rows();
  const int e = param_.extra_equations();
  thread_local std::vector<cplx> y, jac, ms;
  y.resize(big_n);
  ms.resize(static_cast<size_t>(k) * big_n);
  if (!hz.empty()) jac.resize(static_cast<size_t>(big_n) * n);
  param_.image(z, y, hz.empty() ? std::span<cplx>{} : std::span<cplx>(jac));

  const auto& t = target_.data();
  const auto& d = delta_.data();
  for (size_t i = 0; i < ms.size(); ++i) ms[i] = t[i] + s * d[i];
  for (int m = 0; m < k; ++m) {
    const cplx* row = &ms[static_cast<size_t>(m) * big_n];
    cplx acc{};
    for (int a = 0; a < big_n; ++a) acc += row[a] * y[a];
    h[m] = acc;
    if (!hs.empty()) {
      const cplx* drow = &d[static_cast<size_t>(m) * big_n];
      cplx ds{};
      for (int a = 0; a < big_n; ++a) ds += drow[a] * y[a];
      hs[m] = ds;
    }
    if (!hz.empty()) {
      cplx* out = &hz[static_cast<size_t>(m) * n];
      std::fill(out, out + n, cplx{});
      for (int a = 0; a < big_n; ++a) {
        const cplx c = row[a];
        const cplx* jrow = &jac[static_cast<size_t>(a) * n];
        for (int col = 0; col < n; ++col) out[col] += c * jrow[col];
      }
    }
  }
  if (e > 0) {
    param_.extras(z, h.subspan(k, e), hz.empty() ? std::span<cplx>{} : hz.subspan(static_cast<size_t>(k) * n));
    if (!hs.empty()) std::fill(hs.begin() + k, hs.begin() + k + e, cplx{});
  }
}

SquareSystem sliced_system(std::shared_ptr<const Parametrization> param, const CMatrix& slice) {
  SquareSystem sys;
  sys.n = param->parameters();
  sys.description = param->name() + " sliced system";
  auto h = std::make_shared<SliceHomotopy>(*param, slice, slice, cplx(1.0));
  sys.evaluate = [param, h](std::span<const cplx> z, std::span<cplx> f, std::span<cplx> jac) {
    h->evaluate(z, 0.0, f, jac, {});
  };
  return sys;
}

double point_distance(std::span<const cplx> p, std::span<const cplx> q) {
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) d += std::norm(p[i] - q[i]);
  return std::sqrt(d) / std::max(1.0, norm2(p));
}

// ---------------------------------------------------------------------------
// Monodromy

namespace {

// Point set with near-duplicate detection through a sorted random projection.
class PointSet {
public:
  PointSet(int dim, double tol, Rng& rng) : tol_(tol), w_(dim) {
    for (auto& z : w_) z = rng.gaussian();
    wnorm_ = norm2(w_);
  }

  // Index of the inserted point, or -1 when it duplicates a stored one.
  long insert(const std::vector<cplx>& p) {
    const double key = std::real(dot(w_, p));
    const double window = 2.0 * wnorm_ * tol_ * std::max(1.0, norm2(p));
    for (auto it = index_.lower_bound(key - window); it != index_.end() && it->first <= key + window; ++it)
      if (point_distance(points_[it->second], p) < tol_ || point_distance(p, points_[it->second]) < tol_) return -1;
    points_.push_back(p);
    index_.emplace(key, points_.size() - 1);
    return static_cast<long>(points_.size() - 1);
  }

  const std::vector<std::vector<cplx>>& points() const { return points_; }
  size_t size() const { return points_.size(); }

private:
  double tol_;
  std::vector<cplx> w_;
  double wnorm_;
  std::vector<std::vector<cplx>> points_;
  std::multimap<double, size_t> index_;
};

CMatrix translated_slice(const PseudoWitnessSet& pws, double t) {
  // M - t v phi^T: in the chart y / phi(y) the slice becomes M z = t v.
  CMatrix m = pws.slice;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) m(r, c) -= t * pws.direction[r] * pws.chart[c];
  return m;
}

std::vector<cplx> chart_coordinates(const Parametrization& param, const std::vector<cplx>& chart,
                                    std::span<const cplx> p) {
  std::vector<cplx> y(param.ambient());
  param.image(p, y, {});
  const cplx c = dot(chart, y);
  for (auto& z : y) z /= c;
  return y;
}

void emit(const WitnessOptions& opts, const std::string& msg) {
  if (opts.log) opts.log(msg);
}

// Trace legs for points [first, end) of `points`, appended to `data`.
void extend_trace_data(const PseudoWitnessSet& pws, const std::vector<std::vector<cplx>>& points, size_t first,
                       TraceData& data, const TrackerConfig& tracker, int threads, size_t& paths) {
  const Parametrization& param = *pws.param;
  const std::vector<std::vector<cplx>> starts(points.begin() + static_cast<long>(first), points.end());
  if (starts.empty()) return;
  // A real segment in a generic complex pencil avoids the finitely many
  // branch points, so no gamma twist is needed here.
  TrackerConfig cfg = tracker;
  cfg.gamma = 1.0;
  const SliceHomotopy plus(param, pws.slice, translated_slice(pws, 1.0), 1.0);
  const SliceHomotopy minus(param, pws.slice, translated_slice(pws, -1.0), 1.0);
  const auto ep = track_all(plus, starts, cfg, threads);
  const auto em = track_all(minus, starts, cfg, threads);
  paths += 2 * starts.size();
  for (size_t i = 0; i < starts.size(); ++i) {
    const bool ok = ep[i].ok() && em[i].ok();
    data.ok.push_back(ok);
    data.at_zero.push_back(chart_coordinates(param, pws.chart, starts[i]));
    data.at_plus.push_back(ok ? chart_coordinates(param, pws.chart, ep[i].point) : std::vector<cplx>{});
    data.at_minus.push_back(ok ? chart_coordinates(param, pws.chart, em[i].point) : std::vector<cplx>{});
  }
}

std::vector<size_t> all_indices(size_t n) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

TraceData trace_data(const PseudoWitnessSet& pws, const TrackerConfig& tracker, int threads) {
  TraceData data;
  size_t paths = 0;
  extend_trace_data(pws, pws.points, 0, data, tracker, threads, paths);
  return data;
}

double trace_deviation(const TraceData& data, const std::vector<size_t>& subset) {
  if (subset.empty()) return std::numeric_limits<double>::infinity();
  const size_t n = data.at_zero.front().size();
  std::vector<cplx> second(n);
  double scale = 0.0;
  for (size_t i : subset) {
    if (!data.ok[i]) return std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < n; ++c) second[c] += data.at_plus[i][c] - 2.0 * data.at_zero[i][c] + data.at_minus[i][c];
    scale += norm2(data.at_zero[i]);
  }
  return norm2(second) / scale;
}

TraceResult trace_test(const PseudoWitnessSet& pws, const WitnessOptions& opts) {
  TraceResult r;
  if (pws.points.empty()) {
    r.inconclusive = true;
    r.deviation = std::numeric_limits<double>::infinity();
    return r;
  }
  const TraceData data = trace_data(pws, opts.tracker, opts.threads);
  r.inconclusive = std::find(data.ok.begin(), data.ok.end(), false) != data.ok.end();
  r.deviation = trace_deviation(data, all_indices(data.ok.size()));
  r.passed = !r.inconclusive && r.deviation <= opts.trace_tol;
  return r;
}

void monodromy_populate(PseudoWitnessSet& pws, std::uint64_t seed, const WitnessOptions& opts) {
  if (pws.points.empty()) throw Error(ErrorCode::kInvalidArgument, "monodromy needs at least one start point");
  const Parametrization& param = *pws.param;
  const int k = param.slice_rows();
  const int big_n = param.ambient();
  Rng rng(seed);

  CMatrix nodes[2] = {pws.slice, rng.gaussian_matrix(k, big_n)};
  PointSet sets[2] = {PointSet(param.parameters(), opts.dedup_tol, rng),
                      PointSet(param.parameters(), opts.dedup_tol, rng)};
  // Edge e runs node 0 -> node 1 with gammas[e][0] and back with gammas[e][1].
  std::vector<std::array<cplx, 2>> gammas;
  std::vector<std::array<std::unique_ptr<SliceHomotopy>, 2>> homotopies;
  struct Task {
    int node;
    size_t point;
    size_t edge;
  };
  std::deque<Task> queue;

  auto add_edge = [&]() {
    gammas.push_back({rng.unit_phase(), rng.unit_phase()});
    std::array<std::unique_ptr<SliceHomotopy>, 2> h;
    h[0] = std::make_unique<SliceHomotopy>(param, nodes[0], nodes[1], gammas.back()[0]);
    h[1] = std::make_unique<SliceHomotopy>(param, nodes[1], nodes[0], gammas.back()[1]);
    homotopies.push_back(std::move(h));
    const size_t e = gammas.size() - 1;
    for (int node = 0; node < 2; ++node)
      for (size_t i = 0; i < sets[node].size(); ++i) queue.push_back({node, i, e});
  };

  for (const auto& p : pws.points) sets[0].insert(p);
  const int first_edges = std::max(1, std::min(opts.initial_edges, opts.max_edges));
  for (int e = 0; e < first_edges; ++e) add_edge();

  TraceData trace;
  size_t traced = 0;
  size_t paths = pws.paths_tracked;
  pws.certified = false;
  pws.trace_deviation = std::numeric_limits<double>::infinity();

  auto check_trace = [&]() {
    extend_trace_data(pws, sets[0].points(), traced, trace, opts.tracker, opts.threads, paths);
    traced = sets[0].size();
    pws.trace_deviation = trace_deviation(trace, all_indices(traced));
    pws.certified = pws.trace_deviation <= opts.trace_tol;
  };

  check_trace();
  size_t round = 0;
  while (!pws.certified && paths < opts.max_paths) {
    if (queue.empty()) {
      if (static_cast<int>(gammas.size()) >= opts.max_edges) break;
      add_edge();
      emit(opts, "monodromy: added edge " + std::to_string(gammas.size()));
    }
    // Batches stay small relative to the set so certification is noticed early.
    const size_t batch = std::min(queue.size(), std::max<size_t>(64, sets[0].size() / 2));
    std::vector<Task> tasks(queue.begin(), queue.begin() + static_cast<long>(batch));
    queue.erase(queue.begin(), queue.begin() + static_cast<long>(batch));
    std::vector<TrackedEndpoint> results(tasks.size());
    parallel_for(tasks.size(), opts.threads, [&](size_t i) {
      const Task& t = tasks[i];
      const auto& start = sets[t.node].points()[t.point];
      results[i] = track_path(*homotopies[t.edge][t.node], start, opts.tracker);
    });
    paths += tasks.size();
    size_t fresh = 0;
    for (size_t i = 0; i < tasks.size(); ++i) {
      if (!results[i].ok()) continue;
      const int target = 1 - tasks[i].node;
      const long idx = sets[target].insert(results[i].point);
      if (idx < 0) continue;
      ++fresh;
      for (size_t e = 0; e < gammas.size(); ++e) queue.push_back({target, static_cast<size_t>(idx), e});
    }
    check_trace();
    ++round;
    std::ostringstream os;
    os << "monodromy round " << round << ": node sizes " << sets[0].size() << "/" << sets[1].size() << ", new "
       << fresh << ", queue " << queue.size() << ", paths " << paths << ", trace " << pws.trace_deviation;
    emit(opts, os.str());
  }
  pws.points = sets[0].points();
  pws.paths_tracked = paths;
}

PseudoWitnessSet build_witness_set(std::shared_ptr<const Parametrization> param, std::uint64_t seed,
                                   const WitnessOptions& opts) {
  Rng rng(child_seed(seed, 0));
  const int k = param->slice_rows();
  const int big_n = param->ambient();
  PseudoWitnessSet pws;
  pws.param = param;
  pws.seed = seed;

  // Slice through the image of a random point: M <- M - (M y) u^T / (u^T y).
  const std::vector<cplx> p = param->random_point(rng);
  std::vector<cplx> y(big_n);
  param->image(p, y, {});
  CMatrix m = rng.gaussian_matrix(k, big_n);
  std::vector<cplx> u(big_n);
  for (auto& z : u) z = rng.gaussian();
  const cplx uy = dot(u, y);
  const auto my = m.apply(y);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < big_n; ++c) m(r, c) -= my[r] * u[c] / uy;
  pws.slice = m;
  pws.chart.resize(big_n);
  for (auto& z : pws.chart) z = rng.gaussian();
  pws.direction.resize(k);
  for (auto& z : pws.direction) z = rng.gaussian();

  // Polish the seed point on the (numerically) exact slice.
  const auto refined = newton_refine(sliced_system(param, pws.slice), p, 1e-14, 4);
  pws.points.push_back(refined.point);
  monodromy_populate(pws, child_seed(seed, 1), opts);
  return pws;
}

std::vector<TrackedEndpoint> move_to_slice(const PseudoWitnessSet& pws, const CMatrix& target, std::uint64_t seed,
                                           const WitnessOptions& opts) {
  Rng rng(seed);
  TrackerConfig cfg = opts.tracker;
  cfg.gamma = rng.unit_phase();
  const SliceHomotopy h(*pws.param, pws.slice, target, cfg.gamma);
  return track_all(h, pws.points, cfg, opts.threads);
}

size_t degree(const PseudoWitnessSet& pws) {
  if (!pws.certified) throw Error(ErrorCode::kUncertified, "witness set is not trace-certified");
  return pws.points.size();
}

}  // namespace trifocal
