#include "core/slices.hpp"

#include <algorithm>
#include <sstream>

namespace trifocal {

bool ProblemWeights::is_minimal() const {
  for (int x : w)
    if (x < 0) return false;
  return 3 * w[0] + 2 * w[1] + 2 * w[2] + 2 * w[3] + w[4] == 11 && w[1] >= w[2];
}

std::string ProblemWeights::label() const {
  std::ostringstream os;
  for (int i = 0; i < 5; ++i) os << (i ? "," : "") << w[i];
  return os.str();
}

ProblemWeights ProblemWeights::parse(const std::string& text) {
  ProblemWeights p;
  std::istringstream is(text);
  std::string item;
  int n = 0;
  while (std::getline(is, item, ',')) {
    if (n >= 5) throw Error(ErrorCode::kParse, "problem needs exactly five counts: " + text);
    size_t used = 0;
    try {
      p.w[n] = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad count '" + item + "' in problem " + text);
    }
    if (used != item.size() || p.w[n] < 0) throw Error(ErrorCode::kParse, "bad count '" + item + "' in problem " + text);
    ++n;
  }
  if (n != 5) throw Error(ErrorCode::kParse, "problem needs exactly five counts: " + text);
  return p;
}

const std::vector<DegreeTableRow>& degree_table() {
  static const std::vector<DegreeTableRow> table = {
      {{{3, 1, 0, 0, 0}}, 272},
      {{{3, 0, 0, 1, 0}}, 216},
      {{{3, 0, 0, 0, 2}}, 448},
      {{{2, 2, 0, 0, 1}}, 424},
      {{{2, 1, 1, 0, 1}}, 528},
      {{{2, 1, 0, 1, 1}}, 424},
      {{{2, 1, 0, 0, 3}}, 736},
      {{{2, 0, 0, 2, 1}}, 304},
      {{{2, 0, 0, 1, 3}}, 648},
      {{{2, 0, 0, 0, 5}}, 1072},
      {{{1, 4, 0, 0, 0}}, 160},
      {{{1, 3, 1, 0, 0}}, 520},
      {{{1, 3, 0, 1, 0}}, 360},
      {{{1, 3, 0, 0, 2}}, 520},
      {{{1, 2, 2, 0, 0}}, 672},
      {{{1, 2, 1, 1, 0}}, 552},
      {{{1, 2, 1, 0, 2}}, 912},
      {{{1, 2, 0, 2, 0}}, 408},
      {{{1, 2, 0, 1, 2}}, 704},
      {{{1, 2, 0, 0, 4}}, 1040},
      {{{1, 1, 1, 2, 0}}, 496},
      {{{1, 1, 1, 1, 2}}, 896},
      {{{1, 1, 1, 0, 4}}, 1344},
      {{{1, 1, 0, 3, 0}}, 368},
      {{{1, 1, 0, 2, 2}}, 736},
      {{{1, 1, 0, 1, 4}}, 1184},
      {{{1, 1, 0, 0, 6}}, 1672},
      {{{1, 0, 0, 4, 0}}, 360},
      {{{1, 0, 0, 3, 2}}, 696},
      {{{1, 0, 0, 2, 4}}, 1176},
      {{{1, 0, 0, 1, 6}}, 1680},
      {{{1, 0, 0, 0, 8}}, 2272},
      {{{0, 5, 0, 0, 1}}, 160},
      {{{0, 4, 1, 0, 1}}, 616},
      {{{0, 4, 0, 1, 1}}, 456},
      {{{0, 4, 0, 0, 3}}, 616},
      {{{0, 3, 2, 0, 1}}, 1152},
      {{{0, 3, 1, 1, 1}}, 880},
      {{{0, 3, 1, 0, 3}}, 1280},
      {{{0, 3, 0, 2, 1}}, 672},
      {{{0, 3, 0, 1, 3}}, 1008},
      {{{0, 3, 0, 0, 5}}, 1408},
      {{{0, 2, 2, 1, 1}}, 1168},
      {{{0, 2, 2, 0, 3}}, 1680},
      {{{0, 2, 1, 2, 1}}, 1032},
      {{{0, 2, 1, 1, 3}}, 1520},
      {{{0, 2, 1, 0, 5}}, 2072},
      {{{0, 2, 0, 3, 1}}, 800},
      {{{0, 2, 0, 2, 3}}, 1296},
      {{{0, 2, 0, 1, 5}}, 1848},
      {{{0, 2, 0, 0, 7}}, 2464},
      {{{0, 1, 1, 3, 1}}, 1016},
      {{{0, 1, 1, 2, 3}}, 1552},
      {{{0, 1, 1, 1, 5}}, 2144},
      {{{0, 1, 1, 0, 7}}, 2800},
      {{{0, 1, 0, 4, 1}}, 912},
      {{{0, 1, 0, 3, 3}}, 1456},
      {{{0, 1, 0, 2, 5}}, 2088},
      {{{0, 1, 0, 1, 7}}, 2808},
      {{{0, 1, 0, 0, 9}}, 3592},
      {{{0, 0, 0, 5, 1}}, 920},
      {{{0, 0, 0, 4, 3}}, 1464},
      {{{0, 0, 0, 3, 5}}, 2176},
      {{{0, 0, 0, 2, 7}}, 3024},
      {{{0, 0, 0, 1, 9}}, 3936},
      {{{0, 0, 0, 0, 11}}, 4912},
  };
  return table;
}

std::optional<int> expected_degree(const ProblemWeights& w) {
  for (const auto& row : degree_table())
    if (row.weights == w) return row.degree;
  return std::nullopt;
}

std::vector<ProblemWeights> enumerate_problems() {
  std::vector<ProblemWeights> out;
  for (int w1 = 3; w1 >= 0; --w1)
    for (int w2 = 5; w2 >= 0; --w2)
      for (int w3 = w2; w3 >= 0; --w3)
        for (int w4 = 5; w4 >= 0; --w4) {
          const int w5 = 11 - 3 * w1 - 2 * (w2 + w3 + w4);
          if (w5 < 0) continue;
          ProblemWeights p{{w1, w2, w3, w4, w5}};
          if (p.is_minimal()) out.push_back(p);
        }
  return out;
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

CMatrix constraint_rows(const Correspondence& c) {
  const auto& v = c.v;
  auto coeff3 = [](const auto& f) {
    CMatrix rows(3, 27);
    for (int r = 0; r < 3; ++r)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) rows(r, 9 * i + 3 * j + k) = f(r, i, j, k);
    return rows;
  };
  switch (c.kind) {
    case Kind::PLL: {
      CMatrix row(1, 27);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) row(0, 9 * i + 3 * j + k) = v[0][i] * v[1][j] * v[2][k];
      return row;
    }
    case Kind::LLL: {
      const CMatrix s = skew_matrix(v[0]);
      return coeff3([&](int r, int i, int j, int k) { return s(r, i) * v[1][j] * v[2][k]; });
    }
    case Kind::PLP: {
      const CMatrix s = skew_matrix(v[2]);
      return coeff3([&](int r, int i, int j, int k) { return v[0][i] * v[1][j] * s(r, k); });
    }
    case Kind::PPL: {
      const CMatrix s = skew_matrix(v[1]);
      return coeff3([&](int r, int i, int j, int k) { return v[0][i] * s(r, j) * v[2][k]; });
    }
    case Kind::PPP: {
      const CMatrix s1 = skew_matrix(v[1]);
      const CMatrix s2 = skew_matrix(v[2]);
      CMatrix rows(9, 27);
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              for (int k = 0; k < 3; ++k) rows(3 * r + s, 9 * i + 3 * j + k) = v[0][i] * s1(r, j) * s2(s, k);
      return rows;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown correspondence kind");
}

ProblemWeights instance_weights(const Instance& instance) {
  ProblemWeights p;
  int last = 0;
  for (const auto& c : instance) {
    const int k = static_cast<int>(c.kind);
    if (k < last) throw Error(ErrorCode::kInvalidArgument, "instance kinds must appear in PPP, PPL, PLP, LLL, PLL order");
    last = k;
    ++p.w[k];
  }
  return p;
}

LinearSlice assemble_special_slice(const Instance& instance) {
  const ProblemWeights w = instance_weights(instance);
  if (!w.is_minimal()) throw Error(ErrorCode::kInvalidArgument, "instance is not a minimal problem: " + w.label());
  std::vector<CMatrix> blocks;
  LinearSlice s;
  int total = 0;
  for (const auto& c : instance) {
    blocks.push_back(constraint_rows(c));
    std::vector<int> idx(blocks.back().rows());
    for (int& x : idx) x = total++;
    s.provenance.push_back(std::move(idx));
  }
  s.rows = CMatrix(total, 27);
  int r0 = 0;
  for (const auto& b : blocks) {
    s.rows.set_block(r0, 0, b);
    r0 += b.rows();
  }
  s.rank = numerical_rank(s.rows);
  if (s.rank != w.codimension())
    throw Error(ErrorCode::kDegenerate, "special slice has codimension " + std::to_string(s.rank) + ", expected " +
                                            std::to_string(w.codimension()));
  return s;
}

LinearSlice randomize_slice(const LinearSlice& s, Rng& rng) {
  const int rank = s.rank > 0 ? s.rank : numerical_rank(s.rows);
  if (rank < 11) throw Error(ErrorCode::kInvalidArgument, "slice codimension below 11 cannot be randomized to 11 rows");
  LinearSlice out;
  out.rows = rng.gaussian_matrix(11, s.rows.rows()) * s.rows;
  out.rank = numerical_rank(out.rows);
  if (out.rank != 11) throw Error(ErrorCode::kNumerical, "randomized slice lost rank");
  return out;
}

Instance random_instance(const ProblemWeights& w, std::uint64_t seed, bool complex_data) {
  Rng rng(seed);
  Instance out;
  for (Kind k : kAllKinds)
    for (int n = 0; n < w.count(k); ++n) {
      std::array<Vec3, 3> v;
      for (auto& x : v)
        for (auto& z : x) z = complex_data ? rng.gaussian() : cplx(rng.uniform());
      out.emplace_back(k, v[0], v[1], v[2]);
    }
  return out;
}

Instance synthetic_consistent_instance(const CalibratedConfiguration& cfg, const ProblemWeights& w,
                                       std::uint64_t seed) {
  const Camera cams[3] = {cfg.camera_a(), cfg.camera_b(), cfg.camera_c()};
  Vec4 centers[3];
  for (int i = 0; i < 3; ++i) centers[i] = camera_center(cams[i]);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (projective_distance(centers[i], centers[j]) < 1e-9)
        throw Error(ErrorCode::kDegenerate, "configuration has coinciding camera centers");

  Rng rng(seed);
  auto world_point = [&]() {
    std::array<cplx, 4> x;
    double n = 0.0;
    for (auto& z : x) {
      z = rng.normal();
      n += std::norm(z);
    }
    for (auto& z : x) z /= std::sqrt(n);
    return x;
  };
  auto project = [&](int view, const std::array<cplx, 4>& x) {
    const auto y = cams[view].matrix().apply(x);
    return Vec3{y[0], y[1], y[2]};
  };

  Instance out;
  for (Kind k : kAllKinds)
    for (int n = 0; n < w.count(k); ++n) {
      bool done = false;
      for (int attempt = 0; attempt < 100 && !done; ++attempt) {
        const auto x = world_point();
        const auto y = world_point();
        std::array<Vec3, 3> v;
        bool ok = true;
        for (int view = 0; view < 3; ++view) {
          const Vec3 px = project(view, x);
          const double scale = cams[view].matrix().frobenius_norm();
          if (norm2(px) < 1e-6 * scale) ok = false;
          if (slot_is_point(k, view)) {
            v[view] = px;
          } else {
            v[view] = cross(px, project(view, y));
            if (norm2(v[view]) < 1e-6 * scale * scale) ok = false;
          }
        }
        if (!ok) continue;
        Correspondence c(k, v[0], v[1], v[2]);
        if (!avoids_epipoles(cams[0], cams[1], cams[2], c, 1e-6)) continue;
        out.push_back(c);
        done = true;
      }
      if (!done) throw Error(ErrorCode::kDegenerate, "no admissible synthetic correspondence after 100 draws");
    }
  return out;
}

}  // namespace trifocal
