#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace trifocal {

// ---------------------------------------------------------------------------
// Correspondence basics

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::PPP: return "PPP";
    case Kind::PPL: return "PPL";
    case Kind::PLP: return "PLP";
    case Kind::LLL: return "LLL";
    case Kind::PLL: return "PLL";
  }
  return "?";
}

Kind kind_from_name(std::string_view name) {
  for (Kind k : kAllKinds)
    if (kind_name(k) == name) return k;
  throw Error(ErrorCode::kParse, "unknown correspondence kind '" + std::string(name) + "'");
}

bool slot_is_point(Kind k, int view) {
  static constexpr bool table[5][3] = {
      {true, true, true},     // PPP
      {true, true, false},    // PPL
      {true, false, true},    // PLP
      {false, false, false},  // LLL
      {true, false, false},   // PLL
  };
  return table[static_cast<int>(k)][view];
}

Correspondence::Correspondence(Kind k, const Vec3& v0, const Vec3& v1, const Vec3& v2) : kind(k), v{v0, v1, v2} {
  for (auto& x : v) {
    const double n = norm2(x);
    if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::kInvalidArgument, "correspondence vector is zero");
    for (auto& z : x) z /= n;
  }
}

// ---------------------------------------------------------------------------
// Cameras

Camera::Camera(CMatrix m) : m_(std::move(m)) {
  if (m_.rows() != 3 || m_.cols() != 4) throw Error(ErrorCode::kInvalidArgument, "camera must be 3x4");
}

bool Camera::is_calibrated(double tol) const {
  // For odd size a scaled orthogonal block is a scaled rotation (possibly by
  // a negative factor), so R R^T proportional to I is the whole condition.
  const CMatrix r = m_.block(0, 0, 3, 3);
  const CMatrix rrt = r * r.transpose();
  const double size = rrt.frobenius_norm();
  const cplx mu2 = (rrt(0, 0) + rrt(1, 1) + rrt(2, 2)) / 3.0;
  if (!(size > 0.0) || std::abs(mu2) * std::sqrt(3.0) < 1e-12 * size) return false;
  const CMatrix dev = rrt - CMatrix::identity(3) * mu2;
  return dev.frobenius_norm() <= tol * size;
}

Camera make_camera(const CMatrix& rotation, const Vec3& translation) {
  CMatrix m(3, 4);
  m.set_block(0, 0, rotation);
  for (int r = 0; r < 3; ++r) m(r, 3) = translation[r];
  return Camera(std::move(m));
}

Vec4 camera_center(const Camera& cam) {
  const CMatrix k = nullspace(cam.matrix());
  if (k.cols() != 1) throw Error(ErrorCode::kDegenerate, "camera does not have full rank 3");
  const auto n = normalize_projective(k.column(0));
  return {n[0], n[1], n[2], n[3]};
}

Vec3 epipole(const Camera& from, const Camera& of) {
  const Vec4 c_from = camera_center(from);
  const Vec4 c_of = camera_center(of);
  if (projective_distance(c_from, c_of) < 1e-9) throw Error(ErrorCode::kDegenerate, "epipole: identical centers");
  const auto e = from.matrix().apply(c_of);
  const auto n = normalize_projective(e);
  return {n[0], n[1], n[2]};
}

CMatrix quaternion_rotation(const Vec4& q) {
  const cplx a = q[0], b = q[1], c = q[2], d = q[3];
  return CMatrix{{a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)},
                 {2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)},
                 {2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - b * b - c * c}};
}

// ---------------------------------------------------------------------------
// Tensors

TrifocalTensor TrifocalTensor::normalized() const {
  const auto n = normalize_projective(t_);
  std::array<cplx, 27> out;
  std::copy(n.begin(), n.end(), out.begin());
  return TrifocalTensor(out);
}

TrifocalTensor TrifocalTensor::swap_last_two() const {
  TrifocalTensor out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out(i, k, j) = (*this)(i, j, k);
  return out;
}

double tensor_distance(const TrifocalTensor& a, const TrifocalTensor& b) {
  return projective_distance(a.span(), b.span());
}

TrifocalTensor trifocal_tensor(const Camera& a, const Camera& b, const Camera& c) {
  const CMatrix at = a.matrix().transpose();
  const CMatrix bt = b.matrix().transpose();
  const CMatrix ct = c.matrix().transpose();
  TrifocalTensor t;
  CMatrix sub(4, 4);
  for (int i = 0; i < 3; ++i) {
    int col = 0;
    for (int m = 0; m < 3; ++m) {
      if (m == i) continue;
      for (int r = 0; r < 4; ++r) sub(r, col) = at(r, m);
      ++col;
    }
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;  // (-1)^(i+1) with 1-based i
    for (int j = 0; j < 3; ++j) {
      for (int r = 0; r < 4; ++r) sub(r, 2) = bt(r, j);
      for (int k = 0; k < 3; ++k) {
        for (int r = 0; r < 4; ++r) sub(r, 3) = ct(r, k);
        t(i, j, k) = sign * det4(sub);
      }
    }
  }
  return t;
}

TrifocalTensor trifocal_tensor_by_rows(const Camera& a, const Camera& b, const Camera& c) {
  TrifocalTensor t;
  CMatrix sub(4, 4);
  for (int i = 0; i < 3; ++i) {
    int row = 0;
    for (int m = 0; m < 3; ++m) {
      if (m == i) continue;
      for (int col = 0; col < 4; ++col) sub(row, col) = a.matrix()(m, col);
      ++row;
    }
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        for (int col = 0; col < 4; ++col) {
          sub(2, col) = b.matrix()(j, col);
          sub(3, col) = c.matrix()(k, col);
        }
        t(i, j, k) = sign * determinant(sub);
      }
  }
  return t;
}

Contraction tensor_contract(const TrifocalTensor& t, const std::optional<Vec3>& x, const std::optional<Vec3>& l1,
                            const std::optional<Vec3>& l2) {
  if (!x && !l1 && !l2) throw Error(ErrorCode::kInvalidArgument, "tensor_contract needs at least one slot");
  // Weight vectors per slot; open slots keep their index.
  auto w = [](const std::optional<Vec3>& v, int idx) -> cplx { return v ? (*v)[idx] : cplx{1.0}; };
  if (x && l1 && l2) return contract_all(t, *x, *l1, *l2);
  const int open = (!x) + (!l1) + (!l2);
  if (open == 1) {
    Vec3 out{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const cplx coeff = (x ? w(x, i) : 1.0) * (l1 ? w(l1, j) : 1.0) * (l2 ? w(l2, k) : 1.0);
          const int slot = !x ? i : (!l1 ? j : k);
          out[slot] += coeff * t(i, j, k);
        }
    return out;
  }
  CMatrix out(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        if (x) out(j, k) += (*x)[i] * t(i, j, k);
        else if (l1) out(i, k) += (*l1)[j] * t(i, j, k);
        else out(i, j) += (*l2)[k] * t(i, j, k);
      }
  return out;
}

cplx contract_all(const TrifocalTensor& t, const Vec3& x, const Vec3& l1, const Vec3& l2) {
  cplx s{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) s += t(i, j, k) * x[i] * l1[j] * l2[k];
  return s;
}

namespace {

CMatrix inverse3(const CMatrix& g) {
  const cplx det = determinant(g);
  if (std::abs(det) == 0.0) throw Error(ErrorCode::kDegenerate, "singular 3x3 matrix");
  CMatrix inv(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const int r0 = (c + 1) % 3, r1 = (c + 2) % 3, c0 = (r + 1) % 3, c1 = (r + 2) % 3;
      inv(r, c) = (g(r0, c0) * g(r1, c1) - g(r0, c1) * g(r1, c0)) / det;
    }
  return inv;
}

}  // namespace

CMatrix wedge2(const CMatrix& g) {
  if (g.rows() != 3 || g.cols() != 3) throw Error(ErrorCode::kInvalidArgument, "wedge2 needs a 3x3 matrix");
  return inverse3(g.transpose()) * determinant(g);
}

TrifocalTensor act_on_tensor(const TrifocalTensor& t, const CMatrix& g, const CMatrix& h1, const CMatrix& h2) {
  // T'_ijk = sum T_abc (g^-1)_ai (h1^-1)_bj (h2^-1)_ck
  const CMatrix gi = inverse3(g), h1i = inverse3(h1), h2i = inverse3(h2);
  TrifocalTensor out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        cplx s{};
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) s += t(a, b, c) * gi(a, i) * h1i(b, j) * h2i(c, k);
        out(i, j, k) = s;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Parametrization

std::array<cplx, 13> CalibratedConfiguration::params() const {
  return {q2[0], q2[1], q2[2], q2[3], q3[0], q3[1], q3[2], q3[3], t21, t22, t3[0], t3[1], t3[2]};
}

CalibratedConfiguration CalibratedConfiguration::from_params(std::span<const cplx> p) {
  if (p.size() != kParams) throw Error(ErrorCode::kInvalidArgument, "configuration needs 13 parameters");
  CalibratedConfiguration cfg;
  cfg.q2 = {p[0], p[1], p[2], p[3]};
  cfg.q3 = {p[4], p[5], p[6], p[7]};
  cfg.t21 = p[8];
  cfg.t22 = p[9];
  cfg.t3 = {p[10], p[11], p[12]};
  return cfg;
}

Camera CalibratedConfiguration::camera_a() const {
  CMatrix m(3, 4);
  m.set_block(0, 0, CMatrix::identity(3));
  return Camera(std::move(m));
}
Camera CalibratedConfiguration::camera_b() const { return make_camera(quaternion_rotation(q2), t2()); }
Camera CalibratedConfiguration::camera_c() const { return make_camera(quaternion_rotation(q3), t3); }

CalibratedConfiguration PatchPair::project(const CalibratedConfiguration& cfg) const {
  CalibratedConfiguration out = cfg;
  const cplx s2 = alpha[0] * cfg.q2[0] + alpha[1] * cfg.q2[1] + alpha[2] * cfg.q2[2] + alpha[3] * cfg.q2[3];
  const cplx s3 = beta[0] * cfg.q3[0] + beta[1] * cfg.q3[1] + beta[2] * cfg.q3[2] + beta[3] * cfg.q3[3];
  if (std::abs(s2) == 0.0 || std::abs(s3) == 0.0)
    throw Error(ErrorCode::kDegenerate, "quaternion lies on the patch's base hyperplane");
  for (auto& z : out.q2) z /= s2;
  for (auto& z : out.q3) z /= s3;
  return out;
}

namespace {

// Rotation block and its four partial derivatives, evaluated on raw arrays.
struct RotationWithDerivatives {
  cplx r[3][3];
  cplx dr[4][3][3];
};

void rotation_block(const cplx* q, cplx r[3][3]) {
  const cplx a = q[0], b = q[1], c = q[2], d = q[3];
  const cplx aa = a * a, bb = b * b, cc = c * c, dd = d * d;
  r[0][0] = aa + bb - cc - dd;
  r[0][1] = 2.0 * (b * c - a * d);
  r[0][2] = 2.0 * (b * d + a * c);
  r[1][0] = 2.0 * (b * c + a * d);
  r[1][1] = aa + cc - bb - dd;
  r[1][2] = 2.0 * (c * d - a * b);
  r[2][0] = 2.0 * (b * d - a * c);
  r[2][1] = 2.0 * (c * d + a * b);
  r[2][2] = aa + dd - bb - cc;
}

void rotation_derivatives(const cplx* q, cplx dr[4][3][3]) {
  const cplx a2 = 2.0 * q[0], b2 = 2.0 * q[1], c2 = 2.0 * q[2], d2 = 2.0 * q[3];
  const cplx da[3][3] = {{a2, -d2, c2}, {d2, a2, -b2}, {-c2, b2, a2}};
  const cplx db[3][3] = {{b2, c2, d2}, {c2, -b2, -a2}, {d2, a2, -b2}};
  const cplx dc[3][3] = {{-c2, b2, a2}, {b2, c2, d2}, {-a2, d2, -c2}};
  const cplx dd[3][3] = {{-d2, -a2, b2}, {a2, -d2, c2}, {b2, c2, d2}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      dr[0][r][c] = da[r][c];
      dr[1][r][c] = db[r][c];
      dr[2][r][c] = dc[r][c];
      dr[3][r][c] = dd[r][c];
    }
}

}  // namespace

// With A = [I | 0] the determinant formula collapses to
//   T_ijk = R2[j][i] t3[k] - t2[j] R3[k][i].
void phi_eval(std::span<const cplx> p, std::span<cplx> tensor) {
  cplx r2[3][3], r3[3][3];
  rotation_block(&p[0], r2);
  rotation_block(&p[4], r3);
  const cplx t2[3] = {p[8], p[9], 1.0};
  const cplx t3[3] = {p[10], p[11], p[12]};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) tensor[9 * i + 3 * j + k] = r2[j][i] * t3[k] - t2[j] * r3[k][i];
}

void phi_eval_jacobian(std::span<const cplx> p, std::span<cplx> tensor, std::span<cplx> jac) {
  cplx r2[3][3], r3[3][3], dr2[4][3][3], dr3[4][3][3];
  rotation_block(&p[0], r2);
  rotation_block(&p[4], r3);
  rotation_derivatives(&p[0], dr2);
  rotation_derivatives(&p[4], dr3);
  const cplx t2[3] = {p[8], p[9], 1.0};
  const cplx t3[3] = {p[10], p[11], p[12]};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const int e = 9 * i + 3 * j + k;
        tensor[e] = r2[j][i] * t3[k] - t2[j] * r3[k][i];
        cplx* row = &jac[static_cast<size_t>(e) * 13];
        for (int m = 0; m < 4; ++m) {
          row[m] = dr2[m][j][i] * t3[k];
          row[4 + m] = -t2[j] * dr3[m][k][i];
        }
        row[8] = (j == 0) ? -r3[k][i] : cplx{};
        row[9] = (j == 1) ? -r3[k][i] : cplx{};
        row[10] = (k == 0) ? r2[j][i] : cplx{};
        row[11] = (k == 1) ? r2[j][i] : cplx{};
        row[12] = (k == 2) ? r2[j][i] : cplx{};
      }
}

TrifocalTensor phi(const CalibratedConfiguration& cfg) {
  const auto p = cfg.params();
  std::array<cplx, 27> t;
  phi_eval(p, t);
  return TrifocalTensor(t);
}

CMatrix phi_jacobian(const CalibratedConfiguration& cfg) {
  const auto p = cfg.params();
  std::array<cplx, 27> t;
  CMatrix jac(27, 13);
  phi_eval_jacobian(p, t, jac.data());
  return jac;
}

namespace {

// Quaternion with R(q) = r and a^2+b^2+c^2+d^2 = 1 for r in SO(3, C).
Vec4 quaternion_from_rotation(const CMatrix& r) {
  const cplx sq[4] = {(1.0 + r(0, 0) + r(1, 1) + r(2, 2)) / 4.0, (1.0 + r(0, 0) - r(1, 1) - r(2, 2)) / 4.0,
                      (1.0 - r(0, 0) + r(1, 1) - r(2, 2)) / 4.0, (1.0 - r(0, 0) - r(1, 1) + r(2, 2)) / 4.0};
  int best = 0;
  for (int m = 1; m < 4; ++m)
    if (std::abs(sq[m]) > std::abs(sq[best])) best = m;
  Vec4 q{};
  const cplx pivot = std::sqrt(sq[best]);
  const cplx f = 1.0 / (4.0 * pivot);
  q[best] = pivot;
  switch (best) {
    case 0:
      q[1] = (r(2, 1) - r(1, 2)) * f;
      q[2] = (r(0, 2) - r(2, 0)) * f;
      q[3] = (r(1, 0) - r(0, 1)) * f;
      break;
    case 1:
      q[0] = (r(2, 1) - r(1, 2)) * f;
      q[2] = (r(0, 1) + r(1, 0)) * f;
      q[3] = (r(0, 2) + r(2, 0)) * f;
      break;
    case 2:
      q[0] = (r(0, 2) - r(2, 0)) * f;
      q[1] = (r(0, 1) + r(1, 0)) * f;
      q[3] = (r(1, 2) + r(2, 1)) * f;
      break;
    default:
      q[0] = (r(1, 0) - r(0, 1)) * f;
      q[1] = (r(0, 2) + r(2, 0)) * f;
      q[2] = (r(1, 2) + r(2, 1)) * f;
      break;
  }
  return q;
}

// Splits a calibrated camera into (R, t) with R in SO(3, C).
std::pair<CMatrix, Vec3> unit_calibrated(const Camera& cam) {
  const CMatrix m = cam.matrix();
  const CMatrix r = m.block(0, 0, 3, 3);
  const CMatrix rrt = r * r.transpose();
  const cplx mu2 = (rrt(0, 0) + rrt(1, 1) + rrt(2, 2)) / 3.0;
  if (std::abs(mu2) < 1e-14 * std::max(1.0, rrt.frobenius_norm()))
    throw Error(ErrorCode::kDegenerate, "camera block is not a scaled rotation");
  cplx mu = std::sqrt(mu2);
  if (std::real(determinant(r) / (mu * mu * mu)) < 0.0) mu = -mu;
  CMatrix rot = r * (1.0 / mu);
  return {rot, {m(0, 3) / mu, m(1, 3) / mu, m(2, 3) / mu}};
}

}  // namespace

CalibratedConfiguration configuration_from_cameras(const Camera& a, const Camera& b, const Camera& c,
                                                   const PatchPair& patches) {
  const auto [ra, ta] = unit_calibrated(a);
  const auto [rb, tb] = unit_calibrated(b);
  const auto [rc, tc] = unit_calibrated(c);
  // World change h = [[Ra^T, -Ra^T ta], [0, 1]] sends A to [I | 0].
  const CMatrix rat = ra.transpose();
  const CMatrix r2 = rb * rat;
  const CMatrix r3 = rc * rat;
  const auto r2ta = r2.apply(ta);
  const auto r3ta = r3.apply(ta);
  Vec3 tau2{}, tau3{};
  for (int i = 0; i < 3; ++i) {
    tau2[i] = tb[i] - r2ta[i];
    tau3[i] = tc[i] - r3ta[i];
  }
  if (std::abs(tau2[2]) < 1e-14 * std::max(1.0, norm2(tau2)))
    throw Error(ErrorCode::kDegenerate, "second translation has vanishing depth coordinate");

  CalibratedConfiguration unit;
  unit.q2 = quaternion_from_rotation(r2);
  unit.q3 = quaternion_from_rotation(r3);
  CalibratedConfiguration cfg = patches.project(unit);
  auto sumsq = [](const Vec4& q) { return q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]; };
  const cplx lam2 = sumsq(cfg.q2);
  const cplx lam3 = sumsq(cfg.q3);
  cfg.t21 = tau2[0] / tau2[2];
  cfg.t22 = tau2[1] / tau2[2];
  for (int i = 0; i < 3; ++i) cfg.t3[i] = (lam3 / lam2) * tau3[i] / tau2[2];
  return cfg;
}

std::array<cplx, 13> NormalizedConfiguration::coordinates() const {
  return {q2[0], q2[1], q2[2], q2[3], q3[0], q3[1], q3[2], q3[3], tau2[0], tau2[1], tau3[0], tau3[1], tau3[2]};
}

NormalizedConfiguration normalize_configuration(const CalibratedConfiguration& cfg) {
  auto sumsq = [](const Vec4& q) { return q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]; };
  const cplx lam2 = sumsq(cfg.q2);
  const cplx lam3 = sumsq(cfg.q3);
  if (std::abs(lam2) == 0.0 || std::abs(lam3) == 0.0)
    throw Error(ErrorCode::kDegenerate, "isotropic quaternion has no unit normalization");
  auto unit = [](const Vec4& q, cplx lam) {
    Vec4 out;
    const cplx s = std::sqrt(lam);
    size_t lead = 0;
    for (size_t i = 0; i < 4; ++i) {
      out[i] = q[i] / s;
      if (std::abs(out[i]) > std::abs(out[lead]) * (1.0 + 1e-12)) lead = i;
    }
    // q and -q give the same rotation.
    if (out[lead].real() < 0.0)
      for (auto& z : out) z = -z;
    return out;
  };
  NormalizedConfiguration n;
  n.q2 = unit(cfg.q2, lam2);
  n.q3 = unit(cfg.q3, lam3);
  n.tau2 = cfg.t2();
  for (int i = 0; i < 3; ++i) n.tau3[i] = cfg.t3[i] * lam2 / lam3;
  return n;
}

// ---------------------------------------------------------------------------
// Multi-view consistency

namespace {

CMatrix unit_scaled(const CMatrix& m) {
  const double n = m.frobenius_norm();
  return n > 0.0 ? m * cplx(1.0 / n) : m;
}

CMatrix vec_col(const Vec3& v) { return CMatrix(3, 1, {v[0], v[1], v[2]}); }

// Rows [cam | x-column at offset] of a stacked multi-view matrix.
void put_camera_rows(CMatrix& m, int row0, const CMatrix& cam, const Vec3& x, int xcol) {
  m.set_block(row0, 0, cam);
  if (xcol >= 0)
    for (int r = 0; r < 3; ++r) m(row0 + r, xcol) = x[r];
}

CMatrix line_row(const Vec3& l, const CMatrix& cam) {
  CMatrix lr(1, 3, {l[0], l[1], l[2]});
  return lr * cam;
}

CMatrix two_view_matrix(const CMatrix& p, const Vec3& x, const CMatrix& q, const Vec3& y) {
  CMatrix m(6, 6);
  put_camera_rows(m, 0, p, x, 4);
  put_camera_rows(m, 3, q, y, 5);
  return m;
}

}  // namespace

std::vector<CMatrix> multiview_matrices(const Camera& ca, const Camera& cb, const Camera& cc,
                                        const Correspondence& d) {
  const CMatrix a = unit_scaled(ca.matrix());
  const CMatrix b = unit_scaled(cb.matrix());
  const CMatrix c = unit_scaled(cc.matrix());
  std::vector<CMatrix> out;
  switch (d.kind) {
    case Kind::PLL:
      break;
    case Kind::LLL: {
      const CMatrix la = a.transpose() * vec_col(d.v[0]);
      const CMatrix lb = b.transpose() * vec_col(d.v[1]);
      const CMatrix lc = c.transpose() * vec_col(d.v[2]);
      out.push_back(CMatrix::hstack({&la, &lb, &lc}));
      break;
    }
    case Kind::PPL:
    case Kind::PLP: {
      // PPL: [A x 0; B 0 x'; l''^T C 0 0], PLP: [A x 0; C 0 x''; l'^T B 0 0]
      const bool ppl = d.kind == Kind::PPL;
      const CMatrix& second = ppl ? b : c;
      const Vec3& second_point = ppl ? d.v[1] : d.v[2];
      const CMatrix lr = ppl ? line_row(d.v[2], c) : line_row(d.v[1], b);
      CMatrix m(7, 6);
      put_camera_rows(m, 0, a, d.v[0], 4);
      put_camera_rows(m, 3, second, second_point, 5);
      m.set_block(6, 0, lr);
      out.push_back(std::move(m));
      break;
    }
    case Kind::PPP: {
      CMatrix m(9, 7);
      put_camera_rows(m, 0, a, d.v[0], 4);
      put_camera_rows(m, 3, b, d.v[1], 5);
      put_camera_rows(m, 6, c, d.v[2], 6);
      out.push_back(std::move(m));
      out.push_back(two_view_matrix(a, d.v[0], b, d.v[1]));
      out.push_back(two_view_matrix(a, d.v[0], c, d.v[2]));
      out.push_back(two_view_matrix(b, d.v[1], c, d.v[2]));
      break;
    }
  }
  return out;
}

MultiviewResidual multiview_residual(const Camera& a, const Camera& b, const Camera& c, const Correspondence& d,
                                     const ConsistencyTolerances& tol) {
  MultiviewResidual res;
  res.kind = d.kind;
  if (d.kind == Kind::PLL) {
    const Camera na(unit_scaled(a.matrix())), nb(unit_scaled(b.matrix())), nc(unit_scaled(c.matrix()));
    const TrifocalTensor t = trifocal_tensor(na, nb, nc);
    const double tn = t.norm();
    res.worst_relative = tn > 0.0 ? std::abs(contract_all(t, d.v[0], d.v[1], d.v[2])) / tn : 0.0;
    res.rank_drop = res.worst_relative <= tol.relative_singular_value.value_or(tol.scalar);
    return res;
  }
  res.rank_drop = true;
  for (const CMatrix& m : multiview_matrices(a, b, c, d)) {
    auto s = singular_values(m);
    const double rel = s.front() > 0.0 ? s.back() / s.front() : 0.0;
    res.worst_relative = std::max(res.worst_relative, rel);
    const bool drop = tol.relative_singular_value ? rel <= *tol.relative_singular_value
                                                  : numerical_rank(s, tol.rank_ratio) < static_cast<int>(s.size());
    res.rank_drop = res.rank_drop && drop;
    res.spectra.push_back(std::move(s));
  }
  return res;
}

bool avoids_epipoles(const Camera& a, const Camera& b, const Camera& c, const Correspondence& d, double tol) {
  const Camera* cams[3] = {&a, &b, &c};
  for (int view = 0; view < 3; ++view) {
    for (int other = 0; other < 3; ++other) {
      if (other == view) continue;
      const Vec3 e = epipole(*cams[view], *cams[other]);
      const Vec3& v = d.v[view];
      if (slot_is_point(d.kind, view)) {
        if (projective_distance(v, e) <= tol) return false;
      } else {
        if (std::abs(dot(v, e)) / (norm2(v) * norm2(e)) <= tol) return false;
      }
    }
  }
  return true;
}

bool consistency_check(const Camera& a, const Camera& b, const Camera& c, const Correspondence& d,
                       const ConsistencyTolerances& tol) {
  // Centers must be distinct; epipole() throws otherwise.
  if (!avoids_epipoles(a, b, c, d, tol.epipole)) return false;
  return multiview_residual(a, b, c, d, tol).rank_drop;
}

}  // namespace trifocal
