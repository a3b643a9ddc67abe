#pragma once

// Cameras, trifocal tensors and the quaternion-patched parametrization of
// calibrated trifocal tensors.

#include <array>
#include <optional>
#include <span>
#include <variant>

#include "core/correspondence.hpp"
#include "core/numlin.hpp"

namespace trifocal {

/// A projective camera: a 3x4 matrix up to scale.
class Camera {
public:
  Camera() : m_(3, 4) {}
  explicit Camera(CMatrix m);
  const CMatrix& matrix() const { return m_; }
  /// Left 3x3 block in SO(3, C) up to the numerical tolerance.
  bool is_calibrated(double tol = 1e-9) const;

private:
  CMatrix m_;
};

/// [R | t] from a 3x3 block and a translation.
Camera make_camera(const CMatrix& rotation, const Vec3& translation);

/// Unit-normalized generator of ker(cam). Throws kDegenerate below rank 3.
Vec4 camera_center(const Camera& cam);

/// Image under `from` of the center of `of`, unit-normalized. Throws
/// kDegenerate when the two centers coincide.
Vec3 epipole(const Camera& from, const Camera& of);

/// Rotation block of the quaternion (a, b, c, d); R * R^T = (a^2+b^2+c^2+d^2)^2 I.
CMatrix quaternion_rotation(const Vec4& q);

/// 27 entries indexed (i, j, k) -> 9 i + 3 j + k, defined up to scale.
class TrifocalTensor {
public:
  TrifocalTensor() { t_.fill(cplx{}); }
  explicit TrifocalTensor(const std::array<cplx, 27>& t) : t_(t) {}

  cplx& operator()(int i, int j, int k) { return t_[9 * i + 3 * j + k]; }
  const cplx& operator()(int i, int j, int k) const { return t_[9 * i + 3 * j + k]; }
  const std::array<cplx, 27>& entries() const { return t_; }
  std::span<const cplx> span() const { return t_; }

  double norm() const { return norm2(t_); }
  TrifocalTensor normalized() const;
  /// T_ijk -> T_ikj
  TrifocalTensor swap_last_two() const;

private:
  std::array<cplx, 27> t_;
};

/// Projective distance between two tensors (sine of the angle in C^27).
double tensor_distance(const TrifocalTensor& a, const TrifocalTensor& b);

/// (-1)^(i+1) det of [A^T without column i | column j of B^T | column k of C^T].
TrifocalTensor trifocal_tensor(const Camera& a, const Camera& b, const Camera& c);

/// Same tensor through rows: (-1)^(i+1) det [A without row i; row j of B; row k of C].
TrifocalTensor trifocal_tensor_by_rows(const Camera& a, const Camera& b, const Camera& c);

using Contraction = std::variant<cplx, Vec3, CMatrix>;

/// Contracts the filled slots. One open slot gives a 3-vector, two give a
/// 3x3 matrix indexed by the open slots in order, none gives a scalar.
Contraction tensor_contract(const TrifocalTensor& t, const std::optional<Vec3>& x,
                            const std::optional<Vec3>& l1, const std::optional<Vec3>& l2);

cplx contract_all(const TrifocalTensor& t, const Vec3& x, const Vec3& l1, const Vec3& l2);

/// det(g) * (g^T)^{-1} for a 3x3 g.
CMatrix wedge2(const CMatrix& g);

/// The tensor T' with T'(x, l1, l2) = T(g^{-1} x, h1^{-1} l1, h2^{-1} l2).
TrifocalTensor act_on_tensor(const TrifocalTensor& t, const CMatrix& g, const CMatrix& h1, const CMatrix& h2);

/// Configuration normalized so the first camera is [I | 0] and the second
/// translation has last coordinate 1. Parameter order a..h, t21, t22,
/// t31, t32, t33.
struct CalibratedConfiguration {
  Vec4 q2{};
  Vec4 q3{};
  cplx t21{}, t22{};
  Vec3 t3{};

  static constexpr int kParams = 13;
  std::array<cplx, kParams> params() const;
  static CalibratedConfiguration from_params(std::span<const cplx> p);

  Vec3 t2() const { return {t21, t22, 1.0}; }
  Camera camera_a() const;
  Camera camera_b() const;
  Camera camera_c() const;
};

/// Random affine patches on the two quaternions: alpha . q2 = 1, beta . q3 = 1.
struct PatchPair {
  Vec4 alpha{};
  Vec4 beta{};
  /// Rescales the quaternions onto the patches.
  CalibratedConfiguration project(const CalibratedConfiguration& cfg) const;
};

TrifocalTensor phi(const CalibratedConfiguration& cfg);
/// 27 x 13 matrix of partial derivatives of the tensor entries.
CMatrix phi_jacobian(const CalibratedConfiguration& cfg);

/// Allocation-free kernels for the tracking inner loop. `params` has 13
/// entries, `tensor` 27 and `jac` 27 * 13 (row-major) when non-null.
void phi_eval(std::span<const cplx> params, std::span<cplx> tensor);
void phi_eval_jacobian(std::span<const cplx> params, std::span<cplx> tensor, std::span<cplx> jac);

/// Calibrated cameras (A, B, C) brought by the group of rotations,
/// translations and dilations into normal form and written in patched
/// parameters. Throws kDegenerate when A and B share a center's depth
/// normalization (t2 last coordinate vanishes).
CalibratedConfiguration configuration_from_cameras(const Camera& a, const Camera& b, const Camera& c,
                                                   const PatchPair& patches);

/// Real-form view of a parameter point: unit quaternions (Sum q^2 = 1) and
/// translations of the cameras [R2 | tau2], [R3 | tau3] with tau2 last
/// coordinate 1. Identifies each configuration independently of the patches.
struct NormalizedConfiguration {
  Vec4 q2{};
  Vec4 q3{};
  Vec3 tau2{};
  Vec3 tau3{};
  std::array<cplx, 13> coordinates() const;
};
NormalizedConfiguration normalize_configuration(const CalibratedConfiguration& cfg);

// ---------------------------------------------------------------------------
// Multi-view consistency

/// Matrices whose rank drop characterizes membership in the multi-view
/// variety of the correspondence kind (none for PLL, which is the trilinear
/// form itself).
std::vector<CMatrix> multiview_matrices(const Camera& a, const Camera& b, const Camera& c,
                                        const Correspondence& data);

struct ConsistencyTolerances {
  double rank_ratio = kDefaultRankRatio;
  /// When set, a matrix counts as rank deficient iff its smallest singular
  /// value is at most this fraction of the largest (used for truncated data).
  std::optional<double> relative_singular_value;
  /// Normalized trilinear value below which a PLL triple counts as satisfied.
  double scalar = 1e-7;
  /// Minimum normalized distance of a point from, or of a line to, an epipole.
  double epipole = 1e-6;
};

struct MultiviewResidual {
  Kind kind = Kind::PLL;
  /// Singular values of each matrix in `multiview_matrices` order.
  std::vector<std::vector<double>> spectra;
  /// Largest over the matrices of sigma_min / sigma_max; the normalized
  /// trilinear value for PLL.
  double worst_relative = 0.0;
  bool rank_drop = false;
};

MultiviewResidual multiview_residual(const Camera& a, const Camera& b, const Camera& c, const Correspondence& data,
                                     const ConsistencyTolerances& tol = {});

/// Every point differs from both epipoles in its view and every line misses
/// both. Throws kDegenerate when two centers coincide.
bool avoids_epipoles(const Camera& a, const Camera& b, const Camera& c, const Correspondence& data,
                     double tol = 1e-6);

bool consistency_check(const Camera& a, const Camera& b, const Camera& c, const Correspondence& data,
                       const ConsistencyTolerances& tol = {});

}  // namespace trifocal
