#include "core/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trifocal {

CMatrix::CMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols) {
  if (rows < 0 || cols < 0) throw Error(ErrorCode::kInvalidArgument, "negative matrix dimension");
}

CMatrix::CMatrix(int rows, int cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows < 0 || cols < 0 || data_.size() != static_cast<size_t>(rows) * cols)
    throw Error(ErrorCode::kInvalidArgument, "matrix entry count does not match its shape");
  if (!all_finite()) throw Error(ErrorCode::kInvalidArgument, "matrix has non-finite entries");
}

CMatrix::CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ ? static_cast<int>(rows.begin()->size()) : 0;
  data_.reserve(static_cast<size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_) throw Error(ErrorCode::kInvalidArgument, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw Error(ErrorCode::kInvalidArgument, "matrix has non-finite entries");
}

CMatrix CMatrix::identity(int n) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(std::span<const cplx> d) {
  const int n = static_cast<int>(d.size());
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = d[i];
  return m;
}

std::vector<cplx> CMatrix::column(int c) const {
  std::vector<cplx> out(rows_);
  for (int r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

CMatrix CMatrix::transpose() const {
  CMatrix out(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

CMatrix CMatrix::block(int r0, int c0, int nr, int nc) const {
  CMatrix out(nr, nc);
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) out(r, c) = (*this)(r0 + r, c0 + c);
  return out;
}

void CMatrix::set_block(int r0, int c0, const CMatrix& b) {
  for (int r = 0; r < b.rows(); ++r)
    for (int c = 0; c < b.cols(); ++c) (*this)(r0 + r, c0 + c) = b(r, c);
}

double CMatrix::frobenius_norm() const { return norm2(data_); }

bool CMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw Error(ErrorCode::kInvalidArgument, "shape mismatch in +");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw Error(ErrorCode::kInvalidArgument, "shape mismatch in -");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.cols_ != b.rows_) throw Error(ErrorCode::kInvalidArgument, "shape mismatch in *");
  CMatrix out(a.rows_, b.cols_);
  for (int i = 0; i < a.rows_; ++i)
    for (int k = 0; k < a.cols_; ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      for (int j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

std::vector<cplx> CMatrix::apply(std::span<const cplx> x) const {
  if (static_cast<int>(x.size()) != cols_) throw Error(ErrorCode::kInvalidArgument, "shape mismatch in apply");
  std::vector<cplx> y(rows_);
  for (int r = 0; r < rows_; ++r) y[r] = dot(row(r), x);
  return y;
}

CMatrix CMatrix::hstack(std::initializer_list<const CMatrix*> parts) {
  int rows = -1, cols = 0;
  for (const auto* p : parts) {
    if (rows >= 0 && p->rows() != rows) throw Error(ErrorCode::kInvalidArgument, "hstack row mismatch");
    rows = p->rows();
    cols += p->cols();
  }
  CMatrix out(std::max(rows, 0), cols);
  int c0 = 0;
  for (const auto* p : parts) {
    out.set_block(0, c0, *p);
    c0 += p->cols();
  }
  return out;
}

CMatrix CMatrix::vstack(std::initializer_list<const CMatrix*> parts) {
  int cols = -1, rows = 0;
  for (const auto* p : parts) {
    if (cols >= 0 && p->cols() != cols) throw Error(ErrorCode::kInvalidArgument, "vstack column mismatch");
    cols = p->cols();
    rows += p->rows();
  }
  CMatrix out(rows, std::max(cols, 0));
  int r0 = 0;
  for (const auto* p : parts) {
    out.set_block(r0, 0, *p);
    r0 += p->rows();
  }
  return out;
}

CMatrix CMatrix::column_vector(std::span<const cplx> v) {
  return CMatrix(static_cast<int>(v.size()), 1, std::vector<cplx>(v.begin(), v.end()));
}

CMatrix CMatrix::row_vector(std::span<const cplx> v) {
  return CMatrix(1, static_cast<int>(v.size()), std::vector<cplx>(v.begin(), v.end()));
}

namespace {

// One-sided Jacobi on a tall matrix (rows >= cols). On return `work` holds
// u * diag(sigma) in its columns and `v` the accumulated right rotations.
void jacobi_tall(CMatrix& work, CMatrix& v) {
  const int m = work.rows();
  const int n = work.cols();
  v = CMatrix::identity(n);
  constexpr int kMaxSweeps = 80;
  constexpr double kEps = 1e-15;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0;
        cplx gamma{};
        for (int r = 0; r < m; ++r) {
          const cplx ap = work(r, p), aq = work(r, q);
          alpha += std::norm(ap);
          beta += std::norm(aq);
          gamma += std::conj(ap) * aq;
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const cplx phase = std::conj(gamma) / g;  // e^{-i phi}
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < m; ++r) {
          const cplx ap = work(r, p), aq = phase * work(r, q);
          work(r, p) = c * ap - s * aq;
          work(r, q) = s * ap + c * aq;
        }
        for (int r = 0; r < n; ++r) {
          const cplx vp = v(r, p), vq = phase * v(r, q);
          v(r, p) = c * vp - s * vq;
          v(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
  throw Error(ErrorCode::kNumerical, "svd: Jacobi sweeps did not converge");
}

// Extends the first `k` orthonormal columns of `u` to a full unitary basis.
void complete_basis(CMatrix& u, int k) {
  const int m = u.rows();
  int filled = k;
  for (int e = 0; e < m && filled < m; ++e) {
    std::vector<cplx> cand(m);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < filled; ++j) {
        cplx proj{};
        for (int r = 0; r < m; ++r) proj += std::conj(u(r, j)) * cand[r];
        for (int r = 0; r < m; ++r) cand[r] -= proj * u(r, j);
      }
    }
    const double nrm = norm2(cand);
    if (nrm < 1e-8) continue;
    for (int r = 0; r < m; ++r) u(r, filled) = cand[r] / nrm;
    ++filled;
  }
}

SingularSpectrum svd_tall(const CMatrix& m) {
  const int rows = m.rows();
  const int cols = m.cols();
  CMatrix work = m;
  CMatrix v;
  jacobi_tall(work, v);

  std::vector<double> sigma(cols);
  for (int c = 0; c < cols; ++c) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r) s += std::norm(work(r, c));
    sigma[c] = std::sqrt(s);
  }
  std::vector<int> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sigma[a] > sigma[b]; });

  SingularSpectrum out;
  out.values.resize(cols);
  out.u = CMatrix(rows, rows);
  out.v = CMatrix(cols, cols);
  const double tiny = (sigma.empty() ? 0.0 : sigma[order[0]]) * 1e-300;
  int nonzero = 0;
  for (int k = 0; k < cols; ++k) {
    const int c = order[k];
    out.values[k] = sigma[c];
    for (int r = 0; r < cols; ++r) out.v(r, k) = v(r, c);
    if (sigma[c] > tiny && sigma[c] > 0.0) {
      for (int r = 0; r < rows; ++r) out.u(r, k) = work(r, c) / sigma[c];
      nonzero = k + 1;
    }
  }
  // Columns for vanishing singular values are replaced by an orthonormal
  // completion; the leading columns are already orthonormal.
  complete_basis(out.u, nonzero);
  return out;
}

}  // namespace

SingularSpectrum svd(const CMatrix& m) {
  if (!m.all_finite()) throw Error(ErrorCode::kInvalidArgument, "svd: non-finite input");
  if (m.rows() >= m.cols()) return svd_tall(m);
  SingularSpectrum t = svd_tall(m.adjoint());
  SingularSpectrum out;
  out.values = std::move(t.values);
  out.u = std::move(t.v);
  out.v = std::move(t.u);
  return out;
}

std::vector<double> singular_values(const CMatrix& m) { return svd(m).values; }

int numerical_rank(std::span<const double> s, double ratio_threshold) {
  if (!(ratio_threshold > 1.0)) throw Error(ErrorCode::kInvalidArgument, "rank ratio threshold must exceed 1");
  if (s.empty() || s[0] == 0.0) return 0;
  const int n = static_cast<int>(s.size());
  for (int k = 0; k + 1 < n; ++k) {
    const double next = s[k + 1];
    const bool gap = next == 0.0 || s[k] / next > ratio_threshold;
    if (gap && next < kRankGuard * s[0]) return k + 1;
  }
  return n;
}

int numerical_rank(const CMatrix& m, double ratio_threshold) {
  const auto s = singular_values(m);
  return numerical_rank(s, ratio_threshold);
}

CMatrix nullspace(const CMatrix& m, double ratio_threshold) {
  const auto spec = svd(m);
  const int rank = numerical_rank(spec.values, ratio_threshold);
  const int n = m.cols();
  CMatrix out(n, n - rank);
  for (int k = rank; k < n; ++k)
    for (int r = 0; r < n; ++r) out(r, k - rank) = spec.v(r, k);
  return out;
}

CMatrix skew_matrix(const Vec3& x) {
  return CMatrix{{0.0, -x[2], x[1]}, {x[2], 0.0, -x[0]}, {-x[1], x[0], 0.0}};
}

cplx det4(const CMatrix& m) {
  if (m.rows() != 4 || m.cols() != 4) throw Error(ErrorCode::kInvalidArgument, "det4 needs a 4x4 matrix");
  // Laplace expansion through 2x2 minors of the top and bottom row pairs.
  auto minor2 = [&](int r0, int r1, int c0, int c1) {
    return m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
  };
  return minor2(0, 1, 0, 1) * minor2(2, 3, 2, 3) - minor2(0, 1, 0, 2) * minor2(2, 3, 1, 3) +
         minor2(0, 1, 0, 3) * minor2(2, 3, 1, 2) + minor2(0, 1, 1, 2) * minor2(2, 3, 0, 3) -
         minor2(0, 1, 1, 3) * minor2(2, 3, 0, 2) + minor2(0, 1, 2, 3) * minor2(2, 3, 0, 1);
}

cplx determinant(const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::kInvalidArgument, "determinant of non-square matrix");
  const int n = m.rows();
  std::vector<cplx> a = m.data();
  cplx det = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(a[r * n + k]) > std::abs(a[piv * n + k])) piv = r;
    if (a[piv * n + k] == cplx{}) return 0.0;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      det = -det;
    }
    const cplx pivot = a[k * n + k];
    det *= pivot;
    for (int r = k + 1; r < n; ++r) {
      const cplx f = a[r * n + k] / pivot;
      if (f == cplx{}) continue;
      for (int c = k + 1; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
    }
  }
  return det;
}

bool lu_solve_inplace(std::span<cplx> a, int n, std::span<cplx> b) {
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a[k * n + k]);
    for (int r = k + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + k]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0 || !std::isfinite(best)) return false;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      std::swap(b[k], b[piv]);
    }
    const cplx inv = 1.0 / a[k * n + k];
    for (int r = k + 1; r < n; ++r) {
      const cplx f = a[r * n + k] * inv;
      if (f == cplx{}) continue;
      for (int c = k + 1; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
      b[r] -= f * b[k];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    cplx acc = b[k];
    for (int c = k + 1; c < n; ++c) acc -= a[k * n + c] * b[c];
    b[k] = acc / a[k * n + k];
  }
  return true;
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

cplx cdot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

std::vector<cplx> normalize_projective(std::span<const cplx> v) {
  std::vector<cplx> out(v.begin(), v.end());
  const double nrm = norm2(v);
  if (nrm == 0.0) return out;
  size_t lead = 0;
  for (size_t i = 1; i < out.size(); ++i)
    if (std::abs(out[i]) > std::abs(out[lead]) * (1.0 + 1e-12)) lead = i;
  const cplx phase = std::conj(out[lead]) / std::abs(out[lead]);
  for (auto& z : out) z *= phase / nrm;
  return out;
}

double projective_distance(std::span<const cplx> a, std::span<const cplx> b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 1.0;
  // Norm of the component of a/|a| orthogonal to b; stays accurate for
  // nearly parallel vectors where sqrt(1 - cos^2) would not.
  const cplx proj = cdot(b, a) / (na * nb);
  double r = 0.0;
  for (size_t i = 0; i < a.size(); ++i) r += std::norm(a[i] / na - proj * b[i] / nb);
  return std::min(1.0, std::sqrt(r));
}

}  // namespace trifocal
