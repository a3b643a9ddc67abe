#pragma once

// Dense complex linear algebra used throughout the library: a small
// row-major matrix type, one-sided Jacobi SVD, numerical rank by the
// consecutive singular value gap rule, kernels and determinants.

#include <array>
#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

#include "core/error.hpp"

namespace trifocal {

using cplx = std::complex<double>;
using Vec3 = std::array<cplx, 3>;
using Vec4 = std::array<cplx, 4>;

class CMatrix {
public:
  CMatrix() = default;
  CMatrix(int rows, int cols);
  /// Takes ownership of row-major entries; throws on size mismatch or
  /// non-finite entries.
  CMatrix(int rows, int cols, std::vector<cplx> entries);
  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static CMatrix identity(int n);
  static CMatrix diagonal(std::span<const cplx> d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  cplx& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  const cplx& operator()(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }

  std::span<cplx> row(int r) { return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const cplx> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }
  std::vector<cplx> column(int c) const;

  const std::vector<cplx>& data() const { return data_; }
  std::vector<cplx>& data() { return data_; }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  CMatrix block(int r0, int c0, int nr, int nc) const;
  void set_block(int r0, int c0, const CMatrix& b);

  double frobenius_norm() const;
  bool all_finite() const;

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cplx s);

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b);
  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
  friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

  std::vector<cplx> apply(std::span<const cplx> x) const;

  static CMatrix hstack(std::initializer_list<const CMatrix*> parts);
  static CMatrix vstack(std::initializer_list<const CMatrix*> parts);
  static CMatrix column_vector(std::span<const cplx> v);
  static CMatrix row_vector(std::span<const cplx> v);

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<cplx> data_;
};

/// Singular values in nonincreasing order together with unitary frames:
/// m = u * diag(values) * v^H with u of size rows x rows and v of size
/// cols x cols. Only the leading min(rows, cols) columns of u and v pair
/// with a singular value.
struct SingularSpectrum {
  std::vector<double> values;
  CMatrix u;
  CMatrix v;
};

inline constexpr double kDefaultRankRatio = 1e5;
/// A gap only counts when the trailing value is below this fraction of the
/// largest singular value.
inline constexpr double kRankGuard = 1e-6;

SingularSpectrum svd(const CMatrix& m);
std::vector<double> singular_values(const CMatrix& m);

int numerical_rank(std::span<const double> sorted_values, double ratio_threshold = kDefaultRankRatio);
int numerical_rank(const CMatrix& m, double ratio_threshold = kDefaultRankRatio);

/// Orthonormal columns spanning the numerical kernel (possibly zero columns).
CMatrix nullspace(const CMatrix& m, double ratio_threshold = kDefaultRankRatio);

CMatrix skew_matrix(const Vec3& x);

cplx det4(const CMatrix& m);
/// LU determinant with partial pivoting; m must be square.
cplx determinant(const CMatrix& m);

/// Solves a * x = b in place for a small dense n x n system stored row-major
/// in `a` (destroyed). Returns false when a pivot vanishes. On success `b`
/// holds the solution.
bool lu_solve_inplace(std::span<cplx> a, int n, std::span<cplx> b);

double norm2(std::span<const cplx> v);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);   // sum a_i b_i
cplx cdot(std::span<const cplx> a, std::span<const cplx> b);  // sum conj(a_i) b_i

/// Unit Euclidean norm with the first coordinate of largest modulus rotated to
/// positive real phase. Zero vectors come back unchanged.
std::vector<cplx> normalize_projective(std::span<const cplx> v);

/// Distance between two points of projective space: the sine of the angle
/// between the lines they span, in [0, 1].
double projective_distance(std::span<const cplx> a, std::span<const cplx> b);

}  // namespace trifocal
