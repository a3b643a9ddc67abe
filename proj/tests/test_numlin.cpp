#include <doctest.h>

#include "core/numlin.hpp"
#include "core/rng.hpp"
#include "test_util.hpp"

using namespace trifocal;
using namespace trifocal::testing;

TEST_SUITE("numlin") {

TEST_CASE("svd reconstructs the matrix with unitary frames") {
  Rng rng(11);
  for (auto [r, c] : {std::pair{5, 3}, std::pair{3, 5}, std::pair{4, 4}, std::pair{27, 13}}) {
    const CMatrix m = rng.gaussian_matrix(r, c);
    const SingularSpectrum s = svd(m);
    REQUIRE(static_cast<int>(s.values.size()) == std::min(r, c));
    CHECK(std::is_sorted(s.values.rbegin(), s.values.rend()));
    CMatrix sigma(r, c);
    for (size_t i = 0; i < s.values.size(); ++i) sigma(static_cast<int>(i), static_cast<int>(i)) = s.values[i];
    const CMatrix back = s.u * sigma * s.v.adjoint();
    CHECK((back - m).frobenius_norm() <= 1e-12 * m.frobenius_norm());
    CHECK((s.u.adjoint() * s.u - CMatrix::identity(r)).frobenius_norm() <= 1e-12);
    CHECK((s.v.adjoint() * s.v - CMatrix::identity(c)).frobenius_norm() <= 1e-12);
  }
}

TEST_CASE("singular values are roots of the characteristic polynomial of the Gram matrix") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix m = rng.gaussian_matrix(4, 3);
    const CMatrix gram = m.adjoint() * m;
    for (double sigma : singular_values(m)) {
      CMatrix shifted = gram - CMatrix::identity(3) * cplx(sigma * sigma);
      const double scale = std::pow(gram.frobenius_norm(), 3);
      CHECK(std::abs(leibniz_det(shifted)) <= 1e-11 * scale);
    }
  }
}

TEST_CASE("numerical rank follows the singular value gap") {
  Rng rng(13);
  for (int rank = 0; rank <= 4; ++rank) {
    CMatrix m(6, 5);
    if (rank > 0) m = rng.gaussian_matrix(6, rank) * rng.gaussian_matrix(rank, 5);
    CHECK(numerical_rank(m) == rank);
    // Noise well below the gap does not change the rank.
    CMatrix noisy = m + rng.gaussian_matrix(6, 5) * cplx(1e-13);
    if (rank > 0) CHECK(numerical_rank(noisy) == rank);
  }
  const std::vector<double> values{1.0, 0.5, 1e-9, 1e-10};
  CHECK(numerical_rank(values) == 2);
  const std::vector<double> flat{1.0, 0.9, 0.8};
  CHECK(numerical_rank(flat) == 3);
}

TEST_CASE("nullspace spans the kernel") {
  Rng rng(14);
  const CMatrix m = rng.gaussian_matrix(3, 2) * rng.gaussian_matrix(2, 6);
  const CMatrix n = nullspace(m);
  REQUIRE(n.cols() == 4);
  CHECK((m * n).frobenius_norm() <= 1e-12 * m.frobenius_norm());
  CHECK((n.adjoint() * n - CMatrix::identity(4)).frobenius_norm() <= 1e-12);
}

TEST_CASE("determinants agree with the Leibniz expansion") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix m4 = rng.gaussian_matrix(4, 4);
    const cplx reference = leibniz_det(m4);
    CHECK(std::abs(det4(m4) - reference) <= 1e-12 * std::max(1.0, std::abs(reference)));
    CHECK(std::abs(determinant(m4) - reference) <= 1e-12 * std::max(1.0, std::abs(reference)));
    const CMatrix m5 = rng.gaussian_matrix(5, 5);
    const cplx r5 = leibniz_det(m5);
    CHECK(std::abs(determinant(m5) - r5) <= 1e-12 * std::max(1.0, std::abs(r5)));
  }
  CHECK(std::abs(det4(CMatrix::identity(4)) - 1.0) == 0.0);
}

TEST_CASE("linear solve") {
  Rng rng(16);
  const CMatrix a = rng.gaussian_matrix(7, 7);
  const std::vector<cplx> x = a.column(0);
  const std::vector<cplx> b = a.apply(x);
  std::vector<cplx> work = a.data();
  std::vector<cplx> sol = b;
  REQUIRE(lu_solve_inplace(work, 7, sol));
  for (int i = 0; i < 7; ++i) CHECK(std::abs(sol[i] - x[i]) <= 1e-10);
  std::vector<cplx> singular(9, cplx{});
  std::vector<cplx> rhs(3, cplx{1.0});
  CHECK_FALSE(lu_solve_inplace(singular, 3, rhs));
}

TEST_CASE("projective normalization and distance") {
  const std::vector<cplx> v{cplx(0, 2), 1.0, 0.0};
  const auto n = normalize_projective(v);
  CHECK(norm2(n) == doctest::Approx(1.0));
  CHECK(std::abs(n[0].imag()) <= 1e-15);
  CHECK(n[0].real() > 0.0);
  std::vector<cplx> scaled(v);
  for (auto& z : scaled) z *= cplx(-3.0, 4.0);
  CHECK(projective_distance(v, scaled) <= 1e-15);
  const std::vector<cplx> e1{1.0, 0.0}, tilted{1.0, 1e-9};
  CHECK(projective_distance(e1, tilted) == doctest::Approx(1e-9).epsilon(1e-6));
  const std::vector<cplx> e2{0.0, 1.0};
  CHECK(projective_distance(e1, e2) == doctest::Approx(1.0));
}

TEST_CASE("matrix construction rejects bad input") {
  CHECK_THROWS_AS(CMatrix(2, 2, std::vector<cplx>(3)), Error);
  CHECK_THROWS_AS(CMatrix(1, 1, std::vector<cplx>{cplx(std::nan(""), 0.0)}), Error);
}

}
