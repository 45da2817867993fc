#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "scdm/error.hpp"
#include "scdm/linalg.hpp"

using namespace scdm;

namespace {

double rel_frobenius_diff(const Matrix& a, const Matrix& b) {
  double num = 0.0;
  double den = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    num += (a.data()[k] - b.data()[k]) * (a.data()[k] - b.data()[k]);
    den += b.data()[k] * b.data()[k];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("gemm: identity times B returns B") {
  const Matrix b = oracle::random_matrix(3, 4, 1);
  CHECK(gemm(Matrix::identity(3), b) == b);
}

TEST_CASE("gemm: hand-checked 2x2 by 2x1") {
  const Matrix c = gemm(Matrix::from_rows({{1, 2}, {3, 4}}), Matrix::from_rows({{0}, {1}}));
  CHECK(c == Matrix::from_rows({{2}, {4}}));
}

TEST_CASE("gemm: random 50x30 by 30x20 matches the triple-loop oracle") {
  const Matrix a = oracle::random_matrix(50, 30, 2);
  const Matrix b = oracle::random_matrix(30, 20, 3);
  CHECK(rel_frobenius_diff(gemm(a, b), oracle::naive_gemm(a, b)) <= 1e-13);
}

TEST_CASE("gemm: transposed operands and tall shapes match the oracle") {
  const Matrix a = oracle::random_matrix(9000, 17, 4);
  const Matrix b = oracle::random_matrix(17, 16, 5);
  const Matrix c = oracle::random_matrix(9000, 16, 6);
  const Matrix at = oracle::naive_transpose(a);
  const Matrix bt = oracle::naive_transpose(b);
  CHECK(rel_frobenius_diff(gemm(a, b), oracle::naive_gemm(a, b)) <= 1e-13);
  CHECK(rel_frobenius_diff(gemm(a, bt, Op::kNone, Op::kTranspose), oracle::naive_gemm(a, b)) <= 1e-13);
  CHECK(rel_frobenius_diff(gemm(a, c, Op::kTranspose, Op::kNone), oracle::naive_gemm(at, c)) <= 1e-13);
  CHECK(rel_frobenius_diff(gemm(at, b, Op::kTranspose, Op::kNone), oracle::naive_gemm(a, b)) <= 1e-13);
}

TEST_CASE("gemm: threaded split gives the oracle result and is repeatable") {
  const Matrix a = oracle::random_matrix(20000, 8, 7);
  const Matrix b = oracle::random_matrix(8, 8, 8);
  set_gemm_threads(3);
  const Matrix c1 = gemm(a, b);
  const Matrix g1 = gemm(a, a, Op::kTranspose, Op::kNone);
  const Matrix g2 = gemm(a, a, Op::kTranspose, Op::kNone);
  set_gemm_threads(1);
  CHECK(rel_frobenius_diff(c1, oracle::naive_gemm(a, b)) <= 1e-13);
  CHECK(rel_frobenius_diff(g1, oracle::naive_gemm(oracle::naive_transpose(a), a)) <= 1e-13);
  CHECK(g1 == g2);
}

TEST_CASE("gemm: mismatched inner dimensions throw") {
  try {
    (void)gemm(Matrix(2, 3), Matrix(2, 3));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("householder_qr: identity") {
  const HouseholderQr f = householder_qr(Matrix::identity(4));
  CHECK(oracle::max_abs_diff(f.r(), Matrix::identity(4)) == 0.0);
  CHECK(oracle::max_abs_diff(f.thin_q(), Matrix::identity(4)) == 0.0);
}

TEST_CASE("householder_qr: single column [3, 4]") {
  const HouseholderQr f = householder_qr(Matrix::from_rows({{3}, {4}}));
  CHECK(f.r()(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
  const Matrix q = f.thin_q();
  CHECK(q(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(q(1, 0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("householder_qr: random 40x10 orthonormality and residual") {
  const Matrix a = oracle::random_matrix(40, 10, 11);
  const HouseholderQr f = householder_qr(a);
  const Matrix q = f.thin_q();
  const Matrix r = f.r();
  CHECK(oracle::gram_defect(q) <= 1e-13);
  CHECK(rel_frobenius_diff(oracle::naive_gemm(q, r), a) <= 1e-13);
  for (Index k = 0; k < r.cols(); ++k) CHECK(r(k, k) >= 0.0);
}

TEST_CASE("householder_qr: sign convention makes the factorization unique") {
  // Two different orthogonal transforms of the same matrix must give the same
  // R because diag(R) >= 0 pins it down.
  const Matrix a = oracle::random_matrix(30, 8, 12);
  const HouseholderQr f1 = householder_qr(a);
  const Matrix u = oracle::random_orthonormal(30, 30, 13);
  const HouseholderQr f2 = householder_qr(oracle::naive_gemm(u, a));
  CHECK(oracle::max_abs_diff(f1.r(), f2.r()) <= 1e-12);
  // Same for a row-shuffled copy: Q changes by the row permutation only.
  std::vector<Index> perm(30);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 gen(14);
  std::shuffle(perm.begin(), perm.end(), gen);
  const HouseholderQr f3 = householder_qr(select_rows(a, perm));
  CHECK(oracle::max_abs_diff(f1.r(), f3.r()) <= 1e-12);
  CHECK(oracle::max_abs_diff(select_rows(f1.thin_q(), perm), f3.thin_q()) <= 1e-12);
}

TEST_CASE("householder_qr: rejects wide input") {
  CHECK_THROWS_AS(householder_qr(Matrix(2, 3)), Error);
}

TEST_CASE("qrcp: diag(3, 4) pivots (2, 1) with |R| diagonal (4, 3)") {
  const QrcpResult f = qrcp(Matrix::from_rows({{3, 0}, {0, 4}}));
  CHECK(f.leading(2) == std::vector<Index>{1, 0});
  const auto d = f.r_diagonal();
  CHECK(std::abs(d[0]) == doctest::Approx(4.0));
  CHECK(std::abs(d[1]) == doctest::Approx(3.0));
}

TEST_CASE("qrcp: identity keeps ascending order under lowest-index ties") {
  const QrcpResult f = qrcp(Matrix::identity(7));
  std::vector<Index> expect(7);
  std::iota(expect.begin(), expect.end(), Index{0});
  CHECK(f.leading(7) == expect);
}

TEST_CASE("qrcp: [[1,0,2],[0,1,0]] picks column 3 then column 2") {
  const QrcpResult f = qrcp(Matrix::from_rows({{1, 0, 2}, {0, 1, 0}}));
  CHECK(f.leading(2) == std::vector<Index>{2, 1});
  CHECK(f.leading(2) == oracle::naive_qrcp_pivots(Matrix::from_rows({{1, 0, 2}, {0, 1, 0}}), 2));
}

TEST_CASE("qrcp: pivot sequence equals the re-normalizing oracle on 200 random matrices") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<Index> rows_dist(1, 50);
  std::uniform_int_distribution<Index> cols_dist(1, 200);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const Index m = rows_dist(gen);
    const Index n = cols_dist(gen);
    Matrix a = oracle::random_matrix(m, n, 1000 + t);
    // Every fourth case plants exact duplicate columns and scaled copies to
    // exercise tie-breaking.
    if (t % 4 == 0 && n > 3) {
      std::uniform_int_distribution<Index> pick(0, n - 1);
      for (int d = 0; d < 3; ++d) {
        const Index src = pick(gen);
        const Index dst = pick(gen);
        std::copy(a.col(src).begin(), a.col(src).end(), a.col(dst).begin());
      }
    }
    if (t % 7 == 0) {
      // Tie-only matrix: identical norms everywhere.
      a = Matrix(m, n);
      for (Index j = 0; j < n; ++j) a(j % m, j) = 1.0;
    }
    const auto expect = oracle::naive_qrcp_pivots(a, std::min(m, n));
    const QrcpResult f = qrcp(a);
    if (f.leading(f.steps) != expect) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("qrcp: pivots are identical across thread counts") {
  const Matrix a = oracle::random_matrix(40, 3000, 31);
  QrcpOptions one;
  QrcpOptions four;
  four.threads = 4;
  const QrcpResult f1 = qrcp(a, one);
  const QrcpResult f4 = qrcp(a, four);
  CHECK(f1.pivots == f4.pivots);
  CHECK(f1.factors == f4.factors);
}

TEST_CASE("qrcp: reconstruction and monotone |R| on random matrices up to 2000x200") {
  const std::pair<Index, Index> shapes[] = {{5, 5}, {30, 80}, {200, 40}, {2000, 200}, {64, 1000}};
  std::uint64_t seed = 77;
  for (auto [m, n] : shapes) {
    const Matrix a = oracle::random_matrix(m, n, seed++);
    const QrcpResult f = qrcp(a);
    const Matrix ap = f.pivots.apply_to_columns(a);
    const Matrix qr = oracle::naive_gemm(f.thin_q(), f.rfactor());
    double num = 0.0;
    double den = 0.0;
    for (Index k = 0; k < a.size(); ++k) {
      num += (ap.data()[k] - qr.data()[k]) * (ap.data()[k] - qr.data()[k]);
      den += a.data()[k] * a.data()[k];
    }
    CHECK(std::sqrt(num) <= 1e-12 * std::sqrt(den));
    const auto d = f.r_diagonal();
    for (Index k = 0; k + 1 < d.size(); ++k) {
      CHECK(std::abs(d[k]) >= std::abs(d[k + 1]));
      CHECK(d[k] >= 0.0);
    }
  }
}

TEST_CASE("qrcp: max_steps truncates and rank_hint sees rank deficiency") {
  Matrix a = oracle::naive_gemm(oracle::random_matrix(30, 3, 5), oracle::random_matrix(3, 20, 6));
  QrcpOptions opts;
  opts.max_steps = 2;
  CHECK(qrcp(a, opts).steps == 2);
  CHECK(qrcp(a).rank_hint == 3);
}

TEST_CASE("qrcp: norm downdating survives heavy cancellation") {
  // Columns nearly parallel to the first pivot lose almost all of their norm
  // at step one, which forces the recompute path.
  Matrix a = oracle::random_matrix(20, 60, 9);
  for (Index j = 1; j < 60; ++j)
    for (Index i = 0; i < 20; ++i) a(i, j) = 1e3 * a(i, 0) + a(i, j) * 1e-6 * static_cast<double>(j);
  for (Index i = 0; i < 20; ++i) a(i, 0) *= 2e3;
  CHECK(qrcp(a).leading(20) == oracle::naive_qrcp_pivots(a, 20));
}

TEST_CASE("cholesky: identity") { CHECK(cholesky(Matrix::identity(5)) == Matrix::identity(5)); }

TEST_CASE("cholesky: [[4,2],[2,2]] gives [[2,1],[0,1]]") {
  const Matrix r = cholesky(Matrix::from_rows({{4, 2}, {2, 2}}));
  CHECK(oracle::max_abs_diff(r, Matrix::from_rows({{2, 1}, {0, 1}})) <= 1e-15);
}

TEST_CASE("cholesky: M^T M residual for random 20x10 M") {
  const Matrix m = oracle::random_matrix(20, 10, 21);
  const Matrix s = oracle::naive_gemm(oracle::naive_transpose(m), m);
  const Matrix r = cholesky(s);
  CHECK(oracle::max_abs_diff(oracle::naive_gemm(oracle::naive_transpose(r), r), s) <= 1e-12 * oracle::max_abs(s));
}

TEST_CASE("cholesky: indefinite input names the failing pivot") {
  try {
    (void)cholesky(Matrix::from_rows({{1, 2}, {2, 1}}));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotPositiveDefinite);
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("condition_estimate: identity, diag(10, 1) and orthonormal columns") {
  CHECK(condition_estimate(Matrix::identity(6)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(condition_estimate(Matrix::from_rows({{10, 0}, {0, 1}})) == doctest::Approx(10.0).epsilon(1e-14));
  const double k = condition_estimate(oracle::random_orthonormal(100, 10, 41));
  CHECK(std::abs(k - 1.0) <= 1e-10);
}

TEST_CASE("condition_estimate: singular input is +inf") {
  CHECK(std::isinf(condition_estimate(Matrix::from_rows({{1, 1}, {1, 1}}))));
}

TEST_CASE("symmetric_eigen: reconstructs a random SPD matrix") {
  const Matrix m = oracle::random_matrix(30, 12, 51);
  const Matrix s = oracle::naive_gemm(oracle::naive_transpose(m), m);
  const SymmetricEigen e = symmetric_eigen(s);
  Matrix scaled = e.vectors;
  for (Index k = 0; k < 12; ++k)
    for (double& x : scaled.col(k)) x *= e.values[k];
  CHECK(oracle::max_abs_diff(oracle::naive_gemm(scaled, oracle::naive_transpose(e.vectors)), s) <=
        1e-12 * oracle::max_abs(s));
  CHECK(oracle::gram_defect(e.vectors) <= 1e-13);
  for (Index k = 0; k + 1 < 12; ++k) CHECK(e.values[k] <= e.values[k + 1]);
}

TEST_CASE("permutation: validates, inverts and composes") {
  CHECK_THROWS_AS(Permutation(std::vector<Index>{0, 0, 1}), Error);
  const Permutation p(std::vector<Index>{2, 0, 1});
  CHECK(p.compose(p.inverse()) == Permutation::identity(3));
  const Matrix a = Matrix::from_rows({{1, 2, 3}});
  CHECK(p.apply_to_columns(a) == Matrix::from_rows({{3, 1, 2}}));
}

TEST_CASE("select_rows_transposed equals the transpose of select_rows") {
  const Matrix a = oracle::random_matrix(300, 7, 61);
  const std::vector<Index> rows{5, 299, 0, 17, 17, 100};
  CHECK(select_rows_transposed(a, rows) == oracle::naive_transpose(select_rows(a, rows)));
  CHECK(a.transposed() == oracle::naive_transpose(a));
}
