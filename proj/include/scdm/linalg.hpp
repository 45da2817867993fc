#pragma once

// Dense real-matrix kernels. Matrices are column-major; entry (i, j) lives at
// data[i + j * rows]. Every other module is written against this layout.

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace scdm {

using Index = std::size_t;

class Matrix {
 public:
  Matrix() = default;
  Matrix(Index rows, Index cols);
  Matrix(Index rows, Index cols, std::vector<double> data);

  static Matrix identity(Index n);
  /// Row-wise literal, e.g. from_rows({{1, 2}, {3, 4}}).
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(Index i, Index j) noexcept { return data_[i + j * rows_]; }
  double operator()(Index i, Index j) const noexcept { return data_[i + j * rows_]; }

  std::span<double> col(Index j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(Index j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<const double> values() const noexcept { return data_; }

  Matrix transposed() const;
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
/// max |a^T a - I|, the orthonormality defect of the columns of a.
double orthonormality_defect(const Matrix& a);

/// Worker count for gemm (>= 1). Process-wide.
void set_gemm_threads(int threads);

enum class Op { kNone, kTranspose };

/// op(a) * op(b). Throws kDimensionMismatch on incompatible shapes.
Matrix gemm(const Matrix& a, const Matrix& b, Op op_a = Op::kNone, Op op_b = Op::kNone);

/// Rows `rows` of a, in the given order.
Matrix select_rows(const Matrix& a, std::span<const Index> rows);
/// (a_{rows,:})^T, i.e. the sub-block stored column-per-row. This is the
/// layout every pivoted factorization in the pipeline consumes.
Matrix select_rows_transposed(const Matrix& a, std::span<const Index> rows);
Matrix select_cols(const Matrix& a, std::span<const Index> cols);

/// Column permutation. map()[k] is the original column placed at position k.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(Index n);
  explicit Permutation(std::vector<Index> map);

  static Permutation identity(Index n) { return Permutation(n); }

  Index size() const noexcept { return map_.size(); }
  Index operator[](Index k) const noexcept { return map_[k]; }
  std::span<const Index> map() const noexcept { return map_; }

  void swap(Index a, Index b) noexcept;
  Permutation inverse() const;
  /// (this ∘ other)[k] = this[other[k]].
  Permutation compose(const Permutation& other) const;
  /// Returns a with its columns reordered: result(:, k) = a(:, map[k]).
  Matrix apply_to_columns(const Matrix& a) const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Index> map_;
};

/// Householder QR of a tall matrix with nonnegative diag(R).
struct HouseholderQr {
  Matrix factors;            // R on and above the diagonal, reflector tails below
  std::vector<double> tau;   // H_k = I - tau_k v_k v_k^T, v_k(k) = 1

  Matrix r() const;
  /// The m-by-n orthonormal factor.
  Matrix thin_q() const;
};

HouseholderQr householder_qr(Matrix a);

struct QrcpOptions {
  /// Stop after this many pivots (clamped to min(rows, cols)).
  Index max_steps = std::numeric_limits<Index>::max();
  /// A downdated residual norm is recomputed from scratch once it drops below
  /// this fraction of its last recomputed value.
  double recompute_ratio = 1e-3;
  int threads = 1;
};

/// Column-pivoted QR, A * P = Q * R. Pivots follow the greedy max residual
/// norm rule with ties going to the lowest original column index.
struct QrcpResult {
  Permutation pivots;
  Matrix factors;            // compact Householder storage, same shape as A
  std::vector<double> tau;   // one per completed step
  Index steps = 0;
  Index rank_hint = 0;       // count of |R_kk| > max(m, n) * eps * |R_11|

  /// First k pivot columns, in pivot order.
  std::vector<Index> leading(Index k) const;
  std::vector<double> r_diagonal() const;
  /// steps-by-cols upper trapezoidal R, columns in pivot order.
  Matrix rfactor() const;
  /// rows-by-steps orthonormal Q.
  Matrix thin_q() const;
};

QrcpResult qrcp(Matrix a, const QrcpOptions& options = {});

/// Upper-triangular R with R^T R = s. Throws kNotPositiveDefinite naming the
/// failing pivot.
Matrix cholesky(const Matrix& s);

/// sigma_max / sigma_min via one-sided Jacobi. Returns +inf when the matrix is
/// numerically rank deficient.
double condition_estimate(const Matrix& a);

/// Singular values of a (rows >= cols), descending.
std::vector<double> singular_values(const Matrix& a);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Cyclic Jacobi eigensolver for a small symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& s);

/// Solves R x = b in place for upper-triangular R.
void solve_upper(const Matrix& r, std::span<double> b);

}  // namespace scdm
