#include "scdm/linalg.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <climits>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "scdm/error.hpp"
#include "scdm/parallel.hpp"

namespace scdm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double dot(const double* x, const double* y, Index n) noexcept {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_squares(const double* x, Index n) noexcept { return dot(x, x, n); }

// Overwrites x[0..len) with (beta, v_1..v_{len-1}) where (I - tau v v^T) x =
// beta e_1, v_0 = 1 and beta >= 0. Returns tau.
double make_reflector(double* x, Index len) noexcept {
  const double alpha = x[0];
  const double sigma = len > 1 ? sum_squares(x + 1, len - 1) : 0.0;
  if (sigma == 0.0) {
    if (alpha >= 0.0) return 0.0;
    x[0] = -alpha;
    return 2.0;
  }
  const double mu = std::sqrt(alpha * alpha + sigma);
  const double v0 = alpha <= 0.0 ? alpha - mu : -sigma / (alpha + mu);
  const double tau = 2.0 * v0 * v0 / (sigma + v0 * v0);
  for (Index i = 1; i < len; ++i) x[i] /= v0;
  x[0] = mu;
  return tau;
}

// c <- (I - tau v v^T) c with v[0] == 1 supplied explicitly.
inline void apply_reflector(const double* v, double tau, double* c, Index len) noexcept {
  const double w = tau * dot(v, c, len);
  for (Index i = 0; i < len; ++i) c[i] -= w * v[i];
}

std::vector<double> reflector_vector(const Matrix& factors, Index k) {
  const Index m = factors.rows();
  std::vector<double> v(m - k);
  v[0] = 1.0;
  for (Index i = k + 1; i < m; ++i) v[i - k] = factors(i, k);
  return v;
}

Matrix form_q(const Matrix& factors, std::span<const double> tau, Index steps) {
  const Index m = factors.rows();
  Matrix q(m, steps);
  for (Index j = 0; j < steps; ++j) q(j, j) = 1.0;
  for (Index kk = steps; kk-- > 0;) {
    if (tau[kk] == 0.0) continue;
    const auto v = reflector_vector(factors, kk);
    for (Index j = kk; j < steps; ++j) apply_reflector(v.data(), tau[kk], q.col(j).data() + kk, m - kk);
  }
  return q;
}

std::atomic<int> g_gemm_threads{1};

using ConstMap = Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
using MutMap = Eigen::Map<Eigen::MatrixXd, 0, Eigen::OuterStride<>>;

ConstMap view(const Matrix& a, Index row0, Index rows) {
  return ConstMap(a.data() + row0, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(a.cols()),
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(std::max<Index>(a.rows(), 1))));
}

// Rows per worker below which splitting a product is not worth a thread.
constexpr Index kGemmMinRows = 4096;

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(Index rows, Index cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(Index rows, Index cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix data length does not match its shape");
  }
}

Matrix Matrix::identity(Index n) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const Index r = rows.size();
  const Index c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorCode::kDimensionMismatch, "ragged row literal");
    Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  constexpr Index kBlock = 64;
  for (Index jb = 0; jb < cols_; jb += kBlock) {
    const Index je = std::min(cols_, jb + kBlock);
    for (Index ib = 0; ib < rows_; ib += kBlock) {
      const Index ie = std::min(rows_, ib + kBlock);
      for (Index j = jb; j < je; ++j)
        for (Index i = ib; i < ie; ++i) t(j, i) = (*this)(i, j);
    }
  }
  return t;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double frobenius_norm(const Matrix& a) {
  return std::sqrt(sum_squares(a.data(), a.size()));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double orthonormality_defect(const Matrix& a) {
  const Matrix g = gemm(a, a, Op::kTranspose, Op::kNone);
  return max_abs_diff(g, Matrix::identity(a.cols()));
}

// ---------------------------------------------------------------------------
// BLAS-backed product

void set_gemm_threads(int threads) { g_gemm_threads.store(std::max(threads, 1)); }

Matrix gemm(const Matrix& a, const Matrix& b, Op op_a, Op op_b) {
  const Index m = op_a == Op::kNone ? a.rows() : a.cols();
  const Index k = op_a == Op::kNone ? a.cols() : a.rows();
  const Index kb = op_b == Op::kNone ? b.rows() : b.cols();
  const Index n = op_b == Op::kNone ? b.cols() : b.rows();
  if (k != kb) {
    std::ostringstream msg;
    msg << "gemm: inner dimensions differ (" << k << " vs " << kb << ")";
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
  Matrix c(m, n);
  if (m == 0 || n == 0 || k == 0) return c;
  const ConstMap bm = view(b, 0, b.rows());
  const int threads = g_gemm_threads.load();

  if (op_a == Op::kNone) {
    // Row blocks of a give disjoint row blocks of c.
    const int workers = static_cast<int>(std::clamp<Index>(m / kGemmMinRows, 1, static_cast<Index>(threads)));
    parallel_chunks(0, m, workers, [&](Index, Index lo, Index hi) {
      const ConstMap ab = view(a, lo, hi - lo);
      MutMap cb(c.data() + lo, static_cast<Eigen::Index>(hi - lo), static_cast<Eigen::Index>(n),
                Eigen::OuterStride<>(static_cast<Eigen::Index>(m)));
      if (op_b == Op::kNone) {
        cb.noalias() = ab * bm;
      } else {
        cb.noalias() = ab * bm.transpose();
      }
    });
    return c;
  }

  // a^T op(b): split the long inner dimension and add the partial products in
  // chunk order, which keeps the result fixed for a given thread count.
  const int workers = static_cast<int>(std::clamp<Index>(k / kGemmMinRows, 1, static_cast<Index>(threads)));
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(chunk_count(0, k, workers)));
  parallel_chunks(0, k, workers, [&](Index chunk, Index lo, Index hi) {
    const ConstMap ab = view(a, lo, hi - lo);
    if (op_b == Op::kNone) {
      const ConstMap bb = view(b, lo, hi - lo);
      partial[chunk].noalias() = ab.transpose() * bb;
    } else {
      const auto bb = bm.middleCols(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo));
      partial[chunk].noalias() = ab.transpose() * bb.transpose();
    }
  });
  Eigen::Map<Eigen::MatrixXd> cm(c.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  cm = partial[0];
  for (std::size_t p = 1; p < partial.size(); ++p) cm += partial[p];
  return c;
}

Matrix select_rows(const Matrix& a, std::span<const Index> rows) {
  Matrix s(rows.size(), a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    const auto src = a.col(j);
    auto dst = s.col(j);
    for (Index k = 0; k < rows.size(); ++k) dst[k] = src[rows[k]];
  }
  return s;
}

Matrix select_rows_transposed(const Matrix& a, std::span<const Index> rows) {
  const Index nc = a.cols();
  Matrix t(nc, rows.size());
  constexpr Index kBlock = 64;
  for (Index kb = 0; kb < rows.size(); kb += kBlock) {
    const Index ke = std::min<Index>(rows.size(), kb + kBlock);
    for (Index c = 0; c < nc; ++c) {
      const double* src = a.col(c).data();
      for (Index k = kb; k < ke; ++k) t(c, k) = src[rows[k]];
    }
  }
  return t;
}

Matrix select_cols(const Matrix& a, std::span<const Index> cols) {
  Matrix s(a.rows(), cols.size());
  for (Index k = 0; k < cols.size(); ++k) std::copy_n(a.col(cols[k]).data(), a.rows(), s.col(k).data());
  return s;
}

// ---------------------------------------------------------------------------
// Permutation

Permutation::Permutation(Index n) : map_(n) { std::iota(map_.begin(), map_.end(), Index{0}); }

Permutation::Permutation(std::vector<Index> map) : map_(std::move(map)) {
  std::vector<char> seen(map_.size(), 0);
  for (Index x : map_) {
    if (x >= map_.size() || seen[x]) throw Error(ErrorCode::kInvalidArgument, "permutation map is not a bijection");
    seen[x] = 1;
  }
}

void Permutation::swap(Index a, Index b) noexcept { std::swap(map_[a], map_[b]); }

Permutation Permutation::inverse() const {
  std::vector<Index> inv(map_.size());
  for (Index k = 0; k < map_.size(); ++k) inv[map_[k]] = k;
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (other.size() != size()) throw Error(ErrorCode::kDimensionMismatch, "permutation sizes differ");
  std::vector<Index> out(size());
  for (Index k = 0; k < size(); ++k) out[k] = map_[other.map_[k]];
  return Permutation(std::move(out));
}

Matrix Permutation::apply_to_columns(const Matrix& a) const {
  if (a.cols() != size()) throw Error(ErrorCode::kDimensionMismatch, "permutation size differs from column count");
  return select_cols(a, map_);
}

// ---------------------------------------------------------------------------
// Householder QR

Matrix HouseholderQr::r() const {
  const Index n = factors.cols();
  Matrix r(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) r(i, j) = factors(i, j);
  return r;
}

Matrix HouseholderQr::thin_q() const { return form_q(factors, tau, factors.cols()); }

HouseholderQr householder_qr(Matrix a) {
  const Index m = a.rows();
  const Index n = a.cols();
  if (m < n) throw Error(ErrorCode::kDimensionMismatch, "householder_qr needs rows >= cols");
  HouseholderQr qr{std::move(a), std::vector<double>(n, 0.0)};
  Matrix& f = qr.factors;
  for (Index k = 0; k < n; ++k) {
    double* x = f.col(k).data() + k;
    qr.tau[k] = make_reflector(x, m - k);
    if (qr.tau[k] == 0.0) continue;
    const auto v = reflector_vector(f, k);
    for (Index j = k + 1; j < n; ++j) apply_reflector(v.data(), qr.tau[k], f.col(j).data() + k, m - k);
  }
  return qr;
}

// ---------------------------------------------------------------------------
// Column-pivoted QR

std::vector<Index> QrcpResult::leading(Index k) const {
  k = std::min(k, pivots.size());
  return {pivots.map().begin(), pivots.map().begin() + static_cast<std::ptrdiff_t>(k)};
}

std::vector<double> QrcpResult::r_diagonal() const {
  std::vector<double> d(steps);
  for (Index k = 0; k < steps; ++k) d[k] = factors(k, k);
  return d;
}

Matrix QrcpResult::rfactor() const {
  Matrix r(steps, factors.cols());
  for (Index j = 0; j < factors.cols(); ++j)
    for (Index i = 0; i <= std::min(j, steps - 1) && i < steps; ++i) r(i, j) = factors(i, j);
  return r;
}

Matrix QrcpResult::thin_q() const { return form_q(factors, tau, steps); }

QrcpResult qrcp(Matrix a, const QrcpOptions& options) {
  const Index m = a.rows();
  const Index n = a.cols();
  const Index steps = std::min({m, n, options.max_steps});

  QrcpResult res;
  res.pivots = Permutation(n);
  res.tau.assign(steps, 0.0);
  std::vector<double> partial(n);
  std::vector<double> reference(n);
  double largest = 0.0;
  for (Index j = 0; j < n; ++j) {
    partial[j] = reference[j] = sum_squares(a.col(j).data(), m);
    largest = std::max(largest, partial[j]);
  }
  // Residuals under the rank floor are rounding noise and compare as zero.
  const double floor_scale = static_cast<double>(std::max(m, n)) * kEps;
  const double floor2 = floor_scale * floor_scale * largest;
  auto eff = [&](Index j) { return partial[j] > floor2 ? partial[j] : 0.0; };

  // Position of the remaining column with the largest residual; ties go to the
  // lowest original index, not the lowest current position.
  auto better = [&](Index j, Index best) {
    const double x = eff(j);
    const double y = eff(best);
    return x > y || (x == y && res.pivots[j] < res.pivots[best]);
  };
  auto argmax_from = [&](Index lo, Index hi) {
    Index best = lo;
    for (Index j = lo + 1; j < hi; ++j)
      if (better(j, best)) best = j;
    return best;
  };

  Index pivot = n > 0 ? argmax_from(0, n) : 0;
  std::vector<double> v;
  for (Index k = 0; k < steps; ++k) {
    if (pivot != k) {
      std::swap_ranges(a.col(k).begin(), a.col(k).end(), a.col(pivot).begin());
      std::swap(partial[k], partial[pivot]);
      std::swap(reference[k], reference[pivot]);
      res.pivots.swap(k, pivot);
    }
    const Index len = m - k;
    res.tau[k] = make_reflector(a.col(k).data() + k, len);
    v = reflector_vector(a, k);
    const double tau = res.tau[k];

    const Index lo = k + 1;
    const Index chunks = chunk_count(lo, n, options.threads);
    std::vector<Index> best(chunks, n);
    parallel_chunks(lo, n, options.threads, [&](Index chunk, Index b, Index e) {
      Index local = n;
      for (Index j = b; j < e; ++j) {
        double* c = a.col(j).data() + k;
        if (tau != 0.0) apply_reflector(v.data(), tau, c, len);
        const double head = c[0];
        partial[j] -= head * head;
        if (partial[j] < options.recompute_ratio * reference[j]) {
          partial[j] = len > 1 ? sum_squares(c + 1, len - 1) : 0.0;
          reference[j] = partial[j];
        }
        if (local == n || better(j, local)) local = j;
      }
      best[chunk] = local;
    });
    pivot = n;
    for (Index cand : best) {
      if (cand == n) continue;
      if (pivot == n || better(cand, pivot)) pivot = cand;
    }
  }

  res.steps = steps;
  res.factors = std::move(a);
  if (steps > 0) {
    const double r11 = std::abs(res.factors(0, 0));
    const double tol = static_cast<double>(std::max(m, n)) * kEps * r11;
    for (Index k = 0; k < steps; ++k)
      if (std::abs(res.factors(k, k)) > tol) ++res.rank_hint;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Cholesky, triangular solve

Matrix cholesky(const Matrix& s) {
  const Index n = s.rows();
  if (s.cols() != n) throw Error(ErrorCode::kDimensionMismatch, "cholesky needs a square matrix");
  Matrix r(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      double x = s(i, j) - dot(r.col(i).data(), r.col(j).data(), i);
      r(i, j) = x / r(i, i);
    }
    const double d = s(j, j) - sum_squares(r.col(j).data(), j);
    if (!(d > 0.0)) {
      std::ostringstream msg;
      msg << "cholesky: matrix is not positive definite (non-positive pivot at index " << j << ")";
      throw Error(ErrorCode::kNotPositiveDefinite, msg.str());
    }
    r(j, j) = std::sqrt(d);
  }
  return r;
}

void solve_upper(const Matrix& r, std::span<double> b) {
  const Index n = r.rows();
  for (Index i = n; i-- > 0;) {
    double x = b[i];
    for (Index j = i + 1; j < n; ++j) x -= r(i, j) * b[j];
    b[i] = x / r(i, i);
  }
}

// ---------------------------------------------------------------------------
// Jacobi SVD / eigen

std::vector<double> singular_values(const Matrix& input) {
  Matrix u = input.rows() >= input.cols() ? input : input.transposed();
  const Index m = u.rows();
  const Index n = u.cols();
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        double* up = u.col(p).data();
        double* uq = u.col(q).data();
        const double alpha = sum_squares(up, m);
        const double beta = sum_squares(uq, m);
        const double gamma = dot(up, uq, m);
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < m; ++i) {
          const double x = up[i];
          const double y = uq[i];
          up[i] = c * x - s * y;
          uq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(n);
  for (Index j = 0; j < n; ++j) sv[j] = std::sqrt(sum_squares(u.col(j).data(), m));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

double condition_estimate(const Matrix& a) {
  if (a.empty()) return 1.0;
  const auto sv = singular_values(a);
  const double smax = sv.front();
  const double smin = sv.back();
  const double tol = static_cast<double>(std::max(a.rows(), a.cols())) * kEps * smax;
  if (smax == 0.0 || smin <= tol) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

SymmetricEigen symmetric_eigen(const Matrix& s) {
  const Index n = s.rows();
  if (s.cols() != n) throw Error(ErrorCode::kDimensionMismatch, "symmetric_eigen needs a square matrix");
  Matrix a = s;
  Matrix v = Matrix::identity(n);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    if (off <= kEps * kEps * total) break;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    std::copy_n(v.col(order[k]).data(), n, out.vectors.col(k).data());
  }
  return out;
}

}  // namespace scdm
