#include "scdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scdm/error.hpp"

namespace scdm {

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const Index n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

LocalityReport truncated_sparsity(const Matrix& phi, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  LocalityReport rep;
  rep.tau = tau;
  rep.fractions.resize(phi.cols());
  for (Index i = 0; i < phi.cols(); ++i) {
    const auto c = phi.col(i);
    double peak = 0.0;
    for (double x : c) peak = std::max(peak, std::abs(x));
    const double cut = tau * peak;
    Index kept = 0;
    for (double x : c) kept += std::abs(x) > cut ? 1 : 0;
    rep.fractions[i] = c.empty() ? 0.0 : static_cast<double>(kept) / static_cast<double>(c.size());
  }
  rep.median = median_of(rep.fractions);
  rep.max = rep.fractions.empty() ? 0.0 : *std::max_element(rep.fractions.begin(), rep.fractions.end());

  rep.histogram.resize(kHistogramBins);
  const double width = rep.max / static_cast<double>(kHistogramBins);
  for (Index b = 0; b < kHistogramBins; ++b) {
    rep.histogram[b].lo = width * static_cast<double>(b);
    rep.histogram[b].hi = b + 1 == kHistogramBins ? rep.max : width * static_cast<double>(b + 1);
  }
  for (double f : rep.fractions) {
    Index b = width > 0.0 ? static_cast<Index>(f / width) : 0;
    rep.histogram[std::min(b, kHistogramBins - 1)].count += 1;
  }
  return rep;
}

SpreadReport spread(const Matrix& phi, const Grid& grid, const Vec3& origin) {
  if (phi.rows() != grid.size()) throw Error(ErrorCode::kDimensionMismatch, "basis rows differ from the grid size");
  SpreadReport rep;
  rep.centers.resize(phi.cols());
  rep.spreads.resize(phi.cols());
  for (Index i = 0; i < phi.cols(); ++i) {
    const auto c = phi.col(i);
    // Two passes: weighted mean, then variance about it.
    Vec3 mean{0.0, 0.0, 0.0};
    double mass = 0.0;
    for (Index j = 0; j < c.size(); ++j) {
      const double w = c[j] * c[j];
      if (w == 0.0) continue;
      const Vec3 p = grid.position(j);
      for (int d = 0; d < 3; ++d) mean[d] += w * p[d];
      mass += w;
    }
    double var = 0.0;
    if (mass > 0.0) {
      for (double& x : mean) x /= mass;
      for (Index j = 0; j < c.size(); ++j) {
        const double w = c[j] * c[j];
        if (w == 0.0) continue;
        const Vec3 p = grid.position(j);
        for (int d = 0; d < 3; ++d) var += w * (p[d] - mean[d]) * (p[d] - mean[d]);
      }
      var /= mass;
    }
    for (int d = 0; d < 3; ++d) mean[d] += origin[d];
    rep.centers[i] = mean;
    rep.spreads[i] = var;
    rep.total += var;
  }
  return rep;
}

double selection_condition(const Matrix& psi, std::span<const Index> selection) {
  for (Index j : selection)
    if (j >= psi.rows()) throw Error(ErrorCode::kInvalidArgument, "selection index outside the grid");
  return condition_estimate(select_rows(psi, selection));
}

OrbitalMatching match_orbitals(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "match_orbitals needs bases of the same shape");
  }
  const Index n = a.cols();
  const Matrix overlap = gemm(a, b, Op::kTranspose, Op::kNone);

  // Hungarian algorithm (potentials form), minimizing -|overlap|. 1-based
  // internally with a virtual column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<Index> match(n + 1, 0);  // match[col] = row
  std::vector<Index> way(n + 1, 0);
  for (Index row = 1; row <= n; ++row) {
    match[0] = row;
    Index col0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const Index r0 = match[col0];
      double delta = kInf;
      Index col1 = 0;
      for (Index col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double cost = -std::abs(overlap(r0 - 1, col - 1));
        const double cur = cost - u[r0] - v[col];
        if (cur < minv[col]) {
          minv[col] = cur;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (Index col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const Index col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  OrbitalMatching m{std::vector<Index>(n), std::vector<double>(n)};
  for (Index col = 1; col <= n; ++col) m.permutation[match[col] - 1] = col - 1;
  for (Index i = 0; i < n; ++i) m.correlations[i] = std::abs(overlap(i, m.permutation[i]));
  return m;
}

double span_residual(const Matrix& psi, const Matrix& phi) {
  if (psi.rows() != phi.rows()) throw Error(ErrorCode::kDimensionMismatch, "span_residual: row counts differ");
  const Matrix coeff = gemm(psi, phi, Op::kTranspose, Op::kNone);
  Matrix residual = gemm(psi, coeff);
  double num = 0.0;
  for (Index k = 0; k < residual.size(); ++k) {
    const double d = phi.data()[k] - residual.data()[k];
    num += d * d;
  }
  const double den = frobenius_norm(phi);
  return den > 0.0 ? std::sqrt(num) / den : 0.0;
}

}  // namespace scdm
