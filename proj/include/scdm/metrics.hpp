#pragma once

#include <vector>

#include "scdm/localize.hpp"

namespace scdm {

inline constexpr double kDefaultTruncation = 2.5e-2;
inline constexpr Index kHistogramBins = 20;

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  Index count = 0;
};

/// Fraction of entries with |phi_i(j)| > tau * max_k |phi_i(k)| (strictly
/// greater), per orbital, plus a 20-bin histogram over [0, max fraction].
struct LocalityReport {
  std::vector<double> fractions;
  std::vector<HistogramBin> histogram;
  double median = 0.0;
  double max = 0.0;
  double tau = kDefaultTruncation;
};

LocalityReport truncated_sparsity(const Matrix& phi, double tau = kDefaultTruncation);

/// Open-boundary position variance of |phi_i|^2 on the grid.
struct SpreadReport {
  std::vector<Vec3> centers;
  std::vector<double> spreads;
  double total = 0.0;
};

SpreadReport spread(const Matrix& phi, const Grid& grid, const Vec3& origin = {0.0, 0.0, 0.0});

/// Condition number of the n_e x n_e block Psi_{C,:}; +inf when singular.
double selection_condition(const Matrix& psi, std::span<const Index> selection);

/// Maximum-weight assignment on |<a_i, b_j>|: a column i pairs with
/// b column permutation[i].
struct OrbitalMatching {
  std::vector<Index> permutation;
  std::vector<double> correlations;
};

OrbitalMatching match_orbitals(const Matrix& a, const Matrix& b);

/// ||Phi - Psi (Psi^T Phi)||_F / ||Phi||_F.
double span_residual(const Matrix& psi, const Matrix& phi);

double median_of(std::vector<double> values);

}  // namespace scdm
