#pragma once

#include <string_view>
#include <vector>

#include "scdm/linalg.hpp"
#include "scdm/orbitals.hpp"
#include "scdm/timing.hpp"

namespace scdm {

enum class Method { kFull, kRandomized, kTwoStage };

std::string_view to_string(Method method);
Method parse_method(std::string_view s);

/// Selected density-matrix columns (0-based grid indices) in pivot order.
struct ColumnSelection {
  std::vector<Index> indices;
  Method method = Method::kFull;

  friend bool operator==(const ColumnSelection&, const ColumnSelection&) = default;
};

/// Phi = Psi * gauge with orthonormal, localized columns.
struct LocalizedBasis {
  Matrix phi;
  ColumnSelection selection;
  Matrix gauge;
};

inline double* stage_slot(StageTimings* t, double StageTimings::*member) {
  return t != nullptr ? &(t->*member) : nullptr;
}

/// |R_kk| below this fraction of |R_11| means the input is not a basis.
inline constexpr double kRankTolerance = 1e-10;
/// Psi_{C,:} with a larger condition estimate is rejected.
inline constexpr double kSelectionConditionLimit = 1e8;

/// First n_e QRCP pivots of Psi^T.
ColumnSelection select_columns_full(const OrbitalSet& orbitals, int threads = 1,
                                    StageTimings* timings = nullptr);

/// QR of (Psi_{C,:})^T = Q R with diag(R) > 0, then Phi = Psi Q.
LocalizedBasis orthobasis_from_columns(const OrbitalSet& orbitals, const ColumnSelection& selection,
                                       StageTimings* timings = nullptr);

/// select_columns_full followed by orthobasis_from_columns.
LocalizedBasis scdm_full(const OrbitalSet& orbitals, int threads = 1, StageTimings* timings = nullptr);

namespace detail {

/// The first `count` pivots of a QRCP of (basis_{rows,:})^T, mapped back to
/// grid indices. Throws kRankDeficient when |R| collapses before `count`.
std::vector<Index> pivot_rows(const Matrix& basis, std::span<const Index> rows, Index count, int threads);

/// Gauge Q of the n_e x n_e QR of (basis_{C,:})^T with positive diag(R).
Matrix selection_gauge(const Matrix& basis, std::span<const Index> selection);

}  // namespace detail

}  // namespace scdm
