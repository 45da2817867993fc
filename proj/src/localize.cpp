#include "scdm/localize.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "scdm/error.hpp"

namespace scdm {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kFull: return "full";
    case Method::kRandomized: return "randomized";
    case Method::kTwoStage: return "two-stage";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "full") return Method::kFull;
  if (s == "randomized") return Method::kRandomized;
  if (s == "two-stage") return Method::kTwoStage;
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + std::string(s) + "'");
}

namespace detail {

std::vector<Index> pivot_rows(const Matrix& basis, std::span<const Index> rows, Index count, int threads) {
  if (rows.size() < count) {
    std::ostringstream msg;
    msg << "only " << rows.size() << " candidate columns for " << count << " pivots";
    throw Error(ErrorCode::kRankDeficient, msg.str());
  }
  bool identity = rows.size() == basis.rows();
  for (Index k = 0; identity && k < rows.size(); ++k) identity = rows[k] == k;
  Matrix block = identity ? basis.transposed() : select_rows_transposed(basis, rows);
  QrcpOptions opts;
  opts.max_steps = count;
  opts.threads = threads;
  const QrcpResult f = qrcp(std::move(block), opts);
  const auto diag = f.r_diagonal();
  if (count > 0) {
    const double last = std::abs(diag[count - 1]);
    const double first = std::abs(diag[0]);
    if (!(last >= kRankTolerance * first) || first == 0.0) {
      std::ostringstream msg;
      msg << "rank deficient column selection: |R_kk| = " << last << " vs |R_11| = " << first
          << " at step " << count << "; input is not a basis";
      throw Error(ErrorCode::kRankDeficient, msg.str());
    }
  }
  std::vector<Index> out(count);
  for (Index k = 0; k < count; ++k) out[k] = rows[f.pivots[k]];
  return out;
}

Matrix selection_gauge(const Matrix& basis, std::span<const Index> selection) {
  if (selection.size() != basis.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "selection length must equal the number of orbitals");
  }
  Matrix block = select_rows_transposed(basis, selection);
  const double kappa = condition_estimate(block);
  if (!(kappa < kSelectionConditionLimit)) {
    std::ostringstream msg;
    msg << "selected rows are ill-conditioned (condition estimate " << kappa << ")";
    throw Error(ErrorCode::kIllConditioned, msg.str());
  }
  return householder_qr(std::move(block)).thin_q();
}

}  // namespace detail

ColumnSelection select_columns_full(const OrbitalSet& orbitals, int threads, StageTimings* timings) {
  ScopedStage stage(stage_slot(timings, &StageTimings::full_qrcp));
  std::vector<Index> all(orbitals.points());
  std::iota(all.begin(), all.end(), Index{0});
  return {detail::pivot_rows(orbitals.psi(), all, orbitals.orbitals(), threads), Method::kFull};
}

LocalizedBasis orthobasis_from_columns(const OrbitalSet& orbitals, const ColumnSelection& selection,
                                       StageTimings* timings) {
  LocalizedBasis out;
  out.selection = selection;
  {
    // Attributed to whichever selection stage produced the columns.
    double* slot = nullptr;
    if (timings != nullptr) {
      switch (selection.method) {
        case Method::kFull: slot = &timings->full_qrcp; break;
        case Method::kRandomized: slot = &timings->restricted_qrcp; break;
        case Method::kTwoStage: slot = &timings->final_qrcp; break;
      }
    }
    ScopedStage stage(slot);
    out.gauge = detail::selection_gauge(orbitals.psi(), selection.indices);
  }
  ScopedStage stage(stage_slot(timings, &StageTimings::gemm));
  out.phi = gemm(orbitals.psi(), out.gauge);
  return out;
}

LocalizedBasis scdm_full(const OrbitalSet& orbitals, int threads, StageTimings* timings) {
  return orthobasis_from_columns(orbitals, select_columns_full(orbitals, threads, timings), timings);
}

}  // namespace scdm
