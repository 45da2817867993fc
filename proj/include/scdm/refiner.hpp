#pragma once

#include <vector>

#include "scdm/sampler.hpp"

namespace scdm {

struct RefineOptions {
  double epsilon = 5e-2;
  /// Connected orbital clusters of at most this many orbitals are factored as
  /// one group. 0 keeps only the exact-duplicate deduplication of R_i.
  Index merge_limit = 8;
  int threads = 1;
};

/// J_i = { j : |phi_i(j)| > epsilon * max_k |phi_i(k)| }, each sorted.
struct SupportSets {
  std::vector<std::vector<Index>> sets;
  double epsilon = 5e-2;
};

/// One local QRCP: rows are orbitals, columns are grid points.
struct LocalGroup {
  std::vector<Index> rows;
  std::vector<Index> columns;
  std::vector<Index> members;  // orbitals i whose loop instance this group covers
};

struct OverlapGraph {
  std::vector<std::vector<Index>> neighbors;  // R_i, sorted, always contains i
  std::vector<std::vector<Index>> unions;     // L_i = union of J_k over k in R_i
  std::vector<LocalGroup> groups;             // distinct QRCPs to run
};

struct CandidateColumns {
  std::vector<std::vector<Index>> per_group;  // C_g in pivot order
  std::vector<Index> merged;                  // sorted union of all C_g
};

SupportSets support_sets(const Matrix& phi_tilde, double epsilon);

OverlapGraph overlap_graph(const SupportSets& supports, Index merge_limit = 8);

CandidateColumns local_candidates(const Matrix& phi_tilde, const OverlapGraph& graph, int threads = 1,
                                  StageTimings* timings = nullptr);

/// Final QRCP over the candidate union and Phi = Phi_tilde Q. The returned
/// gauge maps the original orbitals: Phi = Psi * (phi_tilde.gauge * Q).
LocalizedBasis refine(const LocalizedBasis& phi_tilde, const RefineOptions& options = {},
                      StageTimings* timings = nullptr);

struct TwoStageParams {
  SamplingParams sampling;
  RefineOptions refine;
};

/// randomized_scdm followed by refine.
LocalizedBasis two_stage(const OrbitalSet& orbitals, const ElectronDensity& rho, const TwoStageParams& params,
                         StageTimings* timings = nullptr);

}  // namespace scdm
