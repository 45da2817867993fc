#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "scdm/localize.hpp"

namespace scdm {

/// i.i.d. grid indices drawn from Pr({j}) = rho(j) / n_e.
struct SampleSet {
  std::vector<Index> draws;  // with replacement, in draw order
  Index requested = 0;
  double gamma = 1.0 / 3.0;
  double delta = 1.0;
  std::uint64_t seed = 0;

  /// Sorted, duplicate-free draws.
  std::vector<Index> unique() const;
};

struct SamplingParams {
  double gamma = 1.0 / 3.0;
  double delta = 1.0;
  std::uint64_t seed = 0;
  /// Replaces the formula-driven sample count when set.
  std::optional<Index> count;
};

/// max(n_e, ceil((n_e / gamma) * ln(n_e / delta))).
Index sample_count(Index n_e, double gamma, double delta);

/// Inverse-CDF sampler over a nonnegative density.
class DensitySampler {
 public:
  explicit DensitySampler(std::span<const double> rho);

  Index draw(double u) const;  // u in [0, 1)
  std::vector<Index> draw_many(Index count, std::uint64_t seed) const;

 private:
  std::vector<double> cdf_;
};

SampleSet sample_candidates(const ElectronDensity& rho, Index n_e, const SamplingParams& params);

/// Randomized SCDM on the deduplicated samples.
LocalizedBasis randomized_scdm(const OrbitalSet& orbitals, const ElectronDensity& rho,
                               const SamplingParams& params, int threads = 1,
                               StageTimings* timings = nullptr);

/// Same pipeline on a caller-supplied candidate set (deduplicated internally).
LocalizedBasis randomized_scdm_from_candidates(const OrbitalSet& orbitals, std::span<const Index> candidates,
                                               int threads = 1, StageTimings* timings = nullptr);

/// Per-orbital smallest index sets with |phi_i|^2 mass >= gamma.
struct GammaSupport {
  std::vector<std::vector<Index>> sets;  // each sorted ascending
  double gamma = 0.5;
};

GammaSupport gamma_support(const Matrix& phi, double gamma);
inline GammaSupport gamma_support(const LocalizedBasis& basis, double gamma) {
  return gamma_support(basis.phi, gamma);
}

/// True when the pairwise intersections of the sets are all empty.
bool supports_disjoint(const GammaSupport& supports);

/// True when the draws admit a system of distinct representatives, one per
/// support set (augmenting-path bipartite matching).
bool covers_supports(std::span<const Index> draws, const GammaSupport& supports);

/// Fraction of `trials` independent draws (seed + trial) that fail to cover
/// the support sets.
double coverage_trial(const ElectronDensity& rho, Index n_e, const SamplingParams& params,
                      const GammaSupport& supports, Index trials, int threads = 1);

}  // namespace scdm
