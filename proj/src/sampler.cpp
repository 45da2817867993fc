#include "scdm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "scdm/error.hpp"
#include "scdm/parallel.hpp"

namespace scdm {

std::vector<Index> SampleSet::unique() const {
  std::vector<Index> u = draws;
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

Index sample_count(Index n_e, double gamma, double delta) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1]");
  const double m = std::ceil(static_cast<double>(n_e) / gamma * std::log(static_cast<double>(n_e) / delta));
  return std::max<Index>(n_e, static_cast<Index>(std::max(m, 0.0)));
}

DensitySampler::DensitySampler(std::span<const double> rho) : cdf_(rho.size()) {
  double acc = 0.0;
  for (Index j = 0; j < rho.size(); ++j) {
    if (!(rho[j] >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "density has negative or NaN entries");
    acc += rho[j];
    cdf_[j] = acc;
  }
  if (!(acc > 0.0)) throw Error(ErrorCode::kInvalidArgument, "density is identically zero");
}

Index DensitySampler::draw(double u) const {
  const double target = u * cdf_.back();
  // First j with cdf(j) > target; zero-mass entries can never be returned.
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  return it == cdf_.end() ? static_cast<Index>(std::distance(cdf_.begin(), std::lower_bound(cdf_.begin(), cdf_.end(), cdf_.back())))
                          : static_cast<Index>(it - cdf_.begin());
}

std::vector<Index> DensitySampler::draw_many(Index count, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Index> out(count);
  for (auto& x : out) x = draw(unit(rng));
  return out;
}

SampleSet sample_candidates(const ElectronDensity& rho, Index n_e, const SamplingParams& params) {
  SampleSet s;
  s.gamma = params.gamma;
  s.delta = params.delta;
  s.seed = params.seed;
  s.requested = params.count ? *params.count : sample_count(n_e, params.gamma, params.delta);
  s.draws = DensitySampler(rho.rho).draw_many(s.requested, params.seed);
  return s;
}

LocalizedBasis randomized_scdm_from_candidates(const OrbitalSet& orbitals, std::span<const Index> candidates,
                                               int threads, StageTimings* timings) {
  ColumnSelection sel{{}, Method::kRandomized};
  {
    ScopedStage stage(stage_slot(timings, &StageTimings::restricted_qrcp));
    std::vector<Index> rows(candidates.begin(), candidates.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    if (!rows.empty() && rows.back() >= orbitals.points()) {
      throw Error(ErrorCode::kInvalidArgument, "candidate index outside the grid");
    }
    if (rows.size() < orbitals.orbitals()) {
      std::ostringstream msg;
      msg << "only " << rows.size() << " distinct samples for " << orbitals.orbitals()
          << " orbitals; increase the sample count (smaller gamma or delta)";
      throw Error(ErrorCode::kRankDeficient, msg.str());
    }
    sel.indices = detail::pivot_rows(orbitals.psi(), rows, orbitals.orbitals(), threads);
  }
  return orthobasis_from_columns(orbitals, sel, timings);
}

LocalizedBasis randomized_scdm(const OrbitalSet& orbitals, const ElectronDensity& rho,
                               const SamplingParams& params, int threads, StageTimings* timings) {
  if (rho.rho.size() != orbitals.points()) throw Error(ErrorCode::kDimensionMismatch, "density length differs from the grid size");
  SampleSet samples;
  {
    ScopedStage stage(stage_slot(timings, &StageTimings::sampling));
    samples = sample_candidates(rho, orbitals.orbitals(), params);
  }
  return randomized_scdm_from_candidates(orbitals, samples.draws, threads, timings);
}

GammaSupport gamma_support(const Matrix& phi, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1]");
  GammaSupport out;
  out.gamma = gamma;
  out.sets.resize(phi.cols());
  std::vector<Index> order;
  for (Index i = 0; i < phi.cols(); ++i) {
    const auto c = phi.col(i);
    order.clear();
    for (Index j = 0; j < c.size(); ++j)
      if (c[j] != 0.0) order.push_back(j);
    auto& set = out.sets[i];
    if (gamma < 1.0) {
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const double ma = c[a] * c[a];
        const double mb = c[b] * c[b];
        return ma > mb || (ma == mb && a < b);
      });
      double mass = 0.0;
      for (Index j : order) {
        set.push_back(j);
        mass += c[j] * c[j];
        if (mass >= gamma) break;
      }
    } else {
      set = order;
    }
    std::sort(set.begin(), set.end());
  }
  return out;
}

bool supports_disjoint(const GammaSupport& supports) {
  std::vector<Index> all;
  for (const auto& s : supports.sets) all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end());
  return std::adjacent_find(all.begin(), all.end()) == all.end();
}

bool covers_supports(std::span<const Index> draws, const GammaSupport& supports) {
  const Index n_sets = supports.sets.size();
  std::vector<Index> points(draws.begin(), draws.end());
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < n_sets) return false;

  // adjacency: set -> sampled points (as positions in `points`) inside it
  std::vector<std::vector<Index>> adj(n_sets);
  for (Index i = 0; i < n_sets; ++i) {
    const auto& s = supports.sets[i];
    auto a = s.begin();
    auto b = points.begin();
    while (a != s.end() && b != points.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        adj[i].push_back(static_cast<Index>(b - points.begin()));
        ++a;
        ++b;
      }
    }
    if (adj[i].empty()) return false;
  }

  constexpr Index kFree = static_cast<Index>(-1);
  std::vector<Index> owner(points.size(), kFree);
  std::vector<Index> visited(points.size(), kFree);
  // Kuhn's augmenting paths, iterative to stay off the call stack.
  for (Index root = 0; root < n_sets; ++root) {
    std::vector<std::pair<Index, Index>> stack{{root, 0}};  // (set, next edge)
    std::vector<Index> via;                                  // point taken at each depth
    bool augmented = false;
    while (!stack.empty() && !augmented) {
      auto& [set, edge] = stack.back();
      if (edge == adj[set].size()) {
        stack.pop_back();
        if (!via.empty()) via.pop_back();
        continue;
      }
      const Index p = adj[set][edge++];
      if (visited[p] == root) continue;
      visited[p] = root;
      via.push_back(p);
      if (owner[p] == kFree) {
        augmented = true;
      } else {
        stack.push_back({owner[p], 0});
      }
    }
    if (!augmented) return false;
    // via[d] was claimed by stack[d].set; shift ownership along the path.
    for (Index d = 0; d < via.size(); ++d) owner[via[d]] = stack[d].first;
  }
  return true;
}

double coverage_trial(const ElectronDensity& rho, Index n_e, const SamplingParams& params,
                      const GammaSupport& supports, Index trials, int threads) {
  if (trials == 0) return 0.0;
  const DensitySampler sampler(rho.rho);
  const Index m = params.count ? *params.count : sample_count(n_e, params.gamma, params.delta);
  std::vector<char> failed(trials, 0);
  parallel_chunks(0, trials, threads, [&](Index, Index lo, Index hi) {
    for (Index t = lo; t < hi; ++t) {
      const auto draws = sampler.draw_many(m, params.seed + t);
      failed[t] = covers_supports(draws, supports) ? 0 : 1;
    }
  });
  const auto failures = static_cast<double>(std::count(failed.begin(), failed.end(), 1));
  return failures / static_cast<double>(trials);
}

}  // namespace scdm
