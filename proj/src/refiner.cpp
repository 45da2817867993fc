#include "scdm/refiner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>

#include "scdm/error.hpp"
#include "scdm/parallel.hpp"

namespace scdm {

namespace {

std::vector<Index> sorted_union(const std::vector<std::vector<Index>>& sets, std::span<const Index> which) {
  std::vector<Index> out;
  for (Index k : which) out.insert(out.end(), sets[k].begin(), sets[k].end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct DisjointSets {
  explicit DisjointSets(Index n) : parent(n) { std::iota(parent.begin(), parent.end(), Index{0}); }
  Index find(Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<Index> parent;
};

}  // namespace

SupportSets support_sets(const Matrix& phi_tilde, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  SupportSets out;
  out.epsilon = epsilon;
  out.sets.resize(phi_tilde.cols());
  for (Index i = 0; i < phi_tilde.cols(); ++i) {
    const auto c = phi_tilde.col(i);
    double peak = 0.0;
    for (double x : c) peak = std::max(peak, std::abs(x));
    const double cut = epsilon * peak;
    auto& set = out.sets[i];
    for (Index j = 0; j < c.size(); ++j)
      if (std::abs(c[j]) > cut) set.push_back(j);
    if (set.empty()) {
      std::ostringstream msg;
      msg << "orbital " << i << " is identically zero";
      throw Error(ErrorCode::kInvalidArgument, msg.str());
    }
  }
  return out;
}

OverlapGraph overlap_graph(const SupportSets& supports, Index merge_limit) {
  const Index n = supports.sets.size();
  const Index words = (n + 63) / 64;

  // (grid point, orbital) incidences grouped by grid point.
  std::vector<std::pair<Index, Index>> incidence;
  for (Index i = 0; i < n; ++i)
    for (Index j : supports.sets[i]) incidence.emplace_back(j, i);
  std::sort(incidence.begin(), incidence.end());

  std::vector<std::uint64_t> adj(n * words, 0);
  std::vector<std::uint64_t> mask(words);
  for (Index lo = 0; lo < incidence.size();) {
    Index hi = lo;
    while (hi < incidence.size() && incidence[hi].first == incidence[lo].first) ++hi;
    std::fill(mask.begin(), mask.end(), 0);
    for (Index k = lo; k < hi; ++k) mask[incidence[k].second / 64] |= std::uint64_t{1} << (incidence[k].second % 64);
    for (Index k = lo; k < hi; ++k) {
      std::uint64_t* row = adj.data() + incidence[k].second * words;
      for (Index w = 0; w < words; ++w) row[w] |= mask[w];
    }
    lo = hi;
  }

  OverlapGraph g;
  g.neighbors.resize(n);
  DisjointSets components(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < n; ++k)
      if (adj[i * words + k / 64] >> (k % 64) & 1U) {
        g.neighbors[i].push_back(k);
        components.join(i, k);
      }
  }
  g.unions.resize(n);
  for (Index i = 0; i < n; ++i) g.unions[i] = sorted_union(supports.sets, g.neighbors[i]);

  std::vector<std::vector<Index>> members_of(n);
  for (Index i = 0; i < n; ++i) members_of[components.find(i)].push_back(i);

  std::map<std::vector<Index>, Index> seen;  // R_i -> group
  std::vector<char> emitted(n, 0);
  for (Index i = 0; i < n; ++i) {
    const Index root = components.find(i);
    const auto& component = members_of[root];
    if (component.size() <= merge_limit) {
      if (emitted[root]) continue;
      emitted[root] = 1;
      g.groups.push_back({component, sorted_union(supports.sets, component), component});
      continue;
    }
    const auto [it, inserted] = seen.try_emplace(g.neighbors[i], g.groups.size());
    if (inserted) {
      g.groups.push_back({g.neighbors[i], g.unions[i], {i}});
    } else {
      g.groups[it->second].members.push_back(i);
    }
  }
  return g;
}

CandidateColumns local_candidates(const Matrix& phi_tilde, const OverlapGraph& graph, int threads,
                                  StageTimings* timings) {
  ScopedStage stage(stage_slot(timings, &StageTimings::local_qrcp));
  for (const auto& group : graph.groups) {
    if (group.columns.size() < group.rows.size()) {
      std::ostringstream msg;
      msg << "local group with " << group.rows.size() << " orbitals has only " << group.columns.size()
          << " support columns; epsilon is too aggressive";
      throw Error(ErrorCode::kRankDeficient, msg.str());
    }
  }
  CandidateColumns out;
  out.per_group.resize(graph.groups.size());
  parallel_chunks(0, graph.groups.size(), threads, [&](Index, Index lo, Index hi) {
    for (Index gi = lo; gi < hi; ++gi) {
      const auto& group = graph.groups[gi];
      const Index r = group.rows.size();
      Matrix block(r, group.columns.size());
      for (Index a = 0; a < r; ++a) {
        const auto src = phi_tilde.col(group.rows[a]);
        for (Index c = 0; c < group.columns.size(); ++c) block(a, c) = src[group.columns[c]];
      }
      QrcpOptions opts;
      opts.max_steps = r;
      const QrcpResult f = qrcp(std::move(block), opts);
      auto& picked = out.per_group[gi];
      picked.resize(r);
      for (Index k = 0; k < r; ++k) picked[k] = group.columns[f.pivots[k]];
    }
  });
  for (const auto& picked : out.per_group) out.merged.insert(out.merged.end(), picked.begin(), picked.end());
  std::sort(out.merged.begin(), out.merged.end());
  out.merged.erase(std::unique(out.merged.begin(), out.merged.end()), out.merged.end());
  return out;
}

LocalizedBasis refine(const LocalizedBasis& phi_tilde, const RefineOptions& options, StageTimings* timings) {
  const Matrix& basis = phi_tilde.phi;
  const Index n_e = basis.cols();
  OverlapGraph graph;
  {
    ScopedStage stage(stage_slot(timings, &StageTimings::support));
    graph = overlap_graph(support_sets(basis, options.epsilon), options.merge_limit);
  }
  const CandidateColumns candidates = local_candidates(basis, graph, options.threads, timings);

  LocalizedBasis out;
  out.selection.method = Method::kTwoStage;
  Matrix q;
  {
    ScopedStage stage(stage_slot(timings, &StageTimings::final_qrcp));
    out.selection.indices = detail::pivot_rows(basis, candidates.merged, n_e, options.threads);
    q = detail::selection_gauge(basis, out.selection.indices);
  }
  {
    ScopedStage stage(stage_slot(timings, &StageTimings::gemm));
    out.phi = gemm(basis, q);
  }
  out.gauge = phi_tilde.gauge.empty() ? std::move(q) : gemm(phi_tilde.gauge, q);
  return out;
}

LocalizedBasis two_stage(const OrbitalSet& orbitals, const ElectronDensity& rho, const TwoStageParams& params,
                         StageTimings* timings) {
  const auto start = std::chrono::steady_clock::now();
  const LocalizedBasis approx = randomized_scdm(orbitals, rho, params.sampling, params.refine.threads, timings);
  LocalizedBasis out = refine(approx, params.refine, timings);
  if (timings != nullptr) {
    timings->wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

}  // namespace scdm
