#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "scdm/metrics.hpp"
#include "scdm/refiner.hpp"

namespace scdm {

struct RunConfig {
  Method method = Method::kTwoStage;
  double gamma = 1.0 / 3.0;
  double delta = 1.0;
  double epsilon = 5e-2;
  double tau = kDefaultTruncation;
  std::uint64_t seed = 0;
  int threads = 1;
  Index merge_limit = 8;
};

/// Dispatches to scdm_full, randomized_scdm or two_stage. `rho` may be null
/// for the sampled methods, in which case it is computed (and not timed).
LocalizedBasis localize(const OrbitalSet& orbitals, const ElectronDensity* rho, const RunConfig& config,
                        StageTimings* timings = nullptr);

struct BenchConfig {
  std::vector<std::uint32_t> edges{32, 48, 64};  // cubic grids edge^3
  std::vector<Index> orbitals{64, 128};
  Index repeats = 3;
  double decay_rate = 1.0;
  double min_separation = 4.0;
  std::uint64_t seed = 1;
  int threads = 1;
  RunConfig run;  // method is overridden per record
};

struct BenchRecord {
  std::array<std::uint32_t, 3> dims{};
  Index points = 0;
  Index orbitals = 0;
  Method method = Method::kFull;
  int threads = 1;
  Index repeats = 0;
  StageTimings timings;  // the repeat with the median total
  double speedup = 1.0;  // full total / this total
};

/// Runs every method on every (edge, n_e) pair; `on_record` sees each row as
/// soon as it is measured.
std::vector<BenchRecord> run_bench(const BenchConfig& config,
                                   const std::function<void(const BenchRecord&)>& on_record = {});

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records);
void write_bench_csv_header(std::ostream& out);
void write_bench_csv_row(std::ostream& out, const BenchRecord& record);

}  // namespace scdm
