#include "scdm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "scdm/error.hpp"

namespace scdm {

LocalizedBasis localize(const OrbitalSet& orbitals, const ElectronDensity* rho, const RunConfig& config,
                        StageTimings* timings) {
  if (config.threads < 1) throw Error(ErrorCode::kInvalidArgument, "thread count must be at least 1");
  set_gemm_threads(config.threads);
  if (config.method == Method::kFull) {
    const auto start = std::chrono::steady_clock::now();
    LocalizedBasis out = scdm_full(orbitals, config.threads, timings);
    if (timings != nullptr) timings->wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }
  ElectronDensity computed;
  if (rho == nullptr) {
    computed = compute_density(orbitals);
    rho = &computed;
  }
  if (rho->rho.size() != orbitals.points()) {
    throw Error(ErrorCode::kDimensionMismatch, "density length differs from the grid size");
  }
  TwoStageParams params;
  params.sampling.gamma = config.gamma;
  params.sampling.delta = config.delta;
  params.sampling.seed = config.seed;
  params.refine.epsilon = config.epsilon;
  params.refine.merge_limit = config.merge_limit;
  params.refine.threads = config.threads;
  if (config.method == Method::kRandomized) {
    const auto start = std::chrono::steady_clock::now();
    LocalizedBasis out = randomized_scdm(orbitals, *rho, params.sampling, config.threads, timings);
    if (timings != nullptr) timings->wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }
  return two_stage(orbitals, *rho, params, timings);
}

std::vector<BenchRecord> run_bench(const BenchConfig& config, const std::function<void(const BenchRecord&)>& on_record) {
  if (config.repeats == 0) throw Error(ErrorCode::kInvalidArgument, "bench needs at least one repeat");
  std::vector<BenchRecord> records;
  for (std::uint32_t edge : config.edges) {
    for (Index n_e : config.orbitals) {
      SynthSpec spec;
      spec.n_e = n_e;
      spec.dims = {edge, edge, edge};
      spec.decay_rate = config.decay_rate;
      spec.min_separation = config.min_separation;
      spec.seed = config.seed;
      set_gemm_threads(config.threads);
      SynthInstance inst = synth_generate(spec);
      inst.reference = Matrix();
      const ElectronDensity rho = compute_density(inst.orbitals);

      double full_total = 0.0;
      for (Method method : {Method::kFull, Method::kRandomized, Method::kTwoStage}) {
        RunConfig run = config.run;
        run.method = method;
        run.threads = config.threads;
        run.seed = config.seed;
        std::vector<StageTimings> samples;
        for (Index r = 0; r < config.repeats; ++r) {
          StageTimings t;
          (void)localize(inst.orbitals, &rho, run, &t);
          samples.push_back(t);
        }
        std::sort(samples.begin(), samples.end(),
                  [](const StageTimings& a, const StageTimings& b) { return a.total() < b.total(); });
        BenchRecord rec;
        rec.dims = spec.dims;
        rec.points = inst.orbitals.points();
        rec.orbitals = n_e;
        rec.method = method;
        rec.threads = config.threads;
        rec.repeats = config.repeats;
        rec.timings = samples[samples.size() / 2];
        if (method == Method::kFull) full_total = rec.timings.total();
        rec.speedup = rec.timings.total() > 0.0 ? full_total / rec.timings.total() : 0.0;
        if (on_record) on_record(rec);
        records.push_back(rec);
      }
    }
  }
  return records;
}

void write_bench_csv_header(std::ostream& out) {
  out << "nx,ny,nz,n_points,n_orbitals,method,threads,repeats,sampling,full_qrcp,restricted_qrcp,support,"
         "local_qrcp,final_qrcp,gemm,randomized_stage,total,wall,speedup_vs_full\n";
}

void write_bench_csv_row(std::ostream& out, const BenchRecord& r) {
  const StageTimings& t = r.timings;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%u,%u,%u,%zu,%zu,%s,%d,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f\n",
                r.dims[0], r.dims[1], r.dims[2], r.points, r.orbitals, std::string(to_string(r.method)).c_str(),
                r.threads, r.repeats, t.sampling, t.full_qrcp, t.restricted_qrcp, t.support, t.local_qrcp,
                t.final_qrcp, t.gemm, t.randomized_stage(), t.total(), t.wall, r.speedup);
  out << buf;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  write_bench_csv_header(out);
  for (const auto& r : records) write_bench_csv_row(out, r);
}

}  // namespace scdm
