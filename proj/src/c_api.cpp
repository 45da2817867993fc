#include "scdm/scdm.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "scdm/error.hpp"
#include "scdm/io.hpp"
#include "scdm/pipeline.hpp"

struct scdm_field {
  scdm::Grid grid;
  scdm::Matrix data;
};

struct scdm_result {
  scdm_field basis;
  std::vector<std::uint64_t> selection;
  scdm::Method method = scdm::Method::kFull;
  scdm::StageTimings timings;
  scdm::RunInfo info;
};

namespace {

thread_local std::string g_last_error;

scdm_status to_status(scdm::ErrorCode code) {
  switch (code) {
    case scdm::ErrorCode::kInvalidArgument: return SCDM_ERROR_INVALID_ARGUMENT;
    case scdm::ErrorCode::kDimensionMismatch: return SCDM_ERROR_DIMENSION_MISMATCH;
    case scdm::ErrorCode::kNotPositiveDefinite: return SCDM_ERROR_NOT_POSITIVE_DEFINITE;
    case scdm::ErrorCode::kRankDeficient: return SCDM_ERROR_RANK_DEFICIENT;
    case scdm::ErrorCode::kIllConditioned: return SCDM_ERROR_ILL_CONDITIONED;
    case scdm::ErrorCode::kNotOrthonormal: return SCDM_ERROR_NOT_ORTHONORMAL;
    case scdm::ErrorCode::kInfeasible: return SCDM_ERROR_INFEASIBLE;
    case scdm::ErrorCode::kIo: return SCDM_ERROR_IO;
    case scdm::ErrorCode::kCorrupt: return SCDM_ERROR_CORRUPT;
  }
  return SCDM_ERROR_INTERNAL;
}

template <class Fn>
scdm_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SCDM_OK;
  } catch (const scdm::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SCDM_ERROR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SCDM_ERROR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw scdm::Error(scdm::ErrorCode::kInvalidArgument, what);
}

scdm::Method to_method(scdm_method m) {
  switch (m) {
    case SCDM_METHOD_FULL: return scdm::Method::kFull;
    case SCDM_METHOD_RANDOMIZED: return scdm::Method::kRandomized;
    case SCDM_METHOD_TWO_STAGE: return scdm::Method::kTwoStage;
  }
  throw scdm::Error(scdm::ErrorCode::kInvalidArgument, "unknown method");
}

scdm_method from_method(scdm::Method m) {
  switch (m) {
    case scdm::Method::kFull: return SCDM_METHOD_FULL;
    case scdm::Method::kRandomized: return SCDM_METHOD_RANDOMIZED;
    case scdm::Method::kTwoStage: return SCDM_METHOD_TWO_STAGE;
  }
  return SCDM_METHOD_FULL;
}

scdm::RunConfig to_config(const scdm_run_config& c) {
  scdm::RunConfig out;
  out.method = to_method(c.method);
  out.gamma = c.gamma;
  out.delta = c.delta;
  out.epsilon = c.epsilon;
  out.tau = c.tau;
  out.seed = c.seed;
  out.threads = c.threads;
  out.merge_limit = c.merge_limit;
  return out;
}

scdm_timings to_timings(const scdm::StageTimings& t) {
  return {t.sampling, t.full_qrcp, t.restricted_qrcp, t.support, t.local_qrcp,
          t.final_qrcp, t.gemm,    t.randomized_stage(), t.total(), t.wall};
}

std::vector<scdm::Index> to_indices(const uint64_t* p, size_t n) {
  return {p, p + n};
}

scdm_field* new_field(scdm::Grid grid, scdm::Matrix data) {
  return new scdm_field{std::move(grid), std::move(data)};
}

}  // namespace

extern "C" {

const char* scdm_last_error(void) { return g_last_error.c_str(); }

const char* scdm_status_name(scdm_status status) {
  switch (status) {
    case SCDM_OK: return "ok";
    case SCDM_ERROR_INVALID_ARGUMENT: return "invalid argument";
    case SCDM_ERROR_DIMENSION_MISMATCH: return "dimension mismatch";
    case SCDM_ERROR_NOT_POSITIVE_DEFINITE: return "not positive definite";
    case SCDM_ERROR_RANK_DEFICIENT: return "rank deficient";
    case SCDM_ERROR_ILL_CONDITIONED: return "ill conditioned";
    case SCDM_ERROR_NOT_ORTHONORMAL: return "not orthonormal";
    case SCDM_ERROR_INFEASIBLE: return "infeasible";
    case SCDM_ERROR_IO: return "i/o error";
    case SCDM_ERROR_CORRUPT: return "corrupt file";
    case SCDM_ERROR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* scdm_version(void) { return "1.0.0"; }

int scdm_default_threads(void) {
  const char* env = std::getenv("SCDM_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  return (end != env && *end == '\0' && v >= 1 && v <= 1024) ? static_cast<int>(v) : 1;
}

scdm_status scdm_field_load(const char* path, scdm_field** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    scdm::OrbitalFile f = scdm::read_orbital_file(path);
    *out = new_field(std::move(f.grid), std::move(f.data));
  });
}

scdm_status scdm_field_save(const scdm_field* field, const char* path) {
  return guarded([&] {
    require(field != nullptr && path != nullptr, "null argument");
    scdm::write_orbital_file(path, field->grid, field->data);
  });
}

scdm_status scdm_field_create(const uint32_t dims[3], const double spacing[3], const double* weights, size_t n_weights,
                              const double* data, size_t columns, scdm_field** out) {
  return guarded([&] {
    require(dims != nullptr && spacing != nullptr && weights != nullptr && data != nullptr && out != nullptr,
            "null argument");
    const std::array<std::uint32_t, 3> d{dims[0], dims[1], dims[2]};
    const scdm::Vec3 h{spacing[0], spacing[1], spacing[2]};
    scdm::Grid grid = n_weights == 1 ? scdm::Grid(d, h, weights[0])
                                     : scdm::Grid(d, h, std::vector<double>(weights, weights + n_weights));
    require(columns >= 1, "a field needs at least one column");
    const size_t n = grid.size() * columns;
    *out = new_field(std::move(grid), scdm::Matrix(n / columns, columns, std::vector<double>(data, data + n)));
  });
}

void scdm_field_free(scdm_field* field) { delete field; }
size_t scdm_field_points(const scdm_field* field) { return field->data.rows(); }
size_t scdm_field_columns(const scdm_field* field) { return field->data.cols(); }

void scdm_field_dims(const scdm_field* field, uint32_t dims[3]) {
  for (int d = 0; d < 3; ++d) dims[d] = field->grid.dims()[d];
}

void scdm_field_spacing(const scdm_field* field, double spacing[3]) {
  for (int d = 0; d < 3; ++d) spacing[d] = field->grid.spacing()[d];
}

const double* scdm_field_data(const scdm_field* field) { return field->data.data(); }
int scdm_field_same_grid(const scdm_field* a, const scdm_field* b) { return a->grid.same_as(b->grid) ? 1 : 0; }
double scdm_field_orthonormality_defect(const scdm_field* field) { return scdm::orthonormality_defect(field->data); }

void scdm_synth_params_default(scdm_synth_params* params) {
  const scdm::SynthSpec s;
  params->n_e = s.n_e;
  for (int d = 0; d < 3; ++d) {
    params->dims[d] = s.dims[d];
    params->spacing[d] = s.spacing[d];
  }
  params->decay_rate = s.decay_rate;
  params->min_separation = s.min_separation;
  params->layout = SCDM_LAYOUT_RANDOM;
  params->gauge = SCDM_GAUGE_HAAR;
  params->periodic = 0;
  params->cluster_size = s.cluster_size;
  params->seed = s.seed;
}

scdm_status scdm_synth_generate(const scdm_synth_params* params, scdm_field** psi, scdm_field** reference,
                                scdm_field** density, double* centers) {
  return guarded([&] {
    require(params != nullptr && psi != nullptr, "null argument");
    scdm::SynthSpec s;
    s.n_e = params->n_e;
    for (int d = 0; d < 3; ++d) {
      s.dims[d] = params->dims[d];
      s.spacing[d] = params->spacing[d];
    }
    s.decay_rate = params->decay_rate;
    s.min_separation = params->min_separation;
    switch (params->layout) {
      case SCDM_LAYOUT_RANDOM: s.layout = scdm::CenterLayout::kRandom; break;
      case SCDM_LAYOUT_LATTICE: s.layout = scdm::CenterLayout::kLattice; break;
      case SCDM_LAYOUT_CLUSTERED: s.layout = scdm::CenterLayout::kClustered; break;
      default: require(false, "unknown layout");
    }
    s.gauge = params->gauge == SCDM_GAUGE_IDENTITY ? scdm::Gauge::kIdentity : scdm::Gauge::kHaar;
    s.periodic = params->periodic != 0;
    s.cluster_size = params->cluster_size;
    s.seed = params->seed;

    scdm::SynthInstance inst = scdm::synth_generate(s);
    if (centers != nullptr) {
      for (size_t i = 0; i < inst.centers.size(); ++i)
        for (int d = 0; d < 3; ++d) centers[3 * i + d] = inst.centers[i][d];
    }
    const scdm::Grid grid = inst.orbitals.grid();
    scdm_field* rho_field = nullptr;
    if (density != nullptr) {
      const scdm::ElectronDensity rho = scdm::compute_density(inst.orbitals);
      rho_field = new_field(grid, scdm::Matrix(grid.size(), 1, rho.rho));
    }
    scdm_field* ref_field = reference != nullptr ? new_field(grid, std::move(inst.reference)) : nullptr;
    *psi = new_field(grid, std::move(inst.orbitals).release_psi());
    if (reference != nullptr) *reference = ref_field;
    if (density != nullptr) *density = rho_field;
  });
}

scdm_status scdm_density_compute(const scdm_field* psi, scdm_field** out) {
  return guarded([&] {
    require(psi != nullptr && out != nullptr, "null argument");
    const scdm::ElectronDensity rho = scdm::compute_density(psi->data);
    *out = new_field(psi->grid, scdm::Matrix(psi->data.rows(), 1, rho.rho));
  });
}

void scdm_run_config_default(scdm_run_config* config) {
  const scdm::RunConfig c;
  config->method = from_method(c.method);
  config->gamma = c.gamma;
  config->delta = c.delta;
  config->epsilon = c.epsilon;
  config->tau = c.tau;
  config->seed = c.seed;
  config->threads = scdm_default_threads();
  config->merge_limit = c.merge_limit;
}

scdm_status scdm_method_parse(const char* name, scdm_method* out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "null argument");
    *out = from_method(scdm::parse_method(name));
  });
}

scdm_status scdm_localize(const scdm_field* psi, const scdm_field* density, const scdm_run_config* config,
                          scdm_result** out) {
  return guarded([&] {
    require(psi != nullptr && config != nullptr && out != nullptr, "null argument");
    const scdm::RunConfig cfg = to_config(*config);
    // The orbital set borrows nothing, so validate a copy; Psi is kept by the caller.
    const scdm::OrbitalSet orbitals(psi->grid, psi->data);
    scdm::ElectronDensity rho;
    if (density != nullptr) {
      if (!density->grid.same_as(psi->grid) || density->data.cols() != 1) {
        throw scdm::Error(scdm::ErrorCode::kDimensionMismatch, "density file does not match the orbital grid");
      }
      rho.rho.assign(density->data.data(), density->data.data() + density->data.size());
    }
    auto result = std::make_unique<scdm_result>();
    scdm::LocalizedBasis basis = scdm::localize(orbitals, density != nullptr ? &rho : nullptr, cfg, &result->timings);
    result->selection.assign(basis.selection.indices.begin(), basis.selection.indices.end());
    result->method = cfg.method;
    result->basis = scdm_field{psi->grid, std::move(basis.phi)};
    result->info = {cfg.method, orbitals.points(), orbitals.orbitals(), cfg.threads, cfg.seed,
                    cfg.gamma,  cfg.delta,         cfg.epsilon};
    *out = result.release();
  });
}

void scdm_result_free(scdm_result* result) { delete result; }
const scdm_field* scdm_result_basis(const scdm_result* result) { return &result->basis; }

size_t scdm_result_selection(const scdm_result* result, const uint64_t** indices) {
  if (indices != nullptr) *indices = result->selection.data();
  return result->selection.size();
}

void scdm_result_timings(const scdm_result* result, scdm_timings* out) { *out = to_timings(result->timings); }

scdm_status scdm_result_save_selection(const scdm_result* result, const char* path) {
  return guarded([&] {
    require(result != nullptr && path != nullptr, "null argument");
    scdm::ColumnSelection sel{{result->selection.begin(), result->selection.end()}, result->method};
    scdm::write_selection_file(path, result->basis.grid, sel);
  });
}

scdm_status scdm_result_save_timings(const scdm_result* result, const char* path) {
  return guarded([&] {
    require(result != nullptr && path != nullptr, "null argument");
    scdm::write_timings_json(path, result->info, result->timings);
  });
}

scdm_status scdm_metric_locality(const scdm_field* phi, double tau, double* fractions, scdm_locality* out) {
  return guarded([&] {
    require(phi != nullptr && out != nullptr, "null argument");
    const scdm::LocalityReport rep = scdm::truncated_sparsity(phi->data, tau);
    if (fractions != nullptr) std::copy(rep.fractions.begin(), rep.fractions.end(), fractions);
    out->median = rep.median;
    out->max = rep.max;
    out->tau = rep.tau;
    for (size_t b = 0; b < SCDM_HISTOGRAM_BINS; ++b) {
      out->bin_edges[b] = rep.histogram[b].lo;
      out->bin_counts[b] = rep.histogram[b].count;
    }
    out->bin_edges[SCDM_HISTOGRAM_BINS] = rep.histogram.back().hi;
  });
}

scdm_status scdm_metric_spread(const scdm_field* phi, double* spreads, double* centers, double* total) {
  return guarded([&] {
    require(phi != nullptr, "null argument");
    const scdm::SpreadReport rep = scdm::spread(phi->data, phi->grid);
    for (size_t i = 0; i < rep.spreads.size(); ++i) {
      if (spreads != nullptr) spreads[i] = rep.spreads[i];
      if (centers != nullptr)
        for (int d = 0; d < 3; ++d) centers[3 * i + d] = rep.centers[i][d];
    }
    if (total != nullptr) *total = rep.total;
  });
}

scdm_status scdm_metric_selection_condition(const scdm_field* psi, const uint64_t* selection, size_t count,
                                            double* kappa) {
  return guarded([&] {
    require(psi != nullptr && selection != nullptr && kappa != nullptr, "null argument");
    *kappa = scdm::selection_condition(psi->data, to_indices(selection, count));
  });
}

scdm_status scdm_metric_span_residual(const scdm_field* psi, const scdm_field* phi, double* residual) {
  return guarded([&] {
    require(psi != nullptr && phi != nullptr && residual != nullptr, "null argument");
    if (!psi->grid.same_as(phi->grid)) throw scdm::Error(scdm::ErrorCode::kDimensionMismatch, "grids differ");
    *residual = scdm::span_residual(psi->data, phi->data);
  });
}

scdm_status scdm_metric_match(const scdm_field* a, const scdm_field* b, uint64_t* permutation, double* correlations) {
  return guarded([&] {
    require(a != nullptr && b != nullptr, "null argument");
    if (!a->grid.same_as(b->grid)) throw scdm::Error(scdm::ErrorCode::kDimensionMismatch, "grids differ");
    const scdm::OrbitalMatching m = scdm::match_orbitals(a->data, b->data);
    for (size_t i = 0; i < m.permutation.size(); ++i) {
      if (permutation != nullptr) permutation[i] = m.permutation[i];
      if (correlations != nullptr) correlations[i] = m.correlations[i];
    }
  });
}

scdm_status scdm_metrics_report(const scdm_field* phi, const scdm_field* psi, const uint64_t* selection, size_t count,
                                const scdm_field* compare, double tau, const char* out_dir) {
  return guarded([&] {
    require(phi != nullptr && out_dir != nullptr, "null argument");
    for (const scdm_field* other : {psi, compare}) {
      if (other != nullptr && !other->grid.same_as(phi->grid)) {
        throw scdm::Error(scdm::ErrorCode::kDimensionMismatch, "grid mismatch between input files");
      }
    }
    const std::vector<scdm::Index> sel = selection != nullptr ? to_indices(selection, count) : std::vector<scdm::Index>{};
    scdm::MetricsInputs in;
    in.phi = &phi->data;
    in.grid = &phi->grid;
    in.psi = psi != nullptr ? &psi->data : nullptr;
    in.selection = selection != nullptr ? &sel : nullptr;
    in.compare = compare != nullptr ? &compare->data : nullptr;
    in.tau = tau;
    scdm::write_metrics_report(out_dir, in);
  });
}

scdm_status scdm_selection_load(const char* path, uint64_t** indices, size_t* count) {
  return guarded([&] {
    require(path != nullptr && indices != nullptr && count != nullptr, "null argument");
    const std::vector<scdm::Index> sel = scdm::read_selection_file(path);
    auto* buf = static_cast<uint64_t*>(std::malloc(std::max<size_t>(sel.size(), 1) * sizeof(uint64_t)));
    if (buf == nullptr) throw std::bad_alloc();
    std::copy(sel.begin(), sel.end(), buf);
    *indices = buf;
    *count = sel.size();
  });
}

void scdm_indices_free(uint64_t* indices) { std::free(indices); }

void scdm_bench_config_default(scdm_bench_config* config) {
  const scdm::BenchConfig b;
  config->edges = nullptr;
  config->n_edges = 0;
  config->orbitals = nullptr;
  config->n_orbitals = 0;
  config->repeats = b.repeats;
  config->decay_rate = b.decay_rate;
  config->min_separation = b.min_separation;
  config->seed = b.seed;
  config->threads = scdm_default_threads();
  scdm_run_config_default(&config->run);
}

scdm_status scdm_bench_run(const scdm_bench_config* config, const char* csv_path, scdm_bench_callback callback,
                           void* user) {
  return guarded([&] {
    require(config != nullptr, "null argument");
    scdm::BenchConfig b;
    if (config->edges != nullptr) b.edges.assign(config->edges, config->edges + config->n_edges);
    if (config->orbitals != nullptr) b.orbitals.assign(config->orbitals, config->orbitals + config->n_orbitals);
    b.repeats = config->repeats;
    b.decay_rate = config->decay_rate;
    b.min_separation = config->min_separation;
    b.seed = config->seed;
    b.threads = config->threads;
    b.run = to_config(config->run);

    std::ofstream csv;
    if (csv_path != nullptr) {
      csv.open(csv_path, std::ios::trunc);
      if (!csv) throw scdm::Error(scdm::ErrorCode::kIo, std::string("cannot open ") + csv_path + " for writing");
      scdm::write_bench_csv_header(csv);
    }
    scdm::run_bench(b, [&](const scdm::BenchRecord& r) {
      if (csv.is_open()) {
        scdm::write_bench_csv_row(csv, r);
        csv.flush();
      }
      if (callback != nullptr) {
        scdm_bench_row row{};
        for (int d = 0; d < 3; ++d) row.dims[d] = r.dims[d];
        row.points = r.points;
        row.orbitals = r.orbitals;
        row.method = from_method(r.method);
        row.threads = r.threads;
        row.repeats = r.repeats;
        row.timings = to_timings(r.timings);
        row.speedup = r.speedup;
        callback(&row, user);
      }
    });
  });
}

}  // extern "C"
