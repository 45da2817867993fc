// Command-line front end; talks to the library only through scdm.h.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scdm/scdm.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct FieldDeleter {
  void operator()(scdm_field* f) const { scdm_field_free(f); }
};
struct ResultDeleter {
  void operator()(scdm_result* r) const { scdm_result_free(r); }
};
using FieldPtr = std::unique_ptr<scdm_field, FieldDeleter>;
using ResultPtr = std::unique_ptr<scdm_result, ResultDeleter>;

struct Failure {
  int code;
};

void check(scdm_status status, const std::string& context) {
  if (status == SCDM_OK) return;
  std::cerr << "error: " << context << ": " << scdm_status_name(status) << ": " << scdm_last_error() << "\n";
  throw Failure{kExitRuntime};
}

FieldPtr load(const std::string& path) {
  scdm_field* f = nullptr;
  check(scdm_field_load(path.c_str(), &f), "reading " + path);
  return FieldPtr(f);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << dir << ": " << ec.message() << "\n";
    throw Failure{kExitRuntime};
  }
}

struct GenerateArgs {
  size_t ne = 16;
  std::vector<uint32_t> dims{32, 32, 32};
  std::vector<double> spacing{1.0, 1.0, 1.0};
  double decay = 1.0;
  double min_sep = 5.0;
  std::string layout = "random";
  std::string gauge = "haar";
  bool periodic = false;
  size_t cluster = 4;
  uint64_t seed = 1;
  std::string out = ".";
};

int run_generate(const GenerateArgs& a) {
  scdm_synth_params p;
  scdm_synth_params_default(&p);
  p.n_e = a.ne;
  for (int d = 0; d < 3; ++d) {
    p.dims[d] = a.dims[d];
    p.spacing[d] = a.spacing[d];
  }
  p.decay_rate = a.decay;
  p.min_separation = a.min_sep;
  p.layout = a.layout == "lattice" ? SCDM_LAYOUT_LATTICE : a.layout == "clustered" ? SCDM_LAYOUT_CLUSTERED : SCDM_LAYOUT_RANDOM;
  p.gauge = a.gauge == "identity" ? SCDM_GAUGE_IDENTITY : SCDM_GAUGE_HAAR;
  p.periodic = a.periodic ? 1 : 0;
  p.cluster_size = a.cluster;
  p.seed = a.seed;

  scdm_field* psi = nullptr;
  scdm_field* ref = nullptr;
  scdm_field* rho = nullptr;
  std::vector<double> centers(3 * a.ne);
  check(scdm_synth_generate(&p, &psi, &ref, &rho, centers.data()), "generate");
  FieldPtr psi_p(psi), ref_p(ref), rho_p(rho);

  const fs::path dir(a.out);
  ensure_dir(dir);
  check(scdm_field_save(psi, (dir / "psi.scdm").string().c_str()), "writing psi.scdm");
  check(scdm_field_save(rho, (dir / "rho.scdm").string().c_str()), "writing rho.scdm");
  check(scdm_field_save(ref, (dir / "phi_ref.scdm").string().c_str()), "writing phi_ref.scdm");
  std::ofstream c(dir / "centers.txt", std::ios::trunc);
  c << "# orbital x y z\n";
  char line[128];
  for (size_t i = 0; i < a.ne; ++i) {
    std::snprintf(line, sizeof line, "%zu %.17g %.17g %.17g\n", i, centers[3 * i], centers[3 * i + 1], centers[3 * i + 2]);
    c << line;
  }
  if (!c) {
    std::cerr << "error: cannot write centers.txt\n";
    return kExitRuntime;
  }
  std::cout << "generated N=" << scdm_field_points(psi) << " n_e=" << scdm_field_columns(psi) << " dims=" << a.dims[0]
            << "x" << a.dims[1] << "x" << a.dims[2] << " layout=" << a.layout << " gauge=" << a.gauge
            << " seed=" << a.seed << " -> " << dir.string() << "\n";
  return 0;
}

struct LocalizeArgs {
  std::string input;
  std::string density;
  std::string method = "two-stage";
  double gamma = 1.0 / 3.0;
  double delta = 1.0;
  double epsilon = 5e-2;
  bool epsilon_limit = false;
  size_t merge_limit = 8;
  uint64_t seed = 0;
  int threads = 1;
  std::string out = ".";
};

int run_localize(const LocalizeArgs& a) {
  scdm_run_config cfg;
  scdm_run_config_default(&cfg);
  check(scdm_method_parse(a.method.c_str(), &cfg.method), "method");
  cfg.gamma = a.gamma;
  cfg.delta = a.delta;
  cfg.epsilon = a.epsilon_limit ? 1e-300 : a.epsilon;
  cfg.merge_limit = a.merge_limit;
  cfg.seed = a.seed;
  cfg.threads = a.threads;

  FieldPtr psi = load(a.input);
  FieldPtr rho;
  if (!a.density.empty()) rho = load(a.density);

  scdm_result* r = nullptr;
  check(scdm_localize(psi.get(), rho.get(), &cfg, &r), "localize");
  ResultPtr result(r);

  const fs::path dir(a.out);
  ensure_dir(dir);
  check(scdm_field_save(scdm_result_basis(r), (dir / "phi.scdm").string().c_str()), "writing phi.scdm");
  check(scdm_result_save_selection(r, (dir / "selection.txt").string().c_str()), "writing selection.txt");
  check(scdm_result_save_timings(r, (dir / "timing.json").string().c_str()), "writing timing.json");

  scdm_timings t;
  scdm_result_timings(r, &t);
  std::printf("method=%s N=%zu n_e=%zu threads=%d total=%.4fs gemm=%.4fs defect=%.3e -> %s\n", a.method.c_str(),
              scdm_field_points(psi.get()), scdm_field_columns(psi.get()), cfg.threads, t.total, t.gemm,
              scdm_field_orthonormality_defect(scdm_result_basis(r)), dir.string().c_str());
  return 0;
}

struct MetricsArgs {
  std::string phi;
  std::string psi;
  std::string selection;
  std::string compare;
  double tau = 2.5e-2;
  std::string out = ".";
};

int run_metrics(const MetricsArgs& a) {
  FieldPtr phi = load(a.phi);
  FieldPtr psi, compare;
  if (!a.psi.empty()) psi = load(a.psi);
  if (!a.compare.empty()) compare = load(a.compare);
  uint64_t* sel = nullptr;
  size_t count = 0;
  if (!a.selection.empty()) check(scdm_selection_load(a.selection.c_str(), &sel, &count), "reading " + a.selection);
  std::unique_ptr<uint64_t, void (*)(uint64_t*)> sel_guard(sel, scdm_indices_free);

  ensure_dir(a.out);
  check(scdm_metrics_report(phi.get(), psi.get(), sel, count, compare.get(), a.tau, a.out.c_str()), "metrics");

  scdm_locality loc;
  check(scdm_metric_locality(phi.get(), a.tau, nullptr, &loc), "locality");
  double total_spread = 0.0;
  check(scdm_metric_spread(phi.get(), nullptr, nullptr, &total_spread), "spread");
  std::printf("median_fraction=%.6g max_fraction=%.6g spread=%.6g", loc.median, loc.max, total_spread);
  if (psi) {
    double res = 0.0;
    check(scdm_metric_span_residual(psi.get(), phi.get(), &res), "span residual");
    std::printf(" span_residual=%.3e", res);
    if (sel != nullptr) {
      double kappa = 0.0;
      check(scdm_metric_selection_condition(psi.get(), sel, count, &kappa), "selection condition");
      std::printf(" selection_condition=%.6g", kappa);
    }
  }
  std::printf(" -> %s\n", a.out.c_str());
  return 0;
}

struct BenchArgs {
  std::vector<uint32_t> edges{32, 48, 64};
  std::vector<size_t> ne{64, 128};
  size_t repeats = 3;
  double decay = 1.0;
  double min_sep = 4.0;
  uint64_t seed = 1;
  int threads = 1;
  std::string csv = "bench.csv";
};

void print_row(const scdm_bench_row* r, void*) {
  static const char* names[] = {"full", "randomized", "two-stage"};
  std::printf("%ux%ux%u n_e=%-4zu %-10s total=%9.4fs gemm=%8.4fs rand_stage=%8.4fs speedup=%6.2fx\n", r->dims[0],
              r->dims[1], r->dims[2], r->orbitals, names[r->method], r->timings.total, r->timings.gemm,
              r->timings.randomized_stage, r->speedup);
  std::fflush(stdout);
}

int run_bench(const BenchArgs& a) {
  scdm_bench_config cfg;
  scdm_bench_config_default(&cfg);
  cfg.edges = a.edges.data();
  cfg.n_edges = a.edges.size();
  cfg.orbitals = a.ne.data();
  cfg.n_orbitals = a.ne.size();
  cfg.repeats = a.repeats;
  cfg.decay_rate = a.decay;
  cfg.min_separation = a.min_sep;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.run.threads = a.threads;
  std::printf("bench threads=%d repeats=%zu\n", a.threads, a.repeats);
  check(scdm_bench_run(&cfg, a.csv.empty() ? nullptr : a.csv.c_str(), print_row, nullptr), "bench");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localized orbitals from selected columns of the density matrix"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(scdm_version()));
  const int default_threads = scdm_default_threads();

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a synthetic instance (psi, rho, phi_ref, centers)");
  g->add_option("--ne", gen.ne, "number of orbitals")->check(CLI::PositiveNumber);
  g->add_option("--dims", gen.dims, "grid points per axis, e.g. 32,32,32")->delimiter(',')->expected(3)->check(CLI::PositiveNumber);
  g->add_option("--spacing", gen.spacing, "grid spacing per axis")->delimiter(',')->expected(3)->check(CLI::PositiveNumber);
  g->add_option("--decay", gen.decay, "bump decay rate")->check(CLI::PositiveNumber);
  g->add_option("--min-sep", gen.min_sep, "minimum center separation")->check(CLI::NonNegativeNumber);
  g->add_option("--layout", gen.layout)->check(CLI::IsMember({"random", "lattice", "clustered"}));
  g->add_option("--gauge", gen.gauge)->check(CLI::IsMember({"identity", "haar"}));
  g->add_flag("--periodic", gen.periodic, "minimum-image distances");
  g->add_option("--cluster-size", gen.cluster, "chain length for the clustered layout")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out, "output directory");

  LocalizeArgs loc;
  loc.threads = default_threads;
  auto* l = app.add_subcommand("localize", "localize an orbital file");
  l->add_option("input", loc.input, "orbital file")->required()->check(CLI::ExistingFile);
  l->add_option("--density", loc.density, "density file (computed when omitted)")->check(CLI::ExistingFile);
  l->add_option("--method", loc.method)->check(CLI::IsMember({"full", "randomized", "two-stage"}));
  l->add_option("--gamma", loc.gamma, "oversampling parameter in (0, 1)");
  l->add_option("--delta", loc.delta, "failure probability in (0, 1]");
  l->add_option("--epsilon", loc.epsilon, "relative support threshold in (0, 1)");
  l->add_flag("--epsilon-limit", loc.epsilon_limit, "supports cover the whole grid (full-method equivalent)");
  l->add_option("--merge-limit", loc.merge_limit, "largest orbital cluster factored as one group");
  l->add_option("--seed", loc.seed);
  l->add_option("--threads", loc.threads, "worker threads (default $SCDM_THREADS or 1)")->check(CLI::PositiveNumber);
  l->add_option("--out", loc.out, "output directory");

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "locality, spread and conditioning reports");
  m->add_option("phi", met.phi, "localized basis file")->required()->check(CLI::ExistingFile);
  m->add_option("--psi", met.psi, "original orbital file")->check(CLI::ExistingFile);
  m->add_option("--selection", met.selection, "selection file (needs --psi)")->check(CLI::ExistingFile);
  m->add_option("--compare", met.compare, "second basis to match against")->check(CLI::ExistingFile);
  m->add_option("--tau", met.tau, "relative truncation threshold");
  m->add_option("--out", met.out, "output directory");

  BenchArgs ben;
  ben.threads = default_threads;
  auto* b = app.add_subcommand("bench", "timing ladder over synthetic sizes");
  b->add_option("--edges", ben.edges, "cubic grid edges")->delimiter(',')->check(CLI::PositiveNumber);
  b->add_option("--ne", ben.ne, "orbital counts")->delimiter(',')->check(CLI::PositiveNumber);
  b->add_option("--repeats", ben.repeats)->check(CLI::PositiveNumber);
  b->add_option("--decay", ben.decay)->check(CLI::PositiveNumber);
  b->add_option("--min-sep", ben.min_sep)->check(CLI::NonNegativeNumber);
  b->add_option("--seed", ben.seed);
  b->add_option("--threads", ben.threads, "worker threads (default $SCDM_THREADS or 1)")->check(CLI::PositiveNumber);
  b->add_option("--csv", ben.csv, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kExitUsage;
  }
  if (!met.selection.empty() && met.psi.empty()) {
    std::cerr << "error: --selection needs --psi\n";
    return kExitUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*l) return run_localize(loc);
    if (*m) return run_metrics(met);
    if (*b) return run_bench(ben);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
