// Drives the scdm executable as a subprocess.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scdm/io.hpp"
#include "scdm/metrics.hpp"

using namespace scdm;
namespace fs = std::filesystem;

namespace {

const fs::path& root() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "scdm_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + SCDM_CLI_PATH + "\" " + args + " >>\"" + (root() / "log.txt").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// One generated instance shared by the cases below.
const fs::path& instance() {
  static const fs::path dir = [] {
    const fs::path d = root() / "inst";
    REQUIRE(run("generate --ne 16 --dims 32,32,32 --seed 7 --out " + q(d)) == 0);
    return d;
  }();
  return dir;
}

const fs::path& localized(const std::string& method) {
  static std::map<std::string, fs::path> done;
  auto it = done.find(method);
  if (it != done.end()) return it->second;
  const fs::path d = root() / ("loc_" + method);
  REQUIRE(run("localize " + q(instance() / "psi.scdm") + " --density " + q(instance() / "rho.scdm") + " --method " +
              method + " --seed 3 --out " + q(d)) == 0);
  return done.emplace(method, d).first->second;
}

}  // namespace

TEST_CASE("cli: generate writes the requested shape") {
  const OrbitalFile f = read_orbital_file(instance() / "psi.scdm");
  CHECK(f.data.rows() == 32768);
  CHECK(f.data.cols() == 16);
  CHECK(orthonormality_defect(f.data) <= 1e-10);
  CHECK(fs::exists(instance() / "rho.scdm"));
  CHECK(fs::exists(instance() / "phi_ref.scdm"));
  CHECK(fs::exists(instance() / "centers.txt"));
}

TEST_CASE("cli: generate is byte-identical for a repeated seed") {
  const fs::path d = root() / "inst_again";
  REQUIRE(run("generate --ne 16 --dims 32,32,32 --seed 7 --out " + q(d)) == 0);
  for (const char* name : {"psi.scdm", "rho.scdm", "phi_ref.scdm", "centers.txt"})
    CHECK(bytes_of(d / name) == bytes_of(instance() / name));
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run("generate --ne 0 --out " + q(root() / "bad")) == 2);
  CHECK(run("localize " + q(root() / "missing.scdm")) == 2);
  CHECK(run("localize " + q(instance() / "psi.scdm") + " --method nope") == 2);
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("metrics " + q(instance() / "phi_ref.scdm") + " --selection " + q(instance() / "centers.txt")) == 2);
}

TEST_CASE("cli: two-stage localize writes an orthonormal basis, selection and timings") {
  const fs::path& d = localized("two-stage");
  const OrbitalFile phi = read_orbital_file(d / "phi.scdm");
  CHECK(phi.data.cols() == 16);
  CHECK(orthonormality_defect(phi.data) <= 1e-10);
  CHECK(read_selection_file(d / "selection.txt").size() == 16);
  std::ifstream t(d / "timing.json");
  const auto j = nlohmann::json::parse(t);
  double sum = 0.0;
  for (const auto& [k, v] : j["stages"].items()) sum += v.get<double>();
  CHECK(std::abs(sum - j["total_seconds"].get<double>()) <= 0.01 * j["total_seconds"].get<double>() + 1e-12);
}

TEST_CASE("cli: epsilon limit gives the full-method selection file") {
  const fs::path d = root() / "loc_limit";
  REQUIRE(run("localize " + q(instance() / "psi.scdm") + " --method two-stage --epsilon-limit --seed 3 --out " + q(d)) == 0);
  CHECK(bytes_of(d / "selection.txt") == bytes_of(localized("full") / "selection.txt"));
  CHECK(bytes_of(d / "phi.scdm").size() == bytes_of(localized("full") / "phi.scdm").size());
}

TEST_CASE("cli: repeated localize runs are byte-identical") {
  const fs::path d = root() / "loc_repeat";
  REQUIRE(run("localize " + q(instance() / "psi.scdm") + " --density " + q(instance() / "rho.scdm") +
              " --method two-stage --seed 3 --out " + q(d)) == 0);
  CHECK(bytes_of(d / "phi.scdm") == bytes_of(localized("two-stage") / "phi.scdm"));
  CHECK(bytes_of(d / "selection.txt") == bytes_of(localized("two-stage") / "selection.txt"));
}

TEST_CASE("cli: corrupted input exits 1") {
  const fs::path bad = root() / "corrupt.scdm";
  fs::copy_file(instance() / "psi.scdm", bad, fs::copy_options::overwrite_existing);
  {
    std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(5000);
    char c = 0;
    f.get(c);
    f.seekp(5000);
    f.put(static_cast<char>(c ^ 0x20));
  }
  CHECK(run("localize " + q(bad) + " --out " + q(root() / "never")) == 1);
  CHECK_FALSE(fs::exists(root() / "never" / "phi.scdm"));
}

TEST_CASE("cli: metrics on mismatched grids exits 1") {
  const fs::path small = root() / "small";
  REQUIRE(run("generate --ne 4 --dims 12,12,12 --min-sep 3 --seed 1 --out " + q(small)) == 0);
  CHECK(run("metrics " + q(localized("full") / "phi.scdm") + " --psi " + q(small / "psi.scdm") + " --out " +
            q(root() / "mm")) == 1);
}

TEST_CASE("cli: metrics self comparison and histogram") {
  const fs::path phi = localized("full") / "phi.scdm";
  const fs::path out = root() / "met_self";
  REQUIRE(run("metrics " + q(phi) + " --psi " + q(instance() / "psi.scdm") + " --selection " +
              q(localized("full") / "selection.txt") + " --compare " + q(phi) + " --out " + q(out)) == 0);
  std::ifstream r(out / "report.json");
  const auto j = nlohmann::json::parse(r);
  const auto perm = j["comparison"]["permutation"].get<std::vector<Index>>();
  for (Index i = 0; i < perm.size(); ++i) CHECK(perm[i] == i);
  for (double c : j["comparison"]["correlations"].get<std::vector<double>>()) CHECK(std::abs(c - 1.0) <= 1e-13);
  CHECK(j["selection_condition"].get<double>() <= 10.0);

  std::ifstream h(out / "histogram.csv");
  std::string line;
  std::getline(h, line);
  Index total = 0;
  while (std::getline(h, line)) total += std::stoul(line.substr(line.rfind(',') + 1));
  CHECK(total == 16);
}

TEST_CASE("cli: two-stage locality within 10% of full") {
  const auto median = [](const fs::path& dir) {
    const fs::path out = dir / "metrics";
    REQUIRE(run("metrics " + q(dir / "phi.scdm") + " --out " + q(out)) == 0);
    std::ifstream r(out / "report.json");
    return nlohmann::json::parse(r)["locality"]["median_fraction"].get<double>();
  };
  const double full = median(localized("full"));
  const double ts = median(localized("two-stage"));
  CHECK(std::abs(ts - full) <= 0.1 * full);
}

TEST_CASE("cli: bench writes one csv row per method") {
  const fs::path csv = root() / "bench.csv";
  REQUIRE(run("bench --edges 12 --ne 4 --repeats 1 --min-sep 3 --csv " + q(csv)) == 0);
  std::ifstream in(csv);
  std::string line;
  Index rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("nx,ny,nz,n_points", 0) == 0);
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
