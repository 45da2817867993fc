#pragma once

// On-disk formats. See docs/formats.md for the byte layout and report schemas.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scdm/localize.hpp"
#include "scdm/metrics.hpp"

namespace scdm {

inline constexpr char kOrbitalMagic[4] = {'S', 'C', 'D', 'M'};
inline constexpr std::uint32_t kOrbitalFormatVersion = 1;

/// A grid plus an N x k column-major array: orbitals, bases or densities (k = 1).
struct OrbitalFile {
  Grid grid;
  Matrix data;
};

std::vector<unsigned char> encode_orbital_file(const Grid& grid, const Matrix& data);
OrbitalFile decode_orbital_file(std::span<const unsigned char> bytes);

void write_orbital_file(const std::filesystem::path& path, const Grid& grid, const Matrix& data);
/// Throws kIo when the file cannot be opened, kCorrupt on any format or CRC
/// failure.
OrbitalFile read_orbital_file(const std::filesystem::path& path);

/// One line per selected column: 1-based grid index then x y z.
void write_selection_file(const std::filesystem::path& path, const Grid& grid, const ColumnSelection& selection);
/// Returns 0-based indices.
std::vector<Index> read_selection_file(const std::filesystem::path& path);

struct RunInfo {
  Method method = Method::kFull;
  Index points = 0;
  Index orbitals = 0;
  int threads = 1;
  std::uint64_t seed = 0;
  double gamma = 1.0 / 3.0;
  double delta = 1.0;
  double epsilon = 5e-2;
};

std::string timings_json(const RunInfo& info, const StageTimings& timings);
void write_timings_json(const std::filesystem::path& path, const RunInfo& info, const StageTimings& timings);

struct MetricsInputs {
  const Matrix* phi = nullptr;
  const Grid* grid = nullptr;
  const Matrix* psi = nullptr;                   // optional
  const std::vector<Index>* selection = nullptr;  // optional, needs psi
  const Matrix* compare = nullptr;               // optional second basis
  double tau = kDefaultTruncation;
};

/// Writes locality.csv, histogram.csv and report.json into `dir`.
void write_metrics_report(const std::filesystem::path& dir, const MetricsInputs& in);

}  // namespace scdm
