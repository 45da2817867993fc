#include "scdm/io.hpp"

#include <zlib.h>

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scdm/error.hpp"

namespace scdm {

namespace {

constexpr std::size_t kHeaderBytes = 64;
constexpr std::uint32_t kUniformWeights = 0;
constexpr std::uint32_t kPointWeights = 1;

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <class T>
T get_le(const unsigned char* p) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

std::uint32_t crc_update(std::uint32_t crc, const unsigned char* p, std::size_t n) {
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1U << 30));
    crc = static_cast<std::uint32_t>(::crc32(crc, p, chunk));
    p += chunk;
    n -= chunk;
  }
  return crc;
}

// Doubles to little-endian bytes; a straight copy on little-endian hosts.
void doubles_to_bytes(const double* src, std::size_t n, unsigned char* dst) {
  std::memcpy(dst, src, n * sizeof(double));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t k = 0; k < n; ++k) std::reverse(dst + 8 * k, dst + 8 * k + 8);
  }
}

void bytes_to_doubles(const unsigned char* src, std::size_t n, double* dst) {
  std::memcpy(dst, src, n * sizeof(double));
  if constexpr (std::endian::native == std::endian::big) {
    auto* raw = reinterpret_cast<unsigned char*>(dst);
    for (std::size_t k = 0; k < n; ++k) std::reverse(raw + 8 * k, raw + 8 * k + 8);
  }
}

std::vector<unsigned char> encode_header(const Grid& grid, const Matrix& data) {
  std::vector<unsigned char> h;
  h.reserve(kHeaderBytes);
  h.insert(h.end(), kOrbitalMagic, kOrbitalMagic + 4);
  put_le<std::uint32_t>(h, kOrbitalFormatVersion);
  put_le<std::uint64_t>(h, grid.size());
  put_le<std::uint32_t>(h, static_cast<std::uint32_t>(data.cols()));
  for (auto d : grid.dims()) put_le<std::uint32_t>(h, d);
  for (double s : grid.spacing()) put_le<double>(h, s);
  put_le<std::uint32_t>(h, grid.uniform_weights() ? kUniformWeights : kPointWeights);
  put_le<std::uint32_t>(h, 0);
  return h;
}

struct Header {
  std::uint64_t points = 0;
  std::uint32_t columns = 0;
  std::array<std::uint32_t, 3> dims{};
  Vec3 spacing{};
  std::uint32_t weight_mode = 0;

  std::size_t weight_count() const { return weight_mode == kUniformWeights ? 1 : points; }
  std::uint64_t file_bytes() const {
    return kHeaderBytes + 8 * weight_count() + 8 * points * static_cast<std::uint64_t>(columns) + 4;
  }
};

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::kCorrupt, "orbital file: " + what); }

Header decode_header(const unsigned char* p) {
  if (std::memcmp(p, kOrbitalMagic, 4) != 0) corrupt("bad magic");
  if (get_le<std::uint32_t>(p + 4) != kOrbitalFormatVersion) corrupt("unsupported format version");
  Header h;
  h.points = get_le<std::uint64_t>(p + 8);
  h.columns = get_le<std::uint32_t>(p + 16);
  for (int d = 0; d < 3; ++d) h.dims[d] = get_le<std::uint32_t>(p + 20 + 4 * d);
  for (int d = 0; d < 3; ++d) h.spacing[d] = get_le<double>(p + 32 + 8 * d);
  h.weight_mode = get_le<std::uint32_t>(p + 56);
  const std::uint64_t product = std::uint64_t{h.dims[0]} * h.dims[1] * h.dims[2];
  if (product == 0 || product != h.points) corrupt("N does not match the grid dimensions");
  if (h.columns == 0) corrupt("zero columns");
  if (h.weight_mode != kUniformWeights && h.weight_mode != kPointWeights) corrupt("unknown weight mode");
  return h;
}

OrbitalFile build(const Header& h, std::vector<double> weights, Matrix data) {
  try {
    Grid grid = weights.size() == 1 ? Grid(h.dims, h.spacing, weights[0]) : Grid(h.dims, h.spacing, std::move(weights));
    if (!data.all_finite()) corrupt("non-finite payload entries");
    return {std::move(grid), std::move(data)};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorrupt) throw;
    corrupt(e.what());
  }
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::vector<unsigned char> encode_orbital_file(const Grid& grid, const Matrix& data) {
  if (data.rows() != grid.size()) throw Error(ErrorCode::kDimensionMismatch, "array rows differ from the grid size");
  std::vector<unsigned char> out = encode_header(grid, data);
  const auto w = grid.weights();
  const std::size_t base = out.size();
  out.resize(base + 8 * w.size() + 8 * data.size());
  doubles_to_bytes(w.data(), w.size(), out.data() + base);
  doubles_to_bytes(data.data(), data.size(), out.data() + base + 8 * w.size());
  put_le<std::uint32_t>(out, crc_update(0, out.data(), out.size()));
  return out;
}

OrbitalFile decode_orbital_file(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderBytes + 4) corrupt("truncated header");
  const Header h = decode_header(bytes.data());
  if (h.file_bytes() != bytes.size()) corrupt("size does not match the header (truncated or padded)");
  const std::size_t body = bytes.size() - 4;
  if (crc_update(0, bytes.data(), body) != get_le<std::uint32_t>(bytes.data() + body)) corrupt("CRC mismatch");
  std::vector<double> weights(h.weight_count());
  bytes_to_doubles(bytes.data() + kHeaderBytes, weights.size(), weights.data());
  Matrix data(h.points, h.columns);
  bytes_to_doubles(bytes.data() + kHeaderBytes + 8 * weights.size(), data.size(), data.data());
  return build(h, std::move(weights), std::move(data));
}

void write_orbital_file(const std::filesystem::path& path, const Grid& grid, const Matrix& data) {
  if (data.rows() != grid.size()) throw Error(ErrorCode::kDimensionMismatch, "array rows differ from the grid size");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  const auto header = encode_header(grid, data);
  std::uint32_t crc = crc_update(0, header.data(), header.size());
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));

  // Stream the weights and payload in bounded chunks.
  std::vector<unsigned char> buf;
  auto emit = [&](const double* src, std::size_t n) {
    constexpr std::size_t kChunk = 1 << 16;
    for (std::size_t off = 0; off < n; off += kChunk) {
      const std::size_t len = std::min(kChunk, n - off);
      buf.resize(8 * len);
      doubles_to_bytes(src + off, len, buf.data());
      crc = crc_update(crc, buf.data(), buf.size());
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
  };
  emit(grid.weights().data(), grid.weights().size());
  emit(data.data(), data.size());
  buf.clear();
  put_le<std::uint32_t>(buf, crc);
  out.write(reinterpret_cast<const char*>(buf.data()), 4);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

OrbitalFile read_orbital_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot stat " + path.string());

  unsigned char head[kHeaderBytes];
  if (size < kHeaderBytes + 4 || !in.read(reinterpret_cast<char*>(head), kHeaderBytes)) corrupt("truncated header");
  const Header h = decode_header(head);
  if (h.file_bytes() != size) corrupt("size does not match the header (truncated or padded)");
  std::uint32_t crc = crc_update(0, head, kHeaderBytes);

  std::vector<double> weights(h.weight_count());
  Matrix data(h.points, h.columns);
  auto slurp = [&](double* dst, std::size_t n) {
    // Read straight into the destination, then fix byte order in place.
    auto* raw = reinterpret_cast<unsigned char*>(dst);
    if (!in.read(reinterpret_cast<char*>(raw), static_cast<std::streamsize>(8 * n))) corrupt("truncated payload");
    crc = crc_update(crc, raw, 8 * n);
    if constexpr (std::endian::native == std::endian::big) bytes_to_doubles(raw, n, dst);
  };
  slurp(weights.data(), weights.size());
  slurp(data.data(), data.size());
  unsigned char tail[4];
  if (!in.read(reinterpret_cast<char*>(tail), 4)) corrupt("missing CRC");
  if (crc != get_le<std::uint32_t>(tail)) corrupt("CRC mismatch");
  return build(h, std::move(weights), std::move(data));
}

void write_selection_file(const std::filesystem::path& path, const Grid& grid, const ColumnSelection& selection) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "# index(1-based) x y z, " << selection.indices.size() << " columns\n";
  for (Index j : selection.indices) {
    if (j >= grid.size()) throw Error(ErrorCode::kInvalidArgument, "selection index outside the grid");
    const Vec3 p = grid.position(j);
    out << (j + 1) << ' ' << format_double(p[0]) << ' ' << format_double(p[1]) << ' ' << format_double(p[2]) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<Index> read_selection_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Index> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    unsigned long long one_based = 0;
    if (!(ls >> one_based) || one_based == 0) throw Error(ErrorCode::kCorrupt, "bad selection line: " + line);
    out.push_back(static_cast<Index>(one_based - 1));
  }
  return out;
}

std::string timings_json(const RunInfo& info, const StageTimings& t) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(info.method));
  j["n_points"] = info.points;
  j["n_orbitals"] = info.orbitals;
  j["threads"] = info.threads;
  j["seed"] = info.seed;
  j["parameters"] = {{"gamma", info.gamma}, {"delta", info.delta}, {"epsilon", info.epsilon}};
  j["stages"] = {{"sampling", t.sampling},     {"full_qrcp", t.full_qrcp},   {"restricted_qrcp", t.restricted_qrcp},
                 {"support", t.support},       {"local_qrcp", t.local_qrcp}, {"final_qrcp", t.final_qrcp},
                 {"gemm", t.gemm}};
  j["gemm_seconds"] = t.gemm;
  j["randomized_stage_seconds"] = t.randomized_stage();
  j["total_seconds"] = t.total();
  j["wall_seconds"] = t.wall;
  return j.dump(2) + "\n";
}

void write_timings_json(const std::filesystem::path& path, const RunInfo& info, const StageTimings& timings) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << timings_json(info, timings);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void write_metrics_report(const std::filesystem::path& dir, const MetricsInputs& in) {
  if (in.phi == nullptr || in.grid == nullptr) throw Error(ErrorCode::kInvalidArgument, "metrics need a basis and its grid");
  const Matrix& phi = *in.phi;
  if (in.psi != nullptr && (in.psi->rows() != phi.rows() || in.psi->cols() != phi.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "orbital and basis files have different shapes");
  }
  if (in.compare != nullptr && (in.compare->rows() != phi.rows() || in.compare->cols() != phi.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "comparison basis has a different shape");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  const LocalityReport loc = truncated_sparsity(phi, in.tau);
  const SpreadReport spr = spread(phi, *in.grid);

  std::ofstream csv(dir / "locality.csv", std::ios::trunc);
  if (!csv) throw Error(ErrorCode::kIo, "cannot write " + (dir / "locality.csv").string());
  csv << "orbital,fraction,spread,center_x,center_y,center_z\n";
  for (Index i = 0; i < phi.cols(); ++i) {
    csv << i << ',' << format_double(loc.fractions[i]) << ',' << format_double(spr.spreads[i]) << ','
        << format_double(spr.centers[i][0]) << ',' << format_double(spr.centers[i][1]) << ','
        << format_double(spr.centers[i][2]) << '\n';
  }

  std::ofstream hist(dir / "histogram.csv", std::ios::trunc);
  if (!hist) throw Error(ErrorCode::kIo, "cannot write " + (dir / "histogram.csv").string());
  hist << "bin_lo,bin_hi,count\n";
  for (const auto& b : loc.histogram) hist << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';

  nlohmann::ordered_json j;
  j["n_points"] = phi.rows();
  j["n_orbitals"] = phi.cols();
  j["tau"] = loc.tau;
  j["locality"] = {{"median_fraction", loc.median}, {"max_fraction", loc.max}, {"fractions", loc.fractions}};
  j["spread"] = {{"total", spr.total}, {"per_orbital", spr.spreads}};
  j["orthonormality_defect"] = orthonormality_defect(phi);
  if (in.psi != nullptr) j["span_residual"] = span_residual(*in.psi, phi);
  if (in.psi != nullptr && in.selection != nullptr) {
    const double kappa = selection_condition(*in.psi, *in.selection);
    j["selection_condition"] = std::isfinite(kappa) ? nlohmann::ordered_json(kappa) : nlohmann::ordered_json("inf");
  }
  if (in.compare != nullptr) {
    const OrbitalMatching m = match_orbitals(phi, *in.compare);
    const LocalityReport other = truncated_sparsity(*in.compare, in.tau);
    j["comparison"] = {{"permutation", m.permutation},
                       {"correlations", m.correlations},
                       {"min_correlation", m.correlations.empty() ? 0.0 : *std::min_element(m.correlations.begin(), m.correlations.end())},
                       {"median_fraction", other.median},
                       {"max_fraction", other.max}};
  }
  std::ofstream rep(dir / "report.json", std::ios::trunc);
  if (!rep) throw Error(ErrorCode::kIo, "cannot write " + (dir / "report.json").string());
  rep << j.dump(2) << "\n";
}

}  // namespace scdm
