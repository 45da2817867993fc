#include "scdm/orbitals.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "scdm/error.hpp"

namespace scdm {

namespace {

Index checked_size(const std::array<std::uint32_t, 3>& dims) {
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
    throw Error(ErrorCode::kInvalidArgument, "grid dimensions must be positive");
  }
  return Index{dims[0]} * dims[1] * dims[2];
}

double squared_distance(const Vec3& a, const Vec3& b, const Vec3* period) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) {
    double x = std::abs(a[d] - b[d]);
    if (period != nullptr && (*period)[d] > 0.0) x = std::min(x, (*period)[d] - x);
    s += x * x;
  }
  return s;
}

struct Box {
  Vec3 lo{};
  Vec3 hi{};
};

Box placement_box(const SynthSpec& spec) {
  Box box;
  for (int d = 0; d < 3; ++d) {
    const double extent = (spec.dims[d] - 1.0) * spec.spacing[d];
    const double margin = std::min(0.5 * std::max(spec.min_separation, 0.0), 0.25 * extent);
    box.lo[d] = margin;
    box.hi[d] = extent - margin;
  }
  return box;
}

Vec3 period_of(const SynthSpec& spec) {
  return {spec.dims[0] * spec.spacing[0], spec.dims[1] * spec.spacing[1], spec.dims[2] * spec.spacing[2]};
}

[[noreturn]] void infeasible(const SynthSpec& spec, const char* layout) {
  std::ostringstream msg;
  msg << "cannot place " << spec.n_e << " centers with min separation " << spec.min_separation << " ("
      << layout << " layout) on a " << spec.dims[0] << "x" << spec.dims[1] << "x" << spec.dims[2]
      << " grid; reduce n_e or min_separation";
  throw Error(ErrorCode::kInfeasible, msg.str());
}

std::vector<Vec3> random_layout(const SynthSpec& spec, std::mt19937_64& rng) {
  const Box box = placement_box(spec);
  const Vec3 period = period_of(spec);
  const Vec3* per = spec.periodic ? &period : nullptr;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double min_sq = spec.min_separation * spec.min_separation;
  constexpr int kAttempts = 20000;
  std::vector<Vec3> centers;
  centers.reserve(spec.n_e);
  while (centers.size() < spec.n_e) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      Vec3 c;
      for (int d = 0; d < 3; ++d) c[d] = box.lo[d] + unit(rng) * (box.hi[d] - box.lo[d]);
      placed = std::all_of(centers.begin(), centers.end(),
                           [&](const Vec3& o) { return squared_distance(c, o, per) >= min_sq; });
      if (placed) centers.push_back(c);
    }
    if (!placed) infeasible(spec, "random");
  }
  return centers;
}

std::vector<Vec3> lattice_layout(const SynthSpec& spec) {
  Vec3 extent;
  for (int d = 0; d < 3; ++d) extent[d] = spec.dims[d] * spec.spacing[d];
  std::array<Index, 3> counts{1, 1, 1};
  while (counts[0] * counts[1] * counts[2] < spec.n_e) {
    int grow = 0;
    for (int d = 1; d < 3; ++d)
      if (extent[d] / counts[d] > extent[grow] / counts[grow]) grow = d;
    ++counts[grow];
  }
  double nearest = std::numeric_limits<double>::infinity();
  for (int d = 0; d < 3; ++d)
    if (counts[d] > 1) nearest = std::min(nearest, extent[d] / counts[d]);
  if (spec.n_e > 1 && nearest < spec.min_separation) infeasible(spec, "lattice");

  std::vector<Vec3> centers;
  for (Index z = 0; z < counts[2] && centers.size() < spec.n_e; ++z)
    for (Index y = 0; y < counts[1] && centers.size() < spec.n_e; ++y)
      for (Index x = 0; x < counts[0] && centers.size() < spec.n_e; ++x) {
        const std::array<Index, 3> at{x, y, z};
        Vec3 c;
        for (int d = 0; d < 3; ++d) c[d] = (at[d] + 0.5) * extent[d] / counts[d] - 0.5 * spec.spacing[d];
        centers.push_back(c);
      }
  return centers;
}

// Chains of cluster_size centers spaced exactly min_separation apart; distinct
// chains keep 1.5 * min_separation between any two members.
std::vector<Vec3> clustered_layout(const SynthSpec& spec, std::mt19937_64& rng) {
  const Box box = placement_box(spec);
  const Vec3 period = period_of(spec);
  const Vec3* per = spec.periodic ? &period : nullptr;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double inter_sq = 2.25 * spec.min_separation * spec.min_separation;
  const Index chain = std::max<Index>(1, spec.cluster_size);
  constexpr int kAttempts = 20000;

  std::vector<Vec3> centers;
  while (centers.size() < spec.n_e) {
    const Index len = std::min(chain, spec.n_e - centers.size());
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      Vec3 anchor;
      Vec3 dir;
      double norm = 0.0;
      for (int d = 0; d < 3; ++d) {
        anchor[d] = box.lo[d] + unit(rng) * (box.hi[d] - box.lo[d]);
        dir[d] = spec.dims[d] > 1 ? normal(rng) : 0.0;
        norm += dir[d] * dir[d];
      }
      if (norm == 0.0) continue;
      norm = std::sqrt(norm);
      std::vector<Vec3> members(len);
      bool inside = true;
      for (Index t = 0; t < len && inside; ++t) {
        for (int d = 0; d < 3; ++d) {
          members[t][d] = anchor[d] + static_cast<double>(t) * spec.min_separation * dir[d] / norm;
          inside = inside && members[t][d] >= box.lo[d] && members[t][d] <= box.hi[d];
        }
      }
      if (!inside) continue;
      placed = std::all_of(centers.begin(), centers.end(), [&](const Vec3& o) {
        return std::all_of(members.begin(), members.end(),
                           [&](const Vec3& c) { return squared_distance(c, o, per) >= inter_sq; });
      });
      if (placed) centers.insert(centers.end(), members.begin(), members.end());
    }
    if (!placed) infeasible(spec, "clustered");
  }
  return centers;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::array<std::uint32_t, 3> dims, Vec3 spacing)
    : Grid(dims, spacing, spacing[0] * spacing[1] * spacing[2]) {}

Grid::Grid(std::array<std::uint32_t, 3> dims, Vec3 spacing, double uniform_weight)
    : dims_(dims), spacing_(spacing), size_(checked_size(dims)), weights_{uniform_weight} {
  validate();
}

Grid::Grid(std::array<std::uint32_t, 3> dims, Vec3 spacing, std::vector<double> weights)
    : dims_(dims), spacing_(spacing), size_(checked_size(dims)), weights_(std::move(weights)) {
  if (weights_.size() != 1 && weights_.size() != size_) {
    throw Error(ErrorCode::kDimensionMismatch, "grid weight count must be 1 or N");
  }
  validate();
}

void Grid::validate() const {
  for (double h : spacing_)
    if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::kInvalidArgument, "grid spacing must be positive");
  for (double w : weights_)
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::kInvalidArgument, "grid weights must be strictly positive");
}

std::array<std::uint32_t, 3> Grid::coords(Index i) const noexcept {
  const Index nx = dims_[0];
  const Index ny = dims_[1];
  return {static_cast<std::uint32_t>(i % nx), static_cast<std::uint32_t>((i / nx) % ny),
          static_cast<std::uint32_t>(i / (nx * ny))};
}

Vec3 Grid::position(Index i) const noexcept {
  const auto c = coords(i);
  return {c[0] * spacing_[0], c[1] * spacing_[1], c[2] * spacing_[2]};
}

Vec3 Grid::extent() const noexcept {
  return {(dims_[0] - 1.0) * spacing_[0], (dims_[1] - 1.0) * spacing_[1], (dims_[2] - 1.0) * spacing_[2]};
}

bool Grid::same_as(const Grid& other) const noexcept {
  return dims_ == other.dims_ && spacing_ == other.spacing_ && weights_ == other.weights_;
}

// ---------------------------------------------------------------------------
// OrbitalSet

OrbitalSet::OrbitalSet(Grid grid, Matrix psi) : grid_(std::move(grid)), psi_(std::move(psi)) {
  if (psi_.rows() != grid_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "orbital rows must equal the grid size");
  }
  if (psi_.cols() == 0 || psi_.cols() > psi_.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= n_e <= N orbitals");
  }
  if (!psi_.all_finite()) throw Error(ErrorCode::kInvalidArgument, "orbitals contain non-finite entries");
  const double defect = orthonormality_defect(psi_);
  if (!(defect <= kOrthonormalityTolerance)) {
    std::ostringstream msg;
    msg << "orbitals are not orthonormal: max |Psi^T Psi - I| = " << defect;
    throw Error(ErrorCode::kNotOrthonormal, msg.str());
  }
}

OrbitalSet OrbitalSet::trusted(Grid grid, Matrix psi) {
  OrbitalSet o;
  o.grid_ = std::move(grid);
  o.psi_ = std::move(psi);
  return o;
}

double ElectronDensity::total() const noexcept {
  double s = 0.0;
  for (double r : rho) s += r;
  return s;
}

OrbitalSet weight_absorb(const Matrix& psi_hat, const Grid& grid) {
  if (psi_hat.rows() != grid.size()) throw Error(ErrorCode::kDimensionMismatch, "psi_hat rows must equal the grid size");
  Matrix psi = psi_hat;
  for (Index j = 0; j < psi.cols(); ++j) {
    auto c = psi.col(j);
    for (Index i = 0; i < c.size(); ++i) c[i] *= std::sqrt(grid.weight(i));
  }
  Matrix gram = gemm(psi, psi, Op::kTranspose, Op::kNone);
  double worst = 0.0;
  Index wi = 0;
  Index wj = 0;
  for (Index j = 0; j < gram.cols(); ++j)
    for (Index i = 0; i < gram.rows(); ++i) {
      const double dev = std::abs(gram(i, j) - (i == j ? 1.0 : 0.0));
      if (dev > worst) {
        worst = dev;
        wi = i;
        wj = j;
      }
    }
  if (!(worst <= 1e-8)) {
    std::ostringstream msg;
    msg << "weighted orthonormality violated: Gram entry (" << wi << ", " << wj << ") = " << gram(wi, wj);
    throw Error(ErrorCode::kNotOrthonormal, msg.str());
  }
  if (worst > 1e-12) {
    // Symmetric re-orthonormalization removes an O(worst) defect while moving
    // each column by O(worst).
    const auto eig = symmetric_eigen(gram);
    Matrix scaled = eig.vectors;
    for (Index k = 0; k < scaled.cols(); ++k)
      for (double& x : scaled.col(k)) x /= std::sqrt(eig.values[k]);
    psi = gemm(psi, gemm(scaled, eig.vectors, Op::kNone, Op::kTranspose));
  }
  return OrbitalSet(grid, std::move(psi));
}

ElectronDensity compute_density(const Matrix& psi) {
  ElectronDensity d{std::vector<double>(psi.rows(), 0.0)};
  for (Index j = 0; j < psi.cols(); ++j) {
    const auto c = psi.col(j);
    for (Index i = 0; i < c.size(); ++i) d.rho[i] += c[i] * c[i];
  }
  return d;
}

ElectronDensity compute_density(const OrbitalSet& orbitals) { return compute_density(orbitals.psi()); }

Matrix random_unitary(Index n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "random_unitary needs n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (Index k = 0; k < g.size(); ++k) g.data()[k] = normal(rng);
  // diag(R) >= 0 from householder_qr makes Q Haar distributed.
  return householder_qr(std::move(g)).thin_q();
}

// ---------------------------------------------------------------------------
// Synthetic instances

std::vector<Vec3> place_centers(const SynthSpec& spec) {
  if (spec.n_e == 0) throw Error(ErrorCode::kInvalidArgument, "n_e must be positive");
  std::mt19937_64 rng(spec.seed);
  switch (spec.layout) {
    case CenterLayout::kRandom: return random_layout(spec, rng);
    case CenterLayout::kLattice: return lattice_layout(spec);
    case CenterLayout::kClustered: return clustered_layout(spec, rng);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown center layout");
}

SynthInstance synth_generate(const SynthSpec& spec) {
  if (!(spec.decay_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "decay_rate must be positive");
  Grid grid(spec.dims, spec.spacing);
  if (spec.n_e > grid.size()) throw Error(ErrorCode::kInvalidArgument, "n_e exceeds the number of grid points");

  SynthInstance inst;
  inst.centers = place_centers(spec);
  const Index n = grid.size();
  const Index ne = spec.n_e;
  const Vec3 period = period_of(spec);
  const Vec3* per = spec.periodic ? &period : nullptr;

  Matrix bumps(n, ne);
  for (Index i = 0; i < ne; ++i) {
    auto c = bumps.col(i);
    for (Index j = 0; j < n; ++j) {
      const double r = std::sqrt(squared_distance(grid.position(j), inst.centers[i], per));
      c[j] = std::sqrt(grid.weight(j)) * std::exp(-spec.decay_rate * r);
    }
  }

  const Matrix overlap = gemm(bumps, bumps, Op::kTranspose, Op::kNone);
  const auto eig = symmetric_eigen(overlap);
  const double lmin = eig.values.front();
  const double lmax = eig.values.back();
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    std::ostringstream msg;
    msg << "bump overlap matrix is numerically singular (condition " << (lmin > 0.0 ? lmax / lmin : INFINITY)
        << "); increase min_separation or decay_rate";
    throw Error(ErrorCode::kIllConditioned, msg.str());
  }
  Matrix scaled = eig.vectors;
  for (Index k = 0; k < ne; ++k)
    for (double& x : scaled.col(k)) x /= std::sqrt(eig.values[k]);
  const Matrix inv_sqrt = gemm(scaled, eig.vectors, Op::kNone, Op::kTranspose);
  inst.reference = gemm(bumps, inv_sqrt);
  bumps = Matrix();

  if (spec.gauge == Gauge::kHaar) {
    inst.gauge = random_unitary(ne, spec.seed ^ 0x9E3779B97F4A7C15ULL);
    inst.orbitals = OrbitalSet(grid, gemm(inst.reference, inst.gauge));
  } else {
    inst.gauge = Matrix::identity(ne);
    inst.orbitals = OrbitalSet(grid, inst.reference);
  }
  return inst;
}

std::string_view to_string(CenterLayout layout) {
  switch (layout) {
    case CenterLayout::kRandom: return "random";
    case CenterLayout::kLattice: return "lattice";
    case CenterLayout::kClustered: return "clustered";
  }
  return "?";
}

std::string_view to_string(Gauge gauge) { return gauge == Gauge::kHaar ? "haar" : "identity"; }

CenterLayout parse_layout(std::string_view s) {
  if (s == "random") return CenterLayout::kRandom;
  if (s == "lattice") return CenterLayout::kLattice;
  if (s == "clustered") return CenterLayout::kClustered;
  throw Error(ErrorCode::kInvalidArgument, "unknown layout '" + std::string(s) + "'");
}

Gauge parse_gauge(std::string_view s) {
  if (s == "identity") return Gauge::kIdentity;
  if (s == "haar") return Gauge::kHaar;
  throw Error(ErrorCode::kInvalidArgument, "unknown gauge '" + std::string(s) + "'");
}

}  // namespace scdm
