#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "scdm/linalg.hpp"

namespace scdm {

using Vec3 = std::array<double, 3>;

/// Uniform rectilinear grid with positive per-point integration weights.
/// Linear index i = x + nx * (y + ny * z).
class Grid {
 public:
  Grid() = default;
  /// Constant weight equal to the cell volume.
  Grid(std::array<std::uint32_t, 3> dims, Vec3 spacing);
  Grid(std::array<std::uint32_t, 3> dims, Vec3 spacing, double uniform_weight);
  Grid(std::array<std::uint32_t, 3> dims, Vec3 spacing, std::vector<double> weights);

  const std::array<std::uint32_t, 3>& dims() const noexcept { return dims_; }
  const Vec3& spacing() const noexcept { return spacing_; }
  Index size() const noexcept { return size_; }

  bool uniform_weights() const noexcept { return weights_.size() == 1; }
  double weight(Index i) const noexcept { return weights_.size() == 1 ? weights_[0] : weights_[i]; }
  /// One entry when uniform, otherwise size() entries.
  std::span<const double> weights() const noexcept { return weights_; }

  std::array<std::uint32_t, 3> coords(Index i) const noexcept;
  Vec3 position(Index i) const noexcept;
  Vec3 extent() const noexcept;  // (n - 1) * h per axis

  /// Same dims, spacing and weights.
  bool same_as(const Grid& other) const noexcept;

 private:
  void validate() const;

  std::array<std::uint32_t, 3> dims_{0, 0, 0};
  Vec3 spacing_{1.0, 1.0, 1.0};
  Index size_ = 0;
  std::vector<double> weights_;
};

/// Weight-absorbed orbitals Psi = W^{1/2} Psi_hat with Psi^T Psi = I.
class OrbitalSet {
 public:
  OrbitalSet() = default;
  /// Validates shape and orthonormality (tolerance 1e-10).
  OrbitalSet(Grid grid, Matrix psi);

  /// Skips the O(N n_e^2) orthonormality check; the caller guarantees it.
  static OrbitalSet trusted(Grid grid, Matrix psi);

  const Grid& grid() const noexcept { return grid_; }
  const Matrix& psi() const noexcept { return psi_; }
  Index points() const noexcept { return psi_.rows(); }
  Index orbitals() const noexcept { return psi_.cols(); }

  Matrix release_psi() && { return std::move(psi_); }

 private:
  Grid grid_;
  Matrix psi_;
};

inline constexpr double kOrthonormalityTolerance = 1e-10;

struct ElectronDensity {
  std::vector<double> rho;  // rho(j) = sum_i psi(j, i)^2
  double total() const noexcept;
};

/// Psi = W^{1/2} psi_hat. Throws kNotOrthonormal, naming the worst Gram entry,
/// when psi_hat violates weighted orthonormality by more than 1e-8.
OrbitalSet weight_absorb(const Matrix& psi_hat, const Grid& grid);

ElectronDensity compute_density(const OrbitalSet& orbitals);
ElectronDensity compute_density(const Matrix& psi);

/// Haar-distributed orthogonal n-by-n matrix.
Matrix random_unitary(Index n, std::uint64_t seed);

enum class CenterLayout { kRandom, kLattice, kClustered };
enum class Gauge { kIdentity, kHaar };

struct SynthSpec {
  Index n_e = 16;
  std::array<std::uint32_t, 3> dims{32, 32, 32};
  Vec3 spacing{1.0, 1.0, 1.0};
  double decay_rate = 1.0;      // inverse length
  double min_separation = 5.0;  // length
  CenterLayout layout = CenterLayout::kRandom;
  Gauge gauge = Gauge::kHaar;
  bool periodic = false;        // minimum-image bump distances
  Index cluster_size = 4;       // chain length for kClustered
  std::uint64_t seed = 1;
};

struct SynthInstance {
  OrbitalSet orbitals;        // delocalized input Psi
  std::vector<Vec3> centers;  // bump centers, one per reference orbital
  Matrix reference;           // Loewdin-orthonormalized bumps Phi_ref
  Matrix gauge;               // Psi = Phi_ref * gauge
};

/// Builds n_e exponential bumps, Loewdin-orthonormalizes them into Phi_ref and
/// scrambles them with the requested gauge.
SynthInstance synth_generate(const SynthSpec& spec);

/// Centers only; throws kInfeasible when the layout cannot be honored.
std::vector<Vec3> place_centers(const SynthSpec& spec);

std::string_view to_string(CenterLayout layout);
std::string_view to_string(Gauge gauge);
CenterLayout parse_layout(std::string_view s);
Gauge parse_gauge(std::string_view s);

}  // namespace scdm
