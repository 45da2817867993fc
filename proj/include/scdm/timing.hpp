#pragma once

#include <chrono>

namespace scdm {

/// Per-stage wall times in seconds. A stage a method does not run stays 0.
struct StageTimings {
  double sampling = 0.0;         // candidate draws from the density
  double full_qrcp = 0.0;        // QRCP of Psi^T plus the n_e x n_e QR
  double restricted_qrcp = 0.0;  // QRCP of the sampled rows plus the n_e x n_e QR
  double support = 0.0;          // support sets and overlap graph
  double local_qrcp = 0.0;       // per-group QRCPs
  double final_qrcp = 0.0;       // QRCP over the candidate union plus the n_e x n_e QR
  double gemm = 0.0;             // every Phi = Psi Q product
  double wall = 0.0;             // measured around the whole call

  double total() const noexcept {
    return sampling + full_qrcp + restricted_qrcp + support + local_qrcp + final_qrcp + gemm;
  }
  /// Time spent producing the approximately localized gauge (no GEMM).
  double randomized_stage() const noexcept { return sampling + restricted_qrcp; }
};

/// Adds the scope's elapsed time to *slot when slot is non-null.
class ScopedStage {
 public:
  explicit ScopedStage(double* slot) : slot_(slot), start_(std::chrono::steady_clock::now()) {}
  ScopedStage(const ScopedStage&) = delete;
  ScopedStage& operator=(const ScopedStage&) = delete;
  ~ScopedStage() {
    if (slot_ != nullptr) {
      *slot_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
  }

 private:
  double* slot_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace scdm
