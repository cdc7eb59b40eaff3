#pragma once

#include <cstddef>

namespace tridecomp {

/// Numerical thresholds shared by every module. All values are binary64 and
/// can be overridden per call (the CLI exposes the decomposition ones as flags).
struct Tolerances {
  double norm = 1e-9;            // |‖Ψ‖ − 1| for wavefunctions, unit factor vectors
  double herm = 1e-9;            // max |A − A†| entry for density matrices
  double psd = 1e-10;            // eigenvalues in [−psd, 0) are clamped to 0
  double li = 1e-8;              // linear independence: min singular value must exceed this
  double orth = 1e-8;            // orthonormality: max off-diagonal overlap below this
  double deg = 1e-7;             // spectral degeneracy grouping
  double reconstruction = 1e-8;  // ‖Ψ − Σ a_k ψ¹ψ²ψ³‖
  double spectral_match = 1e-8;  // elementwise agreement of reduced spectra
  double zero = 1e-12;           // numerically zero Schmidt coefficients are dropped
};

/// Largest number of amplitudes a dense state may hold.
inline constexpr std::size_t kDefaultDenseCeiling = std::size_t{1} << 22;

}  // namespace tridecomp
