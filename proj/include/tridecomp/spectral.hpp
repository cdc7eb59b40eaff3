#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tridecomp/state.hpp"
#include "tridecomp/tolerances.hpp"

namespace tridecomp {

/// Eigenvalues of a positive operator, non-increasing, repetitions kept.
struct Spectrum {
  std::vector<double> values;
  double source_trace = 0.0;
  // Eigenvalues in [−psd, 0) that were set to zero, and the most negative of them.
  std::size_t clamped = 0;
  double most_negative = 0.0;

  double at(std::size_t n) const { return n < values.size() ? values[n] : 0.0; }
};

struct EntropyValue {
  double nats = 0.0;
  static constexpr const char* log_base_note = "natural log";
};

// Spectrum of a Hermitian positive operator. Non-Hermitian input (beyond
// tol.herm) or eigenvalues below −tol.psd raise NumericalError.
Spectrum spectrum(const Matrix& positive_operator, const Tolerances& tol = {});
Spectrum spectrum(const DensityMatrix& rho, const Tolerances& tol = {});

EntropyValue entropy(const Spectrum& s);
EntropyValue entropy(const DensityMatrix& rho, const Tolerances& tol = {});

/// One checked inequality lhs ≤ rhs (or lhs < rhs when `strict`).
struct LemmaReport {
  std::string lemma;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::vector<std::pair<std::string, double>> details;
};

// Rounding allowance used when comparing two sides of a non-strict inequality.
double inequality_slack(double lhs, double rhs);

// max_n |r_n − s_n| ≤ ‖R − S‖₁ for positive operators R, S of equal dimension.
LemmaReport verify_spectral_lemmas(const Matrix& r, const Matrix& s, const Tolerances& tol = {});

// ‖P(|Ψ⟩⟨Ψ| − |Φ⟩⟨Φ|)P‖₁ ≤ ‖|Ψ⟩⟨Ψ| − |Φ⟩⟨Φ|‖₁ ≤ 2‖Ψ − Φ‖ for unit vectors and a projection P.
// Returns the two links of the chain.
std::array<LemmaReport, 2> verify_projection_bounds(const Vector& psi, const Vector& phi, const Matrix& projection);

// 2‖Ψ − Φ‖ ≤ √2 ‖|Ψ⟩⟨Ψ| − |Φ⟩⟨Φ|‖₁. Requires ⟨Ψ|Φ⟩ real and positive (PreconditionError otherwise).
LemmaReport verify_positive_overlap_bound(const Vector& psi, const Vector& phi);

// ‖tr_rest A‖₁ ≤ ‖A‖₁ for an operator on a product space.
LemmaReport verify_partial_trace_contraction(const Matrix& a, const std::vector<std::size_t>& dims,
                                             const std::vector<std::size_t>& keep);

// ‖|Ψ⟩⟨Ψ| − |Φ⟩⟨Φ|‖₁ in closed form, 2√(1 − |⟨Ψ|Φ⟩|²) for unit vectors.
double pure_state_trace_distance(const Vector& psi, const Vector& phi);
// |Ψ⟩⟨Ψ| − |Φ⟩⟨Φ| as a dense operator.
Matrix pure_state_difference(const Vector& psi, const Vector& phi);

struct EntropyBoundReport {
  std::vector<double> entropies;  // S(ρ_i), one per factor
  std::size_t term_count = 0;
  double ceiling = 0.0;  // ln K
  // Some entropy exceeds ln K: no K-term product decomposition exists.
  bool violated = false;
};

// Entropies of the single-factor reduced states against ln K.
EntropyBoundReport entropy_decomposition_bound(const State& psi, std::size_t term_count, const Tolerances& tol = {});

struct SpectraAgreement {
  std::vector<Spectrum> spectra;  // one per factor
  double max_mismatch = 0.0;      // max_n over pairs of factors of |r_n(ρ_i) − r_n(ρ_j)|
  bool agree = false;
};

// Reduced spectra of a three-factor state compared elementwise. Disagreement
// beyond `match_tol` rules out a triorthogonal decomposition.
SpectraAgreement reduced_spectra_agreement(const State& psi, double match_tol, const Tolerances& tol = {});
bool triortho_necessary_test(const State& psi, double match_tol, const Tolerances& tol = {});

}  // namespace tridecomp
