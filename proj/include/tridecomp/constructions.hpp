#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "tridecomp/decomp.hpp"
#include "tridecomp/state.hpp"

namespace tridecomp {

// ---------------------------------------------------------------------------
// singlet-based instability on C² ⊗ C² ⊗ C²

struct SingletFamily {
  double theta = 0.0;
  DenseState psi;  // ψ¹₁ ⊗ singlet, the common limit
  SumState phi_theta;
  SumState psi_theta;
  TriDecomposition phi_decomposition;
  TriDecomposition psi_decomposition;
};

// θ ∈ (0, π/2].
SingletFamily singlet_family(double theta);

// Two expansions of √p1 ψ²₁ψ³₁ + √p2 ψ²₂ψ³₂ on C² ⊗ C². Factor-2 vectors are
// unit; factor-3 vectors carry the weights.
struct SchmidtRotation {
  double p1 = 0.0, p2 = 0.0, alpha = 0.0;
  Vector target;  // row-major 2×2 amplitudes
  std::array<std::pair<Vector, Vector>, 2> schmidt_form;
  std::array<std::pair<Vector, Vector>, 2> rotated_form;
};

SchmidtRotation schmidt_rotation(double p1, double p2, double alpha);
// Σ first ⊗ second of a two-term expansion.
Vector expansion_vector(const std::array<std::pair<Vector, Vector>, 2>& terms);

// Reduced states of the SingletFamily pair on factors 1 ⊗ 2 with their two-term
// convex decompositions.
struct ReducedPair {
  double theta = 0.0;
  DensityMatrix rho_phi;
  DensityMatrix rho_psi;
  std::array<double, 2> phi_weights{};
  std::array<double, 2> psi_weights{};
  std::array<Vector, 2> phi_products;  // φ¹_i ⊗ φ²_i
  std::array<Vector, 2> xi_products;   // ξ¹_j ⊗ ξ²_j
  double trace_norm_gap = 0.0;         // ‖ρ_Φ − ρ_Ψ‖₁
  Eigen::Matrix2d cross_overlaps;      // |⟨φ¹_iφ²_i|ξ¹_jξ²_j⟩|
  double formula_error = 0.0;          // max deviation of the convex sums from the partial traces
};

ReducedPair reduced_pair(double theta);

// Ψ(θ) = Φ(θ)/‖Φ(θ)‖ near ψ¹₁ψ²₁ψ³₁ with diverging coefficients.
struct DivergingFamily {
  double theta = 0.0;
  SumState phi;  // before normalization
  double phi_norm = 0.0;
  std::array<Complex, 2> raw_coefficients{};
  double max_raw_coefficient = 0.0;
  DenseState psi_theta;
  DenseState limit;  // ψ¹₁ψ²₁ψ³₁
  TriDecomposition decomposition;  // of Ψ(θ)
};

// θ ∈ (0, π/2]; θ = 1 makes a coefficient vanish and is rejected.
DivergingFamily diverging_family(double theta);

// Columns v_m = N^{-1/2} Σ_k e^{2πikm/N} u_k (k, m = 1…N) in the u basis.
Matrix dft_basis(std::size_t n);

// ---------------------------------------------------------------------------
// paired expansions near an arbitrary state

struct PairedExpansions {
  ProductSpace space;  // ambient, wide enough for the fresh directions
  double epsilon = 0.0;
  double theta = 0.0;
  std::size_t n0 = 0;  // smallest N meeting the truncation conditions
  std::size_t n = 0;   // N used for the expansions
  double truncation_error = 0.0;  // ‖Ψ − Φ^N‖
  SumState phi1;
  SumState phi2;
  TriDecomposition d1;
  TriDecomposition d2;
  std::vector<std::array<std::size_t, 3>> basis_index;  // u-index per factor of each ψ_k (0-based)
  double distance1 = 0.0;           // ‖Ψ − Φ₁‖
  double distance2 = 0.0;           // ‖Ψ − Φ₂‖
  double min_basis_overlap = 0.0;   // min |⟨ψ^i_k|u^i_{n(k)}⟩|
  double max_cross_overlap = 0.0;   // max |⟨ψ^i_k|φ^i_m⟩|
};

// Without θ, the largest θ = 2^{-j} meeting all three conclusions with 10% slack
// is used. A given θ that breaks a conclusion raises ArgumentError naming it.
PairedExpansions paired_expansions(const DenseState& psi, double epsilon, std::optional<double> theta = std::nullopt);

// ---------------------------------------------------------------------------
// moving the tensor product structure

// base + c1 Φ₁ + c2 Φ₂
struct AugmentedVector {
  SumState base;
  Complex c1{0.0, 0.0};
  Complex c2{0.0, 0.0};
};

/// U = |Φ₁⟩⟨Φ₂| + |Φ₁⊥⟩⟨Φ₂⊥| + 1 − |Φ₁⟩⟨Φ₁| − |Φ₁⊥⟩⟨Φ₁⊥|, acting exactly on AugmentedVector.
class MoverUnitary {
 public:
  MoverUnitary(SumState phi1, SumState phi2, const Tolerances& tol = {});

  const SumState& phi1() const noexcept { return phi1_; }
  const SumState& phi2() const noexcept { return phi2_; }
  Complex alpha() const noexcept { return alpha_; }  // ⟨Φ₂|Φ₁⟩
  double beta() const noexcept { return beta_; }     // √(1 − |α|²)
  bool is_identity() const noexcept { return identity_; }

  AugmentedVector wrap(SumState base) const;
  AugmentedVector apply(const AugmentedVector& x) const;
  AugmentedVector apply_adjoint(const AugmentedVector& x) const;
  Complex inner(const AugmentedVector& x, const AugmentedVector& y) const;
  // ‖x − y‖ when both share the same base, evaluated on the span coefficients.
  double span_distance(const AugmentedVector& x, const AugmentedVector& y) const;

  // U − 1 in the orthonormal basis (Φ₁, Φ₁⊥), assembled from the action of U.
  Eigen::Matrix2cd correction_matrix() const;
  double correction_trace_norm() const;
  double states_distance() const { return states_distance_; }  // ‖Φ₁ − Φ₂‖

 private:
  AugmentedVector apply_block(const AugmentedVector& x, const Eigen::Matrix2cd& block) const;
  Complex project(const SumState& onto, const AugmentedVector& x) const;

  SumState phi1_;
  SumState phi2_;
  Eigen::Matrix2cd gram_;  // ⟨Φ_i|Φ_j⟩
  Complex alpha_{1.0, 0.0};
  double beta_ = 0.0;
  bool identity_ = false;
  double states_distance_ = 0.0;
};

struct TensorStructurePair {
  MoverUnitary mover;

  // ⟨ψ ⊗ u_{n} ⊗ u_{n'}| U* U |φ ⊗ u_{n} ⊗ u_{n'}⟩ with ψ, φ in factor `factor`
  // and the auxiliary basis indices placed in the other two factors.
  Complex relabeled_overlap(std::size_t factor, const SparseVector& psi, const SparseVector& phi,
                            std::array<std::size_t, 2> aux) const;
};

TensorStructurePair structure_mover(const SumState& phi1, const SumState& phi2, const Tolerances& tol = {});

// ---------------------------------------------------------------------------
// isolation witnesses

// Σ_{n≤N₁} u¹_n u²_1 u³_n + u¹_1 u²_2 u³_{N₁+1}, normalized. Default dims (N₁, 2, N₁+1).
DenseState isolation_witness_3(std::size_t n1, std::optional<std::vector<std::size_t>> dims = std::nullopt);
// Σ_{n≤N} u¹_n u²_n u³_1 u⁴_1 + u¹_1 u²_1 u³_2 u⁴_2, normalized. Default dims (N, N, N, N).
DenseState isolation_witness_4(std::size_t n, std::optional<std::vector<std::size_t>> dims = std::nullopt);

// Perturbation of a triorthogonal state with no triorthogonal states nearby.
// Single-term inputs use case I; inputs with |a₁| < 1 and K ≥ 2 use case II.
DenseState isolating_perturbation(const OrderedTriortho& psi, double epsilon, const Tolerances& tol = {});

}  // namespace tridecomp
