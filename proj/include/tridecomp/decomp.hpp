#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tridecomp/spectral.hpp"
#include "tridecomp/state.hpp"
#include "tridecomp/tolerances.hpp"

namespace tridecomp {

// ---------------------------------------------------------------------------
// Schmidt decomposition

struct SchmidtDecomposition {
  RealVector coefficients;  // √p_k, non-increasing, all > tol.zero
  Matrix left;              // columns L_k on the kept factors
  Matrix right;             // columns R_k on the complement
  std::vector<std::size_t> left_factors;
  std::vector<std::size_t> right_factors;

  std::size_t rank() const { return static_cast<std::size_t>(coefficients.size()); }
  // Σ √p_k L_k ⊗ R_k as a (left × right) matrix.
  Matrix reconstruct() const;
};

// Index of the first entry with |x_i| > 1e-10·max|x|; that entry is made real
// positive by the canonical phase.
std::size_t phase_anchor(const Vector& v);
Complex canonical_phase_factor(const Vector& v);

SchmidtDecomposition schmidt(const State& psi, std::vector<std::size_t> left_factors, const Tolerances& tol = {});
std::size_t schmidt_rank(const State& psi, std::vector<std::size_t> left_factors, double threshold);

// ---------------------------------------------------------------------------
// linear independence

struct IndependenceCertificate {
  double min_singular_value = 0.0;
  bool independent = false;
};

IndependenceCertificate linear_independence(const std::vector<Vector>& vectors, double tol);
IndependenceCertificate linear_independence(const std::vector<SparseVector>& vectors, double tol);

// ---------------------------------------------------------------------------
// tridecompositions

enum class Variant {
  LiTwoFactors,  // factors 1 and 2 independent, no collinear pair in factor 3
  LiAll,         // all three factors independent
  Orthonormal,   // all three factors orthonormal
};

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// Σ_k a_k ψ¹_k ψ²_k ψ³_k with unit components.
struct TriDecomposition {
  ProductSpace space;
  std::vector<ProductTerm> terms;
  Variant variant = Variant::LiAll;

  std::size_t size() const { return terms.size(); }
  SumState to_sum_state() const { return SumState(space, terms); }
};

struct DecompositionCertificate {
  Variant variant = Variant::LiAll;
  bool passed = false;
  std::string failed_condition;  // empty when passed
  double reconstruction_error = 0.0;
  double min_coefficient = 0.0;
  std::vector<double> min_singular_values;  // per factor
  std::vector<double> max_overlaps;         // per factor, max_{k≠l} |⟨ψ_k|ψ_l⟩|
};

DecompositionCertificate verify_tridecomposition(const TriDecomposition& d, const State& psi, const Tolerances& tol = {});

// Keeps the terms with |a_k| > delta, in order, without renormalizing.
TriDecomposition truncate_decomposition(const TriDecomposition& d, double delta);

// Makes the anchor entry of every component real positive, absorbing phases into
// the coefficient. With a reference of the same length, phases are chosen so
// that ⟨ψ^i_k|ref^i_k⟩ ≥ 0 instead (falling back to the anchor rule when the
// overlap vanishes). Each rank-one term is unchanged.
TriDecomposition canonical_phase(const TriDecomposition& d, const TriDecomposition* reference = nullptr);

// ‖a ψ¹ψ²… − b φ¹φ²…‖ evaluated without cancellation for nearby terms.
double term_distance(const ProductTerm& a, const ProductTerm& b);
// |⟨ψ¹ψ²…|φ¹φ²…⟩| for the unit product tensors of two terms.
double term_overlap(const ProductTerm& a, const ProductTerm& b);

// Optimal assignment maximizing Σ weight(i, σ(i)) over permutations σ of a square matrix.
std::vector<std::size_t> max_weight_assignment(const Eigen::MatrixXd& weight);

// Bijection of terms with || |a| − |b| || ≤ tol and term distance ≤ tol.
bool decompositions_equivalent(const TriDecomposition& d1, const TriDecomposition& d2, double tol,
                               const Tolerances& tols = {});

// ---------------------------------------------------------------------------
// triorthogonal extraction

struct MagnitudeBlock {
  double magnitude = 0.0;            // |â_m|
  std::vector<std::size_t> members;  // indices into the decomposition's terms
};

/// ORTHONORMAL decomposition ordered by non-increasing |a_k|, with its blocks of equal magnitude.
struct OrderedTriortho {
  TriDecomposition decomposition;
  std::vector<MagnitudeBlock> blocks;

  std::size_t block_count() const { return blocks.size(); }
};

// Sorts by |a_k| and groups magnitudes within tol.deg into blocks.
OrderedTriortho make_ordered(TriDecomposition d, const Tolerances& tol = {});

enum class ExtractionStatus { Triorthogonal, NotTriorthogonal, Undetermined };
const char* status_name(ExtractionStatus s);

struct ExtractionResult {
  ExtractionStatus status = ExtractionStatus::Undetermined;
  std::optional<OrderedTriortho> decomposition;
  std::string reason;
};

ExtractionResult extract_triortho(const State& psi, const Tolerances& tol = {}, std::uint64_t seed = 0x5eed);

// ---------------------------------------------------------------------------
// matching of nearby decompositions

struct BipartiteTerm {
  Complex coeff{0.0, 0.0};
  Vector first;
  Vector second;
};

struct SingleProductReport {
  double epsilon = 0.0;
  double epsilon_prime = 0.0;
  double reduced_trace_distance = 0.0;  // ‖ρ₁(Ψ) − ρ₁(Φ)‖₁
  std::size_t match = 0;                // m
  double coefficient_gap = 0.0;         // | |a|² − |b_m|² |
  double max_other_weight = 0.0;        // max_{m'≠m} |b_m'|²
  bool first_holds = false;

  bool second_applicable = false;
  std::string second_inapplicable_reason;
  double state_distance = 0.0;  // ‖Ψ − Φ‖
  double term_distance = 0.0;   // ‖aψ¹ψ² − b_m φ¹_m φ²_m‖
  double overlap_first = 0.0;   // |⟨ψ¹|φ¹_m⟩|
  double overlap_second = 0.0;  // |⟨ψ²|φ²_m⟩|
  bool second_holds = false;

  bool holds() const { return first_holds && (!second_applicable || second_holds); }
};

// Ψ = a ψ¹ψ² against Φ = Σ b_k φ¹_k φ²_k with orthonormal φ¹, φ² sequences.
// Throws PreconditionError naming the failed hypothesis of the first conclusion.
SingleProductReport match_single_product(const BipartiteTerm& psi, const std::vector<BipartiteTerm>& phi,
                                         double epsilon, double epsilon_prime, const Tolerances& tol = {});

struct PairRecord {
  std::size_t block = 0;    // m (0-based)
  std::size_t term = 0;     // index into Ψ's terms
  std::size_t partner = 0;  // k′, index into Φ's terms
  double coefficient_gap = 0.0;
  std::array<double, 3> overlaps{};
  double term_distance = 0.0;
  bool holds = false;
};

struct MatchReport {
  std::size_t L = 0;
  double epsilon = 0.0;
  double epsilon_prime = 0.0;
  double distance = 0.0;        // ‖Ψ − Φ‖
  double distance_bound = 0.0;  // |â_L|²ε²/18
  std::vector<PairRecord> pairs;
  bool all_hold = false;

  double coefficient_bound() const { return 3.0 * epsilon; }
  double overlap_bound() const { return 1.0 - epsilon; }
  double term_bound() const;
};

// Pairs each term of the first L blocks of Ψ with a unique term of Φ.
// Throws PreconditionError when the hypotheses fail and BoundViolation when the
// pairing is not injective.
MatchReport match_components(const OrderedTriortho& psi, const TriDecomposition& phi, std::size_t L, double epsilon,
                             const Tolerances& tol = {});

}  // namespace tridecomp
